use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConditionParams, ConditionReport, Grid, Reading, DEFAULT_DCHECK_MIN};
use crate::error::{Error, Result};
use crate::quadrature::{ln_add, ln_block_series, ln_integrate_span, ln_sum, SeriesOutcome, SeriesRule, Span};
use crate::weights::RadialWeight;

/// Smallest distance the deep-tail block series may reach.
const SERIES_FLOOR: f64 = 1e-290;
const INNER_TOL_FACTOR: f64 = 1e-2;

/// `ln ω̂(d)` for use inside integrands, where errors become NaN.
fn ln_tail_or_nan(w: &RadialWeight, d: f64, tol: f64) -> f64 {
    w.ln_tail_d(d, tol).unwrap_or(f64::NAN)
}

struct Ctx<'a> {
    w: &'a RadialWeight,
    tol: f64,
    /// Weight knots as distances, ascending.
    cuts: Vec<f64>,
}

impl<'a> Ctx<'a> {
    fn new(w: &'a RadialWeight, tol: f64) -> Self {
        let mut cuts = w.knot_distances();
        cuts.sort_by(f64::total_cmp);
        Ctx { w, tol, cuts }
    }

    /// `ln ∫_lo^hi exp(g(u)) du`, split at weight knots.
    fn ln_int(&self, g: &(dyn Fn(f64) -> f64 + Sync), lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(f64::NEG_INFINITY);
        }
        let mut pts = vec![lo];
        pts.extend(self.cuts.iter().copied().filter(|&c| c > lo && c < hi));
        pts.push(hi);
        let mut parts = Vec::with_capacity(pts.len());
        for w in pts.windows(2) {
            parts.push(ln_integrate_span(&|u| g(u), Span::new(w[0], w[1]), self.tol)?);
        }
        Ok(ln_sum(parts))
    }

    /// Tails inside integrands are evaluated tighter than the outer rule, so
    /// their error does not look like noise to it.
    fn ln_tail(&self, d: f64) -> f64 {
        ln_tail_or_nan(self.w, d, INNER_TOL_FACTOR * self.tol)
    }
}

/// `ln ∫` over each grid interval: entry 0 covers `[d_0, 1]`, entry `j` covers `[d_j, d_{j-1}]`.
fn interval_pieces<F>(grid: &Grid, integral: &F) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    (0..grid.len())
        .into_par_iter()
        .map(|j| {
            let hi = if j == 0 { 1.0 } else { grid.d[j - 1] };
            integral(grid.d[j], hi)
        })
        .collect()
}

/// `ln ∫_{d_j}^1` for every grid point.
fn cumulative_from_top<F>(grid: &Grid, integral: &F) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let pieces = interval_pieces(grid, integral)?;
    let mut acc = f64::NEG_INFINITY;
    Ok(pieces
        .into_iter()
        .map(|p| {
            acc = ln_add(acc, p);
            acc
        })
        .collect())
}

/// `ln ∫_0^{d_j}` for every grid point. The part below the deepest grid point
/// is summed as a series of blocks `[t/base, t]`, which is where divergence at
/// the boundary shows up.
fn cumulative_from_bottom<F>(grid: &Grid, integral: &F, base: f64) -> Result<(Vec<f64>, SeriesOutcome)>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let pieces = interval_pieces(grid, integral)?;
    let deep = deep_series(grid.deepest(), base, integral)?;
    let mut out = vec![0.0; grid.len()];
    let mut acc = deep.ln_value();
    for j in (0..grid.len()).rev() {
        out[j] = acc;
        acc = ln_add(acc, pieces[j]);
    }
    Ok((out, deep))
}

fn deep_series<F>(top: f64, base: f64, mut integral: F) -> Result<SeriesOutcome>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let max_blocks = ((top / SERIES_FLOOR).ln() / base.ln()).floor() as usize;
    let rule = SeriesRule { max_blocks, ..SeriesRule::default() };
    let ln_base = base.ln();
    ln_block_series(
        |k| {
            let hi = top * (-(k as f64) * ln_base).exp();
            let lo = hi / base;
            integral(lo, hi).map(Some)
        },
        rule,
    )
}

fn flag_series(rep: &mut ConditionReport, what: &str, outcome: SeriesOutcome) {
    match outcome {
        SeriesOutcome::Converged(_) => {}
        SeriesOutcome::Divergent(_) => {
            rep.divergent_component = true;
            rep.notes.push(format!("{what} diverges at the boundary; samples use the partial sum reached"));
        }
        SeriesOutcome::Unresolved(_) => {
            rep.unresolved_component = true;
            rep.notes.push(format!("{what} neither converged nor stalled within the block budget"));
        }
    }
}

fn require_p_above_one(params: &ConditionParams, what: &str) -> Result<()> {
    if params.p <= 1.0 {
        return Err(Error::InvalidParam(format!("{what} needs p > 1, got {}", params.p)));
    }
    Ok(())
}

/// `ω̂(r) / ω̂((1+r)/2)` at a single radius.
pub fn dhat_ratio(w: &RadialWeight, r: f64, tol: f64) -> Result<f64> {
    let d = crate::weights::check_r(r)?;
    Ok((w.ln_tail_d(d, tol)? - w.ln_tail_d(0.5 * d, tol)?).exp())
}

/// Samples `ω̂(r)/ω̂((1+r)/2)`; bounded iff `ω` is upper doubling.
pub fn dhat_profile(w: &RadialWeight, grid: &Grid, params: &ConditionParams) -> Result<ConditionReport> {
    let tol = params.tol;
    let vals = grid
        .d
        .par_iter()
        .map(|&d| Ok(w.ln_tail_d(d, tol)? - w.ln_tail_d(0.5 * d, tol)?))
        .collect::<Result<Vec<f64>>>()?;
    let mut rep = ConditionReport::new("dhat_profile", w.spec(), params, Reading::Supremum);
    for (&d, v) in grid.d.iter().zip(vals) {
        rep.push_radius(d, v);
    }
    Ok(rep.finish())
}

/// Samples `∫_r^{1-(1-r)/K} ω / ω̂(r)`; lower doubling holds when this stays
/// above a positive floor.
pub fn dcheck_profile(w: &RadialWeight, k: f64, grid: &Grid, params: &ConditionParams) -> Result<ConditionReport> {
    if !(k > 1.0 && k.is_finite()) {
        return Err(Error::InvalidParam(format!("dcheck needs K > 1, got {k}")));
    }
    let tol = params.tol;
    let vals = grid
        .d
        .par_iter()
        .map(|&d| {
            let lr = w.ln_tail_d(d / k, tol)? - w.ln_tail_d(d, tol)?;
            Ok((-lr.exp_m1()).ln())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut rep = ConditionReport::new("dcheck_profile", w.spec(), params, Reading::Infimum).extra("K", k);
    rep.floor = DEFAULT_DCHECK_MIN;
    for (&d, v) in grid.d.iter().zip(vals) {
        rep.push_radius(d, v);
    }
    Ok(rep.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KpcVariant {
    /// `(∫_0^r ω̂^{-p})^{1/p} (∫_r^1 (ω̂/(1-t))^{p'})^{1/p'}`.
    M,
    /// Same with `1 + ∫_0^r ω̂^{-p}` in the first factor.
    K,
}

struct PFactors {
    /// `ln ∫_0^r ω̂^{-p}` per grid point.
    ln_a: Vec<f64>,
    /// `ln ∫_r^1 (ω̂(t)/(1-t))^{p'} dt` per grid point.
    ln_b: Vec<f64>,
    deep_b: SeriesOutcome,
}

fn p_factors(w: &RadialWeight, grid: &Grid, params: &ConditionParams, need_b: bool) -> Result<PFactors> {
    let ctx = Ctx::new(w, params.tol);
    let p = params.p;
    let pc = params.p_conj();
    let g_a = |u: f64| -p * ctx.ln_tail(u);
    let ln_a = cumulative_from_top(grid, &|lo, hi| ctx.ln_int(&g_a, lo, hi))?;
    if !need_b {
        return Ok(PFactors { ln_a, ln_b: Vec::new(), deep_b: SeriesOutcome::Converged(f64::NEG_INFINITY) });
    }
    let g_b = |u: f64| pc * (ctx.ln_tail(u) - u.ln());
    let (ln_b, deep_b) = cumulative_from_bottom(grid, &|lo, hi| ctx.ln_int(&g_b, lo, hi), 2.0)?;
    Ok(PFactors { ln_a, ln_b, deep_b })
}

/// The continuous condition `M_{p,c}` (variant M) or `K_{p,c}` (variant K).
pub fn kpc_continuous(w: &RadialWeight, grid: &Grid, params: &ConditionParams, variant: KpcVariant) -> Result<ConditionReport> {
    require_p_above_one(params, "kpc_continuous")?;
    let f = p_factors(w, grid, params, true)?;
    let (p, pc) = (params.p, params.p_conj());
    let name = match variant {
        KpcVariant::M => "Mpc",
        KpcVariant::K => "Kpc",
    };
    let mut rep = ConditionReport::new(name, w.spec(), params, Reading::Supremum).extra("variant", format!("{variant:?}"));
    for (j, &d) in grid.d.iter().enumerate() {
        let first = match variant {
            KpcVariant::M => f.ln_a[j],
            KpcVariant::K => ln_add(0.0, f.ln_a[j]),
        };
        rep.push_radius(d, first / p + f.ln_b[j] / pc);
    }
    flag_series(&mut rep, "integral of (tail/(1-t))^p'", f.deep_b);
    Ok(rep.finish())
}

/// `K_{p,d}(r) = ω̂(r)/(1-r)^{1/p} · (1 + ∫_0^r ω̂^{-p})^{1/p}`.
pub fn kpd(w: &RadialWeight, grid: &Grid, params: &ConditionParams) -> Result<ConditionReport> {
    require_p_above_one(params, "kpd")?;
    let f = p_factors(w, grid, params, false)?;
    let p = params.p;
    let mut rep = ConditionReport::new("Kpd", w.spec(), params, Reading::Supremum);
    for (j, &d) in grid.d.iter().enumerate() {
        let t = w.ln_tail_d(d, params.tol)?;
        rep.push_radius(d, t - d.ln() / p + ln_add(0.0, f.ln_a[j]) / p);
    }
    Ok(rep.finish())
}

/// `K_{p,e}(r) = (1-r)^{1/p}/ω̂(r) · (∫_r^1 (ω̂(t)/(1-t))^{p'} dt)^{1/p'}`.
pub fn kpe(w: &RadialWeight, grid: &Grid, params: &ConditionParams) -> Result<ConditionReport> {
    require_p_above_one(params, "kpe")?;
    let f = p_factors(w, grid, params, true)?;
    let (p, pc) = (params.p, params.p_conj());
    let mut rep = ConditionReport::new("Kpe", w.spec(), params, Reading::Supremum);
    for (j, &d) in grid.d.iter().enumerate() {
        let t = w.ln_tail_d(d, params.tol)?;
        rep.push_radius(d, d.ln() / p - t + f.ln_b[j] / pc);
    }
    flag_series(&mut rep, "integral of (tail/(1-t))^p'", f.deep_b);
    Ok(rep.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum K1Variant {
    /// `(1/(1-a)) ∫_a^1 ω(t)(1 + ∫_0^t ds/ω̂) dt`.
    K1c,
    /// `ω̂(a)/(1-a) · (1 + ∫_0^a ds/ω̂)`.
    K1d,
    /// `K1d` without the leading `1 +`.
    M1d,
}

/// One of the `p = 1` functionals on a grid.
pub fn k1_family(w: &RadialWeight, grid: &Grid, params: &ConditionParams, variant: K1Variant) -> Result<ConditionReport> {
    let ctx = Ctx::new(w, params.tol);
    let inv_tail = |u: f64| -ctx.ln_tail(u);
    let ln_l = cumulative_from_top(grid, &|lo, hi| ctx.ln_int(&inv_tail, lo, hi))?;
    let name = match variant {
        K1Variant::K1c => "K1c",
        K1Variant::K1d => "K1d",
        K1Variant::M1d => "M1d",
    };
    let mut rep = ConditionReport::new(name, w.spec(), params, Reading::Supremum);
    // Swapping the order of integration in ∫_0^d ω(u) ∫_u^d ds/ω̂(s) du gives
    // ∫_0^d ω(u)(1 + L(u)) du = ω̂(d)(1 + L(d)) + d, hence K1c = 1 + K1d pointwise.
    for (j, &d) in grid.d.iter().enumerate() {
        let t = w.ln_tail_d(d, params.tol)?;
        let k1d = t - d.ln() + ln_add(0.0, ln_l[j]);
        let v = match variant {
            K1Variant::K1c => ln_add(0.0, k1d),
            K1Variant::K1d => k1d,
            K1Variant::M1d => t - d.ln() + ln_l[j],
        };
        rep.push_radius(d, v);
    }
    Ok(rep.finish())
}

/// A `p = 1` functional at the single radius `a`.
pub fn k1_value(w: &RadialWeight, variant: K1Variant, a: f64, tol: f64) -> Result<f64> {
    let d = crate::weights::check_r(a)?;
    let grid = Grid::from_distances(vec![d])?;
    let params = ConditionParams { p: 1.0, tol, ..ConditionParams::default() };
    let rep = k1_family(w, &grid, &params, variant)?;
    Ok(rep.samples[0].value)
}

/// The measure `ω(t)(1 + ∫_0^t ds/ω̂) dt` tested against `[a, 1)`, normalized by `1 - a`.
pub fn carleson_functional(w: &RadialWeight, grid: &Grid, params: &ConditionParams) -> Result<ConditionReport> {
    let mut rep = k1_family(w, grid, params, K1Variant::K1c)?;
    rep.name = "carleson".into();
    Ok(rep)
}

/// `m_p` for `p > 1`; the essential sup `m_1` for `p = 1`.
pub fn mp_small(w: &RadialWeight, grid: &Grid, params: &ConditionParams) -> Result<ConditionReport> {
    params.validate()?;
    if params.p == 1.0 {
        return m1_small(w, grid, params);
    }
    let ctx = Ctx::new(w, params.tol);
    let (p, pc) = (params.p, params.p_conj());
    let g_a = |u: f64| -p * ctx.ln_tail(u);
    let ln_a = cumulative_from_top(grid, &|lo, hi| ctx.ln_int(&g_a, lo, hi))?;
    // one block per dilation step keeps one plateau per block for oscillating weights
    let base = w.oscillating().map_or(2.0, |o| o.k.max(2.0));
    let (ln_b, deep) = cumulative_from_bottom(
        grid,
        &|lo, hi| w.ln_integral_d(&|_| 0.0, pc, lo, hi, params.tol),
        base,
    )?;
    let mut rep = ConditionReport::new("mp", w.spec(), params, Reading::Supremum);
    for (j, &d) in grid.d.iter().enumerate() {
        rep.push_radius(d, ln_add(0.0, ln_a[j]) / p + ln_b[j] / pc);
    }
    flag_series(&mut rep, "integral of the density to the power p'", deep);
    Ok(rep.finish())
}

fn m1_small(w: &RadialWeight, grid: &Grid, params: &ConditionParams) -> Result<ConditionReport> {
    let ctx = Ctx::new(w, params.tol);
    let lo = grid.deepest();
    // grid ∪ knots ∪ midpoints, as strictly decreasing distances
    let mut pts: Vec<f64> = grid.d.clone();
    pts.extend(ctx.cuts.iter().copied().filter(|&c| c >= lo && c <= 1.0));
    pts.sort_by(|a, b| b.total_cmp(a));
    pts.dedup();
    let mids: Vec<f64> = pts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    pts.extend(mids);
    pts.sort_by(|a, b| b.total_cmp(a));
    pts.dedup();
    let fine = Grid::from_distances(pts)?;
    let inv_tail = |u: f64| -ctx.ln_tail(u);
    let ln_l = cumulative_from_top(&fine, &|lo, hi| ctx.ln_int(&inv_tail, lo, hi))?;
    let mut rep = ConditionReport::new("m1", w.spec(), params, Reading::Supremum);
    for (j, &d) in fine.d.iter().enumerate() {
        let dens = w.ln_density_d(d);
        let v = if dens == f64::NEG_INFINITY { dens } else { dens + ln_add(0.0, ln_l[j]) };
        rep.push_radius(d, v);
    }
    Ok(rep.finish())
}
