//! Numerical experiments that test the operator theory end to end.
//!
//! Every probe stores its measurements together with the checks it was judged
//! by, and the outcome is recomputed from those checks alone.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{
    carleson_functional, conj, k1_family, kpc_continuous, kpd, kpe, least_squares_slope, m1_discrete, mp_discrete,
    mp_small, ConditionParams, ConditionReport, Grid, K1Variant, KpcVariant, Verdict,
};
use crate::error::{Error, Result};
use crate::families::{cone_fa, lacunary, FamilySpec};
use crate::norms::{bloch_norm, dirichlet_norm, hinftyp_norm, hl_norm, hp_norm, NormParams};
use crate::operator::{apply_quadrature, apply_series, CoefficientSeries};
use crate::report::{csv_float, lossless, lossless_vec};
use crate::weights::{build_oscillating_weight, RadialWeight, WeightSpec};

/// Default floor for the non-compactness infima.
pub const NONCOMPACT_FLOOR: f64 = 0.05;
/// Output length used when a truncated image only needs to bound a norm from below.
pub const BLOCH_N_OUT: usize = 1024;
/// Output length of `H_ω(1)` in the logarithmic lower bound.
pub const LOG_BOUND_N_OUT: usize = 4096;
/// Widest `max/min` band of a tail ratio still read as comparable.
pub const TILDE_BAND: f64 = 20.0;
pub const LOG_BOUND_POINTS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

/// A measured value and the closed interval it has to fall in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "lossless")]
    pub value: f64,
    #[serde(with = "lossless")]
    pub lo: f64,
    #[serde(with = "lossless")]
    pub hi: f64,
}

impl Check {
    pub fn holds(&self) -> bool {
        self.value >= self.lo && self.value <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    #[serde(with = "lossless_vec")]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub probe: String,
    pub weight: Option<WeightSpec>,
    pub params: BTreeMap<String, serde_json::Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    /// Reasons that force an inconclusive outcome.
    pub inconclusive: Vec<String>,
    pub notes: Vec<String>,
    pub outcome: Outcome,
    pub pass: bool,
    /// Wall time; not serialized so reports stay reproducible.
    #[serde(skip)]
    pub runtime: Duration,
}

impl ProbeResult {
    fn new(probe: &str, weight: Option<&WeightSpec>) -> Self {
        ProbeResult {
            probe: probe.to_string(),
            weight: weight.cloned(),
            params: BTreeMap::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            checks: Vec::new(),
            inconclusive: Vec::new(),
            notes: Vec::new(),
            outcome: Outcome::Inconclusive,
            pass: false,
            runtime: Duration::ZERO,
        }
    }

    fn param(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.params.insert(key.to_string(), v);
        self
    }

    fn columns(mut self, cols: &[&str]) -> Self {
        self.columns = cols.iter().map(|c| c.to_string()).collect();
        self
    }

    fn row(&mut self, label: impl ToString, values: Vec<f64>) {
        self.rows.push(Row { label: label.to_string(), values });
    }

    fn check(&mut self, name: &str, value: f64, lo: f64, hi: f64) {
        self.checks.push(Check { name: name.to_string(), value, lo, hi });
    }

    /// A boolean requirement, stored as a value in `[1, 1]`.
    fn require(&mut self, name: &str, ok: bool) {
        self.check(name, if ok { 1.0 } else { 0.0 }, 1.0, 1.0);
    }

    /// Outcome implied by the stored checks and inconclusive reasons.
    pub fn recompute(&self) -> Outcome {
        if !self.inconclusive.is_empty() {
            Outcome::Inconclusive
        } else if self.checks.iter().all(Check::holds) {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    fn finish(mut self, start: Instant) -> Self {
        self.outcome = self.recompute();
        self.pass = self.outcome == Outcome::Pass;
        self.runtime = start.elapsed();
        self
    }

    fn errored(probe: &str, weight: Option<&WeightSpec>, err: &Error) -> Self {
        let mut r = ProbeResult::new(probe, weight);
        r.notes.push(format!("error: {err}"));
        r.require("completed", false);
        r.finish(Instant::now())
    }
}

/// One line per check: `probe,weight,outcome,check,value,lo,hi`.
pub fn summary_csv(results: &[ProbeResult]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["probe", "weight", "outcome", "check", "value", "lo", "hi"])?;
    for r in results {
        let weight = match &r.weight {
            Some(w) => serde_json::to_string(w)?,
            None => String::new(),
        };
        let outcome = format!("{:?}", r.outcome).to_lowercase();
        for c in &r.checks {
            wtr.write_record([
                r.probe.clone(),
                weight.clone(),
                outcome.clone(),
                c.name.clone(),
                csv_float(c.value),
                csv_float(c.lo),
                csv_float(c.hi),
            ])?;
        }
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

// ---------------------------------------------------------------------------
// spaces and sweeps

/// Function spaces with a computable norm on polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Hp,
    HLp,
    Dpp1,
    HInftyP,
}

impl Space {
    pub fn norm(self, f: &CoefficientSeries, p: f64, params: &NormParams) -> Result<f64> {
        match self {
            Space::Hp => hp_norm(f, p, params),
            Space::HLp => hl_norm(f, p),
            Space::Dpp1 => dirichlet_norm(f, p, params),
            Space::HInftyP => hinftyp_norm(f, p, params),
        }
    }
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Hp" => Ok(Space::Hp),
            "HLp" => Ok(Space::HLp),
            "Dpp1" => Ok(Space::Dpp1),
            "HInftyP" => Ok(Space::HInftyP),
            other => Err(Error::InvalidParam(format!("unknown space {other:?}; expected Hp, HLp, Dpp1 or HInftyP"))),
        }
    }
}

/// A block family evaluated at a list of end indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub family: FamilySpec,
    pub sizes: Vec<usize>,
}

impl Sweep {
    /// End indices `2^lo, ..., 2^hi`.
    pub fn dyadic(family: FamilySpec, lo: u32, hi: u32) -> Self {
        Sweep { family, sizes: (lo..=hi).map(|e| 1usize << e).collect() }
    }
}

fn with_p(cp: &ConditionParams, p: f64) -> ConditionParams {
    ConditionParams { p, ..cp.clone() }
}

/// The functional characterizing boundedness at exponent `p`: the Carleson
/// functional for `p = 1`, `K_{p,c}` above.
pub fn boundedness_condition(w: &RadialWeight, p: f64, cp: &ConditionParams) -> Result<ConditionReport> {
    let params = with_p(cp, p);
    params.validate()?;
    let grid = params.grid();
    if p == 1.0 {
        carleson_functional(w, &grid, &params)
    } else {
        kpc_continuous(w, &grid, &params, KpcVariant::K)
    }
}

fn verdict_code(v: Verdict) -> f64 {
    match v {
        Verdict::FiniteEvidence => 1.0,
        Verdict::DivergenceEvidence => -1.0,
        Verdict::Inconclusive => 0.0,
    }
}

// ---------------------------------------------------------------------------
// probes

/// Ratios `‖H_ω f‖_Y / ‖f‖_X` over a family sweep, judged against the
/// boundedness condition. The slope is that of `ln ratio` per doubling of the
/// family size, fitted over the upper half of the sweep.
pub fn boundedness_probe(
    w: &RadialWeight,
    p: f64,
    x: Space,
    y: Space,
    sweep: &Sweep,
    cp: &ConditionParams,
) -> Result<ProbeResult> {
    let start = Instant::now();
    let np = NormParams { tol: cp.tol.max(1e-10), ..NormParams::default() };
    let cond = boundedness_condition(w, p, cp)?;
    let mut r = ProbeResult::new("boundedness", Some(w.spec()))
        .param("p", p)
        .param("x", x)
        .param("y", y)
        .param("sweep", sweep)
        .param("condition", &cond.name)
        .param("slope_threshold", cp.slope_threshold)
        .columns(&["size", "norm_x", "norm_y_image", "ratio"]);
    let mut pts = Vec::new();
    for &size in &sweep.sizes {
        let row = (|| -> Result<[f64; 3]> {
            let f = sweep.family.with_size(size)?.build(cp.tol)?;
            let g = apply_series(w, &f, 4 * f.len(), cp.tol)?;
            let nx = x.norm(&f, p, &np)?;
            let ny = y.norm(&g, p, &np)?;
            Ok([nx, ny, ny / nx])
        })();
        match row {
            Ok(v) => {
                pts.push(((size as f64).log2(), v[2].ln()));
                r.row(size, vec![size as f64, v[0], v[1], v[2]]);
            }
            Err(e) => {
                r.notes.push(format!("size {size}: {e}"));
                r.row(size, vec![size as f64, f64::NAN, f64::NAN, f64::NAN]);
                r.require(&format!("row {size} evaluated"), false);
            }
        }
    }
    let tail = &pts[pts.len() / 2..];
    let slope = least_squares_slope(tail);
    r.row("slope", vec![slope]);
    r.row("condition_sup", vec![cond.sup, verdict_code(cond.verdict)]);
    let thr = cp.slope_threshold;
    match cond.verdict {
        Verdict::FiniteEvidence => r.check("ratio slope per doubling (bounded)", slope, f64::NEG_INFINITY, thr),
        Verdict::DivergenceEvidence => r.check("ratio slope per doubling (unbounded)", slope, thr, f64::INFINITY),
        Verdict::Inconclusive => r.inconclusive.push(format!("{} is inconclusive", cond.name)),
    }
    Ok(r.finish(start))
}

/// Cross-checks the equivalent forms of the boundedness condition.
pub fn equivalence_probe(w: &RadialWeight, p: f64, cp: &ConditionParams) -> Result<ProbeResult> {
    let start = Instant::now();
    let params = with_p(cp, p);
    params.validate()?;
    let grid = params.grid();
    let mut r = ProbeResult::new("equivalence", Some(w.spec()))
        .param("p", p)
        .param("grid_depth", params.grid_depth)
        .param("n_max", params.n_max)
        .columns(&["sup", "trend", "verdict"]);
    let (reports, band) = if p == 1.0 {
        let reps = vec![
            k1_family(w, &grid, &params, K1Variant::K1c)?,
            k1_family(w, &grid, &params, K1Variant::K1d)?,
            m1_discrete(w, &params)?,
        ];
        (reps, (0.05, 20.0))
    } else {
        let reps = vec![
            mp_discrete(w, &params)?,
            kpc_continuous(w, &grid, &params, KpcVariant::K)?,
            kpd(w, &grid, &params)?,
            kpe(w, &grid, &params)?,
        ];
        (reps, (0.1, 10.0))
    };
    for rep in &reports {
        r.row(&rep.name, vec![rep.sup, rep.trend, verdict_code(rep.verdict)]);
        if rep.verdict == Verdict::Inconclusive {
            r.inconclusive.push(format!("{} is inconclusive", rep.name));
        }
    }
    // Sup ratios are compared among the functionals that a theorem ties
    // together by two-sided estimates: M_p with K_{p,c}, or all three at p = 1.
    let paired: Vec<&ConditionReport> = if p == 1.0 { reports.iter().collect() } else { reports[..2].iter().collect() };
    for (i, a) in paired.iter().enumerate() {
        for b in &paired[i + 1..] {
            let name = format!("{} / {}", a.name, b.name);
            if a.verdict.is_finite() && b.verdict.is_finite() {
                r.check(&format!("sup ratio {name}"), a.sup / b.sup, band.0, band.1);
            } else {
                r.require(&format!("verdicts agree {name}"), a.verdict == b.verdict);
            }
        }
    }
    if p > 1.0 {
        let v: Vec<Verdict> = reports[1..].iter().map(|x| x.verdict).collect();
        r.require("Kpc, Kpd, Kpe verdicts identical", v.iter().all(|&x| x == v[0]));
    }
    Ok(r.finish(start))
}

/// Lower bounds witnessing that `H_ω` is not compact: the normalized test
/// functions `f_a` are not sent to zero, and neither are the monomials in
/// the Bloch norm. Truncated images give lower bounds since all terms are
/// nonnegative.
pub fn noncompactness_probe(
    w: &RadialWeight,
    p: f64,
    a_list: &[f64],
    ks: &[usize],
    floor: f64,
    cp: &ConditionParams,
) -> Result<ProbeResult> {
    let start = Instant::now();
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain { what: "p", value: p, domain: "[1, ∞)" });
    }
    let np = NormParams::default();
    let mut r = ProbeResult::new("noncompactness", Some(w.spec()))
        .param("p", p)
        .param("a", a_list)
        .param("k", ks)
        .param("floor", floor)
        .columns(&["parameter", "value"]);
    let ratios = a_list
        .par_iter()
        .map(|&a| {
            let f = cone_fa(a, p, None)?;
            let g = apply_series(w, &f, f.len(), cp.tol)?;
            Ok(hl_norm(&g, p)? / hl_norm(&f, p)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    for (&a, &v) in a_list.iter().zip(&ratios) {
        r.row(format!("a={a}"), vec![a, v]);
    }
    if !ratios.is_empty() {
        let inf = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        r.check("inf over a of HL ratio", inf, floor, f64::INFINITY);
    }
    let blochs = ks
        .par_iter()
        .map(|&k| {
            let g = apply_series(w, &CoefficientSeries::monomial(k), BLOCH_N_OUT, cp.tol)?;
            bloch_norm(&g, &np)
        })
        .collect::<Result<Vec<f64>>>()?;
    for (&k, &v) in ks.iter().zip(&blochs) {
        r.row(format!("k={k}"), vec![k as f64, v]);
    }
    if !blochs.is_empty() {
        let inf = blochs.iter().cloned().fold(f64::INFINITY, f64::min);
        r.check("inf over k of Bloch norm of H(z^k)", inf, floor, f64::INFINITY);
    }
    Ok(r.finish(start))
}

/// Boundedness at `q` must carry over to every `p > q`.
pub fn monotonicity_probe(w: &RadialWeight, q: f64, p: f64, cp: &ConditionParams) -> Result<ProbeResult> {
    let start = Instant::now();
    if !(1.0 <= q && q < p) {
        return Err(Error::InvalidParam(format!("monotonicity needs 1 <= q < p, got q = {q}, p = {p}")));
    }
    let rq = boundedness_condition(w, q, cp)?;
    let rp = boundedness_condition(w, p, cp)?;
    let mut r = ProbeResult::new("monotonicity", Some(w.spec()))
        .param("q", q)
        .param("p", p)
        .columns(&["exponent", "sup", "trend", "verdict"]);
    r.row(&rq.name, vec![q, rq.sup, rq.trend, verdict_code(rq.verdict)]);
    r.row(&rp.name, vec![p, rp.sup, rp.trend, verdict_code(rp.verdict)]);
    for rep in [&rq, &rp] {
        if rep.verdict == Verdict::Inconclusive {
            r.inconclusive.push(format!("{} at p = {} is inconclusive", rep.name, rep.params.p));
        }
    }
    let violated = rq.verdict.is_finite() && rp.verdict == Verdict::DivergenceEvidence;
    r.require("bounded at q implies bounded at p", !violated);
    if rq.verdict == Verdict::DivergenceEvidence {
        r.notes.push("condition diverges at q; the implication puts no constraint on p".into());
    }
    Ok(r.finish(start))
}

/// Ratio of the tail of `ω̃` to the tail of `ω`. A ratio confined to a band
/// is evidence for the class D; one that drifts to 0 or ∞ is evidence
/// against. Plateau weights make the ratio oscillate inside its band, so the
/// band width is judged rather than the trend, which is only reported.
pub fn tilde_hat_probe(w: &RadialWeight, grid: &Grid, cp: &ConditionParams) -> Result<ProbeResult> {
    let start = Instant::now();
    let tilde = w.tilde_transform();
    let mut r = ProbeResult::new("tilde_hat", Some(w.spec()))
        .param("grid_points", grid.len())
        .param("deepest_distance", grid.deepest())
        .columns(&["r", "ratio"]);
    let ln_ratios = grid
        .d
        .par_iter()
        .map(|&d| Ok(tilde.ln_tail_d(d, cp.tol)? - w.ln_tail_d(d, cp.tol)?))
        .collect::<Result<Vec<f64>>>()?;
    let pts: Vec<(f64, f64)> = grid.d.iter().zip(&ln_ratios).map(|(&d, &l)| (-d.log10(), l)).collect();
    for (&d, &l) in grid.d.iter().zip(&ln_ratios) {
        r.row(1.0 - d, vec![1.0 - d, l.exp()]);
    }
    let x_max = pts.last().map_or(0.0, |p| p.0);
    let cut = 0.75 * x_max + 0.25 * pts[0].0;
    let tail: Vec<(f64, f64)> = pts.iter().cloned().filter(|p| p.0 >= cut).collect();
    let trend = least_squares_slope(&tail);
    let (lo, hi) = ln_ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| (a.min(l), b.max(l)));
    r.row("band", vec![lo.exp(), hi.exp()]);
    r.row("trend", vec![trend]);
    r.check("band max/min", (hi - lo).exp(), 1.0, TILDE_BAND);
    Ok(r.finish(start))
}

fn random_nonneg_poly(rng: &mut ChaCha8Rng, max_degree: usize) -> CoefficientSeries {
    let degree = rng.gen_range(0..=max_degree);
    let mut coeffs: Vec<f64> = (0..=degree)
        .map(|_| if rng.gen_bool(0.5) { rng.gen::<f64>() } else { 0.0 })
        .collect();
    coeffs[degree] = 0.5 + 0.5 * rng.gen::<f64>();
    CoefficientSeries { coeffs }
}

fn random_signed_poly(rng: &mut ChaCha8Rng, max_degree: usize) -> CoefficientSeries {
    let degree = rng.gen_range(0..=max_degree);
    CoefficientSeries { coeffs: (0..=degree).map(|_| rng.gen_range(-1.0..1.0)).collect() }
}

/// `H(∞,p)` against `HL(p)`, `H^p` and `D^p_{p-1}` on seeded random
/// polynomials with nonnegative coefficients. The constant is the largest
/// observed ratio; a constant that does not depend on the degree shows up as
/// the upper-degree half never exceeding twice the lower-degree half.
pub fn embedding_probe(p: f64, seed: u64, count: usize, max_degree: usize) -> Result<ProbeResult> {
    let start = Instant::now();
    let np = NormParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let polys: Vec<CoefficientSeries> = (0..count).map(|_| random_nonneg_poly(&mut rng, max_degree)).collect();
    let mut r = ProbeResult::new("embedding", None)
        .param("p", p)
        .param("seed", seed)
        .param("count", count)
        .param("max_degree", max_degree)
        .columns(&["degree", "hinfty_p", "hl", "hp", "dirichlet"]);
    let rows = polys
        .par_iter()
        .map(|f| {
            Ok(vec![
                f.degree() as f64,
                hinftyp_norm(f, p, &np)?,
                hl_norm(f, p)?,
                hp_norm(f, p, &np)?,
                dirichlet_norm(f, p, &np)?,
            ])
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let half = max_degree as f64 / 2.0;
    for (col, name) in [(2, "HL"), (3, "Hp"), (4, "D")] {
        let ratio = |v: &Vec<f64>| v[1] / v[col];
        let max_over = |keep: &dyn Fn(&Vec<f64>) -> bool| {
            rows.iter().filter(|v| keep(v)).map(ratio).fold(0.0, f64::max)
        };
        let c = max_over(&|_| true);
        let low = max_over(&|v| v[0] <= half);
        let high = max_over(&|v| v[0] > half);
        r.row(format!("C_{name}"), vec![c, low, high]);
        r.check(&format!("measured C against {name} finite"), c, 0.0, f64::MAX);
        r.check(&format!("C against {name}: upper-degree half / lower-degree half"), high / low, 0.0, 2.0);
    }
    for (i, v) in rows.into_iter().enumerate() {
        r.row(i, v);
    }
    Ok(r.finish(start))
}

/// Partial sums of the lacunary series: `H(∞,p)` grows without bound while
/// `HL(p)` converges.
pub fn lacunary_probe(p: f64, terms: usize, factor: f64) -> Result<ProbeResult> {
    let start = Instant::now();
    let np = NormParams::default();
    let mut r = ProbeResult::new("lacunary", None)
        .param("p", p)
        .param("terms", terms)
        .param("factor", factor)
        .columns(&["terms", "hinfty_p", "hl", "ratio"]);
    let rows = (1..=terms)
        .into_par_iter()
        .map(|t| {
            let f = lacunary(p, t)?;
            let h = hinftyp_norm(&f, p, &np)?;
            let l = hl_norm(&f, p)?;
            Ok(vec![t as f64, h, l, h / l])
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let increasing = rows.windows(2).all(|w| w[1][1] > w[0][1]);
    let last = rows.last().map_or(f64::NAN, |v| v[3]);
    for v in rows {
        r.row(v[0], v);
    }
    r.require("H(∞,p) partial values increase", increasing);
    r.check("final H(∞,p) / HL(p)", last, factor, f64::INFINITY);
    Ok(r.finish(start))
}

/// Largest coefficient gap between the moment-ratio and quadrature forms of
/// `H_ω` on seeded random polynomials.
pub fn two_path_probe(
    w: &RadialWeight,
    seed: u64,
    count: usize,
    max_degree: usize,
    limit: f64,
    tol: f64,
) -> Result<ProbeResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let polys: Vec<CoefficientSeries> = (0..count).map(|_| random_signed_poly(&mut rng, max_degree)).collect();
    let n_out = max_degree + 1;
    let mut r = ProbeResult::new("two_path", Some(w.spec()))
        .param("seed", seed)
        .param("count", count)
        .param("max_degree", max_degree)
        .param("n_out", n_out)
        .param("tol", tol)
        .columns(&["degree", "max_abs_diff"]);
    let diffs = polys
        .iter()
        .map(|f| {
            let a = apply_series(w, f, n_out, tol)?;
            let b = apply_quadrature(w, &|t| f.eval(t), n_out, tol)?;
            Ok(a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    for (f, d) in polys.iter().zip(&diffs) {
        r.row(f.degree(), vec![f.degree() as f64, *d]);
    }
    let worst = diffs.iter().cloned().fold(0.0, f64::max);
    r.check("max coefficient discrepancy", worst, 0.0, limit);
    Ok(r.finish(start))
}

/// `H_ω(1)(x)` against `(1/(2x)) log(1/(1-x))`. The image of `1` has
/// nonnegative coefficients, so its truncation bounds it from below.
pub fn log_lower_bound_probe(w: &RadialWeight, tol: f64) -> Result<ProbeResult> {
    let start = Instant::now();
    let g = apply_series(w, &CoefficientSeries::monomial(0), LOG_BOUND_N_OUT, tol)?;
    let mut r = ProbeResult::new("log_lower_bound", Some(w.spec()))
        .param("n_out", LOG_BOUND_N_OUT)
        .param("x", LOG_BOUND_POINTS)
        .columns(&["x", "image", "bound", "ratio"]);
    let mut worst = f64::INFINITY;
    for x in LOG_BOUND_POINTS {
        let v = g.eval(x);
        let bound = -(-x).ln_1p() / (2.0 * x);
        worst = worst.min(v / bound);
        r.row(x, vec![x, v, bound, v / bound]);
    }
    r.check("min ratio to the logarithmic bound", worst, 1.0, f64::INFINITY);
    Ok(r.finish(start))
}

/// The plateau weight over `base`: its tail stays comparable to the base tail,
/// `∫ ω^{p'}` grows at least like `Σ (m+1)`, `K_{p,c}` stays finite and `m_p` diverges.
pub fn oscillating_probe(
    base: &RadialWeight,
    p: f64,
    n_max: usize,
    mass_index: usize,
    cp: &ConditionParams,
) -> Result<ProbeResult> {
    let start = Instant::now();
    let w = build_oscillating_weight(base, p, None, Some(n_max))?;
    let osc = w.oscillating().expect("built as oscillating");
    let params = with_p(cp, p);
    params.validate()?;
    let grid = params.grid();
    let pc = conj(p);
    let mut r = ProbeResult::new("oscillating", Some(w.spec()))
        .param("p", p)
        .param("k", osc.k)
        .param("mass_index", mass_index)
        .columns(&["n", "value"]);
    let ln_ratio = grid
        .d
        .par_iter()
        .map(|&d| Ok(w.ln_tail_d(d, cp.tol)? - base.ln_tail_d(d, cp.tol)?))
        .collect::<Result<Vec<f64>>>()?;
    let (lo, hi) = ln_ratio.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| (a.min(l), b.max(l)));
    r.row("tail_ratio_band", vec![lo.exp(), hi.exp()]);
    r.check("tail ratio band C/c", (hi - lo).exp(), 1.0, 20.0);

    let mut running = 0.0;
    let mut at_index = f64::NAN;
    for n in 0..=osc.n_max() {
        running += osc.ln_plateau_power(n, pc)?.exp();
        let partial = ((n + 1) * (n + 2)) as f64 / 2.0;
        r.row(format!("mass_{n}"), vec![n as f64, running, partial]);
        if n == mass_index {
            at_index = running;
        }
    }
    r.check(&format!("running integral of ω^p' at n = {mass_index}"), at_index, 1e3, f64::INFINITY);

    let kpc = kpc_continuous(&w, &grid, &params, KpcVariant::K)?;
    let mp = mp_small(&w, &grid, &params)?;
    r.row("Kpc", vec![kpc.sup, verdict_code(kpc.verdict)]);
    r.row("mp", vec![mp.sup, verdict_code(mp.verdict)]);
    r.require("Kpc finite", kpc.verdict == Verdict::FiniteEvidence);
    r.require("mp divergent", mp.verdict == Verdict::DivergenceEvidence);
    Ok(r.finish(start))
}

// ---------------------------------------------------------------------------
// suite

/// Built-in weights: constant, three standard weights, the exponential
/// weight and the plateau weight over `β = 1` for `p = 2`.
pub fn catalogue() -> Result<Vec<RadialWeight>> {
    Ok(vec![
        RadialWeight::constant(),
        RadialWeight::standard(0.5)?,
        RadialWeight::standard(1.0)?,
        RadialWeight::standard(2.0)?,
        RadialWeight::exponential(1.0)?,
        build_oscillating_weight(&RadialWeight::standard(1.0)?, 2.0, None, None)?,
    ])
}

type Job = Box<dyn Fn() -> Result<ProbeResult> + Send + Sync>;

fn job(name: &'static str, weight: Option<WeightSpec>, f: impl Fn() -> Result<ProbeResult> + Send + Sync + 'static) -> (Job, &'static str, Option<WeightSpec>) {
    (Box::new(f), name, weight)
}

/// Runs the standard set of probes. Seeds for the random probes derive from
/// `seed`, and results come back in a fixed order, so two runs with the
/// same seed serialize identically.
pub fn suite(seed: u64, cp: &ConditionParams) -> Result<Vec<ProbeResult>> {
    let weights = catalogue()?;
    let constant = RadialWeight::constant();
    let beta1 = RadialWeight::standard(1.0)?;
    let mut jobs: Vec<(Job, &'static str, Option<WeightSpec>)> = Vec::new();

    for (i, w) in weights.iter().enumerate() {
        let (w1, w2, w3) = (w.clone(), w.clone(), w.clone());
        let (c1, c2) = (cp.clone(), cp.clone());
        jobs.push(job("tilde_hat", Some(w.spec().clone()), move || tilde_hat_probe(&w1, &c1.grid(), &c1)));
        jobs.push(job("log_lower_bound", Some(w.spec().clone()), move || log_lower_bound_probe(&w2, c2.tol)));
        let s = seed.wrapping_add(i as u64);
        jobs.push(job("two_path", Some(w.spec().clone()), move || two_path_probe(&w3, s, 10, 32, 1e-7, 1e-10)));
        let (w4, c4) = (w.clone(), cp.clone());
        jobs.push(job("monotonicity", Some(w.spec().clone()), move || monotonicity_probe(&w4, 1.0, 2.0, &c4)));
    }
    for w in weights.iter().take(4) {
        for p in [1.0, 2.0] {
            let (w1, c1) = (w.clone(), cp.clone());
            jobs.push(job("equivalence", Some(w.spec().clone()), move || equivalence_probe(&w1, p, &c1)));
        }
    }
    let a_list: Vec<f64> = (3..=10).map(|j| 1.0 - (-(j as f64)).exp2()).collect();
    for (w, with_bloch) in [(&constant, false), (&beta1, true)] {
        let (w1, c1, a1) = (w.clone(), cp.clone(), a_list.clone());
        let ks: Vec<usize> = if with_bloch { (4..=64).collect() } else { Vec::new() };
        jobs.push(job("noncompactness", Some(w.spec().clone()), move || {
            noncompactness_probe(&w1, 2.0, &a1, &ks, NONCOMPACT_FLOOR, &c1)
        }));
    }
    let dual = FamilySpec::DualBlock { n: 0, m: 16, p: 2.0, weight: WeightSpec::Constant };
    let flat = FamilySpec::PowerBlock { n: 0, m: 16, alpha: 0.0, beta: 0.0, weight: None };
    let sweeps = [
        (constant.clone(), 2.0, Sweep::dyadic(dual, 4, 10)),
        (constant.clone(), 1.0, Sweep::dyadic(flat.clone(), 4, 10)),
        (beta1.clone(), 1.0, Sweep::dyadic(flat, 4, 10)),
    ];
    for (w, p, sweep) in sweeps {
        let spec = w.spec().clone();
        let c1 = cp.clone();
        jobs.push(job("boundedness", Some(spec), move || {
            boundedness_probe(&w, p, Space::HLp, Space::HLp, &sweep, &c1)
        }));
    }
    for (i, p) in [1.0, 2.0, 3.0].into_iter().enumerate() {
        let s = seed.wrapping_add(100 + i as u64);
        jobs.push(job("embedding", None, move || embedding_probe(p, s, 200, 128)));
    }
    jobs.push(job("lacunary", None, || lacunary_probe(0.5, 12, 10.0)));
    let c1 = cp.clone();
    let base = beta1.clone();
    jobs.push(job("oscillating", None, move || oscillating_probe(&base, 2.0, 46, 45, &c1)));

    Ok(jobs
        .par_iter()
        .map(|(f, name, weight)| f().unwrap_or_else(|e| ProbeResult::errored(name, weight.as_ref(), &e)))
        .collect())
}
