//! Radial weights, their tails `ω̂(r) = ∫_r^1 ω` and moments `ω_x = ∫_0^1 r^x ω`.
//!
//! Everything is computed internally in the distance variable `d = 1 - r` and
//! in log scale: exponential-type tails fall below `f64::MIN_POSITIVE` long
//! before `r` reaches the depths the condition grids probe. The `*_d` methods
//! expose that coordinate; the plain methods take `r`.

mod oscillating;
mod spec;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{self, gauss_kronrod, ln_integrate_span, ln_sum, Span, DEFAULT_TOL};

pub use oscillating::{Oscillating, Plateau};
pub use spec::WeightSpec;

/// An evaluable radial weight. Immutable once built.
#[derive(Debug, Clone)]
pub struct RadialWeight {
    spec: WeightSpec,
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    /// `exp(ln_scale) * d^beta`; covers constant, standard and their tilde transforms.
    Power { beta: f64, ln_scale: f64 },
    Exponential { c: f64 },
    Step { knots: Vec<f64>, levels: Vec<f64> },
    Sum(Vec<RadialWeight>),
    Tilde(Box<RadialWeight>),
    Oscillating(Box<Oscillating>),
}

pub(crate) fn check_r(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain { what: "r", value: r, domain: "[0, 1)" });
    }
    Ok(1.0 - r)
}

fn check_d(d: f64) -> Result<()> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::Domain { what: "d", value: d, domain: "(0, 1]" });
    }
    Ok(())
}

fn check_x(x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::Domain { what: "x", value: x, domain: "[0, inf)" });
    }
    Ok(())
}

/// `ln Γ(a) - ln Γ(a + b)` for `a > 0`, `b > 0`, accurate for very large `a`.
pub(crate) fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    if a < 1e4 {
        return ln_gamma(a) - ln_gamma(a + b);
    }
    // Stirling difference; the 1/a^5 remainder is far below f64 resolution here
    let s = a + b;
    let main = (a - 0.5) * (b / a).ln_1p() + b * s.ln() - b;
    let corr = (1.0 / s - 1.0 / a) / 12.0 - (1.0 / (s * s * s) - 1.0 / (a * a * a)) / 360.0;
    -(main + corr)
}

/// `ln B(x + 1, beta + 1) = ln ∫_0^1 r^x (1 - r)^beta dr`.
pub(crate) fn ln_beta_moment(x: f64, beta: f64) -> f64 {
    if beta.fract() == 0.0 && (0.0..=16.0).contains(&beta) {
        // β! / ((x+1)(x+2)...(x+β+1)), exact up to rounding of the product
        let m = beta as usize;
        let num: f64 = (1..=m).map(|j| (j as f64).ln()).sum();
        let den: f64 = (1..=m + 1).map(|j| (x + j as f64).ln()).sum();
        return num - den;
    }
    ln_gamma(beta + 1.0) + ln_gamma_ratio(x + 1.0, beta + 1.0)
}

impl RadialWeight {
    pub fn new(spec: WeightSpec) -> Result<Self> {
        spec.validate()?;
        let inner = match &spec {
            WeightSpec::Constant => Inner::Power { beta: 0.0, ln_scale: 0.0 },
            WeightSpec::Standard { beta } => Inner::Power { beta: *beta, ln_scale: 0.0 },
            WeightSpec::Exponential { c } => Inner::Exponential { c: *c },
            WeightSpec::PiecewiseStep { knots, levels } => Inner::Step { knots: knots.clone(), levels: levels.clone() },
            WeightSpec::Sum { terms } => {
                Inner::Sum(terms.iter().cloned().map(RadialWeight::new).collect::<Result<_>>()?)
            }
            WeightSpec::Tilde { base } => {
                let base = RadialWeight::new((**base).clone())?;
                match base.inner {
                    // ω̂ = e^s d^{β+1}/(β+1), so ω̂/d is again a power
                    Inner::Power { beta, ln_scale } => Inner::Power { beta, ln_scale: ln_scale - (beta + 1.0).ln() },
                    _ => Inner::Tilde(Box::new(base)),
                }
            }
            WeightSpec::Oscillating { base, p, k, n_max } => {
                let base = RadialWeight::new((**base).clone())?;
                Inner::Oscillating(Box::new(Oscillating::build(base, *p, *k, *n_max, DEFAULT_TOL)?))
            }
        };
        Ok(RadialWeight { spec, inner })
    }

    pub fn constant() -> Self {
        RadialWeight::new(WeightSpec::Constant).expect("constant weight is valid")
    }

    pub fn standard(beta: f64) -> Result<Self> {
        RadialWeight::new(WeightSpec::Standard { beta })
    }

    pub fn exponential(c: f64) -> Result<Self> {
        RadialWeight::new(WeightSpec::Exponential { c })
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    /// `ω̃(r) = ω̂(r)/(1 - r)`.
    pub fn tilde_transform(&self) -> RadialWeight {
        RadialWeight::new(WeightSpec::Tilde { base: Box::new(self.spec.clone()) })
            .expect("tilde of a valid weight is valid")
    }

    /// Construction data when this is an oscillating weight.
    pub fn oscillating(&self) -> Option<&Oscillating> {
        match &self.inner {
            Inner::Oscillating(o) => Some(o),
            _ => None,
        }
    }

    pub fn has_tail_closed_form(&self) -> bool {
        match &self.inner {
            Inner::Power { .. } | Inner::Exponential { .. } | Inner::Step { .. } | Inner::Oscillating(_) => true,
            Inner::Sum(terms) => terms.iter().all(|t| t.has_tail_closed_form()),
            Inner::Tilde(_) => false,
        }
    }

    pub fn has_moment_closed_form(&self) -> bool {
        match &self.inner {
            Inner::Power { .. } | Inner::Step { .. } => true,
            Inner::Sum(terms) => terms.iter().all(|t| t.has_moment_closed_form()),
            _ => false,
        }
    }

    /// Points in `[0, 1)` where the density jumps.
    pub fn knots(&self) -> Vec<f64> {
        let mut out = match &self.inner {
            Inner::Step { knots, .. } => knots.clone(),
            Inner::Sum(terms) => terms.iter().flat_map(|t| t.knots()).collect(),
            Inner::Tilde(base) => base.knots(),
            Inner::Oscillating(o) => o.knots(),
            _ => Vec::new(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Density jumps as distances `1 - r`, descending. Oscillating weights
    /// report their plateau ends exactly rather than through `r`.
    pub fn knot_distances(&self) -> Vec<f64> {
        let mut out = match &self.inner {
            Inner::Oscillating(o) => o.knot_distances(),
            Inner::Sum(terms) => terms.iter().flat_map(|t| t.knot_distances()).collect(),
            Inner::Tilde(base) => base.knot_distances(),
            _ => self.knots().into_iter().map(|k| 1.0 - k).collect(),
        };
        out.sort_by(|a, b| b.total_cmp(a));
        out.dedup();
        out
    }

    fn breaks_d(&self) -> Vec<f64> {
        let mut out = self.knot_distances();
        out.reverse();
        out
    }

    // -- density -----------------------------------------------------------

    /// `ω(r)` for `r ∈ [0, 1)`; right-continuous at knots.
    pub fn density(&self, r: f64) -> Result<f64> {
        check_r(r)?;
        if let Inner::Step { knots, levels } = &self.inner {
            // stay in r so knots given in r are hit exactly
            return Ok(step_level(knots, levels, r));
        }
        Ok(self.ln_density_d(1.0 - r).exp())
    }

    /// `ln ω` at distance `d = 1 - r`; `-inf` where the density vanishes.
    pub fn ln_density_d(&self, d: f64) -> f64 {
        match &self.inner {
            Inner::Power { beta, ln_scale } => {
                if *beta == 0.0 {
                    *ln_scale
                } else {
                    beta * d.ln() + ln_scale
                }
            }
            Inner::Exponential { c } => -c / d,
            Inner::Step { knots, levels } => step_level(knots, levels, 1.0 - d).ln(),
            Inner::Sum(terms) => ln_sum(terms.iter().map(|t| t.ln_density_d(d))),
            Inner::Tilde(base) => match base.ln_tail_d(d, DEFAULT_TOL) {
                Ok(v) => v - d.ln(),
                Err(_) => f64::NAN,
            },
            Inner::Oscillating(o) => o.ln_density_d(d),
        }
    }

    pub fn density_d(&self, d: f64) -> f64 {
        self.ln_density_d(d).exp()
    }

    // -- tail ----------------------------------------------------------------

    /// `ω̂(r) = ∫_r^1 ω(s) ds`.
    pub fn tail(&self, r: f64, tol: f64) -> Result<f64> {
        Ok(self.ln_tail(r, tol)?.exp())
    }

    pub fn ln_tail(&self, r: f64, tol: f64) -> Result<f64> {
        let d = check_r(r)?;
        self.ln_tail_d(d, tol)
    }

    /// `ln ω̂` at distance `d`, i.e. `ln ∫_0^d ω` in the distance variable.
    pub fn ln_tail_d(&self, d: f64, tol: f64) -> Result<f64> {
        check_d(d)?;
        match &self.inner {
            Inner::Power { beta, ln_scale } => Ok(ln_scale + (beta + 1.0) * d.ln() - (beta + 1.0).ln()),
            Inner::Exponential { c } => exponential_ln_tail(*c, d, tol),
            Inner::Step { knots, levels } => Ok(step_ln_tail(knots, levels, d)),
            Inner::Sum(terms) => {
                let parts = terms.iter().map(|t| t.ln_tail_d(d, tol)).collect::<Result<Vec<_>>>()?;
                Ok(ln_sum(parts))
            }
            Inner::Tilde(_) => self.ln_integral_d(&|_| 0.0, 1.0, 0.0, d, tol),
            Inner::Oscillating(o) => o.ln_tail_d(d, tol),
        }
    }

    pub fn tail_d(&self, d: f64, tol: f64) -> Result<f64> {
        Ok(self.ln_tail_d(d, tol)?.exp())
    }

    /// Tail by quadrature of the density, bypassing any closed form.
    pub fn tail_quadrature(&self, r: f64, tol: f64) -> Result<f64> {
        let d = check_r(r)?;
        Ok(self.ln_integral_d(&|_| 0.0, 1.0, 0.0, d, tol)?.exp())
    }

    // -- moments -------------------------------------------------------------

    /// `ω_x = ∫_0^1 r^x ω(r) dr`.
    pub fn moment(&self, x: f64, tol: f64) -> Result<f64> {
        Ok(self.ln_moment(x, tol)?.exp())
    }

    pub fn ln_moment(&self, x: f64, tol: f64) -> Result<f64> {
        check_x(x)?;
        match &self.inner {
            Inner::Power { beta, ln_scale } => Ok(ln_scale + ln_beta_moment(x, *beta)),
            Inner::Step { knots, levels } => Ok(step_ln_moment(knots, levels, x)),
            Inner::Sum(terms) => {
                let parts = terms.iter().map(|t| t.ln_moment(x, tol)).collect::<Result<Vec<_>>>()?;
                Ok(ln_sum(parts))
            }
            _ => self.ln_moment_quadrature(x, tol),
        }
    }

    /// Moment by quadrature, bypassing any closed form.
    pub fn moment_quadrature(&self, x: f64, tol: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.ln_moment_quadrature(x, tol)?.exp())
    }

    fn ln_moment_quadrature(&self, x: f64, tol: f64) -> Result<f64> {
        if x == 0.0 {
            return self.ln_integral_d(&|_| 0.0, 1.0, 0.0, 1.0, tol);
        }
        self.ln_integral_d(&|d: f64| x * (-d).ln_1p(), 1.0, 0.0, 1.0, tol)
    }

    // -- integration against the weight --------------------------------------

    /// `ln ∫_lo^hi exp(g(d)) ω(d)^q dd` over distances `0 <= lo < hi <= 1`.
    ///
    /// Plateau weights are integrated plateau by plateau, so intervals far
    /// narrower than the float spacing near them still carry their mass.
    pub fn ln_integral_d(&self, g: &dyn Fn(f64) -> f64, q: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
        if !(lo >= 0.0 && hi <= 1.0) {
            return Err(Error::InvalidParam(format!("integration range [{lo}, {hi}] outside [0, 1]")));
        }
        if hi <= lo {
            return Ok(f64::NEG_INFINITY);
        }
        match &self.inner {
            Inner::Oscillating(o) => o.ln_integral_d(g, q, lo, hi, tol),
            Inner::Sum(terms) if q == 1.0 => {
                let parts = terms
                    .iter()
                    .map(|t| t.ln_integral_d(g, 1.0, lo, hi, tol))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ln_sum(parts))
            }
            Inner::Sum(terms) if terms.iter().any(|t| t.contains_plateaus()) => Err(Error::InvalidParam(
                "powers of a sum containing an oscillating weight are not supported".into(),
            )),
            _ => self.ln_integral_smooth(g, q, lo, hi, tol),
        }
    }

    fn contains_plateaus(&self) -> bool {
        match &self.inner {
            Inner::Oscillating(_) => true,
            Inner::Sum(terms) => terms.iter().any(|t| t.contains_plateaus()),
            Inner::Tilde(b) => b.contains_plateaus(),
            _ => false,
        }
    }

    fn ln_integral_smooth(&self, g: &dyn Fn(f64) -> f64, q: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
        let mut cuts = vec![lo];
        cuts.extend(self.breaks_d().into_iter().filter(|&b| b > lo && b < hi));
        cuts.push(hi);
        let f = |d: f64| {
            let ld = self.ln_density_d(d);
            if ld == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                g(d) + q * ld
            }
        };
        let mut parts = Vec::with_capacity(cuts.len());
        for w in cuts.windows(2) {
            parts.push(ln_integrate_span(&f, Span::new(w[0], w[1]), tol)?);
        }
        Ok(ln_sum(parts))
    }
}

fn step_level(knots: &[f64], levels: &[f64], r: f64) -> f64 {
    // index of the last knot <= r
    let idx = knots.partition_point(|&k| k <= r);
    if idx == 0 {
        0.0
    } else {
        levels[idx - 1]
    }
}

fn step_ln_tail(knots: &[f64], levels: &[f64], d: f64) -> f64 {
    // piece i covers distances (1 - knots[i+1], 1 - knots[i]]
    let mut parts = Vec::new();
    for i in 0..knots.len() {
        if levels[i] == 0.0 {
            continue;
        }
        let hi = (1.0 - knots[i]).min(d);
        let lo = if i + 1 < knots.len() { 1.0 - knots[i + 1] } else { 0.0 };
        if hi > lo {
            parts.push(levels[i].ln() + (hi - lo).ln());
        }
    }
    ln_sum(parts)
}

fn step_ln_moment(knots: &[f64], levels: &[f64], x: f64) -> f64 {
    let mut parts = Vec::new();
    for i in 0..knots.len() {
        if levels[i] == 0.0 {
            continue;
        }
        let a = knots[i];
        let b = if i + 1 < knots.len() { knots[i + 1] } else { 1.0 };
        // ∫_a^b r^x dr = b^{x+1}(1 - (a/b)^{x+1})/(x+1)
        let e = x + 1.0;
        let inner = -(e * (a / b).ln()).exp_m1();
        parts.push(levels[i].ln() + e * b.ln() + inner.ln() - e.ln());
    }
    ln_sum(parts)
}

/// `ln ω̂` for `ω = exp(-c/d)`, via `ω̂(d) = e^{-z} (d²/c) J(z)` with `z = c/d` and
/// `J(z) = ∫_0^∞ e^{-w} (1 + w/z)^{-2} dw ∈ (0, 1]`.
fn exponential_ln_tail(c: f64, d: f64, tol: f64) -> Result<f64> {
    let z = c / d;
    let f = |w: f64| (-w).exp() / (1.0 + w / z).powi(2);
    const W_MAX: f64 = 60.0;
    let mut j = 0.0;
    // the factor (1 + w/z)^{-2} varies on scale z; split geometrically from there
    let mut lo = 0.0;
    let mut hi = z.min(W_MAX);
    loop {
        j += gauss_kronrod(f, lo, hi, tol, 0.0)?.value;
        if hi >= W_MAX {
            break;
        }
        lo = hi;
        hi = (2.0 * hi).min(W_MAX);
    }
    Ok(-z + 2.0 * d.ln() - c.ln() + j.ln())
}

/// Moments `ω_x` for integer `x = 0..=x_max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentTable {
    pub weight: WeightSpec,
    pub indices: Vec<f64>,
    pub values: Vec<f64>,
    /// Natural logs of `values`; stays finite where `values` underflow.
    pub ln_values: Vec<f64>,
    pub tol: f64,
}

impl MomentTable {
    pub fn get(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn ln(&self, n: usize) -> f64 {
        self.ln_values[n]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn moment_table(w: &RadialWeight, x_max: usize, tol: f64) -> Result<MomentTable> {
    if x_max < 1 {
        return Err(Error::InvalidParam("moment table needs x_max >= 1".into()));
    }
    let ln_values = (0..=x_max)
        .into_par_iter()
        .map(|n| w.ln_moment(n as f64, tol))
        .collect::<Result<Vec<_>>>()?;
    let values = ln_values.iter().map(|v| v.exp()).collect();
    Ok(MomentTable {
        weight: w.spec.clone(),
        indices: (0..=x_max).map(|n| n as f64).collect(),
        values,
        ln_values,
        tol,
    })
}

pub fn eval_density(w: &RadialWeight, r: f64) -> Result<f64> {
    w.density(r)
}

pub fn tail(w: &RadialWeight, r: f64, tol: f64) -> Result<f64> {
    w.tail(r, tol)
}

pub fn moment(w: &RadialWeight, x: f64, tol: f64) -> Result<f64> {
    w.moment(x, tol)
}

pub fn tilde_transform(w: &RadialWeight) -> RadialWeight {
    w.tilde_transform()
}

/// Oscillating weight over `base`; `k` and `n_max` fall back to their defaults when `None`.
pub fn build_oscillating_weight(base: &RadialWeight, p: f64, k: Option<f64>, n_max: Option<usize>) -> Result<RadialWeight> {
    RadialWeight::new(WeightSpec::Oscillating { base: Box::new(base.spec.clone()), p, k, n_max })
}

pub use quadrature::integrate_endpoint_singular;

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn density_examples() {
        assert_eq!(RadialWeight::constant().density(0.3).unwrap(), 1.0);
        assert!((RadialWeight::standard(2.0).unwrap().density(0.5).unwrap() - 0.25).abs() < 1e-15);
        let e = RadialWeight::exponential(1.0).unwrap().density(0.5).unwrap();
        assert!(rel(e, (-2.0f64).exp()) < 1e-15);
        assert!(RadialWeight::constant().density(1.0).is_err());
        assert!(RadialWeight::constant().density(-0.1).is_err());
    }

    #[test]
    fn tail_and_moment_examples() {
        let c = RadialWeight::constant();
        assert!(rel(c.tail(0.75, 1e-12).unwrap(), 0.25) < 1e-15);
        assert!(rel(c.moment(5.0, 1e-12).unwrap(), 1.0 / 6.0) < 1e-14);
        let s2 = RadialWeight::standard(2.0).unwrap();
        assert!(rel(s2.tail(0.5, 1e-12).unwrap(), 0.125 / 3.0) < 1e-14);
        let s1 = RadialWeight::standard(1.0).unwrap();
        assert!(rel(s1.moment(3.0, 1e-12).unwrap(), 0.05) < 1e-14);
    }

    #[test]
    fn gamma_ratio_asymptotics_match_direct() {
        for &a in &[1e4, 3e4, 1e5] {
            for &b in &[0.5, 1.0, 2.0, 3.5] {
                let direct = ln_gamma(a) - ln_gamma(a + b);
                let asym = ln_gamma_ratio(a, b);
                assert!((direct - asym).abs() < 1e-9, "a={a} b={b} {direct} {asym}");
            }
        }
    }

    #[test]
    fn step_weight_right_continuous() {
        let w = RadialWeight::new(WeightSpec::PiecewiseStep { knots: vec![0.25, 0.5], levels: vec![2.0, 3.0] }).unwrap();
        assert_eq!(w.density(0.2).unwrap(), 0.0);
        assert_eq!(w.density(0.25).unwrap(), 2.0);
        assert_eq!(w.density(0.5).unwrap(), 3.0);
        assert!(rel(w.tail(0.0, 1e-12).unwrap(), 0.5 + 1.5) < 1e-14);
        assert!(rel(w.tail(0.4, 1e-12).unwrap(), 0.2 + 1.5) < 1e-14);
        // ∫ r 2 dr on [1/4,1/2) + ∫ r 3 dr on [1/2,1)
        let m1 = (0.25 - 0.0625) + 1.5 * (1.0 - 0.25);
        assert!(rel(w.moment(1.0, 1e-12).unwrap(), m1) < 1e-14);
        assert!(rel(w.tail_quadrature(0.1, 1e-12).unwrap(), w.tail(0.1, 1e-12).unwrap()) < 1e-10);
    }

    #[test]
    fn tilde_closed_forms() {
        let c = RadialWeight::constant().tilde_transform();
        assert_eq!(c.density(0.37).unwrap(), 1.0);
        let s = RadialWeight::standard(1.5).unwrap().tilde_transform();
        let r: f64 = 0.6;
        assert!(rel(s.density(r).unwrap(), (1.0 - r).powf(1.5) / 2.5) < 1e-14);
        assert!(rel(s.tail(r, 1e-12).unwrap(), (1.0 - r).powf(2.5) / 6.25) < 1e-14);
    }

    #[test]
    fn exponential_tail_small_c() {
        let w = RadialWeight::exponential(1e-3).unwrap();
        let direct = w.tail_quadrature(0.2, 1e-12).unwrap();
        let fast = w.tail(0.2, 1e-12).unwrap();
        assert!(rel(fast, direct) < 1e-9, "{fast} {direct}");
    }

    #[test]
    fn exponential_tail_deep() {
        // z = 1e6: ω̂ ≈ e^{-z} d²/c (1 - 2/z)
        let w = RadialWeight::exponential(1.0).unwrap();
        let d = 1e-6;
        let ln = w.ln_tail_d(d, 1e-12).unwrap();
        let approx = -1e6 + 2.0 * d.ln() + (-2e-6f64).ln_1p();
        assert!((ln - approx).abs() < 1e-9, "{ln} {approx}");
    }

    #[test]
    fn moment_table_monotone() {
        let w = RadialWeight::exponential(1.0).unwrap();
        let t = moment_table(&w, 64, 1e-10).unwrap();
        assert!(t.values.windows(2).all(|p| p[1] < p[0]));
        let c = moment_table(&RadialWeight::constant(), 3, 1e-12).unwrap();
        for (n, v) in c.values.iter().enumerate() {
            assert!(rel(*v, 1.0 / (n as f64 + 1.0)) < 1e-14);
        }
    }
}
