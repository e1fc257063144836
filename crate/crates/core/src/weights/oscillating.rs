//! Plateau weight whose tail tracks a doubling weight while `∫ ω^{p'}` blows up.
//!
//! With `ν̃` the tilde transform of the base weight and distances
//! `d_n = K^{-n}` (so `r_n = 1 - d_n`), the weight equals `h_n ν̃` on the
//! plateau `[r_n, r_n + a_n]` and vanishes between plateaus, where
//!
//! ```text
//! a_n = min(r_{n+1} - r_n, ν̃hat(r_n)^p / (n+1)^{p-1}) / 2
//! h_n = (ν̃hat(r_n) - ν̃hat(r_{n+1})) / ∫_{plateau n} ν̃
//! ```
//!
//! Past the last plateau the weight continues as `ν̃` itself, which keeps the
//! tail positive all the way to the boundary. Plateaus quickly become far
//! narrower than the float spacing near `r_n`, so each one is stored as a
//! [`Span`] and integrated in local coordinates.

use crate::error::{Error, Result};
use crate::quadrature::{ln_add, ln_integrate_span, ln_sub, ln_sum, Span};

use super::RadialWeight;

/// Default truncation depth.
pub const DEFAULT_N_MAX: usize = 24;
/// Plateaus shorter than this end the construction.
const MIN_PLATEAU: f64 = 1e-300;
/// Required lower-doubling ratio `ν̃hat(d) / ν̃hat(d/K)` when `K` is chosen automatically.
const K_RATIO: f64 = 1.1;
/// Fallback tolerance for the continuation region when it is negligible.
const LOOSE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Plateau {
    pub n: usize,
    /// Left end `r_n`.
    pub r: f64,
    /// Distance `d_n = 1 - r_n`.
    pub d: f64,
    /// Length `a_n`.
    pub a: f64,
    /// `ln h_n`.
    pub ln_h: f64,
    /// `ln ∫ ν̃` over the plateau.
    pub ln_mass: f64,
    /// `ln ν̃hat(r_n)`.
    pub ln_tilde_hat: f64,
    /// `ln ν̃hat(r_{n+1})`.
    pub ln_tilde_hat_next: f64,
}

impl Plateau {
    pub fn h(&self) -> f64 {
        self.ln_h.exp()
    }

    /// Right end `t_n = r_n + a_n` (rounded; it often equals `r_n` in `f64`).
    pub fn t(&self) -> f64 {
        self.r + self.a
    }

    fn span(&self) -> Span {
        Span { anchor: self.d, len: self.a }
    }
}

#[derive(Debug, Clone)]
pub struct Oscillating {
    pub base: RadialWeight,
    pub tilde: RadialWeight,
    pub p: f64,
    pub k: f64,
    pub plateaus: Vec<Plateau>,
    /// Distance `d_{N+1}` below which the weight is `ν̃` itself.
    pub d_cont: f64,
    pub tol: f64,
}

/// Smallest power of two `K <= 1024` with `ν̃hat(d)/ν̃hat(d/K) >= 1.1` on the
/// grid `d = 2^{-j/4}`, `j = 0..=80`.
fn default_k(tilde: &RadialWeight, tol: f64) -> Result<f64> {
    'outer: for e in 1..=10 {
        let k = f64::powi(2.0, e);
        for j in 0..=80 {
            let d = (-(j as f64) / 4.0).exp2();
            let ratio = tilde.ln_tail_d(d, tol)? - tilde.ln_tail_d(d / k, tol)?;
            if ratio < K_RATIO.ln() {
                continue 'outer;
            }
        }
        return Ok(k);
    }
    Err(Error::InvalidSpec(
        "no dilation K <= 1024 gives the lower doubling inequality for the tilde of the base".into(),
    ))
}

impl Oscillating {
    pub(super) fn build(base: RadialWeight, p: f64, k: Option<f64>, n_max: Option<usize>, tol: f64) -> Result<Self> {
        let tilde = base.tilde_transform();
        let k = match k {
            Some(k) => k,
            None => default_k(&tilde, tol)?,
        };
        let explicit = n_max.is_some();
        let n_max = n_max.unwrap_or(DEFAULT_N_MAX);
        let ln_k = k.ln();
        let dist = |n: usize| (-(n as f64) * ln_k).exp();

        let mut plateaus: Vec<Plateau> = Vec::with_capacity(n_max + 1);
        let mut ln_th = tilde.ln_tail_d(1.0, tol)?;
        for n in 0..=n_max {
            let d = if n == 0 { 1.0 } else { dist(n) };
            let d_next = dist(n + 1);
            let ln_th_next = tilde.ln_tail_d(d_next, tol)?;
            let ln_a = 0.5f64.ln() + (d - d_next).ln().min(p * ln_th - (p - 1.0) * ((n + 1) as f64).ln());
            let a = ln_a.exp();
            if !(a >= MIN_PLATEAU) {
                if explicit || n == 0 {
                    return Err(Error::Construction {
                        depth: n,
                        reason: format!("plateau length {a:e} fell below {MIN_PLATEAU:e}"),
                    });
                }
                break;
            }
            let span = Span { anchor: d, len: a };
            let ln_mass = ln_integrate_span(&|s| tilde.ln_density_d(s), span, tol)?;
            let ln_h = ln_sub(ln_th, ln_th_next) - ln_mass;
            if !ln_h.is_finite() {
                return Err(Error::Construction { depth: n, reason: "plateau height is not finite".into() });
            }
            plateaus.push(Plateau {
                n,
                r: 1.0 - d,
                d,
                a,
                ln_h,
                ln_mass,
                ln_tilde_hat: ln_th,
                ln_tilde_hat_next: ln_th_next,
            });
            ln_th = ln_th_next;
        }
        let d_cont = dist(plateaus.len());
        Ok(Oscillating { base, tilde, p, k, plateaus, d_cont, tol })
    }

    pub fn n_max(&self) -> usize {
        self.plateaus.len() - 1
    }

    pub(super) fn knots(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.plateaus.len() + 1);
        for pl in &self.plateaus {
            out.push(pl.r);
            let t = pl.t();
            if t > pl.r {
                out.push(t);
            }
        }
        out.push(1.0 - self.d_cont);
        out
    }

    pub(super) fn knot_distances(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.plateaus.len() + 1);
        for pl in &self.plateaus {
            out.push(pl.d);
            let end = pl.d - pl.a;
            if end < pl.d {
                out.push(end);
            }
        }
        out.push(self.d_cont);
        out
    }

    /// Plateau index `n` with `d_{n+1} < d <= d_n`, or `None` in the continuation region.
    fn locate(&self, d: f64) -> Option<usize> {
        if d <= self.d_cont {
            return None;
        }
        // plateaus are stored with decreasing d
        let idx = self.plateaus.partition_point(|pl| pl.d >= d);
        Some(idx.saturating_sub(1))
    }

    pub(super) fn ln_density_d(&self, d: f64) -> f64 {
        match self.locate(d) {
            None => self.tilde.ln_density_d(d),
            Some(n) => {
                let pl = &self.plateaus[n];
                if pl.d - d <= pl.a {
                    pl.ln_h + self.tilde.ln_density_d(d)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub(super) fn ln_tail_d(&self, d: f64, tol: f64) -> Result<f64> {
        match self.locate(d) {
            None => self.tilde.ln_tail_d(d, tol),
            Some(n) => {
                let pl = &self.plateaus[n];
                if d == pl.d {
                    return Ok(pl.ln_tilde_hat);
                }
                let u = pl.d - d;
                if u >= pl.a {
                    return Ok(pl.ln_tilde_hat_next);
                }
                let part = Span { anchor: d, len: pl.a - u };
                let ln_part = ln_integrate_span(&|s| self.tilde.ln_density_d(s), part, tol)?;
                Ok(ln_add(pl.ln_tilde_hat_next, pl.ln_h + ln_part))
            }
        }
    }

    pub(super) fn ln_integral_d(&self, g: &dyn Fn(f64) -> f64, q: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
        let mut parts = Vec::new();
        for pl in &self.plateaus {
            if let Some(span) = overlap(pl, lo, hi) {
                parts.push(self.ln_plateau_integral(pl, span, g, q, tol)?);
            }
        }
        if lo < self.d_cont {
            let top = hi.min(self.d_cont);
            let cont = match self.tilde.ln_integral_d(g, q, lo, top, tol) {
                Ok(v) => v,
                Err(Error::Accuracy { .. }) => {
                    // Near the boundary, integrands of t = 1 - d can be too noisy
                    // for the relative tolerance. A piece that small against the
                    // plateaus only needs the looser local accuracy.
                    let loose = self.tilde.ln_integral_d(g, q, lo, top, LOOSE_TOL)?;
                    if loose + LOOSE_TOL.ln() > ln_sum(parts.iter().copied()) + tol.ln() {
                        return Err(Error::Accuracy { estimate: loose.exp(), error: LOOSE_TOL * loose.exp() });
                    }
                    loose
                }
                Err(e) => return Err(e),
            };
            parts.push(cont);
        }
        Ok(ln_sum(parts))
    }

    fn ln_plateau_integral(&self, pl: &Plateau, span: Span, g: &dyn Fn(f64) -> f64, q: f64, tol: f64) -> Result<f64> {
        let f = |s: f64| g(s) + q * (pl.ln_h + self.tilde.ln_density_d(s));
        ln_integrate_span(&f, span, tol)
    }

    /// `ln ∫ ω^q` over the whole plateau `n`.
    pub fn ln_plateau_power(&self, n: usize, q: f64) -> Result<f64> {
        let pl = &self.plateaus[n];
        self.ln_plateau_integral(pl, pl.span(), &|_| 0.0, q, self.tol)
    }
}

/// Part of plateau `pl` inside the distance window `[lo, hi]`, worked out in
/// the local coordinate `u = d_n - d ∈ [0, a_n]` so sub-ulp plateaus survive.
fn overlap(pl: &Plateau, lo: f64, hi: f64) -> Option<Span> {
    let u_lo = (pl.d - hi).max(0.0);
    let u_hi = (pl.d - lo).min(pl.a);
    if u_hi <= u_lo {
        return None;
    }
    Some(Span { anchor: pl.d - u_lo, len: u_hi - u_lo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightSpec;

    fn build(base: WeightSpec, p: f64, k: Option<f64>, n_max: Option<usize>) -> RadialWeight {
        RadialWeight::new(WeightSpec::Oscillating { base: Box::new(base), p, k, n_max }).unwrap()
    }

    #[test]
    fn tail_matches_tilde_at_knots() {
        let w = build(WeightSpec::Constant, 2.0, Some(16.0), None);
        let o = w.oscillating().unwrap();
        assert_eq!(o.n_max(), 24);
        for pl in &o.plateaus {
            // ν̃ = 1 for the constant base, so ν̃hat(d) = d
            let got = w.ln_tail_d(pl.d, 1e-12).unwrap();
            assert!((got - pl.d.ln()).abs() < 1e-12, "n={} {got}", pl.n);
        }
    }

    #[test]
    fn total_mass_equals_tilde_hat_at_zero() {
        let w = build(WeightSpec::Standard { beta: 1.0 }, 2.0, None, Some(30));
        let direct = w.ln_integral_d(&|_| 0.0, 1.0, 0.0, 1.0, 1e-12).unwrap();
        // ν̃hat(0) = 1/4 for beta = 1
        assert!((direct - 0.25f64.ln()).abs() < 1e-9, "{direct}");
    }

    #[test]
    fn default_k_for_standard_base_is_two() {
        let w = build(WeightSpec::Standard { beta: 1.0 }, 2.0, None, None);
        assert_eq!(w.oscillating().unwrap().k, 2.0);
    }

    #[test]
    fn underflow_reports_depth() {
        let err = RadialWeight::new(WeightSpec::Oscillating {
            base: Box::new(WeightSpec::Standard { beta: 1.0 }),
            p: 4.0,
            k: Some(2.0),
            n_max: Some(400),
        })
        .unwrap_err();
        match err {
            Error::Construction { depth, .. } => assert!(depth > 10 && depth < 400),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn density_vanishes_between_plateaus() {
        let w = build(WeightSpec::Constant, 2.0, Some(16.0), Some(4));
        let o = w.oscillating().unwrap();
        let pl = &o.plateaus[1];
        // halfway between r_1 and r_2 lies in a gap
        let mid = 0.5 * (pl.d + o.plateaus[2].d);
        assert_eq!(w.ln_density_d(mid), f64::NEG_INFINITY);
        assert!(w.ln_density_d(pl.d).is_finite());
    }
}
