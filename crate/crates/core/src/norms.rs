//! Norms of polynomials in the function spaces the operator theory is phrased in.
//!
//! Circle quantities come from FFT samples of `f(re^{iθ})`. Radial integrals
//! over `[0, 1)` are split dyadically in the distance `u = 1 - r` so that
//! the mass of high-degree polynomials, which sits within `1/degree` of the
//! boundary, is resolved.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::CoefficientSeries;
use crate::quadrature::{gauss_kronrod, tanh_sinh};

/// Smallest exponent accepted by the sampled integral means.
pub const MIN_SAMPLED_P: f64 = 0.25;
const GOLDEN_STEPS: usize = 40;
const REFINE_CANDIDATES: usize = 3;
/// Largest factor by which the circle rule is refined for `p ≠ 2`.
const MAX_REFINE: usize = 64;
/// The same inside radial integrals, where every node pays for it.
const MAX_RADIAL_REFINE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    /// Circle sample count. `None` picks `4·(degree+1)` rounded up to a
    /// power of two; an explicit value must be a power of two at least that.
    pub n_theta: Option<usize>,
    /// Relative tolerance of the radial quadrature.
    pub tol: f64,
    /// Use `M_∞(r,f) = f(r)` when every coefficient is nonnegative.
    pub fast_path: bool,
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams { n_theta: None, tol: 1e-10, fast_path: true }
    }
}

/// Evaluates a fixed polynomial on circles `|z| = r` with one planned FFT.
struct Circle<'a> {
    f: &'a CoefficientSeries,
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl<'a> Circle<'a> {
    fn new(f: &'a CoefficientSeries, params: &NormParams) -> Result<Self> {
        let needed = (4 * f.len()).next_power_of_two();
        let n = match params.n_theta {
            None => needed,
            Some(n) if n.is_power_of_two() && n >= needed => n,
            Some(n) => {
                return Err(Error::InvalidParam(format!(
                    "n_theta = {n} must be a power of two no smaller than {needed} for degree {}",
                    f.degree()
                )))
            }
        };
        let fft = FftPlanner::new().plan_fft_inverse(n);
        Ok(Circle { f, n, fft })
    }

    fn samples(&self, r: f64) -> Vec<Complex64> {
        self.samples_shifted(r, 0.0)
    }

    /// Values at `θ_j = 2π(j + shift)/n`.
    fn samples_shifted(&self, r: f64, shift: f64) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        let mut rk = 1.0;
        let step = Complex64::from_polar(1.0, std::f64::consts::TAU * shift / self.n as f64);
        let mut twist = Complex64::new(1.0, 0.0);
        for (slot, &c) in buf.iter_mut().zip(&self.f.coeffs) {
            *slot = twist * (c * rk);
            rk *= r;
            twist *= step;
        }
        self.fft.process(&mut buf);
        buf
    }

    /// `Σ (|f| / m)^p` over the shifts `i/factor` of the base grid, taking
    /// every shift for `step = 1` and only the odd ones for `step = 2`.
    fn power_sum(&self, r: f64, p: f64, m: f64, factor: usize, step: usize) -> f64 {
        (step - 1..factor)
            .step_by(step)
            .map(|i| {
                let vals = self.samples_shifted(r, i as f64 / factor as f64);
                vals.iter().map(|v| (v.norm() / m).powf(p)).sum::<f64>()
            })
            .sum()
    }

    /// Largest sampled modulus on the base grid.
    fn base_max(&self, r: f64) -> f64 {
        self.samples(r).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Trapezoid `M_p(r, f)` on the base grid refined by `factor`.
    fn mean(&self, r: f64, p: f64, factor: usize) -> f64 {
        let m = self.base_max(r);
        if m == 0.0 {
            return 0.0;
        }
        let s = self.power_sum(r, p, m, factor, 1) / (factor * self.n) as f64;
        m * s.powf(1.0 / p)
    }

    /// Refinement factor (a power of two up to `cap`) after which doubling
    /// the circle grid moves `M_p(r, f)` by at most `tol` relative. The base
    /// grid is exact for `p = 2`.
    fn refinement(&self, r: f64, p: f64, tol: f64, cap: usize) -> usize {
        let m = self.base_max(r);
        if p == 2.0 || m == 0.0 {
            return 1;
        }
        let mut total = self.power_sum(r, p, m, 1, 1);
        let mut est = total / self.n as f64;
        let mut factor = 1;
        while factor < cap {
            factor *= 2;
            total += self.power_sum(r, p, m, factor, 2);
            let next = total / (factor * self.n) as f64;
            let settled = (next - est).abs() <= tol * next;
            est = next;
            if settled {
                break;
            }
        }
        factor
    }

    /// `max_θ |f(re^{iθ})|`: sampled maximum refined by golden-section
    /// search around the largest sampled local maxima.
    fn max_modulus(&self, r: f64, fast_path: bool) -> f64 {
        if fast_path && self.f.coeffs.iter().all(|&c| c >= 0.0) {
            return self.f.eval(r);
        }
        let abs: Vec<f64> = self.samples(r).iter().map(|v| v.norm()).collect();
        let n = abs.len();
        let mut peaks: Vec<usize> = (0..n)
            .filter(|&j| abs[j] >= abs[(j + n - 1) % n] && abs[j] >= abs[(j + 1) % n])
            .collect();
        peaks.sort_by(|&a, &b| abs[b].total_cmp(&abs[a]));
        peaks.truncate(REFINE_CANDIDATES);
        let h = std::f64::consts::TAU / n as f64;
        let at = |theta: f64| self.f.eval_complex(Complex64::from_polar(r, theta)).norm();
        let mut best = abs.iter().cloned().fold(0.0, f64::max);
        for j in peaks {
            let (mut a, mut b) = ((j as f64 - 1.0) * h, (j as f64 + 1.0) * h);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
            let (mut f1, mut f2) = (at(x1), at(x2));
            for _ in 0..GOLDEN_STEPS {
                if f1 >= f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = at(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = at(x2);
                }
            }
            best = best.max(f1).max(f2);
        }
        best
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < MIN_SAMPLED_P {
        return Err(Error::Domain { what: "p", value: p, domain: "[1/4, ∞] for sampled integral means" });
    }
    Ok(())
}

/// `∫_0^1 g(1-u) u^alpha du` split at `u = 2^{-k}`.
///
/// The innermost piece `[0, 2^{-K})` goes to tanh-sinh so that a singular
/// `u^alpha` is handled; every other piece is smooth and uses Gauss-Kronrod.
///
/// `make(u_lo)` builds the integrand for the piece whose inner distance end
/// is `u_lo`, so a piece can size its sampling to its own closest approach
/// to the circle.
fn radial_integral<M, G>(make: &M, alpha: f64, degree: usize, tol: f64) -> Result<f64>
where
    M: Fn(f64) -> G + Sync,
    G: Fn(f64) -> f64,
{
    let levels = (usize::BITS - (degree + 1).leading_zeros()) as i32 + 4;
    let pieces: Vec<Result<f64>> = (0..=levels)
        .into_par_iter()
        .map(|k| {
            let hi = 0.5f64.powi(k);
            if k == levels {
                let g = make(0.0);
                tanh_sinh(|u, _, _| if u <= 0.0 { 0.0 } else { g(1.0 - u) * u.powf(alpha) }, 0.0, hi, tol)
                    .map(|e| e.value)
            } else {
                let g = make(0.5 * hi);
                gauss_kronrod(|u| g(1.0 - u) * u.powf(alpha), 0.5 * hi, hi, tol, 0.0).map(|e| e.value)
            }
        })
        .collect();
    pieces.into_iter().sum()
}

/// Integral mean `M_p(r, f)`; `p = ∞` gives the maximum modulus.
pub fn integral_mean(f: &CoefficientSeries, r: f64, p: f64, params: &NormParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain { what: "r", value: r, domain: "[0, 1]" });
    }
    check_p(p)?;
    let circle = Circle::new(f, params)?;
    if p.is_infinite() {
        return Ok(circle.max_modulus(r, params.fast_path));
    }
    let factor = circle.refinement(r, p, params.tol, MAX_REFINE);
    Ok(circle.mean(r, p, factor))
}

/// `‖f‖_{H^p} = M_p(1, f)` for a polynomial.
pub fn hp_norm(f: &CoefficientSeries, p: f64, params: &NormParams) -> Result<f64> {
    integral_mean(f, 1.0, p, params)
}

/// `(Σ |f̂(n)|^p (n+1)^{p-2})^{1/p}`.
pub fn hl_norm(f: &CoefficientSeries, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain { what: "p", value: p, domain: "(0, ∞)" });
    }
    let s: f64 = f
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(n, c)| c.abs().powf(p) * ((n + 1) as f64).powf(p - 2.0))
        .sum();
    Ok(s.powf(1.0 / p))
}

/// `sup_n (n+1) |f̂(n)|`.
pub fn hl_infty(f: &CoefficientSeries) -> f64 {
    f.coeffs.iter().enumerate().map(|(n, c)| (n + 1) as f64 * c.abs()).fold(0.0, f64::max)
}

/// Norm of the Dirichlet-type space `D^p_{p-1}`:
/// `(|f(0)|^p + 2∫_0^1 M_p^p(r,f') (1-r)^{p-1} r dr)^{1/p}`.
pub fn dirichlet_norm(f: &CoefficientSeries, p: f64, params: &NormParams) -> Result<f64> {
    check_p(p)?;
    if p.is_infinite() {
        return Err(Error::Domain { what: "p", value: p, domain: "[1/4, ∞)" });
    }
    let df = f.derivative();
    let circle = Circle::new(&df, params)?;
    // one grid per piece keeps the integrand smooth in r; it is sized at the
    // piece's outer radius, where the trapezoid rule converges slowest
    let make = |u_lo: f64| {
        let factor = circle.refinement(1.0 - u_lo, p, params.tol, MAX_RADIAL_REFINE);
        let circle = &circle;
        move |r: f64| circle.mean(r, p, factor).powf(p) * r
    };
    let integral = radial_integral(&make, p - 1.0, f.degree(), params.tol)?;
    Ok((f.coeffs[0].abs().powf(p) + 2.0 * integral).powf(1.0 / p))
}

/// `(∫_0^1 M_∞^p(r, f) dr)^{1/p}`; any `p > 0`.
pub fn hinftyp_norm(f: &CoefficientSeries, p: f64, params: &NormParams) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain { what: "p", value: p, domain: "(0, ∞)" });
    }
    let circle = Circle::new(f, params)?;
    let g = |r: f64| circle.max_modulus(r, params.fast_path).powf(p);
    let integral = radial_integral(&|_| g, 0.0, f.degree(), params.tol)?;
    Ok(integral.powf(1.0 / p))
}

/// `|f(0)| + sup_{|z|<1} (1-|z|²) |f'(z)|`, maximised over a radius grid
/// geometric in `1 - r` and refined by golden-section search.
pub fn bloch_norm(f: &CoefficientSeries, params: &NormParams) -> Result<f64> {
    let df = f.derivative();
    let circle = Circle::new(&df, params)?;
    let g = |u: f64| {
        let r = 1.0 - u;
        u * (1.0 + r) * circle.max_modulus(r, params.fast_path)
    };
    let levels = 4 * ((usize::BITS - (f.len()).leading_zeros()) as i32 + 4);
    let grid: Vec<f64> = (0..=levels).map(|j| 0.5f64.powf(j as f64 / 4.0)).collect();
    let vals: Vec<f64> = grid.par_iter().map(|&u| g(u)).collect();
    let j = (0..vals.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    let mut best = vals[j];
    let (mut a, mut b) = (grid[(j + 1).min(grid.len() - 1)], grid[j.saturating_sub(1)]);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - gr * (b - a), a + gr * (b - a));
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..GOLDEN_STEPS {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = g(x2);
        }
    }
    best = best.max(f1).max(f2);
    Ok(f.coeffs[0].abs() + best)
}
