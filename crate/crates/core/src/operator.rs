//! The Hilbert-type operator `H_ω` as a transform of Taylor coefficients.
//!
//! With `a_{n,k} = ω_{n+k} / (2(n+1) ω_{2n+1})` the operator acts by
//! `(H_ω f)^(n) = Σ_k a_{n,k} f̂(k)`. All moment ratios are formed from log
//! moments, so weights whose moments underflow still give finite entries.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{ln_add, ln_sum};
use crate::report::{csv_float, lossless_vec};
use crate::weights::{moment_table, MomentTable, RadialWeight, WeightSpec};

/// Taylor coefficients `f̂(0), ..., f̂(degree)` of a polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSeries {
    #[serde(with = "lossless_vec")]
    pub coeffs: Vec<f64>,
}

impl CoefficientSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParam("a coefficient series needs at least one coefficient".into()));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParam(format!("coefficient {c} is not finite")));
        }
        Ok(CoefficientSeries { coeffs })
    }

    /// `z^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        CoefficientSeries { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation at a real point.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Coefficients of the derivative.
    pub fn derivative(&self) -> CoefficientSeries {
        if self.coeffs.len() == 1 {
            return CoefficientSeries { coeffs: vec![0.0] };
        }
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect();
        CoefficientSeries { coeffs }
    }

    /// Sum; the shorter series is padded with zeros.
    pub fn add(&self, other: &CoefficientSeries) -> CoefficientSeries {
        let n = self.len().max(other.len());
        let get = |s: &CoefficientSeries, i: usize| s.coeffs.get(i).copied().unwrap_or(0.0);
        CoefficientSeries { coeffs: (0..n).map(|i| get(self, i) + get(other, i)).collect() }
    }

    pub fn scale(&self, s: f64) -> CoefficientSeries {
        CoefficientSeries { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `index,coeff` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["index", "coeff"])?;
        for (i, &c) in self.coeffs.iter().enumerate() {
            wtr.write_record([i.to_string(), csv_float(c)])?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Leading `n_rows × n_cols` block of the matrix of `H_ω`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    #[serde(with = "lossless_vec")]
    pub entries: Vec<f64>,
    pub weight: WeightSpec,
}

impl OperatorMatrix {
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.entries[n * self.n_cols + k]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.entries[n * self.n_cols..(n + 1) * self.n_cols]
    }

    /// One matrix row per line, no header.
    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for n in 0..self.n_rows {
            wtr.write_record(self.row(n).iter().map(|&v| csv_float(v)))?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// `ln a_{n,k}` from a moment table covering both indices.
fn ln_entry(m: &MomentTable, n: usize, k: usize) -> f64 {
    m.ln(n + k) - std::f64::consts::LN_2 - ((n + 1) as f64).ln() - m.ln(2 * n + 1)
}

fn check_size(name: &str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParam(format!("{name} must be at least 1")));
    }
    Ok(())
}

pub fn matrix(w: &RadialWeight, n: usize, tol: f64) -> Result<OperatorMatrix> {
    check_size("matrix size", n)?;
    let m = moment_table(w, 2 * n - 1, tol)?;
    let entries = (0..n * n).map(|i| ln_entry(&m, i / n, i % n).exp()).collect();
    Ok(OperatorMatrix { n_rows: n, n_cols: n, entries, weight: w.spec().clone() })
}

/// First `n_out` coefficients of `H_ω f`, from finite sums of moment ratios.
pub fn apply_series(w: &RadialWeight, f: &CoefficientSeries, n_out: usize, tol: f64) -> Result<CoefficientSeries> {
    check_size("n_out", n_out)?;
    let x_max = (n_out - 1 + f.degree()).max(2 * n_out - 1);
    let m = moment_table(w, x_max, tol)?;
    let coeffs = (0..n_out)
        .into_par_iter()
        .map(|n| f.coeffs.iter().enumerate().map(|(k, &c)| c * ln_entry(&m, n, k).exp()).sum())
        .collect();
    Ok(CoefficientSeries { coeffs })
}

/// `ln(2(n+1) ω_{2n+1})` for `n < n_out`.
fn ln_normalizers(w: &RadialWeight, n_out: usize, tol: f64) -> Result<Vec<f64>> {
    (0..n_out)
        .into_par_iter()
        .map(|n| Ok(w.ln_moment((2 * n + 1) as f64, tol)? + (2.0 * (n + 1) as f64).ln()))
        .collect()
}

/// Distances `d` at which `f(1 - d)` changes sign, found on a grid uniform in
/// `t` and geometric towards `t = 1`, then refined by bisection.
fn sign_changes(f: &(dyn Fn(f64) -> f64 + Sync)) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..1024).map(|k| 1.0 - k as f64 / 1024.0).collect();
    grid.extend((1..=8 * 53).map(|j| (-(j as f64) / 8.0).exp2()));
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    let sign = |d: f64| f(1.0 - d).signum();
    let mut roots = Vec::new();
    for pair in grid.windows(2) {
        let (mut hi, mut lo) = (pair[0], pair[1]);
        let s_hi = sign(hi);
        if s_hi == sign(lo) || f(1.0 - hi) == 0.0 {
            continue;
        }
        loop {
            let mid = 0.5 * (hi + lo);
            if mid <= lo || mid >= hi {
                break;
            }
            if sign(mid) == s_hi {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        roots.push(hi);
    }
    roots
}

/// `∫_0^1 f(t) t^n ω(t) dt` as `(ln ∫ f₊ …, ln ∫ f₋ …)`.
///
/// Each part is integrated in log scale between consecutive sign changes of
/// `f`, so the kinks of `f₊` and `f₋` sit at interval ends.
fn signed_moment(w: &RadialWeight, f: &(dyn Fn(f64) -> f64 + Sync), n: usize, tol: f64) -> Result<(f64, f64)> {
    let nf = n as f64;
    let mut cuts = vec![1.0];
    cuts.extend(sign_changes(f));
    cuts.push(0.0);
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for piece in cuts.windows(2) {
        let (hi, lo) = (piece[0], piece[1]);
        let sign = f(1.0 - 0.5 * (hi + lo)).signum();
        let g = |d: f64| {
            let v = sign * f(1.0 - d);
            if v > 0.0 && n == 0 {
                v.ln()
            } else if v > 0.0 {
                v.ln() + nf * (-d).ln_1p()
            } else if v.is_nan() {
                f64::NAN
            } else {
                f64::NEG_INFINITY
            }
        };
        let part = w.ln_integral_d(&g, 1.0, lo, hi, tol)?;
        if sign > 0.0 {
            pos.push(part);
        } else if sign < 0.0 {
            neg.push(part);
        }
    }
    Ok((ln_sum(pos), ln_sum(neg)))
}

/// `H_ω` applied to `|f|` on `[0, 1)`: coefficient `n` is
/// `∫_0^1 |f(t)| t^n ω(t) dt / (2(n+1) ω_{2n+1})`.
pub fn apply_sublinear(w: &RadialWeight, f: &CoefficientSeries, n_out: usize, tol: f64) -> Result<CoefficientSeries> {
    check_size("n_out", n_out)?;
    let norm = ln_normalizers(w, n_out, tol)?;
    let eval = |t: f64| f.eval(t);
    let coeffs = (0..n_out)
        .into_par_iter()
        .map(|n| {
            // split at the sign changes of f, where |f| has its kinks
            let (pos, neg) = signed_moment(w, &eval, n, tol)?;
            Ok((ln_add(pos, neg) - norm[n]).exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CoefficientSeries { coeffs })
}

/// Coefficients of `H_ω f` by direct quadrature of `∫ f(t) t^n ω(t) dt`.
pub fn apply_quadrature(
    w: &RadialWeight,
    f: &(dyn Fn(f64) -> f64 + Sync),
    n_out: usize,
    tol: f64,
) -> Result<CoefficientSeries> {
    check_size("n_out", n_out)?;
    let norm = ln_normalizers(w, n_out, tol)?;
    let coeffs = (0..n_out)
        .into_par_iter()
        .map(|n| {
            let (pos, neg) = signed_moment(w, f, n, tol)?;
            Ok((pos - norm[n]).exp() - (neg - norm[n]).exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CoefficientSeries { coeffs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    /// `Σ (tz)^n / (2 ω_{2n+1})`.
    B,
    /// `Σ t^n z^n / (2(n+1) ω_{2n+1})`, the kernel of `H_ω`.
    K,
    /// `∂K/∂z`.
    G,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    /// Number of series terms summed.
    pub terms: usize,
    /// Bound on the omitted tail.
    pub tail_bound: f64,
}

/// Partial sum of a kernel series, stopped once a geometric bound on the
/// remainder falls below `tol`. At most `n_max` terms are used.
///
/// The bound uses `ω_{2n+1} >= s^{2n+1} ω̂(s)` for `s = sqrt((1+|tz|)/2)`,
/// which makes every term at most a geometric sequence of ratio
/// `ρ = |tz|/s^2 < 1`.
pub fn kernel_eval(w: &RadialWeight, kind: KernelKind, t: f64, z: Complex64, n_max: usize, tol: f64) -> Result<KernelValue> {
    crate::weights::check_r(t)?;
    if !(z.norm() < 1.0) {
        return Err(Error::Domain { what: "|z|", value: z.norm(), domain: "[0, 1)" });
    }
    check_size("kernel term budget", n_max)?;
    let x = t * z.norm();
    let s = (0.5 * (1.0 + x)).sqrt();
    let rho = x / (s * s);
    let ln_floor = w.ln_tail(s, tol)?;
    // tail after N terms: Σ_{n>=N} c_n ρ^n / (2 s ω̂(s)), c_n the extra factor per kind
    let tail_after = |n_terms: usize| -> f64 {
        let nf = n_terms as f64;
        let geo = nf * rho.ln() - (1.0 - rho).ln() - std::f64::consts::LN_2 - s.ln() - ln_floor;
        match kind {
            KernelKind::B => geo.exp(),
            KernelKind::K => (geo - (nf + 1.0).ln()).exp(),
            // n t^n |z|^{n-1}/(n+1) <= t (tz)^{n-1}; one power of ρ traded for t/s^2
            KernelKind::G => {
                if n_terms == 0 {
                    f64::INFINITY
                } else {
                    (geo - rho.ln() + t.ln() - 2.0 * s.ln()).exp()
                }
            }
        }
    };
    let terms = if x == 0.0 {
        1
    } else {
        match (1..=n_max).find(|&n| tail_after(n) <= tol) {
            Some(n) => n,
            None => {
                return Err(Error::Accuracy { estimate: f64::NAN, error: tail_after(n_max) });
            }
        }
    };
    let ln_m: Vec<f64> =
        (0..terms).into_par_iter().map(|n| w.ln_moment((2 * n + 1) as f64, tol)).collect::<Result<_>>()?;
    let mut value = Complex64::new(0.0, 0.0);
    for (n, &lm) in ln_m.iter().enumerate() {
        let c = (-std::f64::consts::LN_2 - lm).exp();
        let term = match kind {
            KernelKind::B => c * (t * z).powu(n as u32),
            KernelKind::K => c / (n + 1) as f64 * (t * z).powu(n as u32),
            KernelKind::G => {
                if n == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * n as f64 / (n + 1) as f64 * t.powi(n as i32) * z.powu(n as u32 - 1)
                }
            }
        };
        value += term;
    }
    let tail_bound = if x == 0.0 { 0.0 } else { tail_after(terms) };
    Ok(KernelValue { value, terms, tail_bound })
}
