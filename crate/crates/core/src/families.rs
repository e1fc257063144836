//! Test-function families, all emitted as plain coefficient series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::CoefficientSeries;
use crate::weights::{moment_table, RadialWeight, WeightSpec};

/// Largest lacunary term count; index `2^30` is the last one we allocate.
pub const LACUNARY_MAX_TERMS: usize = 30;
/// Relative HL-mass left in the tail of an adaptively truncated `f_a`.
pub const CONE_TAIL: f64 = 1e-6;
const CONE_MAX_DEGREE: usize = 1 << 24;

/// JSON mirror of the family constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    PowerBlock {
        n: usize,
        m: usize,
        #[serde(default)]
        alpha: f64,
        #[serde(default)]
        beta: f64,
        #[serde(default)]
        weight: Option<WeightSpec>,
    },
    DualBlock {
        n: usize,
        m: usize,
        p: f64,
        weight: WeightSpec,
    },
    ConeFa {
        a: f64,
        p: f64,
        #[serde(default)]
        degree: Option<usize>,
    },
    Lacunary {
        p: f64,
        terms: usize,
    },
}

impl FamilySpec {
    pub fn build(&self, tol: f64) -> Result<CoefficientSeries> {
        match self {
            FamilySpec::PowerBlock { n, m, alpha, beta, weight } => {
                let w = weight.clone().map(RadialWeight::new).transpose()?;
                power_block(w.as_ref(), *n, *m, *alpha, *beta, tol)
            }
            FamilySpec::DualBlock { n, m, p, weight } => {
                dual_block(&RadialWeight::new(weight.clone())?, *n, *m, *p, tol)
            }
            FamilySpec::ConeFa { a, p, degree } => cone_fa(*a, *p, *degree),
            FamilySpec::Lacunary { p, terms } => lacunary(*p, *terms),
        }
    }

    /// Same block family ending at index `m`; only block families have a size.
    pub fn with_size(&self, size: usize) -> Result<FamilySpec> {
        let mut out = self.clone();
        match &mut out {
            FamilySpec::PowerBlock { m, .. } | FamilySpec::DualBlock { m, .. } => *m = size,
            _ => return Err(Error::InvalidParam("only power_block and dual_block families can be swept".into())),
        }
        Ok(out)
    }
}

fn check_range(n: usize, m: usize) -> Result<()> {
    if n > m {
        return Err(Error::InvalidParam(format!("block start {n} exceeds block end {m}")));
    }
    Ok(())
}

/// `Σ_{k=N}^{M} ω_{2k}^α (k+1)^β z^k`. The weight is needed only when `α ≠ 0`.
pub fn power_block(
    w: Option<&RadialWeight>,
    n: usize,
    m: usize,
    alpha: f64,
    beta: f64,
    tol: f64,
) -> Result<CoefficientSeries> {
    check_range(n, m)?;
    let mut coeffs = vec![0.0; m + 1];
    if alpha == 0.0 {
        for (k, c) in coeffs.iter_mut().enumerate().skip(n) {
            *c = ((k + 1) as f64).powf(beta);
        }
    } else {
        let w = w.ok_or_else(|| Error::InvalidParam("power_block with alpha ≠ 0 needs a weight".into()))?;
        let table = moment_table(w, 2 * m, tol)?;
        for (k, c) in coeffs.iter_mut().enumerate().skip(n) {
            *c = (alpha * table.ln(2 * k) + beta * ((k + 1) as f64).ln()).exp();
        }
    }
    CoefficientSeries::new(coeffs)
}

/// `Σ_{k=N}^{M} ω_{2k+1}^{p'-1} (k+1)^{p'-2} z^k` with `p' = p/(p-1)`.
pub fn dual_block(w: &RadialWeight, n: usize, m: usize, p: f64, tol: f64) -> Result<CoefficientSeries> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain { what: "p", value: p, domain: "(1, ∞)" });
    }
    check_range(n, m)?;
    let q = p / (p - 1.0);
    let table = moment_table(w, 2 * m + 1, tol)?;
    let mut coeffs = vec![0.0; m + 1];
    for (k, c) in coeffs.iter_mut().enumerate().skip(n) {
        *c = ((q - 1.0) * table.ln(2 * k + 1) + (q - 2.0) * ((k + 1) as f64).ln()).exp();
    }
    CoefficientSeries::new(coeffs)
}

/// Truncated `f_a(z) = (1-a²)^{1/p} (1-az)^{-2/p}`.
///
/// With `degree = None` terms are appended until the geometric bound on the
/// remaining HL(p) mass drops below `CONE_TAIL` of the mass so far. An
/// explicit degree whose tail bound exceeds that is a `Size` error.
pub fn cone_fa(a: f64, p: f64, degree: Option<usize>) -> Result<CoefficientSeries> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain { what: "a", value: a, domain: "(0, 1)" });
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain { what: "p", value: p, domain: "[1, ∞)" });
    }
    let s = 2.0 / p;
    let mass_term = |n: usize, c: f64| c.powf(p) * ((n + 1) as f64).powf(p - 2.0);
    let mut coeffs = vec![(1.0 - a * a).powf(1.0 / p)];
    let mut mass = mass_term(0, coeffs[0]);
    let tail_bound = |n: usize, c: f64| {
        // Term ratio for index n → n+1, decreasing in n towards a^p.
        let next = c * a * (n as f64 + s) / (n + 1) as f64;
        let ratio = mass_term(n + 1, next) / mass_term(n, c);
        if ratio < 1.0 {
            mass_term(n + 1, next) / (1.0 - ratio)
        } else {
            f64::INFINITY
        }
    };
    let limit = degree.unwrap_or(CONE_MAX_DEGREE);
    while coeffs.len() <= limit {
        let n = coeffs.len() - 1;
        if degree.is_none() && tail_bound(n, coeffs[n]) < CONE_TAIL * mass {
            break;
        }
        let next = coeffs[n] * a * (n as f64 + s) / (n + 1) as f64;
        mass += mass_term(n + 1, next);
        coeffs.push(next);
    }
    let last = coeffs.len() - 1;
    let tail = tail_bound(last, coeffs[last]);
    if !(tail < CONE_TAIL * mass) {
        return Err(Error::Size(format!(
            "degree {last} leaves HL({p}) tail mass {tail:e} against total {mass:e} for a = {a}"
        )));
    }
    CoefficientSeries::new(coeffs)
}

/// Partial sum `Σ_{n<terms} 2^{n/p} z^{2^n}`.
pub fn lacunary(p: f64, terms: usize) -> Result<CoefficientSeries> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain { what: "p", value: p, domain: "(0, 1)" });
    }
    if terms == 0 {
        return Err(Error::InvalidParam("lacunary series needs at least one term".into()));
    }
    if terms > LACUNARY_MAX_TERMS {
        return Err(Error::Size(format!("{terms} lacunary terms exceed the limit {LACUNARY_MAX_TERMS}")));
    }
    let mut coeffs = vec![0.0; (1usize << (terms - 1)) + 1];
    for n in 0..terms {
        coeffs[1 << n] = (n as f64 / p).exp2();
    }
    CoefficientSeries::new(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lacunary_indices() {
        let f = lacunary(0.5, 3).unwrap();
        assert_eq!(f.len(), 5);
        assert_eq!(f.coeffs, vec![0.0, 1.0, 4.0, 0.0, 16.0]);
    }

    #[test]
    fn cone_p2_is_geometric() {
        let f = cone_fa(0.9, 2.0, None).unwrap();
        let s = (1.0f64 - 0.81).sqrt();
        for (n, c) in f.coeffs.iter().enumerate().take(50) {
            assert!((c - s * 0.9f64.powi(n as i32)).abs() < 1e-14);
        }
    }
}
