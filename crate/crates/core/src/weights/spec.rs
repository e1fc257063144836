use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serializable description of a radial weight.
///
/// The JSON form is internally tagged by `kind`, e.g.
/// `{"kind":"standard","beta":1.0}` or
/// `{"kind":"oscillating","base":{"kind":"constant"},"p":2.0,"K":16.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `ω ≡ 1`.
    Constant,
    /// `ω(r) = (1 - r)^beta`, `beta > -1`.
    Standard { beta: f64 },
    /// `ω(r) = exp(-c / (1 - r))`, `c > 0`.
    Exponential { c: f64 },
    /// Right-continuous step function: `levels[i]` on `[knots[i], knots[i+1])`,
    /// the last level on `[knots[last], 1)`, zero before the first knot.
    PiecewiseStep { knots: Vec<f64>, levels: Vec<f64> },
    /// Plateau weight built from the tilde transform of `base`.
    Oscillating {
        base: Box<WeightSpec>,
        p: f64,
        #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_max: Option<usize>,
    },
    Sum { terms: Vec<WeightSpec> },
    /// `ω̂(r) / (1 - r)` for the weight `base`.
    Tilde { base: Box<WeightSpec> },
}

fn spec_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidSpec(msg.into()))
}

impl WeightSpec {
    pub fn standard(beta: f64) -> Self {
        WeightSpec::Standard { beta }
    }

    pub fn exponential(c: f64) -> Self {
        WeightSpec::Exponential { c }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: WeightSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("weight specs always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightSpec::Constant => Ok(()),
            WeightSpec::Standard { beta } => {
                if !(beta.is_finite() && *beta > -1.0) {
                    return spec_err(format!("standard weight needs beta > -1, got {beta}"));
                }
                Ok(())
            }
            WeightSpec::Exponential { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return spec_err(format!("exponential weight needs c > 0, got {c}"));
                }
                Ok(())
            }
            WeightSpec::PiecewiseStep { knots, levels } => {
                if knots.is_empty() {
                    return spec_err("piecewise_step needs at least one knot");
                }
                if knots.len() != levels.len() {
                    return spec_err(format!(
                        "piecewise_step has {} knots but {} levels",
                        knots.len(),
                        levels.len()
                    ));
                }
                if knots.iter().any(|k| !(0.0..1.0).contains(k)) {
                    return spec_err("piecewise_step knots must lie in [0, 1)");
                }
                if knots.windows(2).any(|w| w[0] >= w[1]) {
                    return spec_err("piecewise_step knots must be strictly increasing");
                }
                if levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                    return spec_err("piecewise_step levels must be finite and nonnegative");
                }
                if *levels.last().unwrap() <= 0.0 {
                    return spec_err("piecewise_step last level must be positive so the tail stays positive");
                }
                Ok(())
            }
            WeightSpec::Oscillating { base, p, k, n_max } => {
                base.validate()?;
                if !(p.is_finite() && *p > 1.0) {
                    return spec_err(format!("oscillating weight needs p > 1, got {p}"));
                }
                if let Some(k) = k {
                    if !(k.is_finite() && *k > 1.0) {
                        return spec_err(format!("oscillating weight needs K > 1, got {k}"));
                    }
                }
                if let Some(n) = n_max {
                    if *n == 0 {
                        return spec_err("oscillating weight needs n_max >= 1");
                    }
                }
                Ok(())
            }
            WeightSpec::Sum { terms } => {
                if terms.is_empty() {
                    return spec_err("sum weight needs at least one term");
                }
                terms.iter().try_for_each(|t| t.validate())
            }
            WeightSpec::Tilde { base } => base.validate(),
        }
    }

    /// Short human-readable label, used in report headers.
    pub fn label(&self) -> String {
        match self {
            WeightSpec::Constant => "constant".into(),
            WeightSpec::Standard { beta } => format!("standard(beta={beta})"),
            WeightSpec::Exponential { c } => format!("exponential(c={c})"),
            WeightSpec::PiecewiseStep { knots, .. } => format!("piecewise_step({} knots)", knots.len()),
            WeightSpec::Oscillating { base, p, .. } => format!("oscillating({}, p={p})", base.label()),
            WeightSpec::Sum { terms } => {
                let parts: Vec<String> = terms.iter().map(|t| t.label()).collect();
                format!("sum({})", parts.join(" + "))
            }
            WeightSpec::Tilde { base } => format!("tilde({})", base.label()),
        }
    }
}
