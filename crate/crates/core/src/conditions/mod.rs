//! Weight-class tests and boundedness functionals, evaluated on radius grids
//! or index ranges.
//!
//! A finite sample can never certify that a supremum is finite, so every
//! functional reports a three-valued [`Verdict`] decided from the slope of
//! `ln(running sup)` against `log10(1/(1-r))` (or `log10 N`) over the last
//! quarter of that axis, plus flags raised when an inner integral or series
//! was itself seen to diverge.

mod continuous;
mod discrete;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::lossless;
use crate::weights::WeightSpec;

pub use continuous::{
    carleson_functional, dcheck_profile, dhat_profile, dhat_ratio, k1_family, k1_value, kpc_continuous, kpd, kpe,
    mp_small, K1Variant, KpcVariant,
};
pub use discrete::{dhat_discrete, m1_discrete, mclass_probe, mp_discrete};

pub const DEFAULT_GRID_DEPTH: usize = 80;
pub const DEFAULT_N_MAX: usize = 4096;
pub const DEFAULT_SLOPE: f64 = 0.05;
/// Floor for the lower-doubling ratio.
pub const DEFAULT_DCHECK_MIN: f64 = 0.01;
/// Floor for moment doubling `ω_n / ω_{Kn}`; must exceed 1.
pub const DEFAULT_MCLASS_MIN: f64 = 1.1;

/// Radius grid, stored as strictly decreasing distances `d = 1 - r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d: Vec<f64>,
}

impl Grid {
    /// `r_j = 1 - 2^{-j/4}`, `j = 0..=depth`.
    pub fn geometric(depth: usize) -> Self {
        Grid { d: (0..=depth).map(|j| (-(j as f64) / 4.0).exp2()).collect() }
    }

    pub fn from_radii(radii: &[f64]) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidParam("grid needs at least one radius".into()));
        }
        if radii.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(Error::Domain { what: "grid radius", value: radii[0], domain: "[0, 1)" });
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParam("grid radii must be strictly increasing".into()));
        }
        Ok(Grid { d: radii.iter().map(|r| 1.0 - r).collect() })
    }

    /// Grid given directly by distances to the boundary, strictly decreasing.
    pub fn from_distances(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() || d.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) || d.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidParam("grid distances must lie in (0, 1] and strictly decrease".into()));
        }
        Ok(Grid { d })
    }

    pub fn radii(&self) -> Vec<f64> {
        self.d.iter().map(|d| 1.0 - d).collect()
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn deepest(&self) -> f64 {
        *self.d.last().unwrap()
    }
}

/// Evaluation parameters shared by all condition functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionParams {
    pub p: f64,
    pub grid_depth: usize,
    pub n_max: usize,
    pub tol: f64,
    /// Largest `ln`-slope per decade still read as bounded.
    pub slope_threshold: f64,
}

impl Default for ConditionParams {
    fn default() -> Self {
        ConditionParams {
            p: 2.0,
            grid_depth: DEFAULT_GRID_DEPTH,
            n_max: DEFAULT_N_MAX,
            tol: 1e-10,
            slope_threshold: DEFAULT_SLOPE,
        }
    }
}

impl ConditionParams {
    pub fn with_p(p: f64) -> Result<Self> {
        let params = ConditionParams { p, ..Default::default() };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::Domain { what: "p", value: self.p, domain: "[1, inf)" });
        }
        if self.n_max < 16 {
            return Err(Error::InvalidParam(format!("n_max must be at least 16, got {}", self.n_max)));
        }
        if self.grid_depth < 8 {
            return Err(Error::InvalidParam(format!("grid depth must be at least 8, got {}", self.grid_depth)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidParam(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        Ok(())
    }

    /// `p' = p/(p-1)`; infinite at `p = 1`.
    pub fn p_conj(&self) -> f64 {
        conj(self.p)
    }

    pub fn grid(&self) -> Grid {
        Grid::geometric(self.grid_depth)
    }
}

pub fn conj(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    FiniteEvidence,
    DivergenceEvidence,
    Inconclusive,
}

impl Verdict {
    pub fn is_finite(self) -> bool {
        self == Verdict::FiniteEvidence
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Radius `r` or index `N`.
    #[serde(with = "lossless")]
    pub param: f64,
    /// Regression abscissa: `log10(1/(1-r))` or `log10(N+1)`.
    #[serde(with = "lossless")]
    pub x: f64,
    #[serde(with = "lossless")]
    pub value: f64,
    #[serde(with = "lossless")]
    pub ln_value: f64,
}

/// How the verdict reads the samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reading {
    /// Finite evidence when the running sup stops growing.
    Supremum,
    /// Holds when the running inf stays above a floor and stops falling.
    Infimum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub weight: WeightSpec,
    pub params: ConditionParams,
    /// Extra knobs specific to the functional (e.g. `K`, variant).
    pub extra: Vec<(String, String)>,
    pub reading: Reading,
    pub samples: Vec<Sample>,
    #[serde(with = "lossless")]
    pub sup: f64,
    #[serde(with = "lossless")]
    pub inf: f64,
    /// Least-squares slope of `ln` of the running sup (or inf) over the last quartile.
    #[serde(with = "lossless")]
    pub trend: f64,
    /// Floor used by [`Reading::Infimum`] reports.
    #[serde(with = "lossless")]
    pub floor: f64,
    pub divergent_component: bool,
    pub unresolved_component: bool,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl ConditionReport {
    pub(crate) fn new(name: &str, weight: &WeightSpec, params: &ConditionParams, reading: Reading) -> Self {
        ConditionReport {
            name: name.to_string(),
            weight: weight.clone(),
            params: params.clone(),
            extra: Vec::new(),
            reading,
            samples: Vec::new(),
            sup: f64::NAN,
            inf: f64::NAN,
            trend: f64::NAN,
            floor: f64::NAN,
            divergent_component: false,
            unresolved_component: false,
            notes: Vec::new(),
            verdict: Verdict::Inconclusive,
        }
    }

    pub(crate) fn extra(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    pub(crate) fn push_radius(&mut self, d: f64, ln_value: f64) {
        self.samples.push(Sample { param: 1.0 - d, x: -d.log10(), value: ln_value.exp(), ln_value });
    }

    pub(crate) fn push_index(&mut self, n: usize, ln_value: f64) {
        self.samples.push(Sample {
            param: n as f64,
            x: ((n + 1) as f64).log10(),
            value: ln_value.exp(),
            ln_value,
        });
    }

    /// Running sup (or inf, for infimum readings) in sample order.
    pub fn running_extreme(&self) -> Vec<f64> {
        let mut acc = match self.reading {
            Reading::Supremum => f64::NEG_INFINITY,
            Reading::Infimum => f64::INFINITY,
        };
        self.samples
            .iter()
            .map(|s| {
                acc = match self.reading {
                    Reading::Supremum => acc.max(s.value),
                    Reading::Infimum => acc.min(s.value),
                };
                acc
            })
            .collect()
    }

    /// Sample value closest to `param`.
    pub fn value_at(&self, param: f64) -> Option<f64> {
        self.samples
            .iter()
            .min_by(|a, b| (a.param - param).abs().total_cmp(&(b.param - param).abs()))
            .map(|s| s.value)
    }

    /// Computes `sup`, `inf`, `trend` and the verdict from the samples and flags.
    pub(crate) fn finish(mut self) -> Self {
        self.sup = self.samples.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
        self.inf = self.samples.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
        self.trend = self.compute_trend();
        self.verdict = self.decide();
        self
    }

    fn compute_trend(&self) -> f64 {
        // ln of the running extreme, tracked in log space so overflowing values still count
        let mut acc = match self.reading {
            Reading::Supremum => f64::NEG_INFINITY,
            Reading::Infimum => f64::INFINITY,
        };
        let pts: Vec<(f64, f64)> = self
            .samples
            .iter()
            .filter(|s| !s.ln_value.is_nan())
            .map(|s| {
                acc = match self.reading {
                    Reading::Supremum => acc.max(s.ln_value),
                    Reading::Infimum => acc.min(s.ln_value),
                };
                (s.x, acc)
            })
            .collect();
        if pts.is_empty() {
            return f64::NAN;
        }
        let x_max = pts.last().unwrap().0;
        let x_min = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let cut = x_max - 0.25 * (x_max - x_min);
        let tail: Vec<(f64, f64)> = pts.into_iter().filter(|p| p.0 >= cut && p.1.is_finite()).collect();
        least_squares_slope(&tail)
    }

    fn decide(&self) -> Verdict {
        if self.divergent_component {
            return Verdict::DivergenceEvidence;
        }
        if self.unresolved_component || self.trend.is_nan() {
            return Verdict::Inconclusive;
        }
        let thr = self.params.slope_threshold;
        match self.reading {
            Reading::Supremum => {
                if self.trend <= thr {
                    Verdict::FiniteEvidence
                } else {
                    Verdict::DivergenceEvidence
                }
            }
            Reading::Infimum => {
                if self.inf >= self.floor && self.trend >= -thr {
                    Verdict::FiniteEvidence
                } else {
                    Verdict::DivergenceEvidence
                }
            }
        }
    }

    /// One row per sample: `param,value,running_sup`.
    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let header = match self.reading {
            Reading::Supremum => "running_sup",
            Reading::Infimum => "running_inf",
        };
        wtr.write_record(["param", "value", header])?;
        for (s, run) in self.samples.iter().zip(self.running_extreme()) {
            wtr.write_record([
                crate::report::csv_float(s.param),
                crate::report::csv_float(s.value),
                crate::report::csv_float(run),
            ])?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Least-squares slope; NaN with fewer than three points.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 3 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return f64::NAN;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}
