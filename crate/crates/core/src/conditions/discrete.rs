use rayon::prelude::*;

use super::continuous::dhat_profile;
use super::{ConditionParams, ConditionReport, Reading, DEFAULT_MCLASS_MIN};
use crate::error::{Error, Result};
use crate::quadrature::{ln_add, ln_block_series, ln_integrate_span, SeriesOutcome, SeriesRule, Span};
use crate::weights::RadialWeight;

/// Blocks of the `M_p` tail series beyond the explicit range; block `k`
/// covers indices `[m 2^k, m 2^{k+1})`.
const MP_MAX_BLOCKS: usize = 200;

fn ln_moments(w: &RadialWeight, xs: &[f64], tol: f64) -> Result<Vec<f64>> {
    xs.par_iter().map(|&x| w.ln_moment(x, tol)).collect()
}

/// Samples `ω_n / ω_{2n}` for `1 <= n <= N_max`.
pub fn dhat_discrete(w: &RadialWeight, params: &ConditionParams) -> Result<ConditionReport> {
    params.validate()?;
    let n_max = params.n_max;
    let xs: Vec<f64> = (0..=2 * n_max).map(|n| n as f64).collect();
    let lm = ln_moments(w, &xs, params.tol)?;
    let mut rep = ConditionReport::new("dhat_discrete", w.spec(), params, Reading::Supremum);
    for n in 1..=n_max {
        rep.push_index(n, lm[n] - lm[2 * n]);
    }
    Ok(rep.finish())
}

/// Samples `ω_n / ω_{Kn}` for `1 <= n <= N_max`. Moment doubling holds when the
/// infimum stays above a floor greater than one.
pub fn mclass_probe(w: &RadialWeight, k: usize, params: &ConditionParams) -> Result<ConditionReport> {
    params.validate()?;
    if k < 2 {
        return Err(Error::InvalidParam(format!("mclass_probe needs K >= 2, got {k}")));
    }
    let n_max = params.n_max;
    let xs: Vec<f64> = (1..=n_max).flat_map(|n| [n as f64, (k * n) as f64]).collect();
    let lm = ln_moments(w, &xs, params.tol)?;
    let mut rep = ConditionReport::new("mclass", w.spec(), params, Reading::Infimum).extra("K", k);
    rep.floor = DEFAULT_MCLASS_MIN;
    for n in 1..=n_max {
        let i = 2 * (n - 1);
        rep.push_index(n, lm[i] - lm[i + 1]);
    }
    Ok(rep.finish())
}

/// The discrete condition `M_p`:
/// `(Σ_{n<=N} 1/((n+1)^2 ω_{2n+1}^p))^{1/p} · (Σ_{n>=N} ω_{2n+1}^{p'} (n+1)^{p'-2})^{1/p'}`.
///
/// Terms past `N_max` are summed in doubling blocks, each replaced by the
/// midpoint-rule integral of the term over real indices. That comparison
/// relies on regular moment decay, so weights without upper doubling evidence
/// get an inconclusive verdict.
pub fn mp_discrete(w: &RadialWeight, params: &ConditionParams) -> Result<ConditionReport> {
    params.validate()?;
    if params.p <= 1.0 {
        return Err(Error::InvalidParam(format!("mp_discrete needs p > 1, got {}", params.p)));
    }
    let (p, pc) = (params.p, params.p_conj());
    let n_max = params.n_max;
    let tol = params.tol;
    let xs: Vec<f64> = (0..=n_max).map(|n| (2 * n + 1) as f64).collect();
    let lm = ln_moments(w, &xs, tol)?;

    let head = |n: usize| -2.0 * ((n + 1) as f64).ln() - p * lm[n];
    let term = |ln_m: f64, n: f64| pc * ln_m + (pc - 2.0) * (n + 1.0).ln();

    let m0 = (n_max + 1) as f64;
    let rule = SeriesRule { max_blocks: MP_MAX_BLOCKS, ..SeriesRule::default() };
    let deep = ln_block_series(
        |k| {
            let lo = m0 * (k as f64).exp2() - 0.5;
            let hi = m0 * ((k + 1) as f64).exp2() - 0.5;
            let g = |x: f64| match w.ln_moment(2.0 * x + 1.0, tol) {
                Ok(v) => term(v, x),
                Err(_) => f64::NAN,
            };
            ln_integrate_span(&g, Span::new(lo, hi), tol).map(Some)
        },
        rule,
    )?;

    let mut suffix = vec![0.0; n_max + 1];
    let mut acc = deep.ln_value();
    for n in (0..=n_max).rev() {
        acc = ln_add(acc, term(lm[n], n as f64));
        suffix[n] = acc;
    }

    let mut rep = ConditionReport::new("Mp_discrete", w.spec(), params, Reading::Supremum);
    let mut prefix = f64::NEG_INFINITY;
    for (n, &tail) in suffix.iter().enumerate() {
        prefix = ln_add(prefix, head(n));
        rep.push_index(n, prefix / p + tail / pc);
    }
    match deep {
        SeriesOutcome::Converged(_) => {}
        SeriesOutcome::Divergent(_) => {
            rep.divergent_component = true;
            rep.notes.push("tail series stopped decaying; samples use the partial sum reached".into());
        }
        SeriesOutcome::Unresolved(_) => {
            rep.unresolved_component = true;
            rep.notes.push("tail series remainder could not be brought below tolerance".into());
        }
    }
    let premise = dhat_profile(w, &params.grid(), params)?;
    if !premise.verdict.is_finite() {
        rep.unresolved_component = true;
        rep.notes.push("no upper doubling evidence, so the integral comparison for the tail is not justified".into());
    }
    Ok(rep.finish())
}

/// `M_1(N) = (N+1) ω_{2N} Σ_{k<=N} 1/((k+1)^2 ω_{2k})`.
pub fn m1_discrete(w: &RadialWeight, params: &ConditionParams) -> Result<ConditionReport> {
    params.validate()?;
    let n_max = params.n_max;
    let xs: Vec<f64> = (0..=n_max).map(|k| (2 * k) as f64).collect();
    let lm = ln_moments(w, &xs, params.tol)?;
    let mut rep = ConditionReport::new("M1", w.spec(), params, Reading::Supremum);
    let mut prefix = f64::NEG_INFINITY;
    for (n, &l) in lm.iter().enumerate() {
        let nf = (n + 1) as f64;
        prefix = ln_add(prefix, -2.0 * nf.ln() - l);
        rep.push_index(n, nf.ln() + l + prefix);
    }
    Ok(rep.finish())
}
