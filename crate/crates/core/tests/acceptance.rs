//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::time::Instant;

use weightlab::conditions::{
    dhat_profile, dhat_ratio, k1_family, k1_value, kpc_continuous, m1_discrete, mp_discrete, ConditionParams,
    ConditionReport, K1Variant, KpcVariant, Verdict,
};
use weightlab::families::power_block;
use weightlab::harness::{
    catalogue, embedding_probe, lacunary_probe, log_lower_bound_probe, noncompactness_probe, oscillating_probe,
    suite, two_path_probe, ProbeResult, NONCOMPACT_FLOOR,
};
use weightlab::norms::{dirichlet_norm, hl_norm, hp_norm, NormParams};
use weightlab::operator::matrix;
use weightlab::{RadialWeight, Result};

type Outcome = Result<(bool, String)>;

fn params(p: f64) -> ConditionParams {
    ConditionParams::with_p(p).unwrap()
}

fn last_running(rep: &ConditionReport) -> f64 {
    *rep.running_extreme().last().unwrap()
}

fn failed_checks(r: &ProbeResult) -> String {
    let bad: Vec<String> = r
        .checks
        .iter()
        .filter(|c| !c.holds())
        .map(|c| format!("{} = {:.4e} not in [{:e}, {:e}]", c.name, c.value, c.lo, c.hi))
        .collect();
    if bad.is_empty() {
        format!("{:?}", r.outcome)
    } else {
        bad.join("; ")
    }
}

fn classical_recovery() -> Outcome {
    let m = matrix(&RadialWeight::constant(), 64, 1e-14)?;
    let mut worst: f64 = 0.0;
    for n in 0..64 {
        for k in 0..64 {
            worst = worst.max((m.get(n, k) - 1.0 / (n + k + 1) as f64).abs());
        }
    }
    Ok((worst < 1e-12, format!("max |a_nk - 1/(n+k+1)| = {worst:.2e}")))
}

/// `∫ r^x (1-r)^β dr` by the recursion `ω_x = x/(x+β+1) ω_{x-1}` from `ω_0 = 1/(β+1)`.
fn beta_moment_oracle(beta: f64, x: usize) -> f64 {
    (1..=x).fold(1.0 / (beta + 1.0), |acc, j| acc * j as f64 / (j as f64 + beta + 1.0))
}

fn moment_accuracy() -> Outcome {
    let mut worst: f64 = 0.0;
    for beta in [0.0, 1.0, 2.5] {
        let w = RadialWeight::standard(beta)?;
        for x in [0usize, 1, 10, 100] {
            let q = w.moment_quadrature(x as f64, 1e-12)?;
            let exact = beta_moment_oracle(beta, x);
            worst = worst.max(((q - exact) / exact).abs());
        }
    }
    Ok((worst < 1e-8, format!("max relative error {worst:.2e}")))
}

fn dhat_classification() -> Outcome {
    let cp = params(2.0);
    let grid = cp.grid();
    let mut worst: f64 = 0.0;
    let mut all_finite = true;
    for beta in [0.5, 1.0, 2.0] {
        let rep = dhat_profile(&RadialWeight::standard(beta)?, &grid, &cp)?;
        let target = f64::powf(2.0, beta + 1.0);
        for s in &rep.samples {
            worst = worst.max(((s.value - target) / target).abs());
        }
        all_finite &= rep.verdict == Verdict::FiniteEvidence;
    }
    let e = RadialWeight::exponential(1.0)?;
    let rep = dhat_profile(&e, &grid, &cp)?;
    let growth = dhat_ratio(&e, 1.0 - 1e-3, cp.tol)? / dhat_ratio(&e, 0.9, cp.tol)?;
    let ok = worst < 1e-6 && all_finite && rep.verdict == Verdict::DivergenceEvidence && growth > 10.0;
    Ok((
        ok,
        format!(
            "standard rel err {worst:.1e}, all finite {all_finite}; exponential {:?}, ratio growth {growth:.3e}",
            rep.verdict
        ),
    ))
}

fn sharp_exponent() -> Outcome {
    let cp = params(2.0);
    let grid = cp.grid();
    let rep = kpc_continuous(&RadialWeight::standard(1.0)?, &grid, &cp, KpcVariant::M)?;
    let sup = last_running(&rep);
    let rel = (sup - 1.0 / 3.0).abs() * 3.0;
    let neg = kpc_continuous(&RadialWeight::standard(-0.5)?, &grid, &cp, KpcVariant::M)?;
    let ok = rel < 0.02 && neg.verdict == Verdict::DivergenceEvidence;
    Ok((ok, format!("beta=1 running sup {sup:.6} (rel {rel:.1e}); beta=-1/2 {:?}", neg.verdict)))
}

fn p_one_functionals() -> Outcome {
    let cp = params(1.0);
    let grid = cp.grid();
    let b = k1_family(&RadialWeight::standard(1.0)?, &grid, &cp, K1Variant::M1d)?;
    let sup = last_running(&b);
    let c = k1_family(&RadialWeight::constant(), &grid, &cp, K1Variant::M1d)?;
    let at = k1_value(&RadialWeight::constant(), K1Variant::M1d, 1.0 - 1e-6, cp.tol)?;
    let ok = (sup - 1.0).abs() < 0.02 && (at - 13.816).abs() <= 0.02 && c.verdict == Verdict::DivergenceEvidence;
    Ok((ok, format!("beta=1 sup {sup:.6}; constant M1d(1-1e-6) = {at:.5}, {:?}", c.verdict)))
}

fn equivalence_bands() -> Outcome {
    let mut lo_p = f64::INFINITY;
    let mut hi_p: f64 = 0.0;
    let mut lo_1 = f64::INFINITY;
    let mut hi_1: f64 = 0.0;
    for beta in [0.5, 1.0, 2.0] {
        let w = RadialWeight::standard(beta)?;
        for p in [1.5, 2.0, 3.0] {
            let cp = params(p);
            let mp = mp_discrete(&w, &cp)?.sup;
            let kpc = kpc_continuous(&w, &cp.grid(), &cp, KpcVariant::K)?.sup;
            lo_p = lo_p.min(mp / kpc);
            hi_p = hi_p.max(mp / kpc);
        }
        let cp = params(1.0);
        let sups = [
            k1_family(&w, &cp.grid(), &cp, K1Variant::K1c)?.sup,
            k1_family(&w, &cp.grid(), &cp, K1Variant::K1d)?.sup,
            m1_discrete(&w, &cp)?.sup,
        ];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    lo_1 = lo_1.min(sups[i] / sups[j]);
                    hi_1 = hi_1.max(sups[i] / sups[j]);
                }
            }
        }
    }
    let ok = lo_p >= 0.1 && hi_p <= 10.0 && lo_1 >= 0.05 && hi_1 <= 20.0;
    Ok((ok, format!("Mp/Kpc in [{lo_p:.3}, {hi_p:.3}]; p=1 pairwise in [{lo_1:.3}, {hi_1:.3}]")))
}

fn embedding_suite() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, p) in [1.0, 2.0, 3.0].into_iter().enumerate() {
        let r = embedding_probe(p, 42 + i as u64, 200, 128)?;
        let c: Vec<String> = r.rows.iter().take(3).map(|row| format!("{}={:.3}", row.label, row.values[0])).collect();
        parts.push(format!("p={p}: {} {}", c.join(" "), failed_checks(&r)));
        ok &= r.pass;
    }
    let lac = lacunary_probe(0.5, 12, 10.0)?;
    let last = lac.rows.last().map_or(f64::NAN, |r| r.values[3]);
    parts.push(format!("lacunary ratio at 12 terms {last:.2}"));
    ok &= lac.pass;
    Ok((ok, parts.join("; ")))
}

fn family_comparability() -> Outcome {
    let w = RadialWeight::standard(1.0)?;
    let np = NormParams::default();
    let ns = [0usize, 1, 2, 3, 4, 6, 8, 11, 16, 22, 32, 45, 64, 90, 128, 181, 256, 362, 512, 724];
    let mut ratios = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let m = if i % 2 == 0 { 4 * n + 1 } else { 4096 };
        let f = power_block(Some(&w), n, m, 1.0, 0.0, 1e-12)?;
        let hl = hl_norm(&f, 2.0)?;
        let hp = hp_norm(&f, 2.0, &np)?;
        let d = dirichlet_norm(&f, 2.0, &np)?;
        ratios.push([hl / hp, hl / d, hp / d]);
    }
    let mut spreads = [0.0; 3];
    for (j, s) in spreads.iter_mut().enumerate() {
        let hi = ratios.iter().map(|r| r[j]).fold(0.0, f64::max);
        let lo = ratios.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
        *s = hi / lo;
    }
    let ok = spreads.iter().all(|&s| s <= 4.0);
    Ok((ok, format!("max/min of HL/Hp, HL/D, Hp/D: {:.3}, {:.3}, {:.3}", spreads[0], spreads[1], spreads[2])))
}

fn noncompactness_floors() -> Outcome {
    let cp = params(2.0);
    let a: Vec<f64> = (3..=10).map(|j| 1.0 - f64::powi(2.0, -j)).collect();
    let c = noncompactness_probe(&RadialWeight::constant(), 2.0, &a, &[], NONCOMPACT_FLOOR, &cp)?;
    let ks: Vec<usize> = (4..=64).collect();
    let b = noncompactness_probe(&RadialWeight::standard(1.0)?, 2.0, &a, &ks, NONCOMPACT_FLOOR, &cp)?;
    let infs: Vec<String> = c.checks.iter().chain(&b.checks).map(|ch| format!("{:.4}", ch.value)).collect();
    Ok((c.pass && b.pass, format!("infima (constant HL; beta=1 HL, Bloch): {}", infs.join(", "))))
}

fn log_lower_bound() -> Outcome {
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for w in catalogue()? {
        let r = log_lower_bound_probe(&w, 1e-10)?;
        ok &= r.pass;
        worst = worst.min(r.checks[0].value);
    }
    Ok((ok, format!("smallest ratio to (1/2x)log(1/(1-x)) over built-in weights: {worst:.4}")))
}

fn oscillating_counterexample() -> Outcome {
    let r = oscillating_probe(&RadialWeight::standard(1.0)?, 2.0, 46, 45, &params(2.0))?;
    let band = r.checks[0].value;
    let mass = r.checks[1].value;
    Ok((r.pass, format!("band C/c = {band:.3}, running mass at n=45 = {mass:.4e}; {}", failed_checks(&r))))
}

fn two_path_agreement() -> Outcome {
    let weights = [RadialWeight::constant(), RadialWeight::standard(1.0)?, RadialWeight::exponential(1.0)?];
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (i, w) in weights.iter().enumerate() {
        let r = two_path_probe(w, 42 + i as u64, 50, 64, 1e-7, 1e-10)?;
        ok &= r.pass;
        worst = worst.max(r.checks[0].value);
    }
    Ok((ok, format!("max coefficient discrepancy {worst:.2e}")))
}

fn determinism() -> Outcome {
    let cp = ConditionParams::default();
    let a = serde_json::to_string(&suite(42, &cp)?)?;
    let b = serde_json::to_string(&suite(42, &cp)?)?;
    Ok((a == b, format!("{} bytes per report, identical: {}", a.len(), a == b)))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 13] = [
        ("classical recovery", classical_recovery),
        ("moment accuracy", moment_accuracy),
        ("upper doubling classification", dhat_classification),
        ("sharp exponent", sharp_exponent),
        ("p = 1 functionals", p_one_functionals),
        ("equivalence bands", equivalence_bands),
        ("embedding suite", embedding_suite),
        ("test-family norm comparability", family_comparability),
        ("non-compactness floors", noncompactness_floors),
        ("logarithmic lower bound", log_lower_bound),
        ("oscillating counterexample", oscillating_counterexample),
        ("two-path operator agreement", two_path_agreement),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag} {name} ({:.1}s): {detail}", i + 1, t.elapsed().as_secs_f64());
    }
    println!("{} of 13 criteria passed in {:.1}s", 13 - failures, start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
