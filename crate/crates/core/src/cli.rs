//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::conditions::{
    carleson_functional, dcheck_profile, dhat_discrete, dhat_profile, k1_family, kpc_continuous, kpd, kpe, m1_discrete,
    mclass_probe, mp_discrete, mp_small, ConditionParams, ConditionReport, K1Variant, KpcVariant, Verdict,
};
use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::harness::{self, Outcome, ProbeResult, Space, Sweep};
use crate::operator::{apply_quadrature, apply_series, apply_sublinear, kernel_eval, CoefficientSeries, KernelKind};
use crate::weights::{build_oscillating_weight, RadialWeight, WeightSpec};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "WEIGHTLAB_THREADS";

#[derive(Debug, Clone, Parser, PartialEq)]
#[command(name = "weightlab", version, about = "Hilbert-type operators induced by radial weights")]
pub struct CommandSpec {
    #[command(subcommand)]
    pub command: Command,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    /// Short human-readable summary.
    Text,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct Numeric {
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Radius grid depth J; the grid is r_j = 1 - 2^{-j/4}, j = 0..=J.
    #[arg(long, default_value_t = crate::conditions::DEFAULT_GRID_DEPTH)]
    pub grid_depth: usize,
    /// Largest index of the discrete conditions.
    #[arg(long, default_value_t = crate::conditions::DEFAULT_N_MAX)]
    pub n_max: usize,
}

impl Numeric {
    fn params(&self, p: f64) -> Result<ConditionParams> {
        let cp = ConditionParams {
            p,
            grid_depth: self.grid_depth,
            n_max: self.n_max,
            tol: self.tol,
            ..ConditionParams::default()
        };
        cp.validate()?;
        Ok(cp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Series,
    Quadrature,
    Sublinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeKind {
    Boundedness,
    Equivalence,
    Noncompactness,
    Monotonicity,
    TildeHat,
    Embedding,
    Lacunary,
    TwoPath,
    LogLowerBound,
    Oscillating,
}

fn p_at_least_one(s: &str) -> std::result::Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if p.is_finite() && p >= 1.0 {
        Ok(p)
    } else {
        Err(format!("p must be a finite number >= 1, got {s}"))
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a finite positive number, got {s}"))
    }
}

fn kernel_kind(s: &str) -> std::result::Result<KernelKind, String> {
    match s {
        "B" | "b" => Ok(KernelKind::B),
        "K" | "k" => Ok(KernelKind::K),
        "G" | "g" => Ok(KernelKind::G),
        _ => Err(format!("kernel kind must be B, K or G, got {s}")),
    }
}

fn space(s: &str) -> std::result::Result<Space, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Weight-class profiles: upper and lower doubling, moment doubling.
    Analyze {
        #[arg(long)]
        weight: PathBuf,
        /// Dilation K of the lower doubling and moment doubling tests.
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[command(flatten)]
        numeric: Numeric,
    },
    /// All boundedness functionals for one exponent p >= 1.
    Conditions {
        #[arg(long)]
        weight: PathBuf,
        #[arg(long, value_parser = p_at_least_one)]
        p: f64,
        #[command(flatten)]
        numeric: Numeric,
    },
    /// Apply H_ω to a coefficient series or family spec.
    Apply {
        #[arg(long)]
        weight: PathBuf,
        /// JSON file holding {"coeffs": [...]} or a family spec.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n_out: usize,
        #[arg(long, value_enum, default_value_t = Method::Series)]
        method: Method,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Evaluate the kernel B, K or G at (t, z).
    Kernel {
        #[arg(long)]
        weight: PathBuf,
        #[arg(long, value_parser = kernel_kind)]
        kind: KernelKind,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        z_re: f64,
        #[arg(long, default_value_t = 0.0)]
        z_im: f64,
        /// Term budget.
        #[arg(long, default_value_t = 100_000)]
        n_max: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Build the oscillating weight over a base weight and print its spec.
    BuildWeight {
        #[arg(long)]
        base: PathBuf,
        #[arg(long, value_parser = p_at_least_one)]
        p: f64,
        #[arg(long)]
        k: Option<f64>,
        /// Number of plateaus.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Run one harness probe.
    Probe {
        #[arg(value_enum)]
        kind: ProbeKind,
        #[arg(long)]
        weight: Option<PathBuf>,
        #[arg(long, default_value_t = 2.0, value_parser = positive)]
        p: f64,
        #[arg(long, default_value_t = 1.0, value_parser = p_at_least_one)]
        q: f64,
        #[arg(long, default_value = "HLp", value_parser = space)]
        x: Space,
        #[arg(long, default_value = "HLp", value_parser = space)]
        y: Space,
        /// Family spec JSON for the boundedness sweep.
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Sample count for the random-polynomial probes.
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        numeric: Numeric,
    },
    /// Run the standard probe suite.
    Suite {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        numeric: Numeric,
    },
}

/// Parses arguments (without the program name).
pub fn parse_command<I, S>(argv: I) -> std::result::Result<CommandSpec, clap::Error>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = std::iter::once(std::ffi::OsString::from("weightlab")).chain(argv.into_iter().map(Into::into));
    CommandSpec::try_parse_from(args)
}

/// Sets the global thread pool size from `WEIGHTLAB_THREADS` when present.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::InvalidParam(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParam(format!("{THREADS_ENV}: {e}")))?;
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse { path: path.display().to_string(), message: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.display().to_string(), message: e.to_string() })
}

fn read_weight(path: &Path) -> Result<RadialWeight> {
    let spec: WeightSpec = read_json(path)?;
    RadialWeight::new(spec)
}

/// A coefficient series given directly, or built from a family spec.
fn read_series(path: &Path, tol: f64) -> Result<CoefficientSeries> {
    let v: Value = read_json(path)?;
    let parse_err = |e: serde_json::Error| Error::Parse { path: path.display().to_string(), message: e.to_string() };
    if v.get("kind").is_some() {
        let fam: FamilySpec = serde_json::from_value(v).map_err(parse_err)?;
        fam.build(tol)
    } else {
        let s: CoefficientSeries = serde_json::from_value(v).map_err(parse_err)?;
        CoefficientSeries::new(s.coeffs)
    }
}

/// What `run` produced: the report text and the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: String,
    /// 0 when something was decided, 2 when every verdict is inconclusive.
    pub status: i32,
}

fn to_json(v: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn verdict_status(reports: &[ConditionReport]) -> i32 {
    if !reports.is_empty() && reports.iter().all(|r| r.verdict == Verdict::Inconclusive) {
        2
    } else {
        0
    }
}

fn probe_status(results: &[ProbeResult]) -> i32 {
    if !results.is_empty() && results.iter().all(|r| r.outcome == Outcome::Inconclusive) {
        2
    } else {
        0
    }
}

fn conditions_csv(reports: &[ConditionReport]) -> Result<String> {
    let mut out = String::from("functional,param,value,running_sup\n");
    for r in reports {
        for line in r.to_csv()?.lines().skip(1) {
            out.push_str(&r.name);
            out.push(',');
            out.push_str(line);
            out.push('\n');
        }
    }
    Ok(out)
}

fn conditions_text(reports: &[ConditionReport]) -> String {
    reports
        .iter()
        .map(|r| format!("{:<10} sup {:<14.6e} trend {:<+10.4} {:?}\n", r.name, r.sup, r.trend, r.verdict))
        .collect()
}

fn probes_text(results: &[ProbeResult]) -> String {
    results
        .iter()
        .map(|r| {
            let w = r.weight.as_ref().map_or_else(|| "-".to_string(), |w| w.label());
            format!("{:<16} {:<40} {:<12} {:.3}s\n", r.probe, w, format!("{:?}", r.outcome), r.runtime.as_secs_f64())
        })
        .collect()
}

fn condition_output(
    command: &str,
    w: &RadialWeight,
    extra: Value,
    reports: Vec<ConditionReport>,
    format: Format,
) -> Result<RunOutput> {
    let status = verdict_status(&reports);
    let report = match format {
        Format::Json => to_json(&json!({
            "command": command,
            "weight": w.spec(),
            "params": extra,
            "reports": reports,
        }))?,
        Format::Csv => conditions_csv(&reports)?,
        Format::Text => conditions_text(&reports),
    };
    Ok(RunOutput { report, status })
}

fn probe_output(command: &str, params: Value, results: Vec<ProbeResult>, format: Format) -> Result<RunOutput> {
    let status = probe_status(&results);
    let report = match format {
        Format::Json => to_json(&json!({ "command": command, "params": params, "results": results }))?,
        Format::Csv => harness::summary_csv(&results)?,
        Format::Text => probes_text(&results),
    };
    Ok(RunOutput { report, status })
}

fn series_output(command: &str, provenance: Value, s: &CoefficientSeries, format: Format) -> Result<RunOutput> {
    let report = match format {
        Format::Json => {
            let mut v = provenance;
            v["command"] = json!(command);
            v["output"] = serde_json::to_value(s)?;
            to_json(&v)?
        }
        Format::Csv => s.to_csv()?,
        Format::Text => s.coeffs.iter().map(|c| format!("{c:e}\n")).collect(),
    };
    Ok(RunOutput { report, status: 0 })
}

/// Executes a parsed command and returns its report. Files named by the
/// command are read here; the report is not written anywhere.
pub fn run(spec: &CommandSpec) -> Result<RunOutput> {
    let format = spec.format;
    match &spec.command {
        Command::Analyze { weight, k, numeric } => {
            let cp = numeric.params(1.0)?;
            let w = read_weight(weight)?;
            let grid = cp.grid();
            if !(*k >= 2.0 && k.fract() == 0.0) {
                return Err(Error::InvalidParam(format!("--k must be an integer >= 2, got {k}")));
            }
            let reports = vec![
                dhat_profile(&w, &grid, &cp)?,
                dcheck_profile(&w, *k, &grid, &cp)?,
                dhat_discrete(&w, &cp)?,
                mclass_probe(&w, *k as usize, &cp)?,
            ];
            let extra = json!({ "k": k, "grid_depth": cp.grid_depth, "n_max": cp.n_max, "tol": cp.tol });
            condition_output("analyze", &w, extra, reports, format)
        }
        Command::Conditions { weight, p, numeric } => {
            let cp = numeric.params(*p)?;
            let w = read_weight(weight)?;
            let grid = cp.grid();
            let reports = if *p == 1.0 {
                vec![
                    k1_family(&w, &grid, &cp, K1Variant::K1c)?,
                    k1_family(&w, &grid, &cp, K1Variant::K1d)?,
                    k1_family(&w, &grid, &cp, K1Variant::M1d)?,
                    carleson_functional(&w, &grid, &cp)?,
                    m1_discrete(&w, &cp)?,
                    mp_small(&w, &grid, &cp)?,
                ]
            } else {
                vec![
                    kpc_continuous(&w, &grid, &cp, KpcVariant::M)?,
                    kpc_continuous(&w, &grid, &cp, KpcVariant::K)?,
                    kpd(&w, &grid, &cp)?,
                    kpe(&w, &grid, &cp)?,
                    mp_discrete(&w, &cp)?,
                    mp_small(&w, &grid, &cp)?,
                ]
            };
            condition_output("conditions", &w, serde_json::to_value(&cp)?, reports, format)
        }
        Command::Apply { weight, input, n_out, method, tol } => {
            let w = read_weight(weight)?;
            let f = read_series(input, *tol)?;
            let out = match method {
                Method::Series => apply_series(&w, &f, *n_out, *tol)?,
                Method::Sublinear => apply_sublinear(&w, &f, *n_out, *tol)?,
                Method::Quadrature => apply_quadrature(&w, &|t| f.eval(t), *n_out, *tol)?,
            };
            let provenance = json!({
                "weight": w.spec(),
                "params": { "n_out": n_out, "method": format!("{method:?}").to_lowercase(), "tol": tol },
                "input": f,
            });
            series_output("apply", provenance, &out, format)
        }
        Command::Kernel { weight, kind, t, z_re, z_im, n_max, tol } => {
            let w = read_weight(weight)?;
            let v = kernel_eval(&w, *kind, *t, Complex64::new(*z_re, *z_im), *n_max, *tol)?;
            let report = match format {
                Format::Csv => format!(
                    "kind,t,z_re,z_im,re,im,terms,tail_bound\n{kind:?},{t},{z_re},{z_im},{},{},{},{}\n",
                    v.value.re, v.value.im, v.terms, v.tail_bound
                ),
                Format::Text => format!("{kind:?}({t}, {z_re}{z_im:+}i) = {} ({} terms)\n", v.value, v.terms),
                Format::Json => to_json(&json!({
                    "command": "kernel",
                    "weight": w.spec(),
                    "params": { "kind": kind, "t": t, "z_re": z_re, "z_im": z_im, "n_max": n_max, "tol": tol },
                    "value": { "re": v.value.re, "im": v.value.im },
                    "terms": v.terms,
                    "tail_bound": v.tail_bound,
                }))?,
            };
            Ok(RunOutput { report, status: 0 })
        }
        Command::BuildWeight { base, p, k, n_max } => {
            let base = read_weight(base)?;
            let w = build_oscillating_weight(&base, *p, *k, *n_max)?;
            let osc = w.oscillating().expect("built as oscillating");
            let report = match format {
                Format::Json => to_json(w.spec())?,
                Format::Csv => {
                    let mut s = String::from("n,r,length,height\n");
                    for pl in &osc.plateaus {
                        s.push_str(&format!("{},{},{},{}\n", pl.n, pl.r, pl.a, pl.h()));
                    }
                    s
                }
                Format::Text => format!("{} with K = {} and {} plateaus\n", w.spec().label(), osc.k, osc.plateaus.len()),
            };
            Ok(RunOutput { report, status: 0 })
        }
        Command::Probe { kind, weight, p, q, x, y, family, seed, count, numeric } => {
            let needs_weight = !matches!(kind, ProbeKind::Embedding | ProbeKind::Lacunary);
            let w = match (weight, needs_weight) {
                (Some(path), _) => Some(read_weight(path)?),
                (None, true) => return Err(Error::InvalidParam(format!("probe {kind:?} needs --weight"))),
                (None, false) => None,
            };
            let cp = numeric.params(p.max(1.0))?;
            let w = w.as_ref();
            let wr = || w.expect("checked above");
            let result = match kind {
                ProbeKind::Boundedness => {
                    let fam = match family {
                        Some(path) => read_json(path)?,
                        None if *p > 1.0 => FamilySpec::DualBlock { n: 0, m: 16, p: *p, weight: wr().spec().clone() },
                        None => FamilySpec::PowerBlock { n: 0, m: 16, alpha: 0.0, beta: 0.0, weight: None },
                    };
                    harness::boundedness_probe(wr(), *p, *x, *y, &Sweep::dyadic(fam, 4, 12), &cp)?
                }
                ProbeKind::Equivalence => harness::equivalence_probe(wr(), *p, &cp)?,
                ProbeKind::Noncompactness => {
                    let a: Vec<f64> = (3..=10).map(|j| 1.0 - (-(j as f64)).exp2()).collect();
                    let ks: Vec<usize> = (4..=64).collect();
                    harness::noncompactness_probe(wr(), *p, &a, &ks, harness::NONCOMPACT_FLOOR, &cp)?
                }
                ProbeKind::Monotonicity => harness::monotonicity_probe(wr(), *q, *p, &cp)?,
                ProbeKind::TildeHat => harness::tilde_hat_probe(wr(), &cp.grid(), &cp)?,
                ProbeKind::Embedding => harness::embedding_probe(*p, *seed, count.unwrap_or(200), 128)?,
                ProbeKind::Lacunary => harness::lacunary_probe(*p, count.unwrap_or(12), 10.0)?,
                ProbeKind::TwoPath => harness::two_path_probe(wr(), *seed, count.unwrap_or(50), 64, 1e-7, cp.tol)?,
                ProbeKind::LogLowerBound => harness::log_lower_bound_probe(wr(), cp.tol)?,
                ProbeKind::Oscillating => harness::oscillating_probe(wr(), *p, 46, 45, &cp)?,
            };
            let params = json!({ "kind": kind_name(*kind), "p": p, "q": q, "seed": seed, "condition_params": cp });
            probe_output("probe", params, vec![result], format)
        }
        Command::Suite { seed, numeric } => {
            let cp = numeric.params(2.0)?;
            let results = harness::suite(*seed, &cp)?;
            probe_output("suite", json!({ "seed": seed, "condition_params": cp }), results, format)
        }
    }
}

fn kind_name(kind: ProbeKind) -> String {
    kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

/// Runs the command and writes the report to `--output` or stdout.
pub fn execute(spec: &CommandSpec) -> Result<i32> {
    let out = run(spec)?;
    match &spec.output {
        Some(path) => fs::write(path, &out.report)?,
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(out.report.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(out.status)
}
