//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use weightlab::RadialWeight;

pub const BUILT_IN: [&str; 5] = [
    r#"{"kind":"constant"}"#,
    r#"{"kind":"standard","beta":0.5}"#,
    r#"{"kind":"standard","beta":1.0}"#,
    r#"{"kind":"standard","beta":2.0}"#,
    r#"{"kind":"exponential","c":1.0}"#,
];

pub fn weight(json: &str) -> RadialWeight {
    RadialWeight::new(weightlab::WeightSpec::from_json(json).unwrap()).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let c = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += c * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `∫_0^D g(d) dd` with `d = D e^{-s}`, which resolves behaviour at `d → 0`.
/// Panels are graded towards `s = 0`, where an integrand like `e^{-c/d}`
/// collapses within `Δs ≈ D / c`.
pub fn distance_integral(g: impl Fn(f64) -> f64, big_d: f64) -> f64 {
    let cuts = [0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 80.0];
    let h = |s: f64| g(big_d * (-s).exp()) * (-s).exp();
    big_d * cuts.windows(2).map(|c| simpson(h, c[0], c[1], 20_000)).sum::<f64>()
}

/// `ω̂(r)` by the oracle rule applied to the weight's own density.
pub fn tail_oracle(w: &RadialWeight, r: f64) -> f64 {
    distance_integral(|d| w.density_d(d), 1.0 - r)
}

/// `ω_x = ∫_0^1 r^x ω(r) dr` by the oracle rule, in the distance variable.
pub fn moment_oracle(w: &RadialWeight, x: f64) -> f64 {
    let near = distance_integral(|d| (1.0 - d).powf(x) * w.density_d(d), 0.5);
    let far = simpson(|r| r.powf(x) * w.density(r).unwrap(), 0.0, 0.5, 20_000);
    near + far
}

/// Hilbert-type matrix entry `ω_{n+k} / (2(n+1) ω_{2n+1})` from oracle moments.
pub fn entry_oracle(w: &RadialWeight, n: usize, k: usize) -> f64 {
    moment_oracle(w, (n + k) as f64) / (2.0 * (n + 1) as f64 * moment_oracle(w, (2 * n + 1) as f64))
}
