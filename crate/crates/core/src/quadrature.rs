//! Quadrature engine shared by every module.
//!
//! Two rules live here: a tanh-sinh (double exponential) rule that handles
//! algebraic endpoint singularities, and a globally adaptive Gauss-Kronrod
//! 7/15 bisection. Integrals over `[r, 1)` are always set up in the distance
//! variable `d = 1 - r`, so nodes next to the boundary keep full relative
//! precision; a [`Span`] describes such an interval.
//!
//! Functionals that overflow `f64` (the exponential weight has tails like
//! `exp(-1e6)`) go through the `ln_*` routines, which integrate `exp(g)` for a
//! log-integrand `g` and return the natural log of the result.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Node offsets beyond which tanh-sinh weights underflow.
const TS_T_MAX: f64 = 6.5;
const TS_MAX_LEVEL: usize = 11;
const GK_MAX_INTERVALS: usize = 4000;
/// Smallest distance the dyadic descent towards `d = 0` visits.
const DYADIC_FLOOR: f64 = 1e-290;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(exp(a) - exp(b))` for `a >= b`.
pub fn ln_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp()).ln_1p()
}

pub fn ln_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    let hi = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi.is_infinite() {
        return hi;
    }
    hi + terms.iter().map(|t| (t - hi).exp()).sum::<f64>().ln()
}

// ---------------------------------------------------------------------------
// tanh-sinh

/// Tanh-sinh quadrature on `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)`; the two distances are exact
/// even where `x` itself rounds onto an endpoint, which is what lets callers
/// evaluate singular factors like `(b - x)^(-1/2)` without cancellation.
/// Levels are halved until two successive sums agree to `tol` (relative).
pub fn tanh_sinh<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Estimate>
where
    F: FnMut(f64, f64, f64) -> f64,
{
    if !(b > a) {
        if a == b {
            return Ok(Estimate { value: 0.0, error: 0.0, evals: 0 });
        }
        return Err(Error::InvalidParam(format!("tanh_sinh: empty interval [{a}, {b}]")));
    }
    let half = 0.5 * (b - a);
    let center = a + half;
    let mut evals = 1;
    let mut sum = FRAC_PI_2 * f(center, half, half);
    if !sum.is_finite() {
        return Err(Error::Accuracy { estimate: sum, error: f64::INFINITY });
    }

    let mut level_sum = |start: f64, step: f64, evals: &mut usize| -> f64 {
        let mut acc = 0.0;
        let mut t = start;
        while t <= TS_T_MAX {
            let u = FRAC_PI_2 * t.sinh();
            let e = (-2.0 * u).exp();
            // q = 1 - tanh(u), computed without cancellation
            let q = 2.0 * e / (1.0 + e);
            let dist = half * q;
            if dist == 0.0 {
                break;
            }
            let far = half * (2.0 - q);
            let w = FRAC_PI_2 * t.cosh() * q * (2.0 - q);
            let fr = f(b - dist, far, dist);
            let fl = f(a + dist, dist, far);
            *evals += 2;
            let term = w * (fr + fl);
            if term.is_nan() {
                return f64::NAN;
            }
            if term.is_infinite() {
                // integrable singularity hit at a node; drop the remaining far nodes
                break;
            }
            acc += term;
            t += step;
        }
        acc
    };

    let mut h = 1.0;
    sum += level_sum(h, h, &mut evals);
    if sum.is_nan() {
        return Err(Error::Accuracy { estimate: f64::NAN, error: f64::INFINITY });
    }
    let mut estimate = half * h * sum;
    let mut last_err = f64::INFINITY;
    for level in 1..=TS_MAX_LEVEL {
        h *= 0.5;
        sum += level_sum(h, 2.0 * h, &mut evals);
        let next = half * h * sum;
        if next.is_nan() {
            return Err(Error::Accuracy { estimate: f64::NAN, error: f64::INFINITY });
        }
        let err = (next - estimate).abs();
        estimate = next;
        last_err = err;
        if level >= 3 && err <= tol * next.abs() {
            return Ok(Estimate { value: next, error: err, evals });
        }
        if next == 0.0 && err == 0.0 && level >= 3 {
            return Ok(Estimate { value: 0.0, error: 0.0, evals });
        }
    }
    Err(Error::Accuracy { estimate, error: last_err })
}

/// Integrates `f` over `[a, b)` with tanh-sinh nodes clustering at both ends.
///
/// Nodes that round onto an endpoint are skipped, so `f` is never called at
/// `b` itself. For integrands with a singular factor in `b - x`, prefer
/// [`integrate_endpoint_singular_with_distance`], which passes `b - x` exactly.
pub fn integrate_endpoint_singular<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    tanh_sinh(
        |x, _, _| if x <= a || x >= b { 0.0 } else { f(x) },
        a,
        b,
        tol,
    )
    .map(|e| e.value)
}

/// As [`integrate_endpoint_singular`], but `f(x, b - x)` gets the exact
/// distance to the right endpoint.
pub fn integrate_endpoint_singular_with_distance<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    tanh_sinh(|x, _, db| f(x, db), a, b, tol).map(|e| e.value)
}

// ---------------------------------------------------------------------------
// Gauss-Kronrod 7/15

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut res_abs = kron.abs();
    let mut fv = [(0.0, 0.0); 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[j] = (f1, f2);
        kron += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let value = kron * h;
    let res_abs = res_abs * h.abs();
    let res_asc = res_asc * h.abs();
    let mut err = ((kron - gauss) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Globally adaptive Gauss-Kronrod bisection on `[a, b]`.
///
/// Stops when the summed error estimate drops below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn gauss_kronrod<F>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Estimate>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, evals: 0 });
    }
    let (value, error) = gk15(&mut f, a, b);
    let mut evals = 15;
    let mut total = value;
    let mut total_err = error;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Accuracy { estimate: total, error: total_err });
        }
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        if heap.len() >= GK_MAX_INTERVALS {
            return Err(Error::Accuracy { estimate: total, error: total_err });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b {
            // cannot bisect further; accept what we have on this panel
            heap.push(Panel { error: 0.0, ..worst });
            total_err = heap.iter().map(|p| p.error).sum();
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // re-sum to shed accumulated rounding from the running updates
    let value: f64 = heap.iter().map(|p| p.value).sum();
    Ok(Estimate { value, error: total_err, evals })
}

// ---------------------------------------------------------------------------
// spans in the distance variable

/// A distance interval `[anchor - len, anchor]`, where distance is `1 - r`.
///
/// Storing the length separately keeps intervals far narrower than the
/// spacing of `f64` near `anchor` (the plateaus of oscillating weights) exact
/// as measures, even though their points all round to `anchor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub anchor: f64,
    pub len: f64,
}

impl Span {
    pub fn new(lo: f64, hi: f64) -> Self {
        Span { anchor: hi, len: (hi - lo).max(0.0) }
    }

    pub fn lo(&self) -> f64 {
        (self.anchor - self.len).max(0.0)
    }

    pub fn touches_zero(&self) -> bool {
        self.len >= self.anchor
    }

    /// Point at relative position `tau` from the anchor (`tau = 0`) towards
    /// the low end (`tau = 1`).
    fn at(&self, tau: f64) -> f64 {
        self.anchor - self.len * tau
    }
}

/// Pieces of `span` over which an integrand smooth in relative terms is well
/// resolved by one adaptive rule: dyadic in distance once `hi / lo > 2`.
fn dyadic_pieces(span: Span) -> Vec<Span> {
    let lo = span.lo();
    if span.touches_zero() || lo <= 0.0 || span.anchor <= 2.0 * lo {
        return vec![span];
    }
    let mut out = Vec::new();
    let mut hi = span.anchor;
    while hi > 2.0 * lo {
        out.push(Span::new(0.5 * hi, hi));
        hi *= 0.5;
    }
    out.push(Span::new(lo, hi));
    out
}

/// Integral of `f(d)` over a span. Spans reaching `d = 0` are handled by a
/// dyadic descent followed by tanh-sinh on the last piece.
pub fn integrate_span<F>(f: &F, span: Span, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if span.len == 0.0 {
        return Ok(0.0);
    }
    if span.touches_zero() {
        let mut total = 0.0;
        let mut mass = 0.0;
        let mut hi = span.anchor;
        let mut k = 0;
        loop {
            let piece = integrate_interior(f, Span::new(0.5 * hi, hi), tol)?;
            total += piece;
            mass += piece.abs();
            hi *= 0.5;
            k += 1;
            if (k >= 6 && piece.abs() <= 1e-3 * mass) || hi < DYADIC_FLOOR || mass == 0.0 && k >= 60 {
                break;
            }
        }
        let last = tanh_sinh(|_, d, _| f(d), 0.0, hi, tol)?;
        return Ok(total + last.value);
    }
    dyadic_pieces(span)
        .into_iter()
        .map(|p| integrate_interior(f, p, tol))
        .sum()
}

fn integrate_interior<F: Fn(f64) -> f64>(f: &F, span: Span, tol: f64) -> Result<f64> {
    let est = gauss_kronrod(|tau| f(span.at(tau)), 0.0, 1.0, tol, 0.0)?;
    Ok(est.value * span.len)
}

/// `ln` of the integral of `exp(g(d))` over a span.
pub fn ln_integrate_span<G>(g: &G, span: Span, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if span.len == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if span.touches_zero() {
        let mut total = f64::NEG_INFINITY;
        let mut hi = span.anchor;
        let mut k = 0;
        loop {
            let piece = ln_integrate_interior(g, Span::new(0.5 * hi, hi), tol)?;
            total = ln_add(total, piece);
            hi *= 0.5;
            k += 1;
            let negligible = total > f64::NEG_INFINITY && piece <= total + (1e-3f64).ln();
            if (k >= 6 && negligible) || hi < DYADIC_FLOOR {
                break;
            }
        }
        let last = ln_integrate_touching_zero(g, hi, tol)?;
        return Ok(ln_add(total, last));
    }
    let mut total = f64::NEG_INFINITY;
    for p in dyadic_pieces(span) {
        total = ln_add(total, ln_integrate_interior(g, p, tol)?);
    }
    Ok(total)
}

fn shifted_exp(v: f64) -> f64 {
    if v.is_nan() {
        f64::NAN
    } else {
        // low enough that weighted sums over many subintervals stay finite
        v.min(600.0).exp()
    }
}

const SCAN: usize = 33;
/// Drop in `g` between neighbouring scan points beyond which the peak is
/// narrower than the scan spacing and gets isolated before integrating.
const PEAK_DROP: f64 = 30.0;
const PEAK_DEPTH: usize = 8;

/// Largest finite value of `g` on a coarse scan, or NaN if `g` produced NaN.
fn scan_max<G: Fn(f64) -> f64>(g: &G, span: Span) -> f64 {
    let mut gmax = f64::NEG_INFINITY;
    for i in 0..SCAN {
        let v = g(span.anchor * (1.0 - i as f64 / SCAN as f64));
        if v.is_nan() {
            return f64::NAN;
        }
        if v.is_finite() && v > gmax {
            gmax = v;
        }
    }
    gmax
}

impl Span {
    /// Sub-span for local coordinates `tau ∈ [t0, t1]`.
    fn sub(&self, t0: f64, t1: f64) -> Span {
        Span { anchor: self.at(t0), len: self.len * (t1 - t0) }
    }
}

fn ln_integrate_interior<G: Fn(f64) -> f64>(g: &G, span: Span, tol: f64) -> Result<f64> {
    ln_interior_at_depth(g, span, tol, 0)
}

fn ln_interior_at_depth<G: Fn(f64) -> f64>(g: &G, span: Span, tol: f64, depth: usize) -> Result<f64> {
    let tau = |i: usize| i as f64 / SCAN as f64;
    let vals: Vec<f64> = (0..=SCAN).map(|i| g(span.at(tau(i)))).collect();
    if vals.iter().any(|v| v.is_nan()) {
        return Err(Error::Accuracy { estimate: f64::NAN, error: f64::INFINITY });
    }
    let (imax, gmax) = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if gmax == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let drop = |j: usize| if vals[j].is_finite() { gmax - vals[j] } else { f64::INFINITY };
    let steep = (imax > 0 && drop(imax - 1) > PEAK_DROP) || (imax < SCAN && drop(imax + 1) > PEAK_DROP);
    if !steep || depth >= PEAK_DEPTH {
        return ln_gk_shifted(g, span, gmax, tol);
    }
    let lo = imax.saturating_sub(1);
    let hi = (imax + 1).min(SCAN);
    let mut parts = Vec::with_capacity(4);
    if lo > 0 {
        let m = vals[..=lo].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        parts.push(ln_gk_shifted(g, span.sub(0.0, tau(lo)), m, tol)?);
    }
    if lo < imax {
        parts.push(ln_interior_at_depth(g, span.sub(tau(lo), tau(imax)), tol, depth + 1)?);
    }
    if imax < hi {
        parts.push(ln_interior_at_depth(g, span.sub(tau(imax), tau(hi)), tol, depth + 1)?);
    }
    if hi < SCAN {
        let m = vals[hi..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        parts.push(ln_gk_shifted(g, span.sub(tau(hi), 1.0), m, tol)?);
    }
    Ok(ln_sum(parts))
}

/// Relative accuracy attainable for `∫ exp(g)`: rounding `g` itself costs `eps |g|`.
fn exp_tol(tol: f64, shift: f64) -> f64 {
    tol.max(16.0 * f64::EPSILON * shift.abs())
}

/// Adaptive Gauss-Kronrod on `exp(g - shift)`, re-shifting if the guess was low.
fn ln_gk_shifted<G: Fn(f64) -> f64>(g: &G, span: Span, mut shift: f64, tol: f64) -> Result<f64> {
    if shift == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    // points of a span narrower than a few thousand ulps of its anchor are
    // quantized, and so is any integrand that depends on the position inside it
    let tol = exp_tol(tol, shift).max(16.0 * f64::EPSILON * span.anchor / span.len);
    for _ in 0..3 {
        let est = gauss_kronrod(|tau| shifted_exp(g(span.at(tau)) - shift), 0.0, 1.0, tol, 0.0)?;
        if est.value <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if est.value < 1e30 {
            return Ok(shift + est.value.ln() + span.len.ln());
        }
        shift += est.value.ln();
    }
    Err(Error::Accuracy { estimate: f64::INFINITY, error: f64::INFINITY })
}

fn ln_integrate_touching_zero<G: Fn(f64) -> f64>(g: &G, hi: f64, tol: f64) -> Result<f64> {
    let span = Span { anchor: hi, len: hi };
    let mut shift = scan_max(g, span);
    if shift.is_nan() {
        return Err(Error::Accuracy { estimate: f64::NAN, error: f64::INFINITY });
    }
    if shift == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    for _ in 0..3 {
        let est = tanh_sinh(|_, d, _| shifted_exp(g(d) - shift), 0.0, hi, exp_tol(tol, shift))?;
        if est.value <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if est.value < 1e30 {
            return Ok(shift + est.value.ln());
        }
        shift += est.value.ln();
    }
    Err(Error::Accuracy { estimate: f64::INFINITY, error: f64::INFINITY })
}

/// Outcome of summing a positive series of blocks towards a singular point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesOutcome {
    /// Converged; the value is the log of the sum.
    Converged(f64),
    /// Blocks stopped decaying. Carries the log of the partial sum reached.
    Divergent(f64),
    /// Ran out of budget while still decaying too slowly to call either way.
    Unresolved(f64),
}

impl SeriesOutcome {
    pub fn ln_value(&self) -> f64 {
        match *self {
            SeriesOutcome::Converged(v) | SeriesOutcome::Divergent(v) | SeriesOutcome::Unresolved(v) => v,
        }
    }
}

/// Thresholds for [`ln_block_series`].
#[derive(Debug, Clone, Copy)]
pub struct SeriesRule {
    /// Stop once a block is below this fraction of the running sum.
    pub rel_tol: f64,
    /// Consecutive block ratio at or above which blocks count as non-decaying.
    pub stall_ratio: f64,
    /// Number of consecutive stalled blocks that signals divergence.
    pub stall_run: usize,
    pub max_blocks: usize,
}

impl Default for SeriesRule {
    fn default() -> Self {
        SeriesRule { rel_tol: 1e-9, stall_ratio: 0.97, stall_run: 12, max_blocks: 960 }
    }
}

/// Sums positive blocks `exp(block(k))`, `k = 0, 1, ...`, watching for the
/// blocks to stop decaying.
pub fn ln_block_series<B>(mut block: B, rule: SeriesRule) -> Result<SeriesOutcome>
where
    B: FnMut(usize) -> Result<Option<f64>>,
{
    let mut total = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    let mut stalled = 0;
    let ln_tol = rule.rel_tol.ln();
    let ln_stall = rule.stall_ratio.ln();
    for k in 0..rule.max_blocks {
        let Some(b) = block(k)? else {
            // no more blocks: the series is exhausted
            return Ok(SeriesOutcome::Converged(total));
        };
        total = ln_add(total, b);
        // geometric estimate of everything after this block
        let ln_rest = if b == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else if prev.is_finite() && b < prev {
            let ln_ratio = b - prev;
            b + ln_ratio - (-ln_ratio.exp_m1()).ln()
        } else {
            f64::INFINITY
        };
        if prev.is_finite() && b - prev >= ln_stall {
            stalled += 1;
        } else {
            stalled = 0;
        }
        prev = b;
        if stalled >= rule.stall_run {
            return Ok(SeriesOutcome::Divergent(total));
        }
        if k >= 4 && total > f64::NEG_INFINITY && ln_rest <= total + ln_tol {
            return Ok(SeriesOutcome::Converged(total));
        }
    }
    Ok(SeriesOutcome::Unresolved(total))
}
