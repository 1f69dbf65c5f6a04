//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_intervals: 4000,
        }
    }
}

#[derive(Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Piece {
        a,
        b,
        value: k * h,
        err: ((k - g) * h).abs(),
    }
}

/// Integrates `f` over `[a, b]` with the listed interior breakpoints.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    spec: &QuadSpec,
) -> Result<f64> {
    if points.len() < 2 {
        return Ok(0.0);
    }
    let mut pieces: Vec<Piece> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    loop {
        let total: f64 = pieces.iter().map(|p| p.value).sum();
        let err: f64 = pieces.iter().map(|p| p.err).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        if err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(total);
        }
        if pieces.len() >= spec.max_intervals {
            // accept when the residual is small relative to a loose bound
            if err <= 1e3 * spec.abs_tol.max(spec.rel_tol * total.abs()) {
                return Ok(total);
            }
            return Err(Error::Quadrature(format!(
                "error estimate {err:e} above tolerance after {} intervals",
                pieces.len()
            )));
        }
        let (idx, _) =
            pieces.iter().enumerate().fold(
                (0, -1.0),
                |acc, (i, p)| if p.err > acc.1 { (i, p.err) } else { acc },
            );
        let p = pieces.swap_remove(idx);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // interval cannot be split further
            pieces.push(Piece { err: 0.0, ..p });
            continue;
        }
        pieces.push(gk15(&f, p.a, m));
        pieces.push(gk15(&f, m, p.b));
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<f64> {
    integrate_with_breaks(f, &[a, b], spec)
}

/// Integrates `f` over `[a, inf)` for integrands decaying at least like
/// `e^{-rate x}` times a polynomial. The range is cut where the exponential
/// factor falls below `e^{-60}`, with breakpoints every `1/rate`.
pub fn integrate_exp_tail<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    rate: f64,
    spec: &QuadSpec,
) -> Result<f64> {
    if rate <= 0.0 || !rate.is_finite() {
        return Err(Error::Quadrature(format!(
            "decay rate {rate} must be positive"
        )));
    }
    let step = 1.0 / rate;
    let points: Vec<f64> = (0..=60).map(|k| a + k as f64 * step).collect();
    integrate_with_breaks(f, &points, spec)
}

/// Maximises a unimodal function on `[0, hi]` by golden-section search.
fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo <= 1e-14 * hi.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Point where the decreasing side of `f` drops `drop` below `f(from)`.
fn level_crossing<F: Fn(f64) -> f64>(
    f: &F,
    from: f64,
    step: f64,
    top: f64,
    drop: f64,
    left: bool,
) -> f64 {
    let target = top - drop;
    let mut inner = from;
    let mut d = step;
    let mut outer;
    loop {
        outer = if left { (from - d).max(0.0) } else { from + d };
        if f(outer) < target || (left && outer == 0.0) {
            break;
        }
        inner = outer;
        d *= 2.0;
    }
    if left && outer == 0.0 && f(0.0) >= target {
        return 0.0;
    }
    for _ in 0..100 {
        let m = 0.5 * (inner + outer);
        if f(m) >= target {
            inner = m;
        } else {
            outer = m;
        }
    }
    outer
}

/// `ln int_0^inf e^{phi(x)} dx` for a unimodal `phi`, given a point `guess`
/// near the mode and a rough width. The range is cut where `phi` falls 45
/// below its maximum.
pub fn log_integrate_unimodal<F: Fn(f64) -> f64>(
    phi: F,
    guess: f64,
    width: f64,
    spec: &QuadSpec,
) -> Result<f64> {
    if !(guess > 0.0 && width > 0.0) || !guess.is_finite() {
        return Err(Error::Quadrature(format!(
            "bad peak hint ({guess}, {width})"
        )));
    }
    let mut hi = (4.0 * guess).max(guess + 10.0 * width);
    while phi(hi) >= phi(guess) {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Quadrature("integrand does not decay".into()));
        }
    }
    let mode = golden_max(&phi, 0.0, hi);
    let top = phi(mode);
    if !top.is_finite() {
        return Err(Error::Quadrature("non-finite peak".into()));
    }
    let left = level_crossing(&phi, mode, width, top, 45.0, true);
    let right = level_crossing(&phi, mode, width, top, 45.0, false);
    let breaks: Vec<f64> = (0..=32)
        .map(|j| left + (right - left) * j as f64 / 32.0)
        .collect();
    let integral = integrate_with_breaks(|x| (phi(x) - top).exp(), &breaks, spec)?;
    if !(integral > 0.0) {
        return Err(Error::Quadrature("integrand vanished".into()));
    }
    Ok(top + integral.ln())
}
