//! Series and Bessel evaluations shared by the density, martingale and
//! conditioning code.
//!
//! The workhorse is `S(w) = sum_k w^k / (k! (k+1)!) = I_1(2 sqrt w) / sqrt w`.

use std::f64::consts::PI;

/// Beyond this argument the series switches to the Bessel asymptotic.
pub const ASYMPTOTIC_SWITCH: f64 = 700.0;

const RESCALE: f64 = 1e250;

/// `ln S(w)` by multiplicative term recursion with overflow rescaling.
/// Stops once the geometric bound on the remaining tail drops below
/// `1e-16` of the partial sum. Valid for every `w >= 0`.
pub fn log_series_direct(w: f64) -> f64 {
    debug_assert!(w >= 0.0);
    if w == 0.0 {
        return 0.0;
    }
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut log_scale = 0.0_f64;
    let mut k = 0.0_f64;
    loop {
        let ratio = w / ((k + 1.0) * (k + 2.0));
        term *= ratio;
        k += 1.0;
        sum += term;
        let next_ratio = w / ((k + 1.0) * (k + 2.0));
        if next_ratio < 1.0 && term * next_ratio / (1.0 - next_ratio) < 1e-16 * sum {
            break;
        }
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    sum.ln() + log_scale
}

/// Asymptotic expansion of `ln I_1(x)` for large `x`.
pub fn log_bessel_i1_asymptotic(x: f64) -> f64 {
    // I_nu(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(nu) / x^k
    let mu = 4.0;
    let mut coef = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        coef *= -(mu - odd * odd) / (8.0 * kf * x);
        let mag = coef.abs();
        if mag > prev {
            break;
        }
        sum += coef;
        prev = mag;
        if mag < 1e-18 * sum.abs() {
            break;
        }
    }
    x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
}

/// `ln I_1(x)` for `x > 0`: power series for moderate `x`, asymptotic beyond.
pub fn log_bessel_i1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x > 30.0 {
        return log_bessel_i1_asymptotic(x);
    }
    let h = 0.5 * x;
    let h2 = h * h;
    let mut term = h;
    let mut sum = h;
    let mut i = 0.0_f64;
    loop {
        term *= h2 / ((i + 1.0) * (i + 2.0));
        i += 1.0;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum.ln()
}

/// `ln S(w)`: direct series up to [`ASYMPTOTIC_SWITCH`], Bessel asymptotic beyond.
pub fn log_series(w: f64) -> f64 {
    if w > ASYMPTOTIC_SWITCH {
        let x = 2.0 * w.sqrt();
        log_bessel_i1_asymptotic(x) - 0.5 * w.ln()
    } else {
        log_series_direct(w)
    }
}

/// `ln n!`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}
