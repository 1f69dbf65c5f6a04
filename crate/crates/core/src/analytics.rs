//! Closed forms for the quadratic CSBP: branching mechanism, the `c`/`c~`
//! functions, the `u`-semigroup, entrance and transition densities,
//! moments, the martingales `M`, `M~` and biased Laplace transforms.

use crate::error::{domain, Error, Result};
use crate::special::{ln_factorial, log_bessel_i1, log_series};
use serde::{Deserialize, Serialize};

/// Branching parameters `(beta, theta)` and immigration weight `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub theta: f64,
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(beta: f64, theta: f64, alpha: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return domain(format!("beta must be positive, got {beta}"));
        }
        if !theta.is_finite() {
            return domain("theta must be finite");
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return domain(format!("alpha must be non-negative, got {alpha}"));
        }
        Ok(ModelParams { beta, theta, alpha })
    }

    /// Same parameters with `theta` replaced by `-theta`.
    pub fn mirrored(self) -> Self {
        ModelParams {
            theta: -self.theta,
            ..self
        }
    }

    /// Same parameters with `theta` replaced by `|theta|`.
    pub fn abs_theta(self) -> Self {
        ModelParams {
            theta: self.theta.abs(),
            ..self
        }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        ModelParams { alpha, ..self }
    }

    /// `e^{2 beta theta t}`, the ratio `c~_t / c_t`.
    pub fn growth(&self, t: f64) -> f64 {
        (2.0 * self.beta * self.theta * t).exp()
    }
}

/// `psi(lambda) = beta lambda^2 + 2 beta theta lambda`.
pub fn psi(p: &ModelParams, lambda: f64) -> f64 {
    p.beta * lambda * lambda + 2.0 * p.beta * p.theta * lambda
}

/// The root of `psi(r) = lambda` with `r >= 2 theta_-`.
pub fn psi_inverse(p: &ModelParams, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return domain(format!("psi_inverse needs lambda >= 0, got {lambda}"));
    }
    let q = lambda / p.beta;
    let disc = (p.theta * p.theta + q).sqrt();
    if p.theta > 0.0 {
        Ok(q / (p.theta + disc))
    } else {
        Ok(-p.theta + disc)
    }
}

/// `(c_t, c~_t)` without argument checks; `t > 0` assumed.
pub(crate) fn c_pair(p: &ModelParams, t: f64) -> (f64, f64) {
    if p.theta == 0.0 {
        let v = 1.0 / (p.beta * t);
        return (v, v);
    }
    let x = 2.0 * p.beta * p.theta * t;
    let two_theta = 2.0 * p.theta;
    (two_theta / x.exp_m1(), two_theta / -(-x).exp_m1())
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || t.is_nan() {
        return domain(format!("time must be positive, got {t}"));
    }
    Ok(())
}

/// `c_t = 2 theta / (e^{2 beta theta t} - 1)`, and `1 / (beta t)` when `theta = 0`.
pub fn c_t(p: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(c_pair(p, t).0)
}

/// `c~_t = 2 theta / (1 - e^{-2 beta theta t})`, and `1 / (beta t)` when `theta = 0`.
pub fn c_tilde_t(p: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(c_pair(p, t).1)
}

/// The time `t` with `c_t = v`.
pub fn c_inverse(p: &ModelParams, v: f64) -> Result<f64> {
    if p.theta == 0.0 {
        if !(v > 0.0) {
            return domain("c_inverse needs v > 0");
        }
        return Ok(1.0 / (p.beta * v));
    }
    let r = 2.0 * p.theta / v;
    if !(v > 0.0) || !(r > -1.0) {
        return domain(format!("c_inverse: {v} outside the range of c"));
    }
    Ok(r.ln_1p() / (2.0 * p.beta * p.theta))
}

/// The time `t` with `c~_t = w`.
pub fn c_tilde_inverse(p: &ModelParams, w: f64) -> Result<f64> {
    if p.theta == 0.0 {
        if !(w > 0.0) {
            return domain("c_tilde_inverse needs w > 0");
        }
        return Ok(1.0 / (p.beta * w));
    }
    let r = -2.0 * p.theta / w;
    if !(w > 0.0) || !(r > -1.0) {
        return domain(format!("c_tilde_inverse: {w} outside the range of c~"));
    }
    Ok(-r.ln_1p() / (2.0 * p.beta * p.theta))
}

/// `u(lambda, t) = lambda c_t / (c~_t + lambda)`, with `u(lambda, 0) = lambda`.
pub fn u(p: &ModelParams, lambda: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(lambda);
    }
    check_time(t)?;
    let (c, ct) = c_pair(p, t);
    if !(lambda > -ct) {
        return domain(format!("u needs lambda > -c~_t = {}, got {lambda}", -ct));
    }
    Ok(lambda * c / (ct + lambda))
}

/// Excursion-measure mass of survival past `t`: `N[zeta > t] = c_t`.
pub fn survival_mass(p: &ModelParams, t: f64) -> Result<f64> {
    c_t(p, t)
}

/// Entrance density `q_t(x) = c_t c~_t e^{-c~_t x}`.
pub fn entrance_density(p: &ModelParams, t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    if !(x >= 0.0) {
        return domain(format!("entrance density needs x >= 0, got {x}"));
    }
    let (c, ct) = c_pair(p, t);
    Ok(c * ct * (-ct * x).exp())
}

/// Transition kernel from `x` over time `t`: an atom at zero plus a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionDensity {
    pub atom: f64,
    pub density: f64,
}

/// `ln q_t(x, y)` of the absolutely continuous part, for `x > 0`.
pub fn log_transition_density(p: &ModelParams, t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    if !(x > 0.0) || !(y >= 0.0) {
        return domain(format!(
            "transition density needs x > 0, y >= 0, got ({x}, {y})"
        ));
    }
    let (c, ct) = c_pair(p, t);
    Ok((x * c * ct).ln() - (x + y) * c - 2.0 * p.theta * y + log_series(x * y * c * ct))
}

/// The kernel `P_x(Z_t in dy)`: atom `e^{-x c_t}` at zero and density `q_t(x, y)`.
pub fn transition_density(p: &ModelParams, t: f64, x: f64, y: f64) -> Result<TransitionDensity> {
    let density = log_transition_density(p, t, x, y)?.exp();
    let (c, _) = c_pair(p, t);
    Ok(TransitionDensity {
        atom: (-x * c).exp(),
        density,
    })
}

/// `N[Z_t^n] = n! c_t / c~_t^n`.
pub fn moment_n(p: &ModelParams, t: f64, n: u32) -> Result<f64> {
    check_time(t)?;
    if n == 0 {
        return domain("moment order must be at least 1");
    }
    let (c, ct) = c_pair(p, t);
    let log = ln_factorial(n as u64) + c.ln() - n as f64 * ct.ln();
    let v = log.exp();
    if !v.is_finite() {
        return Err(Error::Overflow(format!("moment of order {n} at t = {t}")));
    }
    Ok(v)
}

/// `ln M^{alpha,theta}_t` at `Z_t = z > 0`.
pub fn log_martingale_m(p: &ModelParams, t: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    if !(z > 0.0) {
        return domain(format!("log martingale needs z > 0, got {z}"));
    }
    let growth_log = 2.0 * p.beta * p.theta * t;
    if p.alpha == 0.0 {
        return Ok(z.ln() + growth_log);
    }
    let (c, _) = c_pair(p, t);
    Ok(z.ln() - p.alpha / c + growth_log + log_series(p.alpha * z * growth_log.exp()))
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(what.to_string()))
    }
}

/// `M^{alpha,theta}_t = z e^{-alpha/c_t} sum_i (alpha z)^i e^{(i+1) 2 beta theta t} / (i! (i+1)!)`.
pub fn martingale_m(p: &ModelParams, t: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    if !(z >= 0.0) {
        return domain(format!("martingale needs z >= 0, got {z}"));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    finite(log_martingale_m(p, t, z)?.exp(), "martingale M")
}

/// `M` through the modified Bessel function `I_1`.
pub fn martingale_m_bessel(p: &ModelParams, t: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    if !(z >= 0.0) {
        return domain(format!("martingale needs z >= 0, got {z}"));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let g = 2.0 * p.beta * p.theta * t;
    if p.alpha == 0.0 {
        return finite(z * g.exp(), "martingale M");
    }
    let (c, _) = c_pair(p, t);
    let x = 2.0 * (p.alpha * z).sqrt() * (0.5 * g).exp();
    let log = 0.5 * (g + z.ln() - p.alpha.ln()) - p.alpha / c + log_bessel_i1(x);
    finite(log.exp(), "martingale M")
}

/// `M~^{alpha,theta}_t = e^{2 theta z} M^{alpha,-theta}_t`.
pub fn martingale_m_tilde(p: &ModelParams, t: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    if !(z >= 0.0) {
        return domain(format!("martingale needs z >= 0, got {z}"));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let log = 2.0 * p.theta * z + log_martingale_m(&p.mirrored(), t, z)?;
    finite(log.exp(), "martingale M~")
}

/// `N[e^{-lambda Z_s} M^{alpha,theta}_s]
///   = c_s c~_s e^{2 beta theta s - alpha/c_s} (c~_s + lambda)^{-2} exp(alpha e^{2 beta theta s} / (c~_s + lambda))`.
///
/// With `alpha = 0` this is the Laplace transform of the Kesten level mass
/// `N[e^{-lambda Z_s} Z_s] e^{2 beta theta s}`.
pub fn biased_laplace_poisson(p: &ModelParams, s: f64, lambda: f64) -> Result<f64> {
    check_time(s)?;
    let (c, ct) = c_pair(p, s);
    if !(lambda > -ct) {
        return domain(format!("biased Laplace needs lambda > -c~_s, got {lambda}"));
    }
    let g = 2.0 * p.beta * p.theta * s;
    let d = ct + lambda;
    let log = c.ln() + ct.ln() + g - p.alpha / c - 2.0 * d.ln() + p.alpha * g.exp() / d;
    finite(log.exp(), "biased Laplace transform")
}

/// `u^{-theta}(lambda, t) - u^{theta}(lambda - 2 theta, t) - 2 theta`, zero by
/// the exponential tilt between `N^theta` and `N^{-theta}`.
pub fn girsanov_identity_gap(p: &ModelParams, lambda: f64, t: f64) -> Result<f64> {
    let lhs = u(&p.mirrored(), lambda, t)?;
    let rhs = u(p, lambda - 2.0 * p.theta, t)?;
    Ok(lhs - rhs - 2.0 * p.theta)
}
