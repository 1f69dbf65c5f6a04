//! Exact samplers for the CSBP, its entrance law and the immigration
//! process `Z^alpha`, plus an Euler scheme kept as an independent check.

use crate::analytics::{c_inverse, c_pair, c_tilde_inverse, ModelParams};
use crate::error::{domain, Result};
use crate::rng::RandomStream;
use crate::special::{ln_factorial, log_series};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

/// Poisson draw that accepts a zero mean.
pub(crate) fn poisson(rng: &mut RandomStream, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    d.sample(rng) as u64
}

/// Sum of `n` independent exponentials with the given rate.
pub(crate) fn gamma_sum(rng: &mut RandomStream, n: f64, rate: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    Gamma::new(n, 1.0 / rate)
        .expect("valid gamma parameters")
        .sample(rng)
}

pub(crate) fn exponential(rng: &mut RandomStream, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

fn check_positive(t: f64, what: &str) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("{what} must be positive and finite, got {t}"));
    }
    Ok(())
}

/// `Z_t` under `P_x`: a Poisson(`x c_t`) number of Exponential(`c~_t`) masses.
pub fn sample_transition(p: &ModelParams, x: f64, t: f64, rng: &mut RandomStream) -> Result<f64> {
    check_positive(t, "time")?;
    if !(x >= 0.0) {
        return domain(format!("initial mass must be non-negative, got {x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let (c, ct) = c_pair(p, t);
    let n = poisson(rng, x * c);
    Ok(gamma_sum(rng, n as f64, ct))
}

/// `Z_t` under `N[ . | zeta > t]`: Exponential(`c~_t`).
pub fn sample_entrance_survival(p: &ModelParams, t: f64, rng: &mut RandomStream) -> Result<f64> {
    check_positive(t, "time")?;
    let (_, ct) = c_pair(p, t);
    Ok(exponential(rng, ct))
}

/// A CSBP path observed on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub params: ModelParams,
}

/// Chains exact transitions from `Z_0 = x` along `grid`.
pub fn sample_csbp_path(
    p: &ModelParams,
    x: f64,
    grid: &[f64],
    rng: &mut RandomStream,
) -> Result<PathSample> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("grid must be strictly increasing");
    }
    if grid.first().is_some_and(|&g| g < 0.0) {
        return domain("grid must start at a non-negative time");
    }
    let mut values = Vec::with_capacity(grid.len());
    let (mut prev_t, mut z) = (0.0, x);
    for &g in grid {
        if g > prev_t {
            z = sample_transition(p, z, g - prev_t, rng)?;
        }
        values.push(z);
        prev_t = g;
    }
    Ok(PathSample {
        grid: grid.to_vec(),
        values,
        params: *p,
    })
}

/// Cumulative immigration intensity `alpha / c_t = int_0^t alpha beta e^{2 beta theta r} dr`.
pub fn immigration_intensity(p: &ModelParams, t: f64) -> f64 {
    if p.theta == 0.0 {
        p.alpha * p.beta * t
    } else {
        p.alpha * (2.0 * p.beta * p.theta * t).exp_m1() / (2.0 * p.theta)
    }
}

/// Inverse of [`immigration_intensity`]; `None` beyond the total mass when `theta < 0`.
fn immigration_time(p: &ModelParams, level: f64) -> Option<f64> {
    if p.theta == 0.0 {
        return Some(level / (p.alpha * p.beta));
    }
    let r = 2.0 * p.theta * level / p.alpha;
    if r <= -1.0 {
        return None;
    }
    Some(r.ln_1p() / (2.0 * p.beta * p.theta))
}

/// Jump times on `[0, horizon]` of the Poisson process with intensity
/// `alpha beta e^{2 beta theta t}`, by inversion of the cumulative intensity.
pub fn sample_immigration_jumps(
    p: &ModelParams,
    horizon: f64,
    rng: &mut RandomStream,
) -> Result<Vec<f64>> {
    check_positive(horizon, "horizon")?;
    let mut out = Vec::new();
    if p.alpha == 0.0 {
        return Ok(out);
    }
    let mut level = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        level += e;
        match immigration_time(p, level) {
            Some(t) if t <= horizon => out.push(t),
            _ => return Ok(out),
        }
    }
}

/// A draw of `Z^alpha_t` with the number of immigration jumps `S^alpha_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZalphaSample {
    pub value: f64,
    pub jumps: u64,
}

/// Mass at time `t` from surviving excursions grafted at times in
/// `[t - hi, t - lo]` with rate `2 beta m`: explicit Poisson atoms.
pub(crate) fn strip_atoms(
    p: &ModelParams,
    m: f64,
    lo: f64,
    hi: f64,
    rng: &mut RandomStream,
    mut on_atom: impl FnMut(f64, f64),
) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    // d/dv ln c~_v = -beta c_v, so v with density c_v has ln c~_v uniform
    let (_, ct_lo) = c_pair(p, lo);
    let (_, ct_hi) = c_pair(p, hi);
    let (l_lo, l_hi) = (ct_lo.ln(), ct_hi.ln());
    let n = poisson(rng, 2.0 * m * (l_lo - l_hi));
    let mut total = 0.0;
    for _ in 0..n {
        let u: f64 = rng.random();
        let w = (l_hi + u * (l_lo - l_hi)).exp();
        let v = c_tilde_inverse(p, w).unwrap_or(hi).clamp(lo, hi);
        let (_, ct) = c_pair(p, v);
        let mass = exponential(rng, ct);
        on_atom(v, mass);
        total += mass;
    }
    total
}

/// Total mass at time `t` from all excursions grafted within `[t - d, t]`
/// with rate `2 beta m`: Gamma(`2 m`, `c~_d`).
pub(crate) fn strip_lump(p: &ModelParams, m: f64, d: f64, rng: &mut RandomStream) -> f64 {
    if !(d > 0.0) {
        return 0.0;
    }
    let (_, ct) = c_pair(p, d);
    gamma_sum(rng, 2.0 * m, ct)
}

/// Exact `Z^alpha_t` from `Z^alpha_0 = 0`.
///
/// Between jumps of `S^alpha` at level `k`, excursions are grafted at rate
/// `2 beta (k + 1)`. Those in the earlier strips are drawn one by one; the
/// strip ending at `t` is summed in closed form since its atom count is
/// infinite.
pub fn sample_zalpha_exact(
    p: &ModelParams,
    t: f64,
    rng: &mut RandomStream,
) -> Result<ZalphaSample> {
    check_positive(t, "time")?;
    let jumps = sample_immigration_jumps(p, t, rng)?;
    let mut value = 0.0;
    let mut start = 0.0;
    for (k, &tau) in jumps.iter().enumerate() {
        value += strip_atoms(p, (k + 1) as f64, t - tau, t - start, rng, |_, _| {});
        start = tau;
    }
    let k = jumps.len();
    value += strip_lump(p, (k + 1) as f64, t - start, rng);
    Ok(ZalphaSample {
        value,
        jumps: k as u64,
    })
}

/// Euler–Maruyama for
/// `dZ = sqrt(2 beta Z) dB - 2 beta theta Z dt + 2 beta (S + 1) dt`, clamped at 0.
pub fn sample_zalpha_euler(
    p: &ModelParams,
    t: f64,
    dt: f64,
    rng: &mut RandomStream,
) -> Result<ZalphaSample> {
    check_positive(t, "time")?;
    check_positive(dt, "step")?;
    let jumps = sample_immigration_jumps(p, t, rng)?;
    let steps = (t / dt).ceil() as u64;
    let h = t / steps as f64;
    let sh = h.sqrt();
    let mut z = 0.0_f64;
    let mut next = 0;
    for i in 0..steps {
        let r = i as f64 * h;
        while next < jumps.len() && jumps[next] <= r {
            next += 1;
        }
        let g: f64 = StandardNormal.sample(rng);
        let drift = -2.0 * p.beta * p.theta * z + 2.0 * p.beta * (next as f64 + 1.0);
        z = (z + drift * h + (2.0 * p.beta * z).sqrt() * sh * g).max(0.0);
    }
    Ok(ZalphaSample {
        value: z,
        jumps: jumps.len() as u64,
    })
}

/// `P(S^alpha_t = k | Y^alpha_t = y) = (alpha y)^k / (k! (k+1)! S(alpha y))`.
pub fn conditional_s_given_y(alpha: f64, y: f64, k: u64) -> f64 {
    let w = alpha * y;
    if w == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let log = k as f64 * w.ln() - ln_factorial(k) - ln_factorial(k + 1) - log_series(w);
    log.exp()
}

/// Joint density `f(y, k)` of `(Y^alpha_t, S^alpha_t)` for `beta = 1, theta = 0`:
/// `t^{-2} alpha^k y^{k+1} / (k! (k+1)!) e^{-(alpha t + y / t)}`.
pub fn zalpha_joint_density(alpha: f64, t: f64, y: f64, k: u64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    let mut log = -2.0 * t.ln() + (kf + 1.0) * y.ln()
        - ln_factorial(k)
        - ln_factorial(k + 1)
        - (alpha * t + y / t);
    if k > 0 {
        log += kf * alpha.ln();
    }
    log.exp()
}

/// Direction of [`time_change_map`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeChange {
    /// `t -> s = 1 / c_t`
    Forward,
    /// `s -> t`
    Backward,
}

/// The clock change `s = 1 / c_t` under which `e^{2 beta theta t} Z_t`
/// becomes the `beta = 1, theta = 0` process.
pub fn time_change_map(p: &ModelParams, x: f64, dir: TimeChange) -> Result<f64> {
    check_positive(x, "time")?;
    match dir {
        TimeChange::Forward => Ok(1.0 / c_pair(p, x).0),
        TimeChange::Backward => {
            if p.theta < 0.0 && x >= 1.0 / (-2.0 * p.theta) {
                return domain(format!("s = {x} beyond 1/(2 theta_-)"));
            }
            c_inverse(p, 1.0 / x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(beta: f64, theta: f64, alpha: f64) -> ModelParams {
        ModelParams::new(beta, theta, alpha).unwrap()
    }

    #[test]
    fn zero_start_is_absorbed() {
        let mut r = RandomStream::new(1);
        let p = mp(1.0, 0.3, 0.0);
        assert_eq!(sample_transition(&p, 0.0, 2.0, &mut r).unwrap(), 0.0);
        let path = sample_csbp_path(&p, 0.0, &[0.5, 1.0, 2.0], &mut r).unwrap();
        assert!(path.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn no_immigration_without_alpha() {
        let mut r = RandomStream::new(2);
        assert!(sample_immigration_jumps(&mp(1.0, 0.0, 0.0), 5.0, &mut r)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn conditional_s_normalised() {
        assert_eq!(conditional_s_given_y(2.0, 0.0, 0), 1.0);
        assert_eq!(conditional_s_given_y(2.0, 0.0, 3), 0.0);
        for &w in &[0.1, 3.0, 50.0, 900.0] {
            let s: f64 = (0..400).map(|k| conditional_s_given_y(1.0, w, k)).sum();
            assert!((s - 1.0).abs() < 1e-12, "{w} {s}");
        }
    }

    #[test]
    fn time_change_examples() {
        let p = mp(1.0, 0.0, 0.0);
        assert!((time_change_map(&p, 1.7, TimeChange::Forward).unwrap() - 1.7).abs() < 1e-15);
        let p = mp(1.0, 1.0, 0.0);
        let s = time_change_map(&p, 1.0, TimeChange::Forward).unwrap();
        assert!((s - (1f64.exp().powi(2) - 1.0) / 2.0).abs() < 1e-13);
        for &theta in &[-0.7, 0.0, 0.4] {
            let p = mp(1.3, theta, 0.0);
            for &t in &[0.01, 0.5, 3.0] {
                let s = time_change_map(&p, t, TimeChange::Forward).unwrap();
                let back = time_change_map(&p, s, TimeChange::Backward).unwrap();
                assert!((back - t).abs() < 1e-13 * t.max(1.0), "{theta} {t} {back}");
            }
        }
        let p = mp(1.0, -1.0, 0.0);
        assert!(time_change_map(&p, 0.6, TimeChange::Backward).is_err());
    }

    #[test]
    fn joint_density_sums_to_one() {
        let (alpha, t) = (1.5, 0.8);
        let mut total = 0.0;
        for k in 0..60 {
            total += crate::quad::integrate_exp_tail(
                |y| zalpha_joint_density(alpha, t, y, k),
                0.0,
                1.0 / t,
                &Default::default(),
            )
            .unwrap();
        }
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }
}
