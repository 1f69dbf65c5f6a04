//! Estimators and goodness-of-fit tests used by the Monte Carlo checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanSe {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanSe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Merges another accumulator (Chan et al. parallel update).
    pub fn merge(&mut self, other: &MeanSe) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn se(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.mean(),
            se: self.se(),
            n: self.n,
        }
    }
}

impl FromIterator<f64> for MeanSe {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MeanSe::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: u64,
}

impl Estimate {
    pub fn scaled(self, k: f64) -> Estimate {
        Estimate {
            value: self.value * k,
            se: self.se * k.abs(),
            n: self.n,
        }
    }

    /// Standardised distance to an exact target.
    pub fn z_against(&self, target: f64) -> f64 {
        z_score(self.value - target, self.se)
    }

    /// Standardised distance between two independent estimates.
    pub fn z_between(&self, other: &Estimate) -> f64 {
        z_score(self.value - other.value, self.se.hypot(other.se))
    }
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Two-estimator Monte Carlo comparison, serialised as a test report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub lhs: f64,
    pub rhs: f64,
    pub se_lhs: f64,
    pub se_rhs: f64,
    pub z: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl TestReport {
    pub fn new(lhs: Estimate, rhs: Estimate, seed: u64) -> Self {
        TestReport {
            lhs: lhs.value,
            rhs: rhs.value,
            se_lhs: lhs.se,
            se_rhs: rhs.se,
            z: lhs.z_between(&rhs),
            n_samples: lhs.n.max(rhs.n),
            seed,
        }
    }

    pub fn passes(&self, z_max: f64) -> bool {
        self.z.abs() < z_max
    }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

/// Two-sample Kolmogorov–Smirnov test. Inputs need not be sorted.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    KsResult {
        statistic: d,
        p_value: ks_p(d, ne),
    }
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> KsResult {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x.iter().enumerate().fold(0.0_f64, |d, (i, &v)| {
        let f = cdf(v);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    });
    KsResult {
        statistic: d,
        p_value: ks_p(d, n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed counts against expected counts.
/// Cells with expected count below 5 are pooled into one.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> ChiSquareResult {
    assert_eq!(observed.len(), expected.len());
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        if e < 5.0 {
            pool_o += o;
            pool_e += e;
        } else {
            stat += (o - e) * (o - e) / e;
            cells += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
        cells += 1;
    }
    let dof = cells.saturating_sub(1).max(1);
    ChiSquareResult {
        statistic: stat,
        dof,
        p_value: chi_square_sf(stat, dof),
    }
}

pub fn chi_square_sf(stat: f64, dof: usize) -> f64 {
    let dist = ChiSquared::new(dof as f64).expect("dof is positive");
    dist.sf(stat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let all: MeanSe = xs.iter().copied().collect();
        let mut a: MeanSe = xs[..37].iter().copied().collect();
        let b: MeanSe = xs[37..].iter().copied().collect();
        a.merge(&b);
        assert!((a.mean() - all.mean()).abs() < 1e-14);
        assert!((a.variance() - all.variance()).abs() < 1e-13);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // Q(1.36) is close to 0.05 and Q(1.63) to 0.01
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let r = chi_square(&[10.0, 20.0, 30.0], &[10.0, 20.0, 30.0]);
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }
}
