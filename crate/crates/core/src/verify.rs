//! Named verification targets, one per acceptance criterion. Every target
//! is a pure function of its seed and sample scale and produces a report
//! whose JSON form is byte-stable.

use crate::analytics::*;
use crate::batch::{chunked, collect};
use crate::conditioning::{convergence_experiment, AtSpec, RegimeSpec};
use crate::decorate::{mc_test_bismut1, sample_decorated_zs};
use crate::error::{Error, Result};
use crate::metric::{distance_table, gh_exact_small, gh_finite, gh_lower, gh_upper, refine};
use crate::quad::{integrate_with_breaks, log_integrate_unimodal, QuadSpec};
use crate::rng::RandomStream;
use crate::samplers::{
    exponential, sample_entrance_survival, sample_zalpha_euler, sample_zalpha_exact,
    time_change_map, TimeChange, ZalphaSample,
};
use crate::skeleton::{mc_test_bt_identity, mc_test_graft_lemma, HeightDensity, Statistic};
use crate::stats::{chi_square, ks_two_sample, MeanSe, TestReport};
use crate::tree_core::random::{
    random_atoms, random_root_non_branching, random_tree, scale_lengths,
};
use crate::tree_core::*;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The acceptance criteria, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    Analytics,
    Moments,
    Martingales,
    Immigration,
    GraftLemma,
    BtIdentity,
    Bismut,
    Decorated,
    Limits,
    Trees,
    Metric,
    Determinism,
}

impl Target {
    pub const ALL: [Target; 12] = [
        Target::Analytics,
        Target::Moments,
        Target::Martingales,
        Target::Immigration,
        Target::GraftLemma,
        Target::BtIdentity,
        Target::Bismut,
        Target::Decorated,
        Target::Limits,
        Target::Trees,
        Target::Metric,
        Target::Determinism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::Analytics => "analytics",
            Target::Moments => "moments",
            Target::Martingales => "martingales",
            Target::Immigration => "immigration",
            Target::GraftLemma => "graft-lemma",
            Target::BtIdentity => "bt-identity",
            Target::Bismut => "bismut",
            Target::Decorated => "decorated",
            Target::Limits => "limits",
            Target::Trees => "trees",
            Target::Metric => "metric",
            Target::Determinism => "determinism",
        }
    }

    /// 1-based acceptance criterion number.
    pub fn criterion(self) -> usize {
        Target::ALL.iter().position(|&t| t == self).expect("listed") + 1
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Target::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown verify target `{s}`")))
    }
}

/// Criterion names plus the module groups `samplers`, `skeleton`,
/// `decorate` and `all`.
pub fn resolve(name: &str) -> Result<Vec<Target>> {
    Ok(match name {
        "all" => Target::ALL.to_vec(),
        "samplers" => vec![Target::Moments, Target::Martingales, Target::Immigration],
        "skeleton" => vec![Target::GraftLemma, Target::BtIdentity],
        "decorate" => vec![Target::Bismut, Target::Decorated],
        other => vec![other.parse()?],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub jobs: usize,
    /// Multiplies every Monte Carlo sample size and instance count.
    pub scale: f64,
    /// z-score threshold for two-estimator comparisons.
    pub z_max: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 20_240_601,
            jobs: crate::batch::default_jobs(),
            scale: 1.0,
            z_max: 3.0,
        }
    }
}

impl VerifyOptions {
    fn n(&self, base: u64) -> u64 {
        ((base as f64 * self.scale).round() as u64).max(200)
    }

    fn stream(&self, target: Target) -> RandomStream {
        RandomStream::new(self.seed).split(target.criterion() as u64)
    }
}

/// One assertion: `value` compared against `limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            passed: value < limit,
        }
    }

    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            passed: value > limit,
        }
    }

    fn failed(name: impl Into<String>, err: &Error) -> Self {
        Check {
            name: format!("{} ({err})", name.into()),
            value: f64::NAN,
            limit: f64::NAN,
            passed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub target: String,
    pub criterion: usize,
    pub seed: u64,
    pub scale: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl TargetReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs one target.
pub fn run_target(target: Target, opts: &VerifyOptions) -> TargetReport {
    let mut checks = Vec::new();
    let mut sink = |r: Result<Vec<Check>>, name: &str| match r {
        Ok(c) => checks.extend(c),
        Err(e) => checks.push(Check::failed(name, &e)),
    };
    match target {
        Target::Analytics => sink(analytics_suite(), "analytics"),
        Target::Moments => sink(moments(opts), "moments"),
        Target::Martingales => sink(martingales(opts), "martingales"),
        Target::Immigration => sink(immigration(opts), "immigration"),
        Target::GraftLemma => sink(graft_lemma(opts), "graft lemma"),
        Target::BtIdentity => sink(bt_identity(opts), "bt identity"),
        Target::Bismut => sink(bismut(opts), "bismut"),
        Target::Decorated => sink(decorated(opts), "decorated"),
        Target::Limits => sink(limits(), "limits"),
        Target::Trees => sink(trees(opts), "trees"),
        Target::Metric => sink(metric(opts), "metric"),
        Target::Determinism => sink(Ok(determinism(opts)), "determinism"),
    }
    let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
    TargetReport {
        target: target.name().into(),
        criterion: target.criterion(),
        seed: opts.seed,
        scale: opts.scale,
        passed,
        checks,
    }
}

fn mp(beta: f64, theta: f64, alpha: f64) -> Result<ModelParams> {
    ModelParams::new(beta, theta, alpha)
}

fn z_check(name: impl Into<String>, r: &TestReport, z_max: f64) -> Check {
    Check::below(name, r.z.abs(), z_max)
}

/// Relative gap scaled so that values of order one compare absolutely.
fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Tracks the worst gap of one identity across the parameter grid.
struct Worst {
    name: &'static str,
    limit: f64,
    gap: f64,
}

impl Worst {
    fn new(name: &'static str, limit: f64) -> Self {
        Worst {
            name,
            limit,
            gap: 0.0,
        }
    }

    fn push(&mut self, gap: f64) {
        // NaN gaps must fail
        if !(gap <= self.gap) {
            self.gap = if gap.is_nan() { f64::INFINITY } else { gap };
        }
    }

    fn check(&self) -> Check {
        Check::at_most(self.name, self.gap, self.limit)
    }
}

/// `ln` of the absolutely continuous mass of `P_x(Z_t in dy)`.
fn log_kernel_mass(p: &ModelParams, t: f64, x: f64) -> Result<f64> {
    let (_, ct) = c_pair(p, t);
    let mean = x * (-2.0 * p.beta * p.theta * t).exp();
    let phi = |y: f64| log_transition_density(p, t, x, y).unwrap_or(f64::NEG_INFINITY);
    log_integrate_unimodal(
        phi,
        mean.max(1e-3 / ct),
        (mean / ct).sqrt().max(1.0 / ct),
        &quad_spec(),
    )
}

fn quad_spec() -> QuadSpec {
    QuadSpec {
        abs_tol: 0.0,
        rel_tol: 1e-10,
        max_intervals: 4000,
    }
}

/// 200 parameter points: 4 betas, 5 thetas, 10 (lambda, s, t, x) tuples.
fn analytics_grid() -> Vec<(ModelParams, f64, f64, f64, f64)> {
    let tuples = [
        (0.0, 0.1, 0.2, 0.5),
        (0.3, 0.5, 0.5, 1.0),
        (1.0, 0.25, 1.0, 2.0),
        (2.0, 1.0, 0.3, 0.7),
        (5.0, 0.7, 1.5, 1.5),
        (0.05, 2.0, 0.4, 3.0),
        (10.0, 0.2, 0.8, 0.2),
        (0.7, 1.3, 1.1, 1.2),
        (3.0, 0.9, 2.0, 0.4),
        (1.5, 1.8, 0.6, 2.5),
    ];
    let mut out = Vec::with_capacity(200);
    for &beta in &[0.5, 1.0, 1.7, 3.0] {
        for &theta in &[-0.8, -0.3, 0.0, 0.4, 1.2] {
            for &(lambda, s, t, x) in &tuples {
                out.push((
                    ModelParams {
                        beta,
                        theta,
                        alpha: 0.0,
                    },
                    lambda,
                    s,
                    t,
                    x,
                ));
            }
        }
    }
    out
}

fn analytics_suite() -> Result<Vec<Check>> {
    let mut semigroup = Worst::new("semigroup u(u(l,s),t) = u(l,t+s)", 1e-12);
    let mut entrance = Worst::new("u(c_r,t) = c_{t+r}", 1e-12);
    let mut gap = Worst::new("c~ - c = 2 theta", 1e-12);
    let mut girsanov = Worst::new("girsanov identity gap", 1e-12);
    let mut kernel = Worst::new("kernel normalization (quadrature)", 1e-6);
    let mut ck = Worst::new("chapman-kolmogorov (quadrature)", 1e-6);
    for (p, lambda, s, t, x) in analytics_grid() {
        semigroup.push(rel(u(&p, u(&p, lambda, s)?, t)?, u(&p, lambda, t + s)?));
        entrance.push(rel(u(&p, c_t(&p, s)?, t)?, c_t(&p, t + s)?));
        gap.push(rel(c_tilde_t(&p, t)? - c_t(&p, t)?, 2.0 * p.theta));
        girsanov.push(
            girsanov_identity_gap(&p, lambda, t)?.abs() / (1.0 + lambda + 2.0 * p.theta.abs()),
        );
        let atom = (-x * c_t(&p, t)?).exp();
        kernel.push((atom + log_kernel_mass(&p, t, x)?.exp() - 1.0).abs());
        // P_x(Z_{s+t} in dz) = int q_s(x, y) q_t(y, z) dy at z = E_x[Z_{s+t}]
        let z = x * (-2.0 * p.beta * p.theta * (s + t)).exp();
        let direct = log_transition_density(&p, s + t, x, z)?;
        let phi = |y: f64| {
            if y <= 0.0 {
                return f64::NEG_INFINITY;
            }
            log_transition_density(&p, s, x, y).unwrap_or(f64::NEG_INFINITY)
                + log_transition_density(&p, t, y, z).unwrap_or(f64::NEG_INFINITY)
        };
        let m = x * (-2.0 * p.beta * p.theta * s).exp();
        let (_, cts) = c_pair(&p, s);
        let composed = log_integrate_unimodal(phi, m, (m / cts).sqrt().max(1e-3), &quad_spec())?;
        ck.push(rel((composed - direct).exp(), 1.0));
    }
    Ok([semigroup, entrance, gap, girsanov, kernel, ck]
        .iter()
        .map(Worst::check)
        .collect())
}

fn moments(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let n = opts.n(1_000_000);
    let st = opts.stream(Target::Moments);
    let mut out = Vec::new();
    // the negative drift is reached from |theta| through the tilt e^{2|theta| Z}
    for (case, &(beta, theta, t)) in [(1.0, 0.0, 1.0), (1.0, 0.5, 1.0), (2.0, -0.5, 0.25)]
        .iter()
        .enumerate()
    {
        let p = mp(beta, theta, 0.0)?;
        let q = p.abs_theta();
        let tilt = if theta < 0.0 { 2.0 * q.theta } else { 0.0 };
        let (cq, _) = c_pair(&q, t);
        let (c, ct) = c_pair(&p, t);
        let parts = chunked(&st.split(case as u64), n, opts.jobs, |mut r, m| {
            let mut acc = [MeanSe::new(), MeanSe::new(), MeanSe::new(), MeanSe::new()];
            for _ in 0..m {
                let z = sample_entrance_survival(&q, t, &mut r).expect("t > 0");
                let w = cq * (tilt * z).exp();
                for (k, a) in acc.iter_mut().enumerate() {
                    a.push(w * (ct * z).powi(k as i32 + 1));
                }
            }
            acc
        });
        for k in 0..4 {
            let mut m = MeanSe::new();
            parts.iter().for_each(|a| m.merge(&a[k]));
            let exact = (1..=k + 1).product::<usize>() as f64 * c;
            out.push(Check::below(
                format!("N[(c~Z)^{}] beta={beta} theta={theta} t={t} |z|", k + 1),
                m.estimate().z_against(exact).abs(),
                opts.z_max,
            ));
        }
    }
    Ok(out)
}

/// `N[M_t]` by importance sampling: `Z_t` is drawn from a flatter
/// exponential than its survival law, since `M` grows like
/// `exp(2 sqrt(alpha e^{2 beta theta t} z))` and plain draws almost never
/// reach the part of the tail that carries the mean.
fn martingale_mass(
    p: &ModelParams,
    t: f64,
    n: u64,
    st: &RandomStream,
    jobs: usize,
) -> Result<MeanSe> {
    let (c, ct) = c_pair(p, t);
    let growth = (2.0 * p.beta * p.theta * t).exp();
    let kappa = ct / (2.0 + (p.alpha * growth / ct).sqrt());
    let log_ratio = c.ln() + ct.ln() - kappa.ln();
    let xs = collect(st, n, jobs, |r| {
        let z = exponential(r, kappa);
        (log_ratio + log_martingale_m(p, t, z).expect("z > 0") - (ct - kappa) * z).exp()
    });
    Ok(xs.into_iter().collect())
}

fn martingales(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let n = opts.n(200_000);
    let st = opts.stream(Target::Martingales);
    let mut out = Vec::new();
    let t = 1.0;
    let mut case = 0;
    for &alpha in &[0.0, 1.0, 5.0] {
        for &theta in &[0.0, 0.5, -0.5] {
            let m = martingale_mass(&mp(1.0, theta, alpha)?, t, n, &st.split(case), opts.jobs)?;
            case += 1;
            out.push(Check::below(
                format!("N[M] alpha={alpha} theta={theta} |z|"),
                m.estimate().z_against(1.0).abs(),
                opts.z_max,
            ));
        }
        // N^theta[M~^{alpha,theta}] = N^{-theta}[M^{alpha,-theta}]
        let theta = 0.25;
        let m = martingale_mass(&mp(1.0, -theta, alpha)?, t, n, &st.split(case), opts.jobs)?;
        case += 1;
        out.push(Check::below(
            format!("N[M~] alpha={alpha} theta={theta} |z|"),
            m.estimate().z_against(1.0).abs(),
            opts.z_max,
        ));
    }
    Ok(out)
}

/// 2-D chi-square of `(Y, S)` against the joint density, with `Y` binned at
/// quantiles of its law given `S` and the counts `>= k_max` pooled.
fn joint_chi_square(
    draws: &[(f64, u64)],
    alpha: f64,
    s: f64,
) -> Result<crate::stats::ChiSquareResult> {
    use statrs::distribution::{ContinuousCDF, Gamma};
    const K_MAX: u64 = 4;
    const Y_BINS: usize = 5;
    let spec = QuadSpec {
        abs_tol: 1e-14,
        rel_tol: 1e-10,
        max_intervals: 2000,
    };
    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let total = draws.len() as f64;
    for k in 0..=K_MAX {
        let shape = (k + 2) as f64;
        let g = Gamma::new(shape, 1.0 / s).map_err(|e| Error::Domain(e.to_string()))?;
        let mut edges: Vec<f64> = (0..=Y_BINS)
            .map(|j| g.inverse_cdf(j as f64 / Y_BINS as f64))
            .collect();
        edges[Y_BINS] = f64::INFINITY;
        let in_bucket = |kk: u64| if k < K_MAX { kk == k } else { kk >= K_MAX };
        for j in 0..Y_BINS {
            let (lo, hi) = (edges[j], edges[j + 1]);
            observed.push(
                draws
                    .iter()
                    .filter(|&&(y, kk)| in_bucket(kk) && y >= lo && y < hi)
                    .count() as f64,
            );
            let ks: Vec<u64> = if k < K_MAX {
                vec![k]
            } else {
                (K_MAX..K_MAX + 60).collect()
            };
            let mut prob = 0.0;
            for kk in ks {
                let top = if hi.is_finite() {
                    hi
                } else {
                    lo + 80.0 * s * (kk as f64 + 2.0).sqrt() + 40.0 * s * (kk as f64 + 2.0)
                };
                let mut breaks: Vec<f64> = (0..=16)
                    .map(|i| lo + (top - lo) * i as f64 / 16.0)
                    .collect();
                breaks.dedup();
                prob += integrate_with_breaks(
                    |y| crate::samplers::zalpha_joint_density(alpha, s, y, kk),
                    &breaks,
                    &spec,
                )?;
            }
            expected.push(prob * total);
        }
    }
    Ok(chi_square(&observed, &expected))
}

fn immigration(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let n = opts.n(100_000);
    let st = opts.stream(Target::Immigration);
    let mut out = Vec::new();
    for (case, &(theta, alpha)) in [(0.0, 1.0), (0.5, 2.0)].iter().enumerate() {
        let p = mp(1.0, theta, alpha)?;
        let t = 1.0;
        let draws: Vec<ZalphaSample> = chunked(&st.split(case as u64), n, opts.jobs, |mut r, m| {
            (0..m)
                .map(|_| sample_zalpha_exact(&p, t, &mut r).expect("t > 0"))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
        // time change to the beta = 1, theta = 0 clock
        let s = time_change_map(&p, t, TimeChange::Forward)?;
        let g = p.growth(t);
        let pairs: Vec<(f64, u64)> = draws.iter().map(|d| (d.value * g, d.jumps)).collect();
        let chi = joint_chi_square(&pairs, alpha, s)?;
        out.push(Check::above(
            format!("joint (value, count) chi-square p theta={theta}"),
            chi.p_value,
            0.01,
        ));
        for &lambda in &[0.5, 2.0] {
            let m: MeanSe = draws.iter().map(|d| (-lambda * d.value).exp()).collect();
            let exact = biased_laplace_poisson(&p, t, lambda)?;
            out.push(Check::below(
                format!("Laplace theta={theta} lambda={lambda} |z|"),
                m.estimate().z_against(exact).abs(),
                opts.z_max,
            ));
        }
    }
    let p = mp(1.0, 0.0, 1.0)?;
    let ne = opts.n(100_000);
    let exact = collect(&st.split(10), ne, opts.jobs, |r| {
        sample_zalpha_exact(&p, 1.0, r).expect("t > 0").value
    });
    let euler = collect(&st.split(11), ne, opts.jobs, |r| {
        sample_zalpha_euler(&p, 1.0, 1e-4, r).expect("valid").value
    });
    out.push(Check::below(
        "Euler dt=1e-4 KS distance to exact",
        ks_two_sample(&exact, &euler).statistic,
        0.01,
    ));
    Ok(out)
}

const TREE_STATS: [Statistic; 3] = [
    Statistic::TotalLength,
    Statistic::LowestBranch,
    Statistic::MeanLeafDistance,
];

fn graft_lemma(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let n = opts.n(100_000);
    let st = opts.stream(Target::GraftLemma);
    let p = mp(1.0, 0.5, 0.0)?;
    let densities = [
        ("uniform", HeightDensity::uniform(1.0)?),
        ("moderate", HeightDensity::moderate(&p, 1.0)?),
    ];
    let mut out = Vec::new();
    let mut case = 0;
    for k in 1..=4 {
        for (dname, d) in &densities {
            for stat in TREE_STATS {
                let r = mc_test_graft_lemma(k, d, stat, n, &st.split(case), opts.jobs)?;
                case += 1;
                out.push(z_check(
                    format!("n={k} {dname} {} |z|", stat.name()),
                    &r,
                    opts.z_max,
                ));
            }
        }
    }
    Ok(out)
}

fn bt_identity(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let n = opts.n(100_000);
    let st = opts.stream(Target::BtIdentity);
    let mut out = Vec::new();
    let mut case = 0;
    for k in 2..=3 {
        for stat in TREE_STATS {
            let r = mc_test_bt_identity(k, stat, n, &st.split(case), opts.jobs)?;
            case += 1;
            out.push(z_check(
                format!("n={k} {} |z|", stat.name()),
                &r,
                opts.z_max,
            ));
        }
    }
    Ok(out)
}

fn bismut(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let n = opts.n(100_000);
    let st = opts.stream(Target::Bismut);
    let (t, s) = (1.0, 0.5);
    let mut out = Vec::new();
    let mut case = 0;
    for &theta in &[0.0, 0.5, -0.3] {
        let p = mp(1.0, theta, 0.0)?;
        for &lambda in &[0.0, 1.0] {
            let r = mc_test_bismut1(&p, t, s, lambda, n, &st.split(case), opts.jobs)?;
            case += 1;
            out.push(z_check(
                format!("theta={theta} lambda={lambda} |z|"),
                &r,
                opts.z_max,
            ));
            if lambda == 0.0 {
                let exact = (-2.0 * p.beta * p.theta * t).exp();
                out.push(Check::at_most(
                    format!("theta={theta} lambda=0 right side exact"),
                    (r.rhs - exact).abs() + r.se_rhs,
                    1e-10,
                ));
            }
        }
    }
    Ok(out)
}

fn decorated(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let n = opts.n(100_000);
    let st = opts.stream(Target::Decorated);
    let mut out = Vec::new();
    for (case, &(beta, theta, alpha, s)) in [(1.0, 0.0, 1.0, 1.0), (1.0, 0.5, 2.0, 1.0)]
        .iter()
        .enumerate()
    {
        let p = mp(beta, theta, alpha)?;
        let sub = st.split(case as u64);
        let a = collect(&sub.split(0), n, opts.jobs, |r| {
            sample_decorated_zs(&p, s, r).expect("valid")
        });
        let b = collect(&sub.split(1), n, opts.jobs, |r| {
            sample_zalpha_exact(&p, s, r).expect("valid").value
        });
        let tag = format!("beta={beta} theta={theta} alpha={alpha} s={s}");
        out.push(Check::above(
            format!("KS p against exact immigration {tag}"),
            ks_two_sample(&a, &b).p_value,
            0.01,
        ));
        for &lambda in &[0.5, 2.0] {
            let m: MeanSe = a.iter().map(|x| (-lambda * x).exp()).collect();
            let exact = biased_laplace_poisson(&p, s, lambda)?;
            out.push(Check::below(
                format!("Laplace {tag} lambda={lambda} |z|"),
                m.estimate().z_against(exact).abs(),
                opts.z_max,
            ));
        }
    }
    Ok(out)
}

/// `t_max / 64` to `t_max` in steps of `sqrt 2`.
pub fn limit_grid(t_max: f64) -> Vec<f64> {
    (0..=12)
        .map(|k| t_max / 64.0 * 2f64.powf(k as f64 / 2.0))
        .collect()
}

/// The three conditioning profiles used by the limit experiments.
pub fn regime_profiles(p: &ModelParams, alpha: f64) -> [(&'static str, AtSpec); 3] {
    let g = 2.0 * p.beta * p.theta.abs();
    if p.theta == 0.0 {
        [
            (
                "poisson",
                AtSpec::Power {
                    coef: alpha * p.beta * p.beta,
                    power: 2.0,
                },
            ),
            (
                "kesten",
                AtSpec::Power {
                    coef: 1.0,
                    power: 1.0,
                },
            ),
            ("extinction", AtSpec::ZeroAfter { t0: 0.0 }),
        ]
    } else {
        [
            (
                "poisson",
                AtSpec::Exponential {
                    coef: alpha / (4.0 * p.theta * p.theta),
                    rate: g,
                },
            ),
            (
                "kesten",
                AtSpec::Exponential {
                    coef: 1.0,
                    rate: 0.5 * g,
                },
            ),
            ("extinction", AtSpec::ZeroAfter { t0: 0.0 }),
        ]
    }
}

fn limits() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let s = 1.0;
    for &(theta, t_max) in &[(0.0, 200.0), (0.5, 20.0), (-0.5, 20.0)] {
        let p = mp(1.0, theta, 0.0)?;
        for (name, at) in regime_profiles(&p, 1.5) {
            let spec = RegimeSpec::new(at, &p)?;
            for &lambda in &[0.5, 2.0] {
                let table = convergence_experiment(&p, &spec, lambda, s, &limit_grid(t_max))?;
                let tag = format!("{name} theta={theta} lambda={lambda}");
                out.push(Check::below(
                    format!("{tag} relative error at t={t_max}"),
                    table.final_rel_err(),
                    0.01,
                ));
                out.push(Check::at_most(
                    format!("{tag} monotone-from threshold"),
                    table.monotone_from.unwrap_or(f64::INFINITY),
                    t_max,
                ));
            }
        }
    }
    Ok(out)
}

fn count_check(name: &str, failures: usize) -> Check {
    Check::at_most(name, failures as f64, 0.0)
}

fn trees(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let count = opts.n(1000);
    let mut r = opts.stream(Target::Trees);
    let (mut graft, mut ld, mut measure) = (0, 0, 0);
    for _ in 0..count {
        let n = r.random_range(1..=5);
        let t = random_root_non_branching(n, 40, &mut r);
        if t.pointed().iter().any(|&v| v != 0) {
            let split = split_n(&t);
            let ok = code_l(&t)
                .and_then(|c| graft_n(&c, &split.spine_components()))
                .is_ok_and(|g| equivalent(&g, &t));
            graft += usize::from(!ok);
        }
        let t = random_tree(n, 40, &mut r);
        let ok = code_l(&t).is_ok_and(|code| {
            let d = code_d(&code);
            d.max_abs_diff(&t.pointed_distances()) < 1e-12
                && matrix_l(&d).is_ok_and(|back| back.max_abs_diff(&code) < 1e-9)
                && from_code(&code).is_ok_and(|s| equivalent(&s, &t.span()))
        });
        ld += usize::from(!ok);
        let k = r.random_range(0..6);
        let atoms = random_atoms(k, 3.0, 8, &mut r);
        let ok = tree_from_measure(&atoms, 3.0).is_ok_and(|s| {
            let back = measure_from_tree(&s);
            let mut used = vec![false; back.len()];
            let all = back.len() == atoms.len()
                && atoms.iter().all(|a| {
                    let hit = (0..back.len()).find(|&j| {
                        !used[j]
                            && (back[j].height - a.height).abs() < 1e-12
                            && equivalent(&back[j].tree, &a.tree)
                    });
                    hit.map(|j| used[j] = true).is_some()
                });
            all && tree_from_measure(&back, 3.0).is_ok_and(|s2| equivalent(&s2.tree, &s.tree))
        });
        measure += usize::from(!ok);
    }
    Ok(vec![
        count_check("graft after split failures", graft),
        count_check("L/D round-trip failures", ld),
        count_check("Tree/measure round-trip failures", measure),
    ])
}

fn metric(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let count = opts.n(1000);
    let mut r = opts.stream(Target::Metric);
    const EPS: f64 = 1e-12;
    let (mut symmetric, mut triangle, mut span, mut trunc, mut graft) = (0, 0, 0, 0, 0);
    for _ in 0..count {
        let n = r.random_range(1..=4);
        let (a, b, c) = (
            random_tree(n, 15, &mut r),
            random_tree(n, 15, &mut r),
            random_tree(n, 15, &mut r),
        );
        let ab = gh_lower(&a, &b)?;
        symmetric += usize::from(ab != gh_lower(&b, &a)? || gh_lower(&a, &a)? != 0.0);
        triangle += usize::from(ab > gh_lower(&a, &c)? + gh_lower(&c, &b)? + EPS);
        let up = gh_upper(&a, &b)?;
        span += usize::from(gh_lower(&a.span(), &b.span())? > 4.0 * up + EPS);
        let (t, s) = (3.0 * r.random::<f64>(), r.random::<f64>());
        trunc += usize::from(gh_lower(&a.truncate(t), &b.truncate(t + s))? > 4.0 * up + s + EPS);
        let (d, e) = {
            let m = r.random_range(0..=2);
            (random_tree(m, 8, &mut r), random_tree(m, 8, &mut r))
        };
        let i = r.random_range(0..=n);
        let lhs = gh_lower(&a.graft_vertex(i, &d)?, &b.graft_vertex(i, &e)?)?;
        graft += usize::from(lhs > up + gh_upper(&d, &e)? + EPS);
    }
    let small = opts.n(100);
    let delta = 1e-3;
    let mut sandwich = 0;
    for _ in 0..small {
        let n = r.random_range(1..=2);
        let a = scale_lengths(&random_tree(n, 4, &mut r), 1e-3);
        let b = scale_lengths(&random_tree(n, 4, &mut r), 1e-3);
        let (lo, hi) = (gh_lower(&a, &b)?, gh_upper(&a, &b)?);
        let (ra, rb) = (refine(&a, delta), refine(&b, delta));
        let pinned: Vec<_> = ra
            .pointed()
            .iter()
            .copied()
            .zip(rb.pointed().iter().copied())
            .collect();
        let g = gh_finite(&distance_table(&ra), &distance_table(&rb), &pinned);
        let exact = gh_exact_small(&a, &b, delta)?;
        let ok = lo <= hi + EPS
            && g >= lo - delta
            && g <= hi + delta
            && exact.lower >= lo - EPS
            && exact.upper <= hi + EPS
            && exact.width() <= 2.0 * delta + EPS;
        sandwich += usize::from(!ok);
    }
    Ok(vec![
        count_check("gh_lower symmetry and identity failures", symmetric),
        count_check("gh_lower triangle failures", triangle),
        count_check("lower <= exact <= upper failures (delta=1e-3)", sandwich),
        count_check("span 4-Lipschitz failures", span),
        count_check("truncation continuity failures", trunc),
        count_check("grafting subadditivity failures", graft),
    ])
}

/// Reruns `target` on a single worker and compares the JSON report with
/// `first` byte for byte.
pub fn rerun_matches(target: Target, opts: &VerifyOptions, first: &str) -> bool {
    run_target(target, &VerifyOptions { jobs: 1, ..*opts }).to_json() == first
}

fn determinism(opts: &VerifyOptions) -> Vec<Check> {
    Target::ALL
        .into_iter()
        .filter(|&t| t != Target::Determinism)
        .map(|t| {
            let first = run_target(t, opts).to_json();
            let same = rerun_matches(t, opts, &first);
            Check::at_most(
                format!("{t} rerun byte-identical"),
                f64::from(u8::from(!same)),
                0.0,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for t in Target::ALL {
            assert_eq!(t.name().parse::<Target>().unwrap(), t);
        }
        assert_eq!(resolve("samplers").unwrap().len(), 3);
        assert!(resolve("nope").is_err());
        assert_eq!(Target::Determinism.criterion(), 12);
    }

    #[test]
    fn analytics_target_passes() {
        let r = run_target(Target::Analytics, &VerifyOptions::default());
        assert!(r.passed, "{}", r.to_json());
    }
}
