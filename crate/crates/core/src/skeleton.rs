//! Random discrete trees built by successive grafts: `T_n` under a height
//! density, the Poisson-driven growing skeleton and the length-uniform
//! sequence `t_n`, with Monte Carlo checks of their distributional identities.

use crate::analytics::ModelParams;
use crate::batch::chunked;
use crate::error::{domain, Result};
use crate::rng::RandomStream;
use crate::samplers::{exponential, sample_immigration_jumps};
use crate::stats::{MeanSe, TestReport};
use crate::tree_core::{HeightLaw, PointedTree, Side, TreePoint, VertexId};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A probability density on `[0, t]` with closed-form distribution function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HeightDensity {
    Uniform {
        t: f64,
    },
    /// `beta c~_t e^{-2 beta theta (t - s)}` on `[0, t]`.
    Moderate {
        beta: f64,
        theta: f64,
        t: f64,
    },
    /// Piecewise constant: `weights[k]` on `[knots[k], knots[k + 1]]`.
    Table {
        knots: Vec<f64>,
        weights: Vec<f64>,
    },
}

impl HeightDensity {
    pub fn uniform(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return domain(format!("horizon must be positive, got {t}"));
        }
        Ok(HeightDensity::Uniform { t })
    }

    pub fn moderate(p: &ModelParams, t: f64) -> Result<Self> {
        Self::uniform(t)?;
        Ok(HeightDensity::Moderate {
            beta: p.beta,
            theta: p.theta,
            t,
        })
    }

    /// Normalises the table so it integrates to one.
    pub fn table(knots: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if knots.len() != weights.len() + 1 || weights.is_empty() {
            return domain("table needs one more knot than weights");
        }
        if knots[0] != 0.0 || knots.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("knots must increase from 0");
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return domain("table weights must be positive");
        }
        let mass: f64 = weights
            .iter()
            .zip(knots.windows(2))
            .map(|(w, k)| w * (k[1] - k[0]))
            .sum();
        let weights = weights.into_iter().map(|w| w / mass).collect();
        Ok(HeightDensity::Table { knots, weights })
    }

    /// Horizon `t` of the support.
    pub fn horizon(&self) -> f64 {
        match self {
            HeightDensity::Uniform { t } | HeightDensity::Moderate { t, .. } => *t,
            HeightDensity::Table { knots, .. } => *knots.last().expect("validated"),
        }
    }

    fn rate(&self) -> Option<f64> {
        match self {
            HeightDensity::Moderate { beta, theta, .. } if *theta != 0.0 => {
                Some(2.0 * beta * theta)
            }
            _ => None,
        }
    }

    pub fn pdf(&self, s: f64) -> f64 {
        let t = self.horizon();
        if !(0.0..=t).contains(&s) {
            return 0.0;
        }
        match (self, self.rate()) {
            (HeightDensity::Table { knots, weights }, _) => {
                let k = knots.partition_point(|&x| x <= s).clamp(1, weights.len());
                weights[k - 1]
            }
            (_, Some(r)) => r * (r * (s - t)).exp() / -(-r * t).exp_m1(),
            _ => 1.0 / t,
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        let t = self.horizon();
        let s = s.clamp(0.0, t);
        match (self, self.rate()) {
            (HeightDensity::Table { knots, weights }, _) => {
                let mut acc = 0.0;
                for (w, k) in weights.iter().zip(knots.windows(2)) {
                    if s <= k[0] {
                        break;
                    }
                    acc += w * (s.min(k[1]) - k[0]);
                }
                acc.min(1.0)
            }
            (_, Some(r)) => (r * s).exp_m1() / (r * t).exp_m1(),
            _ => s / t,
        }
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let t = self.horizon();
        let u = u.clamp(0.0, 1.0);
        match (self, self.rate()) {
            (HeightDensity::Table { knots, weights }, _) => {
                let mut acc = 0.0;
                for (w, k) in weights.iter().zip(knots.windows(2)) {
                    let m = w * (k[1] - k[0]);
                    if u <= acc + m {
                        return (k[0] + (u - acc) / w).min(k[1]);
                    }
                    acc += m;
                }
                t
            }
            (_, Some(r)) => ((u * (r * t).exp_m1()).ln_1p() / r).clamp(0.0, t),
            _ => u * t,
        }
    }

    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        self.inverse_cdf(rng.random())
    }
}

impl HeightLaw for HeightDensity {
    fn cumulative(&self, h: f64) -> f64 {
        self.cdf(h)
    }
    fn inverse(&self, w: f64) -> f64 {
        self.inverse_cdf(w)
    }
}

/// Intensity `f_int` of the Poisson process driving the skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Intensity {
    Constant(f64),
    /// `alpha beta e^{2 beta theta t}`.
    Immigration(ModelParams),
}

impl Intensity {
    /// `int_0^t f_int`.
    pub fn integrated(&self, t: f64) -> f64 {
        match self {
            Intensity::Constant(r) => r * t,
            Intensity::Immigration(p) => crate::samplers::immigration_intensity(p, t),
        }
    }

    /// Increasing jump times in `[0, horizon]`.
    pub fn jumps(&self, horizon: f64, rng: &mut RandomStream) -> Result<Vec<f64>> {
        match self {
            Intensity::Constant(r) => {
                if !(*r >= 0.0) {
                    return domain("intensity must be non-negative");
                }
                let mut out = Vec::new();
                if *r == 0.0 {
                    return Ok(out);
                }
                let mut s = 0.0;
                loop {
                    s += exponential(rng, *r);
                    if s > horizon {
                        return Ok(out);
                    }
                    out.push(s);
                }
            }
            Intensity::Immigration(p) => sample_immigration_jumps(p, horizon, rng),
        }
    }

    /// Density of a jump time given that it falls in `[0, t]`.
    pub fn conditional_density(&self, t: f64) -> Result<HeightDensity> {
        match self {
            Intensity::Constant(_) => HeightDensity::uniform(t),
            Intensity::Immigration(p) => HeightDensity::moderate(p, t),
        }
    }
}

fn side(rng: &mut RandomStream) -> Side {
    if rng.random::<bool>() {
        Side::Left
    } else {
        Side::Right
    }
}

/// `T_n`: starting from `[0, t]`, the `k`-th order statistic of `n - 1`
/// density draws becomes a branch point on the path to a uniform leaf,
/// carrying a new leaf at height `t` on a uniform side.
pub fn sample_tn(n: usize, density: &HeightDensity, rng: &mut RandomStream) -> Result<PointedTree> {
    if n == 0 {
        return domain("T_n needs n >= 1");
    }
    let t = density.horizon();
    let mut xi: Vec<f64> = (1..n).map(|_| density.sample(rng)).collect();
    xi.sort_by(f64::total_cmp);
    let mut tree = PointedTree::segment(t);
    for (k, &h) in xi.iter().enumerate() {
        let i = rng.random_range(1..=k + 1);
        let s = side(rng);
        tree = tree.graft_branch_to(i, h, s, t)?;
    }
    Ok(tree)
}

/// A sample of the growing skeleton at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub tree: PointedTree,
    pub jumps: Vec<f64>,
}

impl Skeleton {
    /// `N_t`.
    pub fn jump_count(&self) -> usize {
        self.jumps.len()
    }
}

/// The skeleton `frak T_t`: all lineages grow and at each jump time a
/// uniform lineage splits in two, the new one on a uniform side.
pub fn sample_frak_t(t: f64, intensity: &Intensity, rng: &mut RandomStream) -> Result<Skeleton> {
    if !(t > 0.0) {
        return domain(format!("horizon must be positive, got {t}"));
    }
    let jumps = intensity.jumps(t, rng)?;
    let mut tree = PointedTree::root_only();
    tree.push_pointed(0);
    for (n, &xi) in jumps.iter().enumerate() {
        tree.extend_pointed_to(xi);
        let k = rng.random_range(1..=n + 1);
        let v = tree.pointed()[k];
        let at = if side(rng) == Side::Left { k } else { k + 1 };
        let mut pointed = tree.pointed().to_vec();
        pointed.insert(at, v);
        tree.set_pointed(pointed)?;
    }
    tree.extend_pointed_to(t);
    Ok(Skeleton { tree, jumps })
}

/// Pointed indices whose vertex lies below `x`.
fn pointed_below(t: &PointedTree, x: VertexId) -> impl Iterator<Item = usize> + '_ {
    (1..t.pointed().len()).filter(move |&i| t.is_ancestor(x, t.pointed()[i]))
}

/// `T ⊛^side_x [0, top - H(x)]` for a point of a tree whose pointed
/// vertices are its leaves in planar order.
pub fn graft_at_point(t: &PointedTree, x: TreePoint, side: Side, top: f64) -> Result<PointedTree> {
    let below = pointed_below(t, x.vertex);
    let i = match side {
        Side::Left => below.min(),
        Side::Right => below.max(),
    };
    match i {
        Some(i) => t.graft_branch_to(i, x.height, side, top),
        None => domain("graft point has no pointed vertex below it"),
    }
}

/// The sequence `t_1, ..., t_n` of height-1 trees grown by length-uniform
/// grafts.
pub fn sample_tn_sequence(n: usize, rng: &mut RandomStream) -> Result<Vec<PointedTree>> {
    if n == 0 {
        return domain("the sequence needs n >= 1");
    }
    let mut out = vec![PointedTree::segment(1.0)];
    while out.len() < n {
        let last = out.last().expect("nonempty");
        let x = last.sample_length_point(&crate::tree_core::LengthLaw, rng)?;
        let s = side(rng);
        out.push(graft_at_point(last, x, s, 1.0)?);
    }
    Ok(out)
}

/// Bounded tree statistics used as test functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    One,
    TotalLength,
    /// Height of the lowest vertex with at least two children (the top
    /// height when there is none).
    LowestBranch,
    /// Pointed vertices in the leftmost subtree at the lowest branch point.
    LeftLeafCount,
    /// Mean distance between pairs of pointed vertices.
    MeanLeafDistance,
}

impl Statistic {
    pub const ALL: [Statistic; 5] = [
        Statistic::One,
        Statistic::TotalLength,
        Statistic::LowestBranch,
        Statistic::LeftLeafCount,
        Statistic::MeanLeafDistance,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::One => "one",
            Statistic::TotalLength => "total-length",
            Statistic::LowestBranch => "lowest-branch",
            Statistic::LeftLeafCount => "left-leaf-count",
            Statistic::MeanLeafDistance => "mean-leaf-distance",
        }
    }

    pub fn eval(&self, t: &PointedTree) -> f64 {
        match self {
            Statistic::One => 1.0,
            Statistic::TotalLength => t.total_length(),
            Statistic::LowestBranch => lowest_branch(t).map_or(t.max_height(), |v| t.height(v)),
            Statistic::LeftLeafCount => match lowest_branch(t) {
                Some(v) => pointed_below(t, t.children(v)[0]).count() as f64,
                None => t.n_pointed() as f64,
            },
            Statistic::MeanLeafDistance => {
                let d = t.pointed_distances();
                let n = d.size();
                if n < 3 {
                    return 0.0;
                }
                let mut acc = 0.0;
                for i in 1..n {
                    for j in (i + 1)..n {
                        acc += d.get(i, j);
                    }
                }
                acc / ((n - 1) * (n - 2) / 2) as f64
            }
        }
    }
}

/// The lowest vertex with two or more children.
pub fn lowest_branch(t: &PointedTree) -> Option<VertexId> {
    let mut v = 0;
    loop {
        match t.children(v).len() {
            0 => return None,
            1 => v = t.children(v)[0],
            _ => return Some(v),
        }
    }
}

fn two_sided<F>(stream: &RandomStream, n_samples: u64, jobs: usize, draw: F) -> (MeanSe, MeanSe)
where
    F: Fn(&mut RandomStream) -> Result<(f64, f64)> + Sync,
{
    let parts = chunked(stream, n_samples, jobs, |mut r, m| {
        let (mut a, mut b) = (MeanSe::new(), MeanSe::new());
        for _ in 0..m {
            let (x, y) = draw(&mut r).expect("sampler arguments validated up front");
            a.push(x);
            b.push(y);
        }
        (a, b)
    });
    parts
        .into_iter()
        .fold((MeanSe::new(), MeanSe::new()), |(mut a, mut b), (x, y)| {
            a.merge(&x);
            b.merge(&y);
            (a, b)
        })
}

/// Both sides of
/// `E[int_{T_n} L(dx) f(H(x)) G(T_n ⊛_x [0, t - H(x)])] = (n + 1)/2 E[G(T_{n+1})]`.
pub fn mc_test_graft_lemma(
    n: usize,
    density: &HeightDensity,
    stat: Statistic,
    n_samples: u64,
    stream: &RandomStream,
    jobs: usize,
) -> Result<TestReport> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let t = density.horizon();
    let (lhs, rhs) = two_sided(stream, n_samples, jobs, |r| {
        let tree = sample_tn(n, density, r)?;
        let weight: f64 = (1..tree.vertex_count())
            .map(|v| density.cdf(tree.height(v)) - density.cdf(tree.height(tree.parent(v))))
            .sum();
        let x = tree.sample_length_point(density, r)?;
        let s = side(r);
        let g = graft_at_point(&tree, x, s, t)?;
        let left = weight * stat.eval(&g);
        let right = 0.5 * (n + 1) as f64 * stat.eval(&sample_tn(n + 1, density, r)?);
        Ok((left, right))
    });
    Ok(TestReport::new(
        lhs.estimate(),
        rhs.estimate(),
        stream.seed(),
    ))
}

fn ln_factorial(n: usize) -> f64 {
    crate::special::ln_factorial(n as u64)
}

/// Both sides of
/// `E[G(frak T_1) | N_1 = n - 1] = 2^{n-1}/n! E[G(t_n) prod_{k<n} L(t_k)]`
/// with unit intensity.
pub fn mc_test_bt_identity(
    n: usize,
    stat: Statistic,
    n_samples: u64,
    stream: &RandomStream,
    jobs: usize,
) -> Result<TestReport> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let scale = ((n as f64 - 1.0) * std::f64::consts::LN_2 - ln_factorial(n)).exp();
    let (lhs, rhs) = two_sided(stream, n_samples, jobs, |r| {
        let tree = loop {
            let s = sample_frak_t(1.0, &Intensity::Constant(1.0), r)?;
            if s.jump_count() == n - 1 {
                break s.tree;
            }
        };
        let seq = sample_tn_sequence(n, r)?;
        let weight: f64 = seq[..n - 1].iter().map(PointedTree::total_length).product();
        Ok((stat.eval(&tree), scale * weight * stat.eval(&seq[n - 1])))
    });
    Ok(TestReport::new(
        lhs.estimate(),
        rhs.estimate(),
        stream.seed(),
    ))
}
