//! Kesten trees and Poisson-decorated backbones, represented through level
//! masses and finite stubs rather than full excursion geometry.
//!
//! Every backbone lineage carries excursions at rate `2 beta` per unit
//! length. Those attached at height `h` that reach level `s` have rate
//! `2 beta c_{s-h}` and mass `Exp(c~_{s-h})` there. On an edge reaching `s`
//! itself the infinitely many small excursions are summed exactly as a
//! `Gamma(2, c~_{s-a})` variable.

use crate::analytics::{c_inverse, c_t, c_tilde_t, ModelParams};
use crate::batch::chunked;
use crate::error::{domain, Result};
use crate::rng::RandomStream;
use crate::samplers::{
    poisson, sample_entrance_survival, sample_transition, strip_atoms, strip_lump,
};
use crate::skeleton::{sample_frak_t, sample_tn, HeightDensity, Intensity};
use crate::stats::{MeanSe, TestReport};
use crate::tree_core::{PointedTree, VertexId};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

/// Fraction of `[0, s]` below `s` whose Kesten excursions are summed as one
/// Gamma variable instead of being listed.
const KESTEN_LUMP: f64 = 0.1;

fn check_positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        domain(format!("{what} must be positive and finite, got {x}"))
    }
}

/// Mass at level `s` of the excursions grafted on the backbone edges below `s`.
pub fn backbone_level_mass(
    p: &ModelParams,
    backbone: &PointedTree,
    s: f64,
    rng: &mut RandomStream,
) -> f64 {
    let mut total = 0.0;
    for v in 1..backbone.vertex_count() {
        let a = backbone.height(backbone.parent(v));
        let b = backbone.height(v);
        if a >= s {
            continue;
        }
        total += if b >= s {
            strip_lump(p, 1.0, s - a, rng)
        } else {
            strip_atoms(p, 1.0, s - b, s - a, rng, |_, _| {})
        };
    }
    total
}

/// `Z_s` of a Kesten tree: explicit excursions attached below
/// `(1 - KESTEN_LUMP) s`, the rest as a Gamma lump.
pub fn sample_kesten_zs(p: &ModelParams, s: f64, rng: &mut RandomStream) -> Result<f64> {
    check_positive(s, "level")?;
    let eps = KESTEN_LUMP * s;
    Ok(strip_atoms(p, 1.0, eps, s, rng, |_, _| {}) + strip_lump(p, 1.0, eps, rng))
}

/// `Z_s` of the decorated backbone `T^{alpha, theta}`: the skeleton driven by
/// `alpha beta e^{2 beta theta t}` with Kesten decorations on every lineage.
pub fn sample_decorated_zs(p: &ModelParams, s: f64, rng: &mut RandomStream) -> Result<f64> {
    check_positive(s, "level")?;
    let skeleton = sample_frak_t(s, &Intensity::Immigration(*p), rng)?;
    Ok(backbone_level_mass(p, &skeleton.tree, s, rng))
}

/// One decoration of a finite backbone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecorationRecord {
    /// Backbone vertex whose parent edge carries the decoration.
    pub branch: VertexId,
    pub attach_height: f64,
    /// Extinction time of the excursion, infinite when it survives forever.
    pub survival_height: f64,
    /// `(absolute level, mass)` for the requested levels above
    /// `attach_height + epsilon`.
    pub local_times: Vec<(f64, f64)>,
}

impl DecorationRecord {
    pub fn mass_at(&self, level: f64) -> Option<f64> {
        self.local_times
            .iter()
            .find(|(l, _)| *l == level)
            .map(|&(_, m)| m)
    }
}

/// A backbone with the decorations whose survival height is at least `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoratedBackbone {
    pub backbone: PointedTree,
    pub decorations: Vec<DecorationRecord>,
    pub horizon: f64,
    pub epsilon: f64,
}

impl DecoratedBackbone {
    /// The backbone with every decoration drawn as a segment of its survival
    /// height, cut at the horizon.
    pub fn stub_tree(&self) -> PointedTree {
        let mut t = self.backbone.clone();
        let mut order: Vec<&DecorationRecord> = self.decorations.iter().collect();
        order.sort_by(|a, b| a.attach_height.total_cmp(&b.attach_height));
        for d in order {
            // ascending heights keep every later point on the edge above `branch`
            let x = t.insert_point(d.branch, d.attach_height);
            let top = (d.attach_height + d.survival_height).min(self.horizon);
            t.add_child_at_height(x, top);
        }
        t
    }

    /// Points of the stub tree at exactly `level`, counted by edges crossing it.
    pub fn level_count(&self, level: f64) -> usize {
        let t = self.stub_tree();
        (1..t.vertex_count())
            .filter(|&v| t.height(t.parent(v)) < level && t.height(v) >= level)
            .count()
    }

    /// Sum of the recorded masses at `level`.
    pub fn mass_at(&self, level: f64) -> f64 {
        self.decorations
            .iter()
            .filter_map(|d| d.mass_at(level))
            .sum()
    }

    /// Decorations as CSV with one row per recorded local time.
    pub fn decorations_csv(&self) -> String {
        let mut out = String::from("branch,attach_height,survival_height,level,mass\n");
        for d in &self.decorations {
            if d.local_times.is_empty() {
                writeln!(
                    out,
                    "{},{},{},,",
                    d.branch, d.attach_height, d.survival_height
                )
                .expect("string write");
            }
            for (l, m) in &d.local_times {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    d.branch, d.attach_height, d.survival_height, l, m
                )
                .expect("string write");
            }
        }
        out
    }
}

/// Excursion conditioned to survive `epsilon`: its masses at the given
/// relative levels and its extinction time.
fn sample_excursion(
    p: &ModelParams,
    epsilon: f64,
    rel_levels: &[f64],
    rng: &mut RandomStream,
) -> Result<(f64, Vec<f64>)> {
    let mut z = sample_entrance_survival(p, epsilon, rng)?;
    let mut at = epsilon;
    let mut masses = Vec::with_capacity(rel_levels.len());
    let mut zeta = None;
    for &r in rel_levels {
        if zeta.is_some() {
            masses.push(0.0);
            continue;
        }
        let next = sample_transition(p, z, r - at, rng)?;
        if next == 0.0 {
            // extinct inside (at, r]: P(extinct by at + x | extinct by r) = e^{-z (c_x - c_{r-at})}
            let cd = c_t(p, r - at)?;
            let w = cd - rng.open01().ln() / z;
            zeta = Some(at + c_inverse(p, w)?.min(r - at));
        }
        masses.push(next);
        z = next;
        at = r;
    }
    let zeta = match zeta {
        Some(x) => x,
        None => {
            let w = -rng.open01().ln() / z;
            at + c_inverse(p, w).unwrap_or(f64::INFINITY)
        }
    };
    Ok((zeta, masses))
}

/// A backbone on `[0, t]` (a bare spine when `alpha = 0`, the skeleton
/// otherwise) with the decorations of survival height `>= epsilon`. Their
/// rate is `2 beta c_epsilon` per unit length and masses are recorded at the
/// requested levels.
pub fn build_finite_decorated_tree(
    p: &ModelParams,
    t: f64,
    epsilon: f64,
    levels: &[f64],
    rng: &mut RandomStream,
) -> Result<DecoratedBackbone> {
    check_positive(t, "horizon")?;
    check_positive(epsilon, "epsilon")?;
    let backbone = if p.alpha == 0.0 {
        PointedTree::segment(t)
    } else {
        sample_frak_t(t, &Intensity::Immigration(*p), rng)?.tree
    };
    let rate = 2.0 * p.beta * c_t(p, epsilon)?;
    let mut levels = levels.to_vec();
    levels.sort_by(f64::total_cmp);
    let mut decorations = Vec::new();
    for v in 1..backbone.vertex_count() {
        let a = backbone.height(backbone.parent(v));
        let len = backbone.edge_len(v);
        let k = poisson(rng, rate * len);
        let mut heights: Vec<f64> = (0..k).map(|_| a + rng.random::<f64>() * len).collect();
        heights.sort_by(f64::total_cmp);
        for h in heights {
            let own: Vec<f64> = levels
                .iter()
                .copied()
                .filter(|&l| l - h > epsilon)
                .collect();
            let rel: Vec<f64> = own.iter().map(|l| l - h).collect();
            let (zeta, masses) = sample_excursion(p, epsilon, &rel, rng)?;
            decorations.push(DecorationRecord {
                branch: v,
                attach_height: h,
                survival_height: zeta,
                local_times: own.into_iter().zip(masses).collect(),
            });
        }
    }
    Ok(DecoratedBackbone {
        backbone,
        decorations,
        horizon: t,
        epsilon,
    })
}

/// Both sides of the `n`-leaf Bismut identity for `F = e^{-lambda Z_s}`:
/// `N[Z_t^n e^{-lambda Z_s}] = n! c~_t^{1-n} e^{-2 beta theta t} E[e^{-lambda Z_s(Graft_n(T_n, T*))}]`.
/// For `theta < 0` the left side is computed under `N^{|theta|}` with the
/// weight `e^{2 |theta| Z_t}`.
#[allow(clippy::too_many_arguments)]
pub fn mc_test_bismut(
    p: &ModelParams,
    n: usize,
    t: f64,
    s: f64,
    lambda: f64,
    n_samples: u64,
    stream: &RandomStream,
    jobs: usize,
) -> Result<TestReport> {
    check_positive(t, "t")?;
    if !(s > 0.0 && s < t) {
        return domain(format!("need 0 < s < t, got s = {s}, t = {t}"));
    }
    if n == 0 || !(lambda >= 0.0) {
        return domain("need n >= 1 and lambda >= 0");
    }
    let q = p.abs_theta();
    let tilt = if p.theta < 0.0 { 2.0 * q.theta } else { 0.0 };
    let cs = c_t(&q, s)?;
    let ct_t = c_tilde_t(p, t)?;
    let ln_fact = crate::special::ln_factorial(n as u64);
    let factor = (ln_fact + (1.0 - n as f64) * ct_t.ln() - 2.0 * p.beta * p.theta * t).exp();
    let density = HeightDensity::moderate(p, t)?;
    let parts = chunked(stream, n_samples, jobs, |mut r, m| {
        let (mut a, mut b) = (MeanSe::new(), MeanSe::new());
        for _ in 0..m {
            let zs = sample_entrance_survival(&q, s, &mut r).expect("validated");
            let zt = sample_transition(&q, zs, t - s, &mut r).expect("validated");
            a.push(cs * (tilt * zt).exp() * zt.powi(n as i32) * (-lambda * zs).exp());
            let mass = if n == 1 {
                sample_kesten_zs(p, s, &mut r).expect("validated")
            } else {
                let backbone = sample_tn(n, &density, &mut r).expect("validated");
                backbone_level_mass(p, &backbone, s, &mut r)
            };
            b.push(factor * (-lambda * mass).exp());
        }
        (a, b)
    });
    let (mut lhs, mut rhs) = (MeanSe::new(), MeanSe::new());
    for (a, b) in &parts {
        lhs.merge(a);
        rhs.merge(b);
    }
    Ok(TestReport::new(
        lhs.estimate(),
        rhs.estimate(),
        stream.seed(),
    ))
}

/// The single-leaf case of [`mc_test_bismut`].
pub fn mc_test_bismut1(
    p: &ModelParams,
    t: f64,
    s: f64,
    lambda: f64,
    n_samples: u64,
    stream: &RandomStream,
    jobs: usize,
) -> Result<TestReport> {
    mc_test_bismut(p, 1, t, s, lambda, n_samples, stream, jobs)
}
