use csbp::analytics::ModelParams;
use csbp::batch::{chunked, default_jobs};
use csbp::skeleton::*;
use csbp::stats::{chi_square, ks_one_sample, MeanSe};
use csbp::RandomStream;

fn moderate() -> HeightDensity {
    HeightDensity::moderate(&ModelParams::new(1.0, 0.8, 1.0).unwrap(), 1.5).unwrap()
}

#[test]
fn graft_lemma_small_n() {
    let s = RandomStream::new(77);
    for (k, d) in [HeightDensity::uniform(1.0).unwrap(), moderate()]
        .iter()
        .enumerate()
    {
        for n in 1..=3 {
            for (j, stat) in [
                Statistic::One,
                Statistic::TotalLength,
                Statistic::LowestBranch,
            ]
            .iter()
            .enumerate()
            {
                let sub = s.split((100 * k + 10 * n + j) as u64);
                let r = mc_test_graft_lemma(n, d, *stat, 20_000, &sub, default_jobs()).unwrap();
                assert!(r.passes(4.0), "{n} {stat:?} {r:?}");
            }
        }
    }
}

#[test]
fn graft_lemma_constant_statistic_is_half_n_plus_one() {
    let r = mc_test_graft_lemma(
        2,
        &moderate(),
        Statistic::One,
        20_000,
        &RandomStream::new(3),
        2,
    )
    .unwrap();
    assert_eq!(r.rhs, 1.5);
    assert!(((r.lhs - 1.5) / r.se_lhs).abs() < 4.0);
}

#[test]
fn bt_identity() {
    let s = RandomStream::new(12);
    let one = mc_test_bt_identity(1, Statistic::TotalLength, 1_000, &s.split(0), 2).unwrap();
    assert_eq!(one.lhs, 1.0);
    assert_eq!(one.rhs, 1.0);
    for (k, &(n, stat)) in [(2, Statistic::LowestBranch), (3, Statistic::TotalLength)]
        .iter()
        .enumerate()
    {
        let r =
            mc_test_bt_identity(n, stat, 20_000, &s.split(k as u64 + 1), default_jobs()).unwrap();
        assert!(r.passes(4.0), "{n} {r:?}");
    }
}

#[test]
fn lowest_branch_factorisation_uniform() {
    // with the uniform density the lowest branch height of T_{n+1} is Beta(1, n)
    // and the left subtree size is uniform on {1..n}, independently
    let n = 4;
    let d = HeightDensity::uniform(1.0).unwrap();
    let draws: Vec<(f64, f64)> = chunked(
        &RandomStream::new(21),
        40_000,
        default_jobs(),
        |mut r, m| {
            (0..m)
                .map(|_| {
                    let t = sample_tn(n + 1, &d, &mut r).unwrap();
                    (
                        Statistic::LowestBranch.eval(&t),
                        Statistic::LeftLeafCount.eval(&t),
                    )
                })
                .collect::<Vec<_>>()
        },
    )
    .into_iter()
    .flatten()
    .collect();
    let heights: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let ks = ks_one_sample(&heights, |x| 1.0 - (1.0 - x).powi(n as i32));
    assert!(ks.p_value > 0.001, "{ks:?}");
    // 2 x n contingency: height below/above its median, by left count
    let median = 1.0 - 0.5f64.powf(1.0 / n as f64);
    let mut table = vec![0.0; 2 * n];
    for &(h, c) in &draws {
        table[usize::from(h > median) * n + c as usize - 1] += 1.0;
    }
    let total = draws.len() as f64;
    let expected: Vec<f64> = (0..2 * n).map(|_| total / (2 * n) as f64).collect();
    let chi = chi_square(&table, &expected);
    assert!(chi.p_value > 0.001, "{chi:?}");
}

#[test]
fn skeleton_conditional_law_matches_tn() {
    let p = ModelParams::new(1.0, 0.5, 2.0).unwrap();
    let t = 1.0;
    let f = Intensity::Immigration(p);
    let density = f.conditional_density(t).unwrap();
    let n = 3;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let mut r = RandomStream::new(5);
    while a.len() < 5_000 {
        let s = sample_frak_t(t, &f, &mut r).unwrap();
        if s.jump_count() == n - 1 {
            a.push(Statistic::MeanLeafDistance.eval(&s.tree));
        }
    }
    for _ in 0..5_000 {
        b.push(Statistic::MeanLeafDistance.eval(&sample_tn(n, &density, &mut r).unwrap()));
    }
    let ks = csbp::stats::ks_two_sample(&a, &b);
    assert!(ks.p_value > 0.001, "{ks:?}");
}

#[test]
fn skeleton_jump_count_mean() {
    let p = ModelParams::new(1.2, -0.3, 1.5).unwrap();
    let f = Intensity::Immigration(p);
    let mut m = MeanSe::new();
    let mut r = RandomStream::new(8);
    for _ in 0..20_000 {
        m.push(sample_frak_t(1.0, &f, &mut r).unwrap().jump_count() as f64);
    }
    assert!(m.estimate().z_against(f.integrated(1.0)).abs() < 4.0);
}

#[test]
fn sequence_second_length_mean() {
    // L(t_2) = 1 + (1 - V) with V uniform on [0, 1]
    let mut m = MeanSe::new();
    let mut r = RandomStream::new(2);
    for _ in 0..20_000 {
        m.push(sample_tn_sequence(2, &mut r).unwrap()[1].total_length());
    }
    assert!(m.estimate().z_against(1.5).abs() < 4.0);
}
