use csbp::analytics::{biased_laplace_poisson, c_t, c_tilde_t, u, ModelParams};
use csbp::batch::{collect, default_jobs};
use csbp::samplers::*;
use csbp::stats::{ks_one_sample, ks_two_sample, MeanSe};
use csbp::RandomStream;

fn mp(beta: f64, theta: f64, alpha: f64) -> ModelParams {
    ModelParams::new(beta, theta, alpha).unwrap()
}

fn laplace(xs: &[f64], lambda: f64) -> MeanSe {
    xs.iter().map(|x| (-lambda * x).exp()).collect()
}

#[test]
fn transition_laplace_and_atom() {
    let p = mp(1.2, 0.4, 0.0);
    let (x, t) = (1.5, 0.7);
    let s = RandomStream::new(101);
    let xs = collect(&s, 200_000, default_jobs(), |r| {
        sample_transition(&p, x, t, r).unwrap()
    });
    for &lambda in &[0.5, 2.0] {
        let est = laplace(&xs, lambda).estimate();
        let exact = (-x * u(&p, lambda, t).unwrap()).exp();
        assert!(
            est.z_against(exact).abs() < 4.0,
            "{lambda}: {est:?} vs {exact}"
        );
    }
    let zero: MeanSe = xs.iter().map(|&v| f64::from(v == 0.0)).collect();
    let atom = (-x * c_t(&p, t).unwrap()).exp();
    assert!(zero.estimate().z_against(atom).abs() < 4.0);
}

#[test]
fn entrance_moments() {
    let p = mp(1.0, -0.3, 0.0);
    let t = 0.9;
    let ct = c_tilde_t(&p, t).unwrap();
    let xs = collect(&RandomStream::new(3), 100_000, default_jobs(), |r| {
        sample_entrance_survival(&p, t, r).unwrap()
    });
    let m1: MeanSe = xs.iter().copied().collect();
    let m2: MeanSe = xs.iter().map(|x| x * x).collect();
    assert!(m1.estimate().z_against(1.0 / ct).abs() < 4.0);
    assert!(m2.estimate().z_against(2.0 / (ct * ct)).abs() < 4.0);
}

#[test]
fn path_one_step_vs_two_steps() {
    let p = mp(1.0, 0.2, 0.0);
    let s = RandomStream::new(17);
    let one = collect(&s.split(0), 100_000, default_jobs(), |r| {
        sample_csbp_path(&p, 2.0, &[1.0], r).unwrap().values[0]
    });
    let two = collect(&s.split(1), 100_000, default_jobs(), |r| {
        sample_csbp_path(&p, 2.0, &[0.4, 1.0], r).unwrap().values[1]
    });
    assert!(ks_two_sample(&one, &two).p_value > 0.001);
}

#[test]
fn immigration_count_is_poisson() {
    for &theta in &[0.0, 0.6, -0.4] {
        let p = mp(1.1, theta, 2.0);
        let h = 1.5;
        let ns = collect(&RandomStream::new(5), 100_000, default_jobs(), |r| {
            sample_immigration_jumps(&p, h, r).unwrap().len() as f64
        });
        let m: MeanSe = ns.iter().copied().collect();
        let mean = immigration_intensity(&p, h);
        assert!(m.estimate().z_against(mean).abs() < 4.0, "{theta}");
    }
}

#[test]
fn zalpha_matches_biased_laplace() {
    for &(beta, theta, alpha, t) in &[
        (1.0, 0.0, 1.0, 1.0),
        (1.0, 0.5, 2.0, 1.0),
        (2.0, -0.5, 1.0, 0.6),
    ] {
        let p = mp(beta, theta, alpha);
        let xs = collect(&RandomStream::new(8), 200_000, default_jobs(), |r| {
            sample_zalpha_exact(&p, t, r).unwrap().value
        });
        for &lambda in &[0.3, 1.0, 4.0] {
            let est = laplace(&xs, lambda).estimate();
            let exact = biased_laplace_poisson(&p, t, lambda).unwrap();
            assert!(
                est.z_against(exact).abs() < 4.0,
                "{beta} {theta} {alpha} {lambda}: {est:?} {exact}"
            );
        }
    }
}

#[test]
fn zalpha_exact_vs_euler() {
    let p = mp(1.0, 0.0, 1.0);
    let s = RandomStream::new(23);
    let exact = collect(&s.split(0), 20_000, default_jobs(), |r| {
        sample_zalpha_exact(&p, 1.0, r).unwrap().value
    });
    let euler = collect(&s.split(1), 20_000, default_jobs(), |r| {
        sample_zalpha_euler(&p, 1.0, 1e-3, r).unwrap().value
    });
    let ks = ks_two_sample(&exact, &euler);
    assert!(ks.statistic < 0.03, "{ks:?}");
}

#[test]
fn zalpha_time_changed_value_is_gamma_given_count() {
    // given k jumps, e^{2 beta theta t} Z_t is Gamma(k + 2, scale 1 / c_t)
    let p = mp(1.0, 0.5, 2.0);
    let t = 1.0;
    let s_prime = 1.0 / c_t(&p, t).unwrap();
    let g = p.growth(t);
    let draws: Vec<ZalphaSample> = csbp::batch::chunked(
        &RandomStream::new(31),
        100_000,
        default_jobs(),
        |mut r, m| {
            (0..m)
                .map(|_| sample_zalpha_exact(&p, t, &mut r).unwrap())
                .collect::<Vec<_>>()
        },
    )
    .into_iter()
    .flatten()
    .collect();
    let k1: Vec<f64> = draws
        .iter()
        .filter(|d| d.jumps == 1)
        .map(|d| d.value * g)
        .collect();
    let dist = statrs::distribution::Gamma::new(3.0, 1.0 / s_prime).unwrap();
    use statrs::distribution::ContinuousCDF;
    let ks = ks_one_sample(&k1, |y| dist.cdf(y));
    assert!(ks.p_value > 0.001, "{ks:?}");
}
