use csbp::analytics::ModelParams;
use csbp::conditioning::*;

fn mp(beta: f64, theta: f64) -> ModelParams {
    ModelParams::new(beta, theta, 0.0).unwrap()
}

fn grid(max: f64) -> Vec<f64> {
    let mut g = Vec::new();
    let mut t = max / 64.0;
    while t <= max * (1.0 + 1e-12) {
        g.push(t);
        t *= 2f64.sqrt();
    }
    g
}

fn profiles(p: &ModelParams) -> Vec<AtSpec> {
    let g = 2.0 * p.beta * p.theta.abs();
    if p.theta == 0.0 {
        vec![
            AtSpec::Power {
                coef: 1.5 * p.beta * p.beta,
                power: 2.0,
            },
            AtSpec::Power {
                coef: 1.0,
                power: 0.5,
            },
            AtSpec::ZeroAfter { t0: 0.0 },
        ]
    } else {
        vec![
            AtSpec::Exponential {
                coef: 1.5 / (4.0 * p.theta * p.theta),
                rate: g,
            },
            AtSpec::Exponential {
                coef: 1.0,
                rate: 0.5 * g,
            },
            AtSpec::ZeroAfter { t0: 0.0 },
        ]
    }
}

#[test]
fn regimes_converge_to_their_limits() {
    for &(theta, max) in &[(0.0, 200.0), (0.5, 20.0), (-0.5, 20.0)] {
        let p = mp(1.0, theta);
        for at in profiles(&p) {
            let spec = RegimeSpec::new(at, &p).unwrap();
            for &lambda in &[0.5, 2.0] {
                let table = convergence_experiment(&p, &spec, lambda, 1.0, &grid(max)).unwrap();
                println!(
                    "{theta} {:?} {lambda}: {:e} from {:?}",
                    spec.regime,
                    table.final_rel_err(),
                    table.monotone_from
                );
                assert!(
                    table.final_rel_err() < 0.01,
                    "{theta} {spec:?} {lambda}\n{}",
                    table.to_csv()
                );
                assert!(table.monotone_from.is_some());
            }
        }
    }
}

#[test]
fn conditioning_does_not_see_the_sign_of_theta() {
    // the tilt between the two signs only involves the conditioned value
    for &(t, a) in &[(2.0, 5.0), (6.0, 80.0)] {
        let p = mp(1.2, -0.5);
        for &lambda in &[0.0, 0.7, 3.0] {
            let x = conditional_laplace_at(&p, lambda, 0.8, t, a).unwrap();
            let y = conditional_laplace_at(&p.mirrored(), lambda, 0.8, t, a).unwrap();
            assert!((x - y).abs() < 1e-8, "{x} {y}");
        }
    }
}

#[test]
fn poisson_limit_is_decreasing_from_one() {
    let p = mp(1.0, 0.3);
    let mut prev = limit_value(&p, Regime::Poisson { alpha: 2.0 }, 0.0, 1.0).unwrap();
    assert!((prev - 1.0).abs() < 1e-12);
    for k in 1..50 {
        let v = limit_value(&p, Regime::Poisson { alpha: 2.0 }, k as f64 * 0.1, 1.0).unwrap();
        assert!(v < prev);
        prev = v;
    }
}

#[test]
fn extinction_functional_closed_form() {
    let p = mp(1.0, -0.5);
    let (s, t, lambda) = (1.0, 3.0, 2.0);
    let v = extinction_functional(&p, lambda, s, t).unwrap();
    let (cs, cts) = (
        csbp::analytics::c_t(&p, s).unwrap(),
        csbp::analytics::c_tilde_t(&p, s).unwrap(),
    );
    let ct = csbp::analytics::c_t(&p, t).unwrap();
    let exact = cs * cts * (1.0 / (cts + ct) - 1.0 / (cts + ct + lambda));
    assert!((v - exact).abs() < 1e-12 * exact);
}

#[test]
fn regression_point() {
    let v = conditional_laplace_at(&mp(1.0, 0.0), 1.0, 1.0, 10.0, 100.0).unwrap();
    assert!(v.is_finite() && v > 0.0 && v < 1.0);
}
