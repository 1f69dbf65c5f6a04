//! Conditioning on the late population size `Z_{t+s} = a` at the level of
//! Laplace functionals of `Z_s`, computed through densities so that the
//! convergence curves carry no Monte Carlo noise.

use crate::analytics::{biased_laplace_poisson, c_pair, u, ModelParams};
use crate::error::{domain, Error, Result};
use crate::quad::{integrate_exp_tail, log_integrate_unimodal, QuadSpec};
use crate::special::log_series;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Where the conditioning value `a_t` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AtSpec {
    /// `a_t = 0` for `t >= t0` and `1` before.
    ZeroAfter { t0: f64 },
    /// Knots `(t, a_t)` with increasing `t`, linear in between; beyond the
    /// last knot the ratio to the moderate scale is held fixed.
    Table { knots: Vec<(f64, f64)> },
    /// `a_t = coef t^power`.
    Power { coef: f64, power: f64 },
    /// `a_t = coef e^{rate t}`.
    Exponential { coef: f64, rate: f64 },
}

/// Limiting behaviour of the conditioned process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    Extinction,
    Kesten,
    Poisson {
        alpha: f64,
    },
    /// Faster than the moderate scale; no limit is known.
    High,
}

/// A conditioning profile together with its classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub at: AtSpec,
    pub regime: Regime,
}

impl RegimeSpec {
    pub fn new(at: AtSpec, p: &ModelParams) -> Result<Self> {
        let regime = classify(&at, p)?;
        Ok(RegimeSpec { at, regime })
    }
}

/// `a_t ~ alpha` times this scale is the moderate regime.
fn moderate_scale(p: &ModelParams, t: f64) -> f64 {
    if p.theta == 0.0 {
        p.beta * p.beta * t * t
    } else {
        (2.0 * p.beta * p.theta.abs() * t).exp() / (4.0 * p.theta * p.theta)
    }
}

const SAME_RATE: f64 = 1e-12;

impl AtSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            AtSpec::ZeroAfter { t0 } => t0.is_finite() && *t0 >= 0.0,
            AtSpec::Table { knots } => {
                !knots.is_empty()
                    && knots
                        .iter()
                        .all(|&(t, a)| t.is_finite() && a >= 0.0 && a.is_finite())
                    && knots.windows(2).all(|w| w[1].0 > w[0].0)
            }
            AtSpec::Power { coef, power } => *coef > 0.0 && coef.is_finite() && power.is_finite(),
            AtSpec::Exponential { coef, rate } => {
                *coef > 0.0 && coef.is_finite() && rate.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            domain(format!("invalid conditioning profile {self:?}"))
        }
    }

    /// `a_t`.
    pub fn value(&self, p: &ModelParams, t: f64) -> f64 {
        match self {
            AtSpec::ZeroAfter { t0 } => {
                if t >= *t0 {
                    0.0
                } else {
                    1.0
                }
            }
            AtSpec::Table { knots } => {
                let (t_last, a_last) = knots[knots.len() - 1];
                if t >= t_last {
                    return a_last * moderate_scale(p, t) / moderate_scale(p, t_last);
                }
                if t <= knots[0].0 {
                    return knots[0].1;
                }
                let i = knots.partition_point(|k| k.0 <= t);
                let ((t0, a0), (t1, a1)) = (knots[i - 1], knots[i]);
                a0 + (a1 - a0) * (t - t0) / (t1 - t0)
            }
            AtSpec::Power { coef, power } => coef * t.powf(*power),
            AtSpec::Exponential { coef, rate } => coef * (rate * t).exp(),
        }
    }
}

/// Regime of `a_t` under the growth conditions of the local limit theorems.
pub fn classify(at: &AtSpec, p: &ModelParams) -> Result<Regime> {
    at.validate()?;
    let g = 2.0 * p.beta * p.theta.abs();
    Ok(match at {
        AtSpec::ZeroAfter { .. } => Regime::Extinction,
        AtSpec::Power { coef, power } => {
            if p.theta != 0.0 || *power < 2.0 {
                Regime::Kesten
            } else if *power == 2.0 {
                Regime::Poisson {
                    alpha: coef / (p.beta * p.beta),
                }
            } else {
                Regime::High
            }
        }
        AtSpec::Exponential { coef, rate } => {
            if p.theta == 0.0 {
                if *rate > 0.0 {
                    Regime::High
                } else {
                    Regime::Kesten
                }
            } else if (rate - g).abs() <= SAME_RATE * g {
                Regime::Poisson {
                    alpha: coef * 4.0 * p.theta * p.theta,
                }
            } else if *rate < g {
                Regime::Kesten
            } else {
                Regime::High
            }
        }
        AtSpec::Table { knots } => {
            // the tail is read off the last two knots
            let (t1, a1) = knots[knots.len() - 1];
            if a1 == 0.0 {
                return Ok(Regime::Extinction);
            }
            if knots.len() < 2 {
                return Err(Error::Domain(
                    "a table needs two knots to be classified".into(),
                ));
            }
            let (t0, a0) = knots[knots.len() - 2];
            let r1 = a1 / moderate_scale(p, t1);
            let r0 = a0 / moderate_scale(p, t0);
            if (r1 / r0).ln().abs() < 0.05 {
                Regime::Poisson { alpha: r1 }
            } else if r1 < r0 {
                Regime::Kesten
            } else {
                Regime::High
            }
        }
    })
}

/// Closed-form limit of the conditioned Laplace functional. In the
/// extinction regime the functional is `1 - e^{-lambda Z_s}`.
pub fn limit_value(p: &ModelParams, regime: Regime, lambda: f64, s: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return domain(format!("lambda must be non-negative, got {lambda}"));
    }
    let q = p.abs_theta();
    match regime {
        Regime::Extinction => u(&q, lambda, s),
        Regime::Kesten => biased_laplace_poisson(&q.with_alpha(0.0), s, lambda),
        Regime::Poisson { alpha } => biased_laplace_poisson(&q.with_alpha(alpha), s, lambda),
        Regime::High => Err(Error::Unsupported(
            "the high regime has no known limit (open problem)".into(),
        )),
    }
}

/// `c~_t - c~_{t+s}` without cancellation.
fn c_tilde_drop(p: &ModelParams, t: f64, s: f64) -> f64 {
    if p.theta == 0.0 {
        return s / (p.beta * t * (t + s));
    }
    let g = 2.0 * p.beta * p.theta;
    2.0 * p.theta * (-g * t).exp() * -(-g * s).exp_m1()
        / ((-(-g * t).exp_m1()) * (-(-g * (t + s)).exp_m1()))
}

fn quad_spec() -> QuadSpec {
    QuadSpec {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

/// `N[e^{-lambda Z_s} | Z_{t+s} = a]`, the entrance law at `s` weighted by
/// the transition density to `a` and divided by the entrance density at `t+s`.
pub fn conditional_laplace_at(p: &ModelParams, lambda: f64, s: f64, t: f64, a: f64) -> Result<f64> {
    if !(s > 0.0 && t > 0.0 && a > 0.0 && lambda >= 0.0) || !a.is_finite() {
        return domain(format!(
            "need s, t, a > 0 and lambda >= 0, got s={s} t={t} a={a} lambda={lambda}"
        ));
    }
    let (cs, cts) = c_pair(p, s);
    let (ct, ctt) = c_pair(p, t);
    let (cu, ctu) = c_pair(p, t + s);
    let kappa = cts + ct + lambda;
    let k = a * ct * ctt;
    // x-dependent part of the log integrand
    let phi = |x: f64| {
        if x > 0.0 {
            x.ln() - kappa * x + log_series(k * x)
        } else {
            f64::NEG_INFINITY
        }
    };
    let guess = k / (kappa * kappa) + 2.0 / kappa;
    let width = (guess / kappa).sqrt().max(1.0 / kappa);
    let log_integral = log_integrate_unimodal(phi, guess, width, &quad_spec())?;
    let log = (cs * cts).ln() + (ct * ctt).ln() - (cu * ctu).ln() - a * c_tilde_drop(p, t, s)
        + log_integral;
    let v = log.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow("conditional Laplace functional".into()))
    }
}

/// `N[(1 - e^{-lambda Z_s}) ; Z_{t+s} = 0]`, weighting the entrance law at
/// `s` by the extinction atom `e^{-x c_t}`.
pub fn extinction_functional(p: &ModelParams, lambda: f64, s: f64, t: f64) -> Result<f64> {
    if !(s > 0.0 && t > 0.0 && lambda >= 0.0) {
        return domain(format!(
            "need s, t > 0 and lambda >= 0, got s={s} t={t} lambda={lambda}"
        ));
    }
    let (cs, cts) = c_pair(p, s);
    let (ct, _) = c_pair(p, t);
    let rate = cts + ct;
    integrate_exp_tail(
        |x| cs * cts * (-rate * x).exp() * -(-lambda * x).exp_m1(),
        0.0,
        rate,
        &quad_spec(),
    )
}

/// One line of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub a_t: f64,
    pub value: f64,
    pub limit: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub regime: Regime,
    pub rows: Vec<ConvergenceRow>,
    /// First grid time after which the absolute error never increases.
    pub monotone_from: Option<f64>,
}

impl ConvergenceTable {
    pub fn final_rel_err(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.rel_err)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,a_t,A_t,limit,abs_err,rel_err\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.t, r.a_t, r.value, r.limit, r.abs_err, r.rel_err
            );
        }
        out
    }
}

/// Sweeps `t` over `grid` computing `A_t` at `a_{t+s}` next to its limit.
pub fn convergence_experiment(
    p: &ModelParams,
    spec: &RegimeSpec,
    lambda: f64,
    s: f64,
    grid: &[f64],
) -> Result<ConvergenceTable> {
    let limit = limit_value(p, spec.regime, lambda, s)?;
    let rows = grid
        .iter()
        .map(|&t| {
            let a = spec.at.value(p, t + s);
            let value = match spec.regime {
                Regime::Extinction => extinction_functional(p, lambda, s, t)?,
                _ => conditional_laplace_at(p, lambda, s, t, a)?,
            };
            let abs_err = (value - limit).abs();
            Ok(ConvergenceRow {
                t,
                a_t: a,
                value,
                limit,
                abs_err,
                rel_err: abs_err / limit.abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut from = rows.len();
    while from > 1 && rows[from - 1].abs_err <= rows[from - 2].abs_err {
        from -= 1;
    }
    let monotone_from = (rows.len() >= 2 && from < rows.len()).then(|| rows[from - 1].t);
    Ok(ConvergenceTable {
        regime: spec.regime,
        rows,
        monotone_from,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(beta: f64, theta: f64) -> ModelParams {
        ModelParams::new(beta, theta, 0.0).unwrap()
    }

    #[test]
    fn classification_examples() {
        let p0 = mp(1.0, 0.0);
        assert_eq!(
            classify(
                &AtSpec::Power {
                    coef: 2.0,
                    power: 2.0
                },
                &p0
            )
            .unwrap(),
            Regime::Poisson { alpha: 2.0 }
        );
        assert_eq!(
            classify(
                &AtSpec::Power {
                    coef: 1.0,
                    power: 1.0
                },
                &p0
            )
            .unwrap(),
            Regime::Kesten
        );
        let p1 = mp(1.0, 1.0);
        assert_eq!(
            classify(
                &AtSpec::Exponential {
                    coef: 1.0,
                    rate: 3.0
                },
                &p1
            )
            .unwrap(),
            Regime::High
        );
        assert_eq!(
            classify(
                &AtSpec::Exponential {
                    coef: 1.0,
                    rate: 2.0
                },
                &p1
            )
            .unwrap(),
            Regime::Poisson { alpha: 4.0 }
        );
        assert_eq!(
            classify(&AtSpec::ZeroAfter { t0: 1.0 }, &p1).unwrap(),
            Regime::Extinction
        );
    }

    #[test]
    fn limit_examples() {
        let p = mp(1.0, 0.0);
        assert!((limit_value(&p, Regime::Extinction, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let q = mp(1.0, -0.4);
        assert!((limit_value(&q, Regime::Kesten, 0.0, 0.7).unwrap() - 1.0).abs() < 1e-12);
        assert!(
            (limit_value(&q, Regime::Poisson { alpha: 2.0 }, 0.0, 0.7).unwrap() - 1.0).abs()
                < 1e-12
        );
        assert!(matches!(
            limit_value(&q, Regime::High, 0.0, 0.7),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn unit_functional_integrates_to_one() {
        for &(theta, t, a) in &[
            (0.0, 10.0, 100.0),
            (0.5, 3.0, 0.2),
            (-0.5, 8.0, 40.0),
            (0.0, 200.0, 1e-3),
        ] {
            let v = conditional_laplace_at(&mp(1.0, theta), 0.0, 1.0, t, a).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "{theta} {t} {a} {v}");
        }
    }

    #[test]
    fn table_interpolates_and_extends() {
        let p = mp(1.0, 0.0);
        let at = AtSpec::Table {
            knots: vec![(1.0, 1.0), (2.0, 4.0)],
        };
        assert_eq!(at.value(&p, 1.5), 2.5);
        assert!((at.value(&p, 4.0) - 16.0).abs() < 1e-12);
        assert_eq!(classify(&at, &p).unwrap(), Regime::Poisson { alpha: 1.0 });
    }
}
