//! Command-line front end.

use crate::batch::{chunked, collect, default_jobs};
use crate::conditioning::{convergence_experiment, RegimeSpec};
use crate::config::ExperimentConfig;
use crate::decorate::{build_finite_decorated_tree, sample_decorated_zs, sample_kesten_zs};
use crate::error::{Error, Result};
use crate::metric::{gh_bounds, gh_exact_small, lgh_numeric};
use crate::report::{csv, svg_lines};
use crate::rng::RandomStream;
use crate::samplers::{sample_csbp_path, sample_zalpha_exact};
use crate::tree_core::*;
use crate::verify::{limit_grid, regime_profiles, resolve, run_target, VerifyOptions};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "csbp",
    version,
    about = "Quadratic CSBPs conditioned on their late population size"
)]
pub struct Cli {
    /// Experiment file with an [experiment] section.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; every result is a function of it alone.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: $OUTPUT_DIR, then the config, then `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run verification targets: a criterion name, a module group or `all`.
    Verify {
        target: String,
        /// Multiplies every sample size.
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Draw samples and write them as CSV.
    Simulate {
        kind: SimKind,
        /// Number of draws.
        #[arg(long)]
        samples: Option<u64>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Convergence sweep of the conditioned Laplace functional.
    Limits {
        regime: LimitKind,
        /// Laplace argument.
        #[arg(long)]
        lambda: Option<f64>,
        /// Largest conditioning time of the sweep.
        #[arg(long)]
        t_max: Option<f64>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Distance bounds between two trees in text form.
    Gh {
        a: PathBuf,
        b: PathBuf,
        /// Also run the exact search on trees this fine.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Tree algebra on a tree in text form.
    Trees { op: TreeOp, input: PathBuf },
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct ModelArgs {
    /// Branching rate.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Drift; positive values are subcritical.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Immigration rate.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Observation time.
    #[arg(long)]
    pub t: Option<f64>,
    /// Level of the inner functional, below `t`.
    #[arg(long)]
    pub s: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimKind {
    Csbp,
    Zalpha,
    Kesten,
    Decorated,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LimitKind {
    Poisson,
    Kesten,
    Extinction,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TreeOp {
    Canon,
    Split,
    Graft,
    Code,
}

/// Exit status: everything passed, an assertion failed, or bad input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass = 0,
    Fail = 1,
    Invalid = 2,
}

struct Ctx {
    cfg: ExperimentConfig,
    jobs: usize,
    out: PathBuf,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    }
}

fn context(cli: &Cli) -> Result<Ctx> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.jobs == Some(0) {
        return Err(Error::Config("--jobs must be positive".into()));
    }
    let jobs = cli.jobs.or(cfg.jobs).unwrap_or_else(default_jobs);
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("OUTPUT_DIR").map(PathBuf::from))
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(Ctx { cfg, jobs, out })
}

fn apply(cfg: &mut ExperimentConfig, m: &ModelArgs) -> Result<()> {
    let fields = [
        (&mut cfg.beta, m.beta),
        (&mut cfg.theta, m.theta),
        (&mut cfg.alpha, m.alpha),
        (&mut cfg.t, m.t),
        (&mut cfg.s, m.s),
    ];
    for (slot, v) in fields {
        if let Some(v) = v {
            *slot = v;
        }
    }
    cfg.validate()
}

/// Runs a parsed command line and reports the exit status.
pub fn run(cli: Cli) -> Outcome {
    let result = context(&cli).and_then(|mut ctx| match &cli.command {
        Command::Verify { target, scale } => verify(&mut ctx, target, *scale),
        Command::Simulate {
            kind,
            samples,
            model,
        } => {
            apply(&mut ctx.cfg, model)?;
            if let Some(n) = samples {
                ctx.cfg.samples = *n;
            }
            simulate(&ctx, *kind)
        }
        Command::Limits {
            regime,
            lambda,
            t_max,
            model,
        } => {
            apply(&mut ctx.cfg, model)?;
            if let Some(l) = lambda {
                ctx.cfg.lambda = *l;
            }
            if t_max.is_some() {
                ctx.cfg.t_max = *t_max;
            }
            ctx.cfg.validate()?;
            limits(&ctx, *regime)
        }
        Command::Gh { a, b, delta } => gh(&ctx, a, b, *delta),
        Command::Trees { op, input } => trees(&ctx, *op, input),
    });
    match result {
        Ok(true) => Outcome::Pass,
        Ok(false) => Outcome::Fail,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::Parse { .. }
                | Error::Domain(_)
                | Error::InvalidTree(_)
                | Error::Io(_) => Outcome::Invalid,
                _ => Outcome::Fail,
            }
        }
    }
}

fn verify(ctx: &mut Ctx, target: &str, scale: Option<f64>) -> Result<bool> {
    if let Some(s) = scale {
        ctx.cfg.scale = s;
    }
    ctx.cfg.validate()?;
    let opts = VerifyOptions {
        seed: ctx.cfg.seed,
        jobs: ctx.jobs,
        scale: ctx.cfg.scale,
        z_max: ctx.cfg.z_max,
    };
    let mut all = true;
    for t in resolve(target)? {
        let report = run_target(t, &opts);
        ctx.write(&format!("verify-{}.json", t.name()), &report.to_json())?;
        println!(
            "{} criterion {:>2} {}",
            if report.passed { "PASS" } else { "FAIL" },
            t.criterion(),
            t.name()
        );
        for c in report.failures() {
            println!(
                "    failed: {} (value {}, limit {})",
                c.name, c.value, c.limit
            );
        }
        all &= report.passed;
    }
    Ok(all)
}

fn simulate(ctx: &Ctx, kind: SimKind) -> Result<bool> {
    let cfg = &ctx.cfg;
    let p = cfg.params()?;
    let stream = RandomStream::new(cfg.seed);
    let n = cfg.samples;
    let (name, text) = match kind {
        SimKind::Csbp => {
            let grid: Vec<f64> = (1..=20).map(|k| cfg.t * k as f64 / 20.0).collect();
            let rows: Vec<Vec<f64>> = chunked(&stream, n, ctx.jobs, |mut r, m| {
                (0..m)
                    .map(|_| sample_csbp_path(&p, cfg.x0, &grid, &mut r).map(|s| s.values))
                    .collect::<Result<Vec<_>>>()
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
            let header: Vec<String> = grid.iter().map(|g| format!("z_{g}")).collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            ("simulate-csbp.csv", csv(&header, &rows))
        }
        SimKind::Zalpha => {
            let rows: Vec<[f64; 2]> = chunked(&stream, n, ctx.jobs, |mut r, m| {
                (0..m)
                    .map(|_| {
                        sample_zalpha_exact(&p, cfg.t, &mut r).map(|z| [z.value, z.jumps as f64])
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
            ("simulate-zalpha.csv", csv(&["value", "jumps"], &rows))
        }
        SimKind::Kesten => {
            sample_kesten_zs(&p, cfg.s, &mut stream.split(u64::MAX))?;
            let xs = collect(&stream, n, ctx.jobs, |r| {
                sample_kesten_zs(&p, cfg.s, r).unwrap_or(f64::NAN)
            });
            (
                "simulate-kesten.csv",
                csv(&["value"], &xs.iter().map(|&x| [x]).collect::<Vec<_>>()),
            )
        }
        SimKind::Decorated => {
            sample_decorated_zs(&p, cfg.s, &mut stream.split(u64::MAX))?;
            let xs = collect(&stream, n, ctx.jobs, |r| {
                sample_decorated_zs(&p, cfg.s, r).unwrap_or(f64::NAN)
            });
            let one = build_finite_decorated_tree(
                &p,
                cfg.t,
                cfg.epsilon,
                &[cfg.s.min(cfg.t)],
                &mut stream.split(u64::MAX - 1),
            )?;
            let path = ctx.write("decorations.csv", &one.decorations_csv())?;
            println!("wrote {}", path.display());
            (
                "simulate-decorated.csv",
                csv(&["value"], &xs.iter().map(|&x| [x]).collect::<Vec<_>>()),
            )
        }
    };
    let path = ctx.write(name, &text)?;
    println!("wrote {} ({n} samples)", path.display());
    Ok(true)
}

fn limits(ctx: &Ctx, kind: LimitKind) -> Result<bool> {
    let cfg = &ctx.cfg;
    let p = cfg.params()?.with_alpha(0.0);
    let wanted = match kind {
        LimitKind::Poisson => "poisson",
        LimitKind::Kesten => "kesten",
        LimitKind::Extinction => "extinction",
    };
    let (_, at) = regime_profiles(&p, cfg.alpha)
        .into_iter()
        .find(|(n, _)| *n == wanted)
        .expect("three profiles");
    let spec = RegimeSpec::new(at, &p)?;
    let t_max = cfg.t_max();
    let table = convergence_experiment(&p, &spec, cfg.lambda, cfg.s, &limit_grid(t_max))?;
    let csv_path = ctx.write(&format!("limits-{wanted}.csv"), &table.to_csv())?;
    let series = [
        ("A_t", table.rows.iter().map(|r| (r.t, r.value)).collect()),
        ("limit", table.rows.iter().map(|r| (r.t, r.limit)).collect()),
    ];
    let svg_path = ctx.write(
        &format!("limits-{wanted}.svg"),
        &svg_lines(
            &format!("{wanted} regime, theta = {}", cfg.theta),
            "t",
            &series,
            true,
        ),
    )?;
    let ok = table.final_rel_err() < 0.01 && table.monotone_from.is_some();
    let monotone = table
        .monotone_from
        .map_or("not monotone".to_string(), |t0| {
            format!("monotone from t = {t0}")
        });
    println!(
        "{} {wanted}: relative error {:.3e} at t = {t_max}, {monotone}; wrote {} and {}",
        if ok { "PASS" } else { "FAIL" },
        table.final_rel_err(),
        csv_path.display(),
        svg_path.display()
    );
    Ok(ok)
}

fn read_tree(path: &Path) -> Result<PointedTree> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    from_text(&text)
}

fn gh(ctx: &Ctx, a: &Path, b: &Path, delta: Option<f64>) -> Result<bool> {
    let (ta, tb) = (read_tree(a)?, read_tree(b)?);
    let bounds = gh_bounds(&ta, &tb)?;
    let lgh = lgh_numeric(&ta, &tb, 256)?;
    let exact = match delta.map(|d| gh_exact_small(&ta, &tb, d)) {
        Some(Ok(e)) => Some(e),
        Some(Err(Error::SizeLimit(msg))) => {
            eprintln!("exact search skipped: {msg}");
            None
        }
        Some(Err(e)) => return Err(e),
        None => None,
    };
    let report = json!({ "gh": bounds, "lgh": lgh, "exact": exact });
    let text = serde_json::to_string_pretty(&report).expect("serializable");
    println!("{text}");
    ctx.write("gh.json", &text)?;
    Ok(true)
}

fn trees(ctx: &Ctx, op: TreeOp, input: &Path) -> Result<bool> {
    let t = read_tree(input)?;
    match op {
        TreeOp::Canon => print!("{}", to_text(canonical(&t).tree())),
        TreeOp::Code => {
            let code = code_l(&t)?;
            let d = code_d(&code);
            let rows: Vec<Vec<f64>> = (0..d.size())
                .map(|i| (0..d.size()).map(|j| d.get(i, j)).collect())
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(
                    &json!({ "n": code.n(), "lengths": code.lengths(), "distances": rows })
                )
                .expect("serializable")
            );
        }
        TreeOp::Split => {
            let split = split_n(&t);
            for (a, c) in split.components.iter().enumerate() {
                let path = ctx.write(&format!("component-{a}.txt"), &to_text(c))?;
                println!(
                    "component {a}: total length {} -> {}",
                    c.total_length(),
                    path.display()
                );
            }
        }
        TreeOp::Graft => {
            let split = split_n(&t);
            let back = graft_n(&code_l(&t)?, &split.spine_components())?;
            let same = equivalent(&back, &t);
            print!("{}", to_text(&back));
            println!("# equivalent to input: {same}");
            return Ok(same);
        }
    }
    Ok(true)
}
