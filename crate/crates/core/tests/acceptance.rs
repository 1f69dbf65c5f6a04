//! The twelve acceptance criteria, one line each. Runtime budgets are
//! checked alongside the numerical assertions.

use csbp::verify::{rerun_matches, run_target, Target, TargetReport, VerifyOptions};
use std::process::ExitCode;
use std::time::{Duration, Instant};

fn budget(t: Target) -> Option<Duration> {
    let secs = match t {
        Target::Analytics => 10,
        Target::Moments | Target::Martingales | Target::Limits => 60,
        Target::GraftLemma => 300,
        Target::Trees => 30,
        Target::Metric => 120,
        _ => return None,
    };
    Some(Duration::from_secs(secs))
}

fn line(criterion: usize, name: &str, passed: bool, elapsed: Duration, within: bool, detail: &str) {
    println!(
        "criterion {criterion:>2} {name:<12} {} ({:.1} s{}){detail}",
        if passed && within { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        if within { "" } else { ", over budget" }
    );
}

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let mut reports: Vec<(Target, TargetReport)> = Vec::new();
    let mut all = true;
    for t in Target::ALL
        .into_iter()
        .filter(|&t| t != Target::Determinism)
    {
        let start = Instant::now();
        let report = run_target(t, &opts);
        let elapsed = start.elapsed();
        let within = budget(t).is_none_or(|b| elapsed <= b);
        let detail: String = report
            .failures()
            .map(|c| {
                format!(
                    "\n    failed: {} (value {}, limit {})",
                    c.name, c.value, c.limit
                )
            })
            .collect();
        line(
            t.criterion(),
            t.name(),
            report.passed,
            elapsed,
            within,
            &detail,
        );
        all &= report.passed && within;
        reports.push((t, report));
    }
    // every target again on one worker, compared byte for byte
    let start = Instant::now();
    let differing: Vec<&str> = reports
        .iter()
        .filter(|(t, r)| !rerun_matches(*t, &opts, &r.to_json()))
        .map(|(t, _)| t.name())
        .collect();
    let detail = if differing.is_empty() {
        String::new()
    } else {
        format!("\n    differing reports: {}", differing.join(", "))
    };
    line(
        Target::Determinism.criterion(),
        Target::Determinism.name(),
        differing.is_empty(),
        start.elapsed(),
        true,
        &detail,
    );
    all &= differing.is_empty();
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
