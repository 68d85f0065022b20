//! Batch comparison of Landsberg profiles against the Berwald profiles of
//! their matched matrices.
//!
//! cargo run --release --example theorem_d -- [n_cases] [rng_seed]

use conic_finsler::harness::{batch_verify, RunConfig, Status};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n_cases = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let rng_seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);
    let cfg = RunConfig {
        n_cases,
        rng_seed,
        ..RunConfig::default()
    };

    let start = std::time::Instant::now();
    let report = batch_verify(&cfg)?;
    for case in &report.cases {
        let r = &case.report;
        if r.status != Status::Pass {
            println!(
                "case {:3} {:?} on {:?}, end gap {:?}, seed {:?}",
                case.index,
                r.status,
                r.covered,
                r.diagnostics.endpoint_gap,
                r.seed.as_array()
            );
        }
    }
    let s = &report.summary;
    println!(
        "{} pass, {} fail, {} truncated; max sup error {:.3e}; {:.2?}",
        s.pass,
        s.fail,
        s.truncated,
        s.max_sup_error.unwrap_or(0.0),
        start.elapsed()
    );
    let worst = report
        .cases
        .iter()
        .filter_map(|c| Some((c.report.diagnostics.eta_residual?, c.report.diagnostics.pde_residual?)))
        .fold((0.0f64, 0.0f64), |(a, b), (x, y)| (a.max(x), b.max(y)));
    println!(
        "worst eta quadratic residual {:.3e}, worst PDE residual {:.3e}",
        worst.0, worst.1
    );
    Ok(())
}
