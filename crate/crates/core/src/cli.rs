//! Command-line front end. [`cli_main`] takes the argument list and output
//! streams explicitly so it can be driven from tests.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::berwald::{catalog_norm, eta_quadratic_residual, CatalogCase, CatalogParams};
use crate::error::{Error, Result};
use crate::harness::{
    batch_verify, curvature_profile, run_invariants, write_curvature_csv, write_profile_csv, RunConfig,
};
use crate::lie_spray::LieAlgebra2D;
use crate::solvers::{solve_cfc, solve_landsberg, SeedM, SolvedCurve};

/// Exit code for a run whose checks all passed.
pub const EXIT_OK: i32 = 0;
/// Exit code when a verification or computation failed.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for malformed flags or inadmissible parameters.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "conic-finsler",
    version,
    about = "Left-invariant conic Finsler metrics on the 2D non-Abelian Lie group"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for a polar profile from an initial jet and write it as CSV.
    #[command(subcommand)]
    Solve(SolveKind),
    /// Write the profile of a closed-form Berwald family as CSV.
    Catalog {
        #[arg(long)]
        case: u8,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Batch verification runs.
    #[command(subcommand)]
    Verify(VerifyKind),
    /// Print the flag curvature along a solved profile as CSV (t,K).
    Curvature {
        #[arg(long)]
        seed: String,
        /// Solve the constant curvature equation with this c instead of the
        /// Landsberg equation.
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Run the invariant suite.
    Invariants,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Initial jet a0,a1,a2,a3 = (f, f', f'', f''') at t = 0.
    #[arg(long)]
    seed: String,
    /// Half-width W of the interval [-W, W]; the sign is ignored.
    #[arg(long, default_value_t = 0.15, allow_negative_numbers = true)]
    t: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum SolveKind {
    /// Landsberg profile.
    Landsberg(SolveArgs),
    /// Constant flag curvature profile.
    Cfc {
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[command(flatten)]
        args: SolveArgs,
    },
}

#[derive(Debug, Subcommand)]
enum VerifyKind {
    /// Compare Landsberg profiles with the Berwald profiles of their matched
    /// matrices on random seeds.
    TheoremD {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        rng: u64,
        #[arg(long, default_value_t = 1e-7)]
        tol_compare: f64,
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        t: f64,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

/// Runs the command line `args` (including the program name).
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Validation(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            }
        }
    }
}

fn half_width(t: f64) -> Result<(f64, f64)> {
    let w = t.abs();
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Validation(format!("--t {t} must be a nonzero half-width")));
    }
    Ok((-w, w))
}

fn write_to(path: Option<&Path>, out: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => body(out),
    }
}

fn report_solve(solved: &SolvedCurve, err: &mut dyn Write) -> Result<()> {
    let r = &solved.report;
    if r.truncated {
        writeln!(
            err,
            "warning: solution covers only [{}, {}] of [{}, {}]: {}",
            r.covered.0,
            r.covered.1,
            r.requested.0,
            r.requested.1,
            r.message.clone().unwrap_or_default()
        )?;
    }
    Ok(())
}

fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Solve(kind) => {
            let (solved, args) = match kind {
                SolveKind::Landsberg(args) => {
                    let seed = SeedM::parse(&args.seed)?;
                    (solve_landsberg(&seed, half_width(args.t)?, args.tol)?, args)
                }
                SolveKind::Cfc { c, args } => {
                    let seed = SeedM::parse(&args.seed)?;
                    (solve_cfc(&seed, c, half_width(args.t)?, args.tol)?, args)
                }
            };
            report_solve(&solved, err)?;
            write_to(args.out.as_deref(), out, |w| {
                write_profile_csv(&solved.curve, args.points, w)
            })?;
            Ok(EXIT_OK)
        }
        Command::Catalog {
            case,
            lambda,
            mu,
            points,
            out: path,
        } => {
            let params = CatalogParams::new(CatalogCase::from_number(case)?, lambda, mu)?;
            let curve = catalog_norm(&params)?;
            write_to(path.as_deref(), out, |w| write_profile_csv(&curve, points, w))?;
            let res = eta_quadratic_residual(&LieAlgebra2D::CANONICAL, &curve)?;
            writeln!(err, "eta quadratic residual {res:e}")?;
            Ok(EXIT_OK)
        }
        Command::Verify(VerifyKind::TheoremD {
            n,
            rng,
            tol_compare,
            t,
            report,
        }) => {
            let cfg = RunConfig {
                n_cases: n,
                rng_seed: rng,
                tol_compare,
                t_half_width: t,
                ..RunConfig::default()
            };
            let batch = batch_verify(&cfg)?;
            let json = batch.to_json();
            match &report {
                Some(p) => std::fs::write(p, &json)?,
                None => out.write_all(json.as_bytes())?,
            }
            let s = &batch.summary;
            writeln!(
                err,
                "{} pass, {} fail, {} truncated, max sup error {}",
                s.pass,
                s.fail,
                s.truncated,
                s.max_sup_error.map_or("n/a".to_string(), |e| format!("{e:e}"))
            )?;
            Ok(if batch.passed() { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Curvature { seed, c, t, points } => {
            let seed = SeedM::parse(&seed)?;
            let span = half_width(t)?;
            let solved = match c {
                Some(c) => solve_cfc(&seed, c, span, 1e-10)?,
                None => solve_landsberg(&seed, span, 1e-10)?,
            };
            report_solve(&solved, err)?;
            let rows = curvature_profile(&solved.curve, points)?;
            write_curvature_csv(&rows, out)?;
            Ok(EXIT_OK)
        }
        Command::Invariants => {
            let checks = run_invariants()?;
            let mut ok = true;
            for c in &checks {
                ok &= c.pass;
                writeln!(
                    out,
                    "{} {}: worst {:e}, tolerance {:e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.worst,
                    c.tolerance
                )?;
            }
            Ok(if ok { EXIT_OK } else { EXIT_FAIL })
        }
    }
}
