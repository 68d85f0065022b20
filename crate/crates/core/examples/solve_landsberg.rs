//! Solve the Landsberg equation from an initial jet and print the profile.
//!
//! cargo run --example solve_landsberg -- 0.5,0.5,0,0

use conic_finsler::harness::write_profile_csv;
use conic_finsler::{landsberg_first_integral, solve_landsberg, SeedM};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = std::env::args().nth(1).unwrap_or_else(|| "0.5,0.5,0,0".into());
    let seed = SeedM::parse(&text)?;
    let solved = solve_landsberg(&seed, (-0.1, 0.1), 1e-10)?;
    eprintln!("{:?}", solved.report);

    let k0 = landsberg_first_integral(&seed.jet())?;
    let k_end = landsberg_first_integral(&solved.curve.jet_at(solved.report.covered.1)?)?;
    eprintln!("first integral {k0} at 0, {k_end} at the right end");

    write_profile_csv(&solved.curve, 11, &mut std::io::stdout())?;
    Ok(())
}
