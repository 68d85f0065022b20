//! Constant flag curvature profiles for c = -1, 0, 1 from one seed, with
//! the curvature re-measured independently along each.

use conic_finsler::harness::curvature_profile;
use conic_finsler::{solve_cfc, SeedM};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = SeedM::new(0.5, 0.5, 0.0, 0.0)?;
    for c in [-1.0, 0.0, 1.0] {
        let solved = solve_cfc(&seed, c, (-0.1, 0.1), 1e-10)?;
        let ks = curvature_profile(&solved.curve, 20)?;
        let worst = ks.iter().map(|(_, k)| (k - c).abs()).fold(0.0, f64::max);
        let f_end = solved.curve.jet_at(0.1)?.f;
        println!("c = {c:+}: f(0.1) = {f_end:.12}, max |K - c| = {worst:.2e}");
    }
    Ok(())
}
