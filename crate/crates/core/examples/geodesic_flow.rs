//! A geodesic of a solved Landsberg metric, with a vector transported
//! along it. The speed and the g-norm of the transported vector are constant.

use conic_finsler::flow::{metric_at, norm_at, unit_tangent};
use conic_finsler::{integrate_minus_eta, parallel_transport, solve_landsberg, LieAlgebra2D, SeedM, Vec2G};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alg = LieAlgebra2D::CANONICAL;
    let curve = solve_landsberg(&SeedM::new(0.5, 0.5, 0.0, 0.0)?, (-0.1, 0.1), 1e-10)?.curve;
    let jet = curve.jet_at(0.02)?;
    let y0 = Vec2G::from_polar(1.0 / (2.0 * jet.f).sqrt(), 0.02);
    let traj = integrate_minus_eta(&alg, &curve, y0, (-1.0, 1.0), 1e-10)?;
    let w0 = unit_tangent(&jet);
    let tr = parallel_transport(&alg, &curve, &traj, w0)?;
    println!("covered s in {:?}", tr.report().covered);
    let (lo, hi) = tr.report().covered;
    for i in 0..=8 {
        let s = lo + (hi - lo) * i as f64 / 8.0;
        let Some((y, w)) = tr.eval(s) else { continue };
        println!(
            "s = {s:+.4}  y = ({:+.6}, {:+.6})  F(y) = {:.12}  g_y(w, w) = {:.12}",
            y.y1,
            y.y2,
            norm_at(&curve, y)?,
            metric_at(&curve, y, w, w)?
        );
    }
    Ok(())
}
