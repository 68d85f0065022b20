//! Landsberg curvature two ways: the t-derivative of the normalized Cartan
//! scalar, and the s-derivative of the Cartan tensor on a parallel field.

use conic_finsler::{
    landsberg_scalar, landsberg_via_transport, solve_landsberg, CurveKind, LieAlgebra2D, NormCurve, NormJet, SeedM,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alg = LieAlgebra2D::CANONICAL;
    let wavy = NormCurve::from_fn((-0.5, 0.5), CurveKind::Custom, |t| {
        let (s, c) = (3.0 * t).sin_cos();
        NormJet::new(t, 0.5 + 0.1 * s + 0.2 * t, 0.3 * c + 0.2, -0.9 * s, -2.7 * c)
    })?;
    let landsberg = solve_landsberg(&SeedM::new(0.5, 0.5, 0.0, 0.0)?, (-0.1, 0.1), 1e-10)?.curve;
    for (name, curve) in [("wavy", &wavy), ("solved Landsberg", &landsberg)] {
        for t in [-0.05, 0.0, 0.05] {
            let a = landsberg_scalar(curve, t)?;
            let b = landsberg_via_transport(&alg, curve, t)?;
            println!("{name:>16} t = {t:+.2}: {a:+.9e} vs {b:+.9e}");
        }
    }
    Ok(())
}
