//! The round norm f = 1/2 with [e1, e2] = e2 is the hyperbolic plane.
//! Both curvature routes should give K = -1.

use conic_finsler::{flag_curvature, flag_curvature_lie, CurveKind, LieAlgebra2D, NormCurve, NormJet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alg = LieAlgebra2D::CANONICAL;
    let round = NormCurve::from_fn((-3.0, 3.0), CurveKind::Custom, |t| NormJet::new(t, 0.5, 0.0, 0.0, 0.0))?;
    for t in [-2.5, -1.0, 0.4, std::f64::consts::FRAC_PI_2, 2.2] {
        let k = flag_curvature(&alg, &round, t)?;
        let k_lie = flag_curvature_lie(&alg, &round, t)?;
        println!("t = {t:+.4}: K = {k:.9} (profile), {k_lie:.9} (Lie derivatives)");
    }
    Ok(())
}
