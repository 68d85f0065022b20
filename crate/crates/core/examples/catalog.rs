//! The three closed-form Berwald families: `η` is quadratic for each, and
//! the fitted quadratic forms are printed.

use conic_finsler::{catalog_norm, eta_quadratic_fit, CatalogCase, CatalogParams, LieAlgebra2D};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alg = LieAlgebra2D::CANONICAL;
    for (case, lambda) in [(1, 0.0), (1, 0.7), (2, 3.0), (3, 0.5)] {
        let p = CatalogParams::new(CatalogCase::from_number(case)?, lambda, 1.0)?;
        let fit = eta_quadratic_fit(&alg, &catalog_norm(&p)?)?;
        println!(
            "case {case}, lambda {lambda}: eta1 = {:?}, eta2 = {:?} (y1², y1y2, y2²), residual {:.1e}",
            fit.eta1.map(round),
            fit.eta2.map(round),
            fit.residual
        );
    }
    Ok(())
}

fn round(x: f64) -> f64 {
    // Adding 0.0 turns -0.0 into 0.0.
    (x * 1e9).round() / 1e9 + 0.0
}
