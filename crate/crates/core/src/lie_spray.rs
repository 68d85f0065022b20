//! The spray vector field `η` and connection operator `N` of a left-invariant
//! norm on a 2-dimensional non-Abelian Lie algebra.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::polar_norm::{margin_unchecked, polar_frame, NormCurve, NormJet, Vec2G};

/// Structure constants of `[e1, e2] = eps1 e1 + eps2 e2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LieAlgebra2D {
    eps1: f64,
    eps2: f64,
}

impl LieAlgebra2D {
    /// `[e1, e2] = e2`, the normalization used by every solver.
    pub const CANONICAL: LieAlgebra2D = LieAlgebra2D { eps1: 0.0, eps2: 1.0 };

    pub fn new(eps1: f64, eps2: f64) -> Result<Self> {
        ensure_finite("structure constants", &[eps1, eps2])?;
        if eps1 == 0.0 && eps2 == 0.0 {
            return Err(Error::Validation(
                "structure constants (0, 0) describe the Abelian algebra".into(),
            ));
        }
        Ok(LieAlgebra2D { eps1, eps2 })
    }

    pub fn eps1(&self) -> f64 {
        self.eps1
    }

    pub fn eps2(&self) -> f64 {
        self.eps2
    }

    /// `[u, v] = det[u, v]·(eps1 e1 + eps2 e2)`.
    pub fn bracket(&self, u: Vec2G, v: Vec2G) -> Vec2G {
        Vec2G::new(self.eps1, self.eps2) * u.cross(v)
    }
}

impl Default for LieAlgebra2D {
    fn default() -> Self {
        LieAlgebra2D::CANONICAL
    }
}

// Coefficient c(y) with η(y) = c(y)·X(y); linear in r.
fn eta_coefficient(alg: &LieAlgebra2D, jet: &NormJet, r: f64, m: f64) -> f64 {
    let (s, c) = jet.t.sin_cos();
    let (e1, e2) = (alg.eps1, alg.eps2);
    let along = e1 * c + e2 * s;
    let across = e2 * c - e1 * s;
    -r * (4.0 * jet.f * jet.f * along + 2.0 * jet.f * jet.df * across) / m
}

fn margin_for_division(jet: &NormJet) -> Result<f64> {
    ensure_finite("jet", &[jet.t, jet.f, jet.df, jet.d2f])?;
    let m = margin_unchecked(jet);
    if m <= 0.0 {
        return Err(Error::Singularity(format!(
            "convexity margin {m:e} at t = {} leaves η undefined",
            jet.t
        )));
    }
    Ok(m)
}

/// `η(y)` at `y = r(cos t, sin t)` with `t = jet.t`.
///
/// `η` is tangent to the level set of `F` through `y`; it is a multiple of
/// the polar frame vector `∂t - (r f'/2f) ∂r`.
pub fn spray_eta(alg: &LieAlgebra2D, jet: &NormJet, r: f64) -> Result<Vec2G> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("radius r = {r} must be positive")));
    }
    let m = margin_for_division(jet)?;
    let (_, x) = polar_frame(jet, r);
    Ok(x * eta_coefficient(alg, jet, r, m))
}

/// `η(y)` for an arbitrary `y` in the cone of `curve`.
pub fn eta_at(alg: &LieAlgebra2D, curve: &NormCurve, y: Vec2G) -> Result<Vec2G> {
    let jet = curve.jet_at(y.angle())?;
    spray_eta(alg, &jet, y.radius())
}

/// The scalar `ρ(t)` with `η(y(t)) = ρ(t)·dy/dt` along the indicatrix
/// `y(t) = (cos t, sin t)/sqrt(2 f(t))`.
pub fn eta_on_indicatrix(alg: &LieAlgebra2D, jet: &NormJet) -> Result<f64> {
    let m = margin_for_division(jet)?;
    let r = 1.0 / (2.0 * jet.f).sqrt();
    Ok(eta_coefficient(alg, jet, r, m))
}

/// `ds/dt = -1/ρ(t)` for the parameter `s` along which the indicatrix point
/// moves as a geodesic velocity.
pub fn s_rate(alg: &LieAlgebra2D, jet: &NormJet) -> Result<f64> {
    let rho = eta_on_indicatrix(alg, jet)?;
    // Scale of the two terms of the numerator of ρ, for a relative test.
    let scale = (2.0 * jet.f).sqrt() * (4.0 * jet.f * jet.f + 2.0 * jet.f * jet.df.abs()) / margin_unchecked(jet);
    if rho.abs() <= 1e-13 * scale {
        return Err(Error::Singularity(format!(
            "η vanishes on the indicatrix at t = {}",
            jet.t
        )));
    }
    Ok(-1.0 / rho)
}

/// Relative step of the central difference used for `Dη`.
pub const CONNECTION_STEP: f64 = 1e-5;

/// `N(y, v) = ½ Dη(y, v) - ½ [y, v]`.
///
/// `Dη(y, v)` is a central difference with step `CONNECTION_STEP·|y|/|v|`.
pub fn connection_n(alg: &LieAlgebra2D, curve: &NormCurve, y: Vec2G, v: Vec2G) -> Result<Vec2G> {
    let d_eta = directional_eta(alg, curve, y, v)?;
    Ok(d_eta * 0.5 - alg.bracket(y, v) * 0.5)
}

/// `Dη(y, v)` by central differences.
pub fn directional_eta(alg: &LieAlgebra2D, curve: &NormCurve, y: Vec2G, v: Vec2G) -> Result<Vec2G> {
    let vn = v.radius();
    if vn == 0.0 {
        return Ok(Vec2G::default());
    }
    let h = CONNECTION_STEP * y.radius() / vn;
    let plus = eta_at(alg, curve, y + v * h)?;
    let minus = eta_at(alg, curve, y - v * h)?;
    Ok((plus - minus) * (0.5 / h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar_norm::{gram_in_basis, CurveKind};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn jet(t: f64, f: f64, df: f64, d2f: f64) -> NormJet {
        NormJet::new(t, f, df, d2f, 0.0).unwrap()
    }

    fn circle() -> NormCurve {
        NormCurve::from_fn((-3.0, 3.0), CurveKind::Custom, |t| NormJet::new(t, 0.5, 0.0, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn abelian_rejected() {
        assert!(LieAlgebra2D::new(0.0, 0.0).is_err());
        assert!(LieAlgebra2D::new(0.0, -1.0).is_ok());
    }

    #[test]
    fn spray_examples() {
        let alg = LieAlgebra2D::CANONICAL;
        let eta = spray_eta(&alg, &jet(FRAC_PI_2, 0.5, 0.0, 0.0), 1.0).unwrap();
        assert_relative_eq!(eta.y1, 1.0, epsilon = 1e-15);
        assert_relative_eq!(eta.y2, 0.0, epsilon = 1e-15);

        let eta = spray_eta(&alg, &jet(0.0, 0.5, 0.5, 0.0), 1.0).unwrap();
        assert_relative_eq!(eta.y1, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(eta.y2, -2.0 / 3.0, epsilon = 1e-15);

        let j = jet(0.4, 0.7, 0.2, -0.1);
        let e1 = spray_eta(&alg, &j, 1.0).unwrap();
        let e2 = spray_eta(&alg, &j, 2.0).unwrap();
        assert_relative_eq!(e2.y1, 4.0 * e1.y1, max_relative = 1e-14);
        assert_relative_eq!(e2.y2, 4.0 * e1.y2, max_relative = 1e-14);
    }

    #[test]
    fn spray_needs_convexity() {
        let alg = LieAlgebra2D::CANONICAL;
        let j = jet(0.0, 1.0, 3.0, 0.0);
        assert!(matches!(spray_eta(&alg, &j, 1.0), Err(Error::Singularity(_))));
    }

    // g_y(η, u) = g_y(y, [u, y]) for u = e1, e2, with general structure constants.
    #[test]
    fn defining_identity() {
        for &(e1, e2) in &[(0.0, 1.0), (0.0, -1.0), (0.7, -0.3), (-1.0, 0.0)] {
            let alg = LieAlgebra2D::new(e1, e2).unwrap();
            for &t in &[-0.9, 0.05, 0.6, 2.0] {
                let j = jet(t, 0.6, 0.3, -0.2);
                let r = 1.4;
                let y = Vec2G::from_polar(r, t);
                let g = gram_in_basis(&j, r).unwrap();
                let eta = spray_eta(&alg, &j, r).unwrap();
                for u in [Vec2G::E1, Vec2G::E2] {
                    let lhs = g.apply(eta, u);
                    let rhs = g.apply(y, alg.bracket(u, y));
                    assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn indicatrix_rate_examples() {
        let alg = LieAlgebra2D::CANONICAL;
        assert_relative_eq!(
            eta_on_indicatrix(&alg, &jet(0.0, 0.5, 0.5, 0.0)).unwrap(),
            -2.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(eta_on_indicatrix(&alg, &jet(0.0, 1.7, 0.0, 0.3)).unwrap(), 0.0);
        assert_relative_eq!(
            eta_on_indicatrix(&alg, &jet(FRAC_PI_2, 0.5, 0.0, 0.0)).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(s_rate(&alg, &jet(0.0, 0.5, 0.5, 0.0)).unwrap(), 1.5, epsilon = 1e-14);
        let t: f64 = 0.3;
        let bad = jet(t, 0.5, -2.0 * 0.5 * t.tan(), 0.0);
        assert!(matches!(s_rate(&alg, &bad), Err(Error::Singularity(_))));
    }

    #[test]
    fn connection_examples() {
        let alg = LieAlgebra2D::CANONICAL;
        let c = circle();
        let n = connection_n(&alg, &c, Vec2G::E1, Vec2G::E2).unwrap();
        assert_relative_eq!(n.y1, 0.0, epsilon = 1e-9);
        assert_relative_eq!(n.y2, -1.0, epsilon = 1e-9);
        let n = connection_n(&alg, &c, Vec2G::E2, Vec2G::E2).unwrap();
        assert_relative_eq!(n.y1, 1.0, epsilon = 1e-9);
        assert_relative_eq!(n.y2, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn connection_leaving_domain_is_an_error() {
        let alg = LieAlgebra2D::CANONICAL;
        let c = NormCurve::from_fn((-0.1, 0.1), CurveKind::Custom, |t| NormJet::new(t, 0.5, 0.0, 0.0, 0.0)).unwrap();
        let y = Vec2G::from_polar(1.0, 0.1);
        assert!(matches!(connection_n(&alg, &c, y, Vec2G::E2), Err(Error::Domain(_))));
    }
}
