//! Conic Minkowski norms on a 2-dimensional Lie algebra in polar form.
//!
//! A norm is written `F = r·sqrt(2 f(t))` where `y = r cos t e1 + r sin t e2`.
//! Everything downstream works from the 3-jet `(f, f', f'', f''')` of the
//! polar profile at a single angle, packaged as a [`NormJet`]. A
//! [`NormCurve`] is a profile `t -> NormJet` on a closed interval, produced
//! either by an ODE solver or by a closed form.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// A vector `y1 e1 + y2 e2` of the Lie algebra.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2G {
    pub y1: f64,
    pub y2: f64,
}

impl Vec2G {
    pub const E1: Vec2G = Vec2G { y1: 1.0, y2: 0.0 };
    pub const E2: Vec2G = Vec2G { y1: 0.0, y2: 1.0 };

    pub const fn new(y1: f64, y2: f64) -> Self {
        Vec2G { y1, y2 }
    }

    pub fn from_polar(r: f64, t: f64) -> Self {
        Vec2G::new(r * t.cos(), r * t.sin())
    }

    /// Euclidean length in the coordinates `(y1, y2)`.
    pub fn radius(self) -> f64 {
        self.y1.hypot(self.y2)
    }

    /// Polar angle in `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        self.y2.atan2(self.y1)
    }

    pub fn dot(self, other: Vec2G) -> f64 {
        self.y1 * other.y1 + self.y2 * other.y2
    }

    /// `det[self, other]`, the oriented area they span.
    pub fn cross(self, other: Vec2G) -> f64 {
        self.y1 * other.y2 - self.y2 * other.y1
    }

    pub fn max_abs(self) -> f64 {
        self.y1.abs().max(self.y2.abs())
    }

    pub fn is_finite(self) -> bool {
        self.y1.is_finite() && self.y2.is_finite()
    }
}

impl Add for Vec2G {
    type Output = Vec2G;
    fn add(self, o: Vec2G) -> Vec2G {
        Vec2G::new(self.y1 + o.y1, self.y2 + o.y2)
    }
}

impl AddAssign for Vec2G {
    fn add_assign(&mut self, o: Vec2G) {
        self.y1 += o.y1;
        self.y2 += o.y2;
    }
}

impl Sub for Vec2G {
    type Output = Vec2G;
    fn sub(self, o: Vec2G) -> Vec2G {
        Vec2G::new(self.y1 - o.y1, self.y2 - o.y2)
    }
}

impl Mul<f64> for Vec2G {
    type Output = Vec2G;
    fn mul(self, k: f64) -> Vec2G {
        Vec2G::new(self.y1 * k, self.y2 * k)
    }
}

impl Mul<Vec2G> for f64 {
    type Output = Vec2G;
    fn mul(self, v: Vec2G) -> Vec2G {
        v * self
    }
}

impl Neg for Vec2G {
    type Output = Vec2G;
    fn neg(self) -> Vec2G {
        Vec2G::new(-self.y1, -self.y2)
    }
}

/// The 3-jet of the polar profile at angle `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormJet {
    pub t: f64,
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
    pub d3f: f64,
}

impl NormJet {
    /// Builds a jet, rejecting non-finite entries and `f <= 0`.
    ///
    /// Jets with a non-positive convexity margin are representable; only
    /// [`NormCurve`] certification enforces strong convexity.
    pub fn new(t: f64, f: f64, df: f64, d2f: f64, d3f: f64) -> Result<Self> {
        ensure_finite("jet", &[t, f, df, d2f, d3f])?;
        if f <= 0.0 {
            return Err(Error::Domain(format!("jet: f = {f} is not positive")));
        }
        Ok(NormJet { t, f, df, d2f, d3f })
    }

    /// The jet of `k·f`, `k > 0`. Every metric quantity of the crate that is
    /// scale invariant is tested against this.
    pub fn scaled(self, k: f64) -> NormJet {
        NormJet {
            f: self.f * k,
            df: self.df * k,
            d2f: self.d2f * k,
            d3f: self.d3f * k,
            ..self
        }
    }

    /// `f'/(2f)`, the logarithmic slope of the indicatrix radius up to sign.
    pub fn log_slope(&self) -> f64 {
        self.df / (2.0 * self.f)
    }
}

/// `2 f f'' - f'^2 + 4 f^2`: positive exactly where the norm is strongly convex.
pub fn convexity_margin(jet: &NormJet) -> Result<f64> {
    ensure_finite("convexity_margin", &[jet.f, jet.df, jet.d2f])?;
    Ok(margin_unchecked(jet))
}

#[inline]
pub(crate) fn margin_unchecked(jet: &NormJet) -> f64 {
    2.0 * jet.f * jet.d2f - jet.df * jet.df + 4.0 * jet.f * jet.f
}

/// Fundamental tensor in the orthogonal polar frame `{∂r, ∂t - (r f'/2f) ∂r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGram {
    pub g_rr: f64,
    pub g_rtau: f64,
    pub g_tautau: f64,
}

pub fn polar_gram(jet: &NormJet, r: f64) -> Result<PolarGram> {
    check_radius(r)?;
    let m = convexity_margin(jet)?;
    Ok(PolarGram {
        g_rr: 2.0 * jet.f,
        g_rtau: 0.0,
        g_tautau: r * r / (2.0 * jet.f) * m,
    })
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius r = {r} must be positive")))
    }
}

/// The polar frame at `y = r(cos t, sin t)` written in the basis `{e1, e2}`:
/// `(∂r, X)` with `X = ∂t - (r f'/2f) ∂r`.
pub fn polar_frame(jet: &NormJet, r: f64) -> (Vec2G, Vec2G) {
    let (s, c) = jet.t.sin_cos();
    let radial = Vec2G::new(c, s);
    let h = jet.log_slope();
    let tangent = Vec2G::new(r * (-s - h * c), r * (c - h * s));
    (radial, tangent)
}

/// A symmetric 2×2 bilinear form in the basis `{e1, e2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gram2 {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl Gram2 {
    pub fn apply(&self, u: Vec2G, v: Vec2G) -> f64 {
        self.g11 * u.y1 * v.y1 + self.g12 * (u.y1 * v.y2 + u.y2 * v.y1) + self.g22 * u.y2 * v.y2
    }

    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * (self.g11 + self.g22);
        let disc = (0.5 * (self.g11 - self.g22)).hypot(self.g12);
        (half_tr - disc, half_tr + disc)
    }
}

/// `g_y` in the basis `{e1, e2}` at `y = r(cos t, sin t)`.
///
/// Obtained from [`polar_gram`] by the change of frame; the frame matrix
/// `[∂r | X]` has determinant `r`.
pub fn gram_in_basis(jet: &NormJet, r: f64) -> Result<Gram2> {
    let pg = polar_gram(jet, r)?;
    if pg.g_tautau <= 0.0 {
        return Err(Error::Convexity {
            t: jet.t,
            margin: convexity_margin(jet)?,
        });
    }
    let (p, x) = polar_frame(jet, r);
    // Rows of P^{-1} are the dual coframe; P = [p | x], det P = r.
    let det = p.cross(x);
    let dual_p = Vec2G::new(x.y2, -x.y1) * (1.0 / det);
    let dual_x = Vec2G::new(-p.y2, p.y1) * (1.0 / det);
    let a = pg.g_rr;
    let b = pg.g_tautau;
    Ok(Gram2 {
        g11: a * dual_p.y1 * dual_p.y1 + b * dual_x.y1 * dual_x.y1,
        g12: a * dual_p.y1 * dual_p.y2 + b * dual_x.y1 * dual_x.y2,
        g22: a * dual_p.y2 * dual_p.y2 + b * dual_x.y2 * dual_x.y2,
    })
}

/// `C_{y(t)}(∂t, ∂t, ∂t) = f'/f + f'''/(4f)` on the indicatrix.
///
/// The Cartan tensor vanishes whenever an argument is `∂r`, so this single
/// value determines it.
pub fn cartan_scalar(jet: &NormJet) -> Result<f64> {
    ensure_finite("cartan_scalar", &[jet.f, jet.df, jet.d3f])?;
    Ok(jet.df / jet.f + jet.d3f / (4.0 * jet.f))
}

/// `C_y(w, w, w)` at `y = r(cos t, sin t)` for any `w`.
///
/// Only the `X`-component `β` of `w = α ∂r + β X` contributes, and by
/// (-1)-homogeneity `C_y(X, X, X) = 2 r² f · cartan_scalar`.
pub fn cartan_cubic(jet: &NormJet, r: f64, w: Vec2G) -> Result<f64> {
    check_radius(r)?;
    let (p, x) = polar_frame(jet, r);
    let beta = p.cross(w) / p.cross(x);
    Ok(beta.powi(3) * 2.0 * r * r * jet.f * cartan_scalar(jet)?)
}

/// Point of the indicatrix `F = 1` at angle `jet.t`.
pub fn indicatrix_point(jet: &NormJet) -> Vec2G {
    Vec2G::from_polar(1.0 / (2.0 * jet.f).sqrt(), jet.t)
}

/// `F(y)` for `y` at radius `r` and the jet's angle.
pub fn norm_value(jet: &NormJet, r: f64) -> f64 {
    r * (2.0 * jet.f).sqrt()
}

/// Provenance of a [`NormCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    SolvedLandsberg,
    SolvedCfc,
    CatalogCase1,
    CatalogCase2,
    CatalogCase3,
    MatrixIndicatrix,
    Custom,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CurveKind::SolvedLandsberg => "solved-landsberg",
            CurveKind::SolvedCfc => "solved-cfc",
            CurveKind::CatalogCase1 => "catalog-case-1",
            CurveKind::CatalogCase2 => "catalog-case-2",
            CurveKind::CatalogCase3 => "catalog-case-3",
            CurveKind::MatrixIndicatrix => "matrix-indicatrix",
            CurveKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Source of jets for a [`NormCurve`]. Implementations are evaluated only
/// at angles inside the curve's domain.
pub trait Profile: Send + Sync {
    fn jet(&self, t: f64) -> Result<NormJet>;
}

struct FnProfile<F>(F);

impl<F> Profile for FnProfile<F>
where
    F: Fn(f64) -> Result<NormJet> + Send + Sync,
{
    fn jet(&self, t: f64) -> Result<NormJet> {
        (self.0)(t)
    }
}

/// A polar profile `t -> NormJet` on a closed interval.
#[derive(Clone)]
pub struct NormCurve {
    domain: (f64, f64),
    kind: CurveKind,
    profile: Arc<dyn Profile>,
}

impl fmt::Debug for NormCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormCurve")
            .field("domain", &self.domain)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

/// Samples used by [`NormCurve::new`] to certify positivity and convexity.
pub const CERTIFICATE_SAMPLES: usize = 65;

impl NormCurve {
    /// Wraps a profile and certifies `f > 0`, margin `> 0` and
    /// `jet(t).t == t` on [`CERTIFICATE_SAMPLES`] evenly spaced angles.
    pub fn new(domain: (f64, f64), kind: CurveKind, profile: Arc<dyn Profile>) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("curve domain [{lo}, {hi}] is empty")));
        }
        let curve = NormCurve { domain, kind, profile };
        curve.certify(CERTIFICATE_SAMPLES)?;
        Ok(curve)
    }

    pub fn from_fn<F>(domain: (f64, f64), kind: CurveKind, jet: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<NormJet> + Send + Sync + 'static,
    {
        NormCurve::new(domain, kind, Arc::new(FnProfile(jet)))
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.domain.0 && t <= self.domain.1
    }

    pub fn jet_at(&self, t: f64) -> Result<NormJet> {
        if !self.contains(t) {
            return Err(Error::Domain(format!(
                "angle t = {t} outside profile domain [{}, {}]",
                self.domain.0, self.domain.1
            )));
        }
        self.profile.jet(t)
    }

    /// Checks the curve invariants on `n` evenly spaced angles.
    pub fn certify(&self, n: usize) -> Result<()> {
        let (lo, hi) = self.domain;
        let n = n.max(2);
        for t in crate::numdiff::linspace(lo, hi, n) {
            let jet = self.profile.jet(t)?;
            if jet.t != t {
                return Err(Error::Domain(format!(
                    "profile returned jet at {} when asked for {t}",
                    jet.t
                )));
            }
            let m = convexity_margin(&jet)?;
            if jet.f <= 0.0 || m <= 0.0 {
                return Err(Error::Convexity { t, margin: m });
            }
        }
        Ok(())
    }

    /// Same profile restricted to a sub-interval.
    pub fn restricted(&self, domain: (f64, f64)) -> Result<NormCurve> {
        if domain.0 < self.domain.0 || domain.1 > self.domain.1 {
            return Err(Error::Domain(format!(
                "[{}, {}] is not inside [{}, {}]",
                domain.0, domain.1, self.domain.0, self.domain.1
            )));
        }
        NormCurve::new(domain, self.kind, self.profile.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn jet(t: f64, f: f64, df: f64, d2f: f64, d3f: f64) -> NormJet {
        NormJet::new(t, f, df, d2f, d3f).unwrap()
    }

    #[test]
    fn margin_examples() {
        assert_eq!(convexity_margin(&jet(0.0, 0.5, 0.0, 0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(convexity_margin(&jet(0.0, 0.5, 0.5, 0.0, 0.0)).unwrap(), 0.75);
        assert_eq!(convexity_margin(&jet(0.0, 1.0, 3.0, 0.0, 0.0)).unwrap(), -5.0);
    }

    #[test]
    fn jet_rejects_bad_input() {
        assert!(NormJet::new(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(NormJet::new(0.0, 1.0, f64::NAN, 0.0, 0.0).is_err());
        let raw = NormJet {
            t: 0.0,
            f: 1.0,
            df: f64::INFINITY,
            d2f: 0.0,
            d3f: 0.0,
        };
        assert!(matches!(convexity_margin(&raw), Err(Error::Domain(_))));
    }

    #[test]
    fn polar_gram_examples() {
        let g = polar_gram(&jet(0.0, 0.5, 0.0, 0.0, 0.0), 1.0).unwrap();
        assert_eq!((g.g_rr, g.g_rtau, g.g_tautau), (1.0, 0.0, 1.0));
        let g = polar_gram(&jet(0.0, 0.5, 0.5, 0.0, 0.0), 1.0).unwrap();
        assert_eq!((g.g_rr, g.g_rtau, g.g_tautau), (1.0, 0.0, 0.75));
        let g = polar_gram(&jet(0.0, 0.5, 0.0, 0.0, 0.0), 2.0).unwrap();
        assert_eq!((g.g_rr, g.g_rtau, g.g_tautau), (1.0, 0.0, 4.0));
        assert!(polar_gram(&jet(0.0, 0.5, 0.0, 0.0, 0.0), 0.0).is_err());
        assert!(polar_gram(&jet(0.0, 0.5, 0.0, 0.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn circle_gram_is_identity() {
        for &t in &[0.0, 0.7, -2.0, 3.0] {
            for &r in &[0.3, 1.0, 5.0] {
                let g = gram_in_basis(&jet(t, 0.5, 0.0, 0.0, 0.0), r).unwrap();
                assert_relative_eq!(g.g11, 1.0, epsilon = 1e-14);
                assert_relative_eq!(g.g12, 0.0, epsilon = 1e-14);
                assert_relative_eq!(g.g22, 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn gram_rejects_nonconvex() {
        let err = gram_in_basis(&jet(0.0, 1.0, 3.0, 0.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(err, Error::Convexity { .. }));
    }

    // Independent oracle: Hessian of F²/2 = r² f(t) by central differences
    // of a closed-form profile.
    #[test]
    fn gram_matches_hessian_of_squared_norm() {
        let f = |t: f64| 0.5 + 0.1 * (3.0 * t).sin() + 0.2 * t;
        let half_sq = |y: Vec2G| y.dot(y) * f(y.angle());
        for &t in &[-0.4, 0.1, 0.9] {
            let j = jet(
                t,
                f(t),
                0.3 * (3.0 * t).cos() + 0.2,
                -0.9 * (3.0 * t).sin(),
                -2.7 * (3.0 * t).cos(),
            );
            let r = 1.3;
            let y = Vec2G::from_polar(r, t);
            let g = gram_in_basis(&j, r).unwrap();
            let h = 1e-4;
            let basis = [Vec2G::E1, Vec2G::E2];
            let mut hess = [[0.0; 2]; 2];
            for i in 0..2 {
                for k in 0..2 {
                    let (a, b) = (basis[i] * h, basis[k] * h);
                    hess[i][k] = (half_sq(y + a + b) - half_sq(y + a - b) - half_sq(y - a + b) + half_sq(y - a - b))
                        / (4.0 * h * h);
                }
            }
            assert_relative_eq!(g.g11, hess[0][0], epsilon = 1e-6);
            assert_relative_eq!(g.g12, hess[0][1], epsilon = 1e-6);
            assert_relative_eq!(g.g22, hess[1][1], epsilon = 1e-6);
            // det P^{-T} G P^{-1} = g_rr g_tautau / r²
            let pg = polar_gram(&j, r).unwrap();
            assert_relative_eq!(g.det(), pg.g_rr * pg.g_tautau / (r * r), max_relative = 1e-12);
        }
    }

    #[test]
    fn cartan_examples() {
        assert_eq!(cartan_scalar(&jet(0.0, 0.5, 0.0, 0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(cartan_scalar(&jet(0.0, 0.5, 0.5, 0.0, 1.0)).unwrap(), 1.5);
        let j = jet(0.3, 0.7, -0.2, 0.4, 1.1);
        assert_relative_eq!(
            cartan_scalar(&j).unwrap(),
            cartan_scalar(&j.scaled(3.5)).unwrap(),
            max_relative = 1e-14
        );
    }

    // Oracle: C_y(w,w,w) = ¼ d³/ds³ F²(y + s w) by a 7-point stencil.
    #[test]
    fn cartan_cubic_matches_third_derivative_of_squared_norm() {
        let f = |t: f64| 0.5 + 0.1 * (3.0 * t).sin() + 0.2 * t;
        let sq = |y: Vec2G| 2.0 * y.dot(y) * f(y.angle());
        for &(t, r) in &[(0.2, 1.0), (-0.5, 0.7), (0.8, 1.6)] {
            let j = jet(
                t,
                f(t),
                0.3 * (3.0 * t).cos() + 0.2,
                -0.9 * (3.0 * t).sin(),
                -2.7 * (3.0 * t).cos(),
            );
            let y = Vec2G::from_polar(r, t);
            let w = Vec2G::new(0.3, -0.8);
            let h = 2e-3;
            let g = |s: f64| sq(y + w * s);
            let d3 = (-g(3.0 * h) + 8.0 * g(2.0 * h) - 13.0 * g(h) + 13.0 * g(-h) - 8.0 * g(-2.0 * h) + g(-3.0 * h))
                / (8.0 * h * h * h);
            let expected = 0.25 * d3;
            assert_relative_eq!(cartan_cubic(&j, r, w).unwrap(), expected, epsilon = 1e-6);
        }
    }

    #[test]
    fn indicatrix_examples() {
        let p = indicatrix_point(&jet(0.0, 0.5, 0.0, 0.0, 0.0));
        assert_eq!(p, Vec2G::new(1.0, 0.0));
        let p = indicatrix_point(&jet(std::f64::consts::FRAC_PI_2, 0.5, 0.0, 0.0, 0.0));
        assert_relative_eq!(p.y1, 0.0, epsilon = 1e-16);
        assert_relative_eq!(p.y2, 1.0, epsilon = 1e-16);
        let p = indicatrix_point(&jet(0.0, 2.0, 0.0, 0.0, 0.0));
        assert_eq!(p, Vec2G::new(0.5, 0.0));
    }

    #[test]
    fn curve_certification() {
        let circle = NormCurve::from_fn((-1.0, 1.0), CurveKind::Custom, |t| NormJet::new(t, 0.5, 0.0, 0.0, 0.0));
        assert!(circle.is_ok());
        let circle = circle.unwrap();
        assert!(circle.jet_at(1.5).is_err());
        assert_eq!(circle.jet_at(0.25).unwrap().t, 0.25);

        // margin 2f f'' - f'^2 + 4f^2 turns negative for f'' < -1 at f = 1/2
        let bad = NormCurve::from_fn((-1.0, 1.0), CurveKind::Custom, |t| {
            NormJet::new(t, 0.5, 0.0, -1.0 - t, 0.0)
        });
        assert!(matches!(bad, Err(Error::Convexity { .. })));

        let lying = NormCurve::from_fn((-1.0, 1.0), CurveKind::Custom, |_| {
            NormJet::new(0.0, 0.5, 0.0, 0.0, 0.0)
        });
        assert!(lying.is_err());
    }
}
