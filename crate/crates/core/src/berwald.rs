//! Berwald norms: orbits of linear flows, the closed-form catalog, and the
//! matrix matched to a Landsberg seed.
//!
//! A left-invariant Berwald norm here has indicatrix `θ -> exp(θA) y0` for a
//! real 2×2 matrix `A = [[a, b], [c, d]]`, equivalently
//! `(a y1 + b y2) ∂1F + (c y1 + d y2) ∂2F = 0`.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::lie_spray::{spray_eta, LieAlgebra2D};
use crate::numdiff::linspace;
use crate::polar_norm::{margin_unchecked, CurveKind, NormCurve, NormJet, Profile, Vec2G};
use crate::solvers::SeedM;

/// The matrix `A = [[a, b], [c, d]]` with `a c != 0` and `a d - b c > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerwaldMatrix {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl BerwaldMatrix {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        ensure_finite("matrix", &[a, b, c, d]).map_err(|e| Error::Validation(e.to_string()))?;
        if a * c == 0.0 {
            return Err(Error::Validation(format!(
                "matrix violates a*c != 0 (a = {a}, c = {c})"
            )));
        }
        if a * d - b * c <= 0.0 {
            return Err(Error::Validation(format!(
                "matrix violates a*d - b*c > 0 (value {})",
                a * d - b * c
            )));
        }
        Ok(BerwaldMatrix { a, b, c, d })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        BerwaldMatrix::new(k * self.a, k * self.b, k * self.c, k * self.d)
    }

    pub fn apply(&self, y: Vec2G) -> Vec2G {
        Vec2G::new(self.a * y.y1 + self.b * y.y2, self.c * y.y1 + self.d * y.y2)
    }

    /// `exp(θA)` as rows.
    pub fn exp(&self, theta: f64) -> [[f64; 2]; 2] {
        expm2([[self.a, self.b], [self.c, self.d]], theta)
    }
}

/// `exp(θM)` for a real 2×2 matrix in closed form.
///
/// With `τ = tr(M)/2` and `B = M - τI`, `B² = δI`, so
/// `exp(θM) = e^{τθ}(C I + S B)` with `C = cosh(θ√δ)`, `S = sinh(θ√δ)/√δ`
/// (trigonometric for `δ < 0`). Near `δθ² = 0`, which includes the defective
/// case, both are summed as series.
pub fn expm2(m: [[f64; 2]; 2], theta: f64) -> [[f64; 2]; 2] {
    let tau = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let delta = half_diff * half_diff + m[0][1] * m[1][0];
    let x = delta * theta * theta;
    let (c, s) = if x.abs() < 1e-3 {
        // cosh(√x) and sinh(√x)/√x as power series in x.
        let c = 1.0 + x / 2.0 * (1.0 + x / 12.0 * (1.0 + x / 30.0 * (1.0 + x / 56.0 * (1.0 + x / 90.0))));
        let s = 1.0 + x / 6.0 * (1.0 + x / 20.0 * (1.0 + x / 42.0 * (1.0 + x / 72.0 * (1.0 + x / 110.0))));
        (c, theta * s)
    } else if delta > 0.0 {
        let w = delta.sqrt();
        ((w * theta).cosh(), (w * theta).sinh() / w)
    } else {
        let w = (-delta).sqrt();
        ((w * theta).cos(), (w * theta).sin() / w)
    };
    let e = (tau * theta).exp();
    [
        [e * (c + s * half_diff), e * s * m[0][1]],
        [e * s * m[1][0], e * (c - s * half_diff)],
    ]
}

/// The matrix whose Berwald norm has the initial jet of `seed`.
///
/// The seed is normalized to `a0 = 1/2`; then with `c0 = ā1`,
/// `c1 = ā2 - 2ā1²`, `c2 = ā3/2 - 3ā1ā2 + 4ā1³` the matrix is
/// `a = -c0`, `c = 1`, `d = -(c2 + 2c1c0 + c0³ + c0)/(c1 + c0² + 1)`,
/// `b = a d - (c1 + c0² + 1)`.
pub fn seed_to_matrix(seed: &SeedM) -> Result<BerwaldMatrix> {
    seed.validate()?;
    let k = 1.0 / (2.0 * seed.a0);
    let (a1, a2, a3) = (seed.a1 * k, seed.a2 * k, seed.a3 * k);
    let c0 = a1;
    let c1 = a2 - 2.0 * a1 * a1;
    let c2 = a3 / 2.0 - 3.0 * a1 * a2 + 4.0 * a1 * a1 * a1;
    let k1 = c1 + c0 * c0 + 1.0;
    let k2 = c2 + 2.0 * c1 * c0 + c0 * c0 * c0 + c0;
    let a = -c0;
    let d = -k2 / k1;
    let b = a * d - k1;
    BerwaldMatrix::new(a, b, 1.0, d)
}

/// How far an indicatrix orbit could be followed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatrixReport {
    pub requested: (f64, f64),
    pub covered: (f64, f64),
    pub truncated: bool,
    pub reason: Option<String>,
}

/// The orbit `θ -> exp(θA)(1/sqrt(2 a0), 0)` restricted to a `θ`-interval on
/// which it stays in `y1 > 0`, turns monotonically and bounds a strongly
/// convex region.
#[derive(Debug, Clone)]
pub struct IndicatrixCurve {
    matrix: BerwaldMatrix,
    a0: f64,
    theta_span: (f64, f64),
    report: IndicatrixReport,
    // (θ, t) samples over theta_span, increasing in θ.
    grid: Vec<(f64, f64)>,
}

const SCAN_STEPS: usize = 400;

impl IndicatrixCurve {
    pub fn matrix(&self) -> &BerwaldMatrix {
        &self.matrix
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn theta_span(&self) -> (f64, f64) {
        self.theta_span
    }

    pub fn report(&self) -> &IndicatrixReport {
        &self.report
    }

    fn start(&self) -> Vec2G {
        Vec2G::new(1.0 / (2.0 * self.a0).sqrt(), 0.0)
    }

    /// `y(θ)`; `None` outside the certified span.
    pub fn point(&self, theta: f64) -> Option<Vec2G> {
        if theta < self.theta_span.0 || theta > self.theta_span.1 {
            return None;
        }
        Some(orbit_point(&self.matrix, self.start(), theta))
    }

    /// Polar-angle range `(t_lo, t_hi)` covered by the certified span.
    pub fn t_span(&self) -> (f64, f64) {
        let first = self.grid[0].1;
        let last = self.grid[self.grid.len() - 1].1;
        (first.min(last), first.max(last))
    }

    /// The `θ` with polar angle `t`, by safeguarded Newton iteration.
    pub fn theta_of_t(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.t_span();
        if t < lo || t > hi {
            return Err(Error::Domain(format!(
                "angle t = {t} outside indicatrix range [{lo}, {hi}]"
            )));
        }
        let increasing = self.grid[self.grid.len() - 1].1 > self.grid[0].1;
        let key = |v: f64| if increasing { v } else { -v };
        let i = self
            .grid
            .partition_point(|&(_, tt)| key(tt) < key(t))
            .clamp(1, self.grid.len() - 1);
        let (mut a, mut b) = (self.grid[i - 1].0, self.grid[i].0);
        let (ta, tb) = (self.grid[i - 1].1, self.grid[i].1);
        if tb == ta {
            return Ok(a);
        }
        let mut theta = a + (b - a) * (t - ta) / (tb - ta);
        let start = self.start();
        for _ in 0..60 {
            let (z, z1) = complex_pair(&self.matrix, start, theta);
            let resid = unwrap_near(z.arg(), t) - t;
            if resid.abs() <= 1e-15 * t.abs().max(1.0) {
                return Ok(theta);
            }
            let slope = (z1 / z).im;
            if key(resid) > 0.0 {
                b = theta;
            } else {
                a = theta;
            }
            let mut next = theta - resid / slope;
            if !(next >= a.min(b) && next <= a.max(b)) {
                next = 0.5 * (a + b);
            }
            if (next - theta).abs() <= 1e-16 * (1.0 + theta.abs()) {
                return Ok(next);
            }
            theta = next;
        }
        Ok(theta)
    }

    /// The polar 3-jet at `θ`, with `t` taken from the curve.
    pub fn jet_at_theta(&self, theta: f64) -> Result<NormJet> {
        let jet = orbit_jet(&self.matrix, self.start(), theta)?;
        Ok(jet)
    }
}

fn orbit_point(m: &BerwaldMatrix, start: Vec2G, theta: f64) -> Vec2G {
    let e = m.exp(theta);
    Vec2G::new(
        e[0][0] * start.y1 + e[0][1] * start.y2,
        e[1][0] * start.y1 + e[1][1] * start.y2,
    )
}

fn as_complex(v: Vec2G) -> Complex64 {
    Complex64::new(v.y1, v.y2)
}

fn complex_pair(m: &BerwaldMatrix, start: Vec2G, theta: f64) -> (Complex64, Complex64) {
    let y = orbit_point(m, start, theta);
    (as_complex(y), as_complex(m.apply(y)))
}

// Keeps atan2 output on the branch closest to `near`.
fn unwrap_near(angle: f64, near: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    angle + two_pi * ((near - angle) / two_pi).round()
}

/// Jet of the polar profile at the orbit point `exp(θA) start`.
///
/// With `z = y1 + i y2` and `z_k = A^k y`, the `θ`-derivatives of
/// `log z = log r + i t` are rational in `z_k / z`; `t` is inverted and
/// `log f = -log 2 - 2 log r` re-expanded in `t` by the chain rule.
fn orbit_jet(m: &BerwaldMatrix, start: Vec2G, theta: f64) -> Result<NormJet> {
    let y = orbit_point(m, start, theta);
    let y1 = m.apply(y);
    let y2 = m.apply(y1);
    let y3 = m.apply(y2);
    let z = as_complex(y);
    let q1 = as_complex(y1) / z;
    let q2 = as_complex(y2) / z;
    let q3 = as_complex(y3) / z;
    let l1 = q1;
    let l2 = q2 - q1 * q1;
    let l3 = q3 - 3.0 * q1 * q2 + 2.0 * q1 * q1 * q1;
    let (t1, t2, t3) = (l1.im, l2.im, l3.im);
    if t1.abs() < 1e-12 * l1.norm().max(1e-300) {
        return Err(Error::Domain(format!("indicatrix stops turning at θ = {theta}")));
    }
    let (g1, g2, g3) = (-2.0 * l1.re, -2.0 * l2.re, -2.0 * l3.re);
    let p1 = g1 / t1;
    let p2 = (g2 - p1 * t2) / (t1 * t1);
    let p3 = (g3 - 3.0 * p2 * t1 * t2 - p1 * t3) / (t1 * t1 * t1);
    let f = 1.0 / (2.0 * y.dot(y));
    NormJet::new(
        y.angle(),
        f,
        f * p1,
        f * (p2 + p1 * p1),
        f * (p3 + 3.0 * p1 * p2 + p1 * p1 * p1),
    )
}

fn orbit_ok(m: &BerwaldMatrix, start: Vec2G, theta: f64, turn_sign: f64) -> std::result::Result<f64, String> {
    let y = orbit_point(m, start, theta);
    if !(y.y1 > 0.0) {
        return Err(format!("orbit leaves the half-plane y1 > 0 at θ = {theta}"));
    }
    let turn = y.cross(m.apply(y));
    if !(turn * turn_sign > 1e-12 * y.dot(y) * (m.as_array().iter().map(|v| v.abs()).sum::<f64>())) {
        return Err(format!("polar angle stops being monotone at θ = {theta}"));
    }
    let jet = orbit_jet(m, start, theta).map_err(|e| e.to_string())?;
    if margin_unchecked(&jet) < 1e-6 * 4.0 * jet.f * jet.f {
        return Err(format!("strong convexity fails at θ = {theta}"));
    }
    Ok(unwrap_near(y.angle(), 0.0))
}

/// Follows the orbit over `theta_span` (which must contain 0), truncating
/// at the first point where it stops being a valid indicatrix.
pub fn indicatrix_from_matrix(m: &BerwaldMatrix, a0: f64, theta_span: (f64, f64)) -> Result<IndicatrixCurve> {
    scan(m, a0, theta_span, None)
}

/// Like [`indicatrix_from_matrix`], but grows the `θ`-interval until the
/// polar angle covers `t_span` (or the orbit ends).
pub fn indicatrix_covering(m: &BerwaldMatrix, a0: f64, t_span: (f64, f64)) -> Result<IndicatrixCurve> {
    // dt/dθ = c at θ = 0, so θ and t start out proportional.
    let guess = (t_span.0.abs().max(t_span.1.abs()) / m.c().abs()) * 1.5 + 1e-3;
    let mut width = guess;
    loop {
        let curve = scan(m, a0, (-width, width), Some(t_span))?;
        let (lo, hi) = curve.t_span();
        if (lo <= t_span.0 && hi >= t_span.1) || curve.report.truncated || width > 1e3 {
            return Ok(curve);
        }
        width *= 2.0;
    }
}

fn scan(m: &BerwaldMatrix, a0: f64, theta_span: (f64, f64), stop_at: Option<(f64, f64)>) -> Result<IndicatrixCurve> {
    if !(a0 > 0.0 && a0.is_finite()) {
        return Err(Error::Validation(format!("a0 = {a0} must be positive")));
    }
    if !(theta_span.0 <= 0.0 && theta_span.1 >= 0.0 && theta_span.0 < theta_span.1) {
        return Err(Error::Validation(format!(
            "θ-span [{}, {}] must contain 0",
            theta_span.0, theta_span.1
        )));
    }
    let start = Vec2G::new(1.0 / (2.0 * a0).sqrt(), 0.0);
    let turn_sign = m.c().signum();
    let t0 = orbit_ok(m, start, 0.0, turn_sign).map_err(Error::Domain)?;
    let mut reason = None;
    let mut side = |end: f64| -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        if end == 0.0 {
            return pts;
        }
        let step = end / SCAN_STEPS as f64;
        for i in 1..=SCAN_STEPS {
            let theta = step * i as f64;
            match orbit_ok(m, start, theta, turn_sign) {
                Ok(t) => {
                    pts.push((theta, t));
                    if let Some((lo, hi)) = stop_at {
                        // One grid cell past the requested angle is enough.
                        if t < lo - (hi - lo) * 0.05 || t > hi + (hi - lo) * 0.05 {
                            break;
                        }
                    }
                }
                Err(why) => {
                    reason.get_or_insert(why);
                    break;
                }
            }
        }
        pts
    };
    let mut back = side(theta_span.0);
    let fwd = side(theta_span.1);
    back.reverse();
    let mut grid = back;
    grid.push((0.0, t0));
    grid.extend(fwd);
    if grid.len() < 3 {
        return Err(Error::Domain(format!(
            "orbit of {:?} is not an indicatrix near θ = 0: {}",
            m.as_array(),
            reason.unwrap_or_default()
        )));
    }
    let covered = (grid[0].0, grid[grid.len() - 1].0);
    let truncated = reason.is_some();
    Ok(IndicatrixCurve {
        matrix: *m,
        a0,
        theta_span: covered,
        report: IndicatrixReport {
            requested: theta_span,
            covered,
            truncated,
            reason,
        },
        grid,
    })
}

struct OrbitProfile(IndicatrixCurve);

impl Profile for OrbitProfile {
    fn jet(&self, t: f64) -> Result<NormJet> {
        let theta = self.0.theta_of_t(t)?;
        let j = self.0.jet_at_theta(theta)?;
        // Shift from the angle actually reached to `t` by Taylor expansion.
        let d = t - unwrap_near(j.t, t);
        NormJet::new(
            t,
            j.f + d * (j.df + d * (j.d2f / 2.0 + d * j.d3f / 6.0)),
            j.df + d * (j.d2f + d * j.d3f / 2.0),
            j.d2f + d * j.d3f,
            j.d3f,
        )
    }
}

/// The polar profile `f(t) = 1/(2 r(t)²)` of an orbit indicatrix, over the
/// polar-angle range it covers.
pub fn norm_from_indicatrix(curve: &IndicatrixCurve) -> Result<NormCurve> {
    let span = curve.t_span();
    NormCurve::new(span, CurveKind::MatrixIndicatrix, Arc::new(OrbitProfile(curve.clone())))
}

/// [`norm_from_indicatrix`] restricted to exactly `t_span`, erroring if the
/// orbit does not reach it.
pub fn berwald_norm(m: &BerwaldMatrix, a0: f64, t_span: (f64, f64)) -> Result<NormCurve> {
    let ind = indicatrix_covering(m, a0, t_span)?;
    let (lo, hi) = ind.t_span();
    if lo > t_span.0 || hi < t_span.1 {
        return Err(Error::Domain(format!(
            "orbit covers only [{lo}, {hi}] of [{}, {}]: {}",
            t_span.0,
            t_span.1,
            ind.report.reason.clone().unwrap_or_default()
        )));
    }
    norm_from_indicatrix(&ind)?.restricted(t_span)
}

/// The three closed-form Berwald families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CatalogCase {
    /// `f = μ e^{-2λt}`, `λ >= 0`: complex eigenvalues.
    Spiral,
    /// `f = μ cos^{2-λ}t sin^λ t`, `λ > 2`: distinct real eigenvalues.
    Power,
    /// `f = μ cos²t e^{-2λ tan t}`, `λ > 0`: a Jordan block.
    Jordan,
}

impl CatalogCase {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(CatalogCase::Spiral),
            2 => Ok(CatalogCase::Power),
            3 => Ok(CatalogCase::Jordan),
            _ => Err(Error::Validation(format!("catalog case must be 1, 2 or 3, got {n}"))),
        }
    }

    pub fn number(&self) -> u8 {
        match self {
            CatalogCase::Spiral => 1,
            CatalogCase::Power => 2,
            CatalogCase::Jordan => 3,
        }
    }

    /// Closed sub-interval of the family's angular domain used for curves.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            CatalogCase::Spiral => (-1.2, 1.2),
            CatalogCase::Power => (0.15, FRAC_PI_2 - 0.15),
            CatalogCase::Jordan => (-1.2, 1.2),
        }
    }

    fn kind(&self) -> CurveKind {
        match self {
            CatalogCase::Spiral => CurveKind::CatalogCase1,
            CatalogCase::Power => CurveKind::CatalogCase2,
            CatalogCase::Jordan => CurveKind::CatalogCase3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogParams {
    pub case: CatalogCase,
    pub lambda: f64,
    pub mu: f64,
}

impl CatalogParams {
    pub fn new(case: CatalogCase, lambda: f64, mu: f64) -> Result<Self> {
        let p = CatalogParams { case, lambda, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("catalog parameters", &[self.lambda, self.mu]).map_err(|e| Error::Validation(e.to_string()))?;
        if self.mu <= 0.0 {
            return Err(Error::Validation(format!("mu = {} must be positive", self.mu)));
        }
        let (ok, rule) = match self.case {
            CatalogCase::Spiral => (self.lambda >= 0.0, "case 1 requires lambda >= 0"),
            CatalogCase::Power => (self.lambda > 2.0, "case 2 requires lambda > 2"),
            CatalogCase::Jordan => (self.lambda > 0.0, "case 3 requires lambda > 0"),
        };
        if !ok {
            return Err(Error::Validation(format!("{rule} (got {})", self.lambda)));
        }
        Ok(())
    }

    /// `(log f, φ', φ'', φ''')` at `t`, where `φ = log f`.
    fn log_jet(&self, t: f64) -> [f64; 4] {
        let l = self.lambda;
        let lm = self.mu.ln();
        match self.case {
            CatalogCase::Spiral => [lm - 2.0 * l * t, -2.0 * l, 0.0, 0.0],
            CatalogCase::Power => {
                let (s, c) = t.sin_cos();
                let (tan, cot) = (s / c, c / s);
                let (sec2, csc2) = (1.0 / (c * c), 1.0 / (s * s));
                [
                    lm + (2.0 - l) * c.ln() + l * s.ln(),
                    -(2.0 - l) * tan + l * cot,
                    -(2.0 - l) * sec2 - l * csc2,
                    -2.0 * (2.0 - l) * sec2 * tan + 2.0 * l * csc2 * cot,
                ]
            }
            CatalogCase::Jordan => {
                let (s, c) = t.sin_cos();
                let tan = s / c;
                let sec2 = 1.0 / (c * c);
                [
                    lm + 2.0 * c.ln() - 2.0 * l * tan,
                    -2.0 * tan - 2.0 * l * sec2,
                    -2.0 * sec2 - 4.0 * l * sec2 * tan,
                    -4.0 * sec2 * tan - 4.0 * l * sec2 * (2.0 * tan * tan + sec2),
                ]
            }
        }
    }

    pub fn jet(&self, t: f64) -> Result<NormJet> {
        let [lf, p1, p2, p3] = self.log_jet(t);
        let f = lf.exp();
        NormJet::new(
            t,
            f,
            f * p1,
            f * (p2 + p1 * p1),
            f * (p3 + 3.0 * p1 * p2 + p1 * p1 * p1),
        )
    }
}

/// The closed-form profile of a catalog family on [`CatalogCase::domain`].
pub fn catalog_norm(p: &CatalogParams) -> Result<NormCurve> {
    p.validate()?;
    let params = *p;
    NormCurve::from_fn(p.case.domain(), p.case.kind(), move |t| params.jet(t))
}

/// Least-squares fit of `η` by quadratic forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    /// Coefficients of `(y1², y1 y2, y2²)` for each component of `η`.
    pub eta1: [f64; 3],
    pub eta2: [f64; 3],
    /// Largest fit error divided by the largest `|η|` sampled.
    pub residual: f64,
}

const FIT_RAYS: usize = 24;
const FIT_RADII: [f64; 3] = [0.5, 1.0, 2.0];

/// Fits both components of `η` over rays spanning the curve's domain.
/// A residual at rounding level certifies that `η` is quadratic, i.e. that
/// the metric is Berwald.
pub fn eta_quadratic_fit(alg: &LieAlgebra2D, curve: &NormCurve) -> Result<QuadraticFit> {
    let (lo, hi) = curve.domain();
    let pad = 0.01 * (hi - lo);
    if hi - lo < 1e-6 {
        return Err(Error::Validation(format!("domain [{lo}, {hi}] too narrow to fit")));
    }
    let mut rows = Vec::new();
    let mut rhs1 = Vec::new();
    let mut rhs2 = Vec::new();
    for i in 0..FIT_RAYS {
        let t = lo + pad + (hi - lo - 2.0 * pad) * i as f64 / (FIT_RAYS - 1) as f64;
        let jet = curve.jet_at(t)?;
        for &r in &FIT_RADII {
            let y = Vec2G::from_polar(r, t);
            let eta = spray_eta(alg, &jet, r)?;
            rows.push([y.y1 * y.y1, y.y1 * y.y2, y.y2 * y.y2]);
            rhs1.push(eta.y1);
            rhs2.push(eta.y2);
        }
    }
    let n = rows.len();
    let design = DMatrix::from_fn(n, 3, |i, j| rows[i][j]);
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    if sv.min() <= 1e-12 * smax {
        return Err(Error::Validation(
            "sample grid is degenerate for a quadratic fit".into(),
        ));
    }
    let solve = |b: &Vec<f64>| -> Result<DVector<f64>> {
        svd.solve(&DVector::from_column_slice(b), 1e-14)
            .map_err(|e| Error::Validation(format!("least squares failed: {e}")))
    };
    let x1 = solve(&rhs1)?;
    let x2 = solve(&rhs2)?;
    let fit1 = &design * &x1;
    let fit2 = &design * &x2;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..n {
        worst = worst.max((fit1[i] - rhs1[i]).abs()).max((fit2[i] - rhs2[i]).abs());
        scale = scale.max(rhs1[i].hypot(rhs2[i]));
    }
    Ok(QuadraticFit {
        eta1: [x1[0], x1[1], x1[2]],
        eta2: [x2[0], x2[1], x2[2]],
        residual: if scale > 0.0 { worst / scale } else { 0.0 },
    })
}

pub fn eta_quadratic_residual(alg: &LieAlgebra2D, curve: &NormCurve) -> Result<f64> {
    Ok(eta_quadratic_fit(alg, curve)?.residual)
}

const PDE_RAYS: usize = 49;

/// `max |(a y1 + b y2) ∂1F + (c y1 + d y2) ∂2F| / (F·|A|)` over rays in the
/// curve's domain, `|A|` the Frobenius norm.
pub fn berwald_pde_residual(m: &BerwaldMatrix, curve: &NormCurve) -> Result<f64> {
    let (lo, hi) = curve.domain();
    let norm = m.as_array().iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut worst = 0.0f64;
    for t in linspace(lo, hi, PDE_RAYS) {
        let jet = curve.jet_at(t)?;
        let h = jet.log_slope();
        let (s, c) = t.sin_cos();
        // r·∇F/F in the basis {e1, e2}.
        let g1 = c - h * s;
        let g2 = s + h * c;
        let v = (m.a * c + m.b * s) * g1 + (m.c * c + m.d * s) * g2;
        worst = worst.max(v.abs());
    }
    Ok(worst / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn matrix_examples() {
        let s = SeedM::new(0.5, 0.5, 0.0, 0.0).unwrap();
        let m = seed_to_matrix(&s).unwrap();
        assert_relative_eq!(m.a(), -0.5, epsilon = 1e-15);
        assert_relative_eq!(m.b(), -1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(m.c(), 1.0);
        assert_relative_eq!(m.d(), -5.0 / 6.0, epsilon = 1e-15);

        let s = SeedM::new(0.5, 0.5, 1.0, 0.0).unwrap();
        let m = seed_to_matrix(&s).unwrap();
        assert_relative_eq!(m.a(), -0.5, epsilon = 1e-15);
        assert_relative_eq!(m.b(), -12.0 / 7.0, epsilon = 1e-14);
        assert_relative_eq!(m.d(), -1.0 / 14.0, epsilon = 1e-15);

        assert!(BerwaldMatrix::new(0.0, -1.0, 1.0, 0.0).is_err());
        assert!(BerwaldMatrix::new(1.0, 2.0, 1.0, 1.0).is_err());
    }

    fn expm_series(m: [[f64; 2]; 2], theta: f64) -> [[f64; 2]; 2] {
        let mut out = [[1.0, 0.0], [0.0, 1.0]];
        let mut term = out;
        for k in 1..60 {
            let mut next = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = (term[i][0] * m[0][j] + term[i][1] * m[1][j]) * theta / k as f64;
                }
            }
            term = next;
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += term[i][j];
                }
            }
        }
        out
    }

    #[test]
    fn exponential_all_spectral_types() {
        let cases = [
            [[-0.5, -1.0 / 3.0], [1.0, -5.0 / 6.0]],
            [[1.0, 2.0], [0.5, -0.3]],
            [[0.3, -2.0], [1.5, 0.1]],
            [[2.0, 0.0], [1.0, 2.0]],
            [[1.0, 1e-9], [1.0, 1.0]],
        ];
        for m in cases {
            for theta in [-0.7, 0.01, 0.4, 1.3] {
                let a = expm2(m, theta);
                let b = expm_series(m, theta);
                for i in 0..2 {
                    for j in 0..2 {
                        assert_relative_eq!(a[i][j], b[i][j], epsilon = 1e-12, max_relative = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn indicatrix_basics() {
        let m = seed_to_matrix(&SeedM::new(0.5, 0.5, 0.0, 0.0).unwrap()).unwrap();
        let ind = indicatrix_from_matrix(&m, 0.5, (-0.2, 0.2)).unwrap();
        assert_eq!(ind.point(0.0).unwrap(), Vec2G::new(1.0, 0.0));
        let h = 1e-6;
        let d = (ind.point(h).unwrap() - ind.point(-h).unwrap()) * (0.5 / h);
        assert_relative_eq!(d.y1, m.a(), epsilon = 1e-8);
        assert_relative_eq!(d.y2, m.c(), epsilon = 1e-8);
        let f = norm_from_indicatrix(&ind).unwrap();
        assert_relative_eq!(f.jet_at(0.0).unwrap().f, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn orbit_jet_reproduces_seed() {
        let seed = SeedM::new(0.8, -0.4, 0.3, 1.1).unwrap();
        let m = seed_to_matrix(&seed).unwrap();
        let curve = berwald_norm(&m, seed.a0, (-0.1, 0.1)).unwrap();
        let j = curve.jet_at(0.0).unwrap();
        assert_relative_eq!(j.f, seed.a0, max_relative = 1e-14);
        assert_relative_eq!(j.df, seed.a1, epsilon = 1e-12);
        assert_relative_eq!(j.d2f, seed.a2, epsilon = 1e-12);
        assert_relative_eq!(j.d3f, seed.a3, epsilon = 1e-11);
    }

    #[test]
    fn catalog_examples() {
        let c = catalog_norm(&CatalogParams::new(CatalogCase::Spiral, 0.0, 0.5).unwrap()).unwrap();
        let j = c.jet_at(0.3).unwrap();
        assert_eq!((j.f, j.df, j.d2f, j.d3f), (0.5, 0.0, 0.0, 0.0));

        let p = CatalogParams::new(CatalogCase::Power, 3.0, 1.0).unwrap();
        assert_relative_eq!(p.jet(FRAC_PI_4).unwrap().f, 0.5, epsilon = 1e-15);

        assert!(CatalogParams::new(CatalogCase::Power, 1.5, 1.0).is_err());
        assert!(CatalogParams::new(CatalogCase::Jordan, 0.0, 1.0).is_err());
        assert!(CatalogParams::new(CatalogCase::Spiral, 0.5, 0.0).is_err());
    }

    // F = sqrt(2μ)·y1·e^{-λ y2/y1} is annihilated by λ y1 ∂1 + (y1 + λ y2) ∂2.
    #[test]
    fn jordan_case_pde() {
        for (l, mu) in [(0.5, 1.0), (2.0, 0.3)] {
            let c = catalog_norm(&CatalogParams::new(CatalogCase::Jordan, l, mu).unwrap()).unwrap();
            let m = BerwaldMatrix::new(l, 0.0, 1.0, l).unwrap();
            assert!(berwald_pde_residual(&m, &c).unwrap() < 1e-12);
        }
    }

    #[test]
    fn pde_residual_controls() {
        let seed = SeedM::new(0.5, 0.5, 0.0, 0.0).unwrap();
        let m = seed_to_matrix(&seed).unwrap();
        let curve = berwald_norm(&m, 0.5, (-0.1, 0.1)).unwrap();
        let r = berwald_pde_residual(&m, &curve).unwrap();
        assert!(r < 1e-10, "{r}");
        assert_relative_eq!(
            r,
            berwald_pde_residual(&m.scaled(2.0).unwrap(), &curve).unwrap(),
            epsilon = 1e-15
        );

        let circle = catalog_norm(&CatalogParams::new(CatalogCase::Spiral, 0.0, 0.5).unwrap()).unwrap();
        let m = BerwaldMatrix::new(-1.0, 0.0, 1.0, -1.0).unwrap();
        assert!(berwald_pde_residual(&m, &circle).unwrap() > 0.1);
    }

    #[test]
    fn quadratic_fit_controls() {
        let alg = LieAlgebra2D::CANONICAL;
        let circle = catalog_norm(&CatalogParams::new(CatalogCase::Spiral, 0.0, 0.5).unwrap()).unwrap();
        let fit = eta_quadratic_fit(&alg, &circle).unwrap();
        assert!(fit.residual < 1e-12);
        for (got, want) in fit.eta1.iter().zip([0.0, 0.0, 1.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-10);
        }
        for (got, want) in fit.eta2.iter().zip([0.0, -1.0, 0.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-10);
        }

        let power = catalog_norm(&CatalogParams::new(CatalogCase::Power, 3.0, 1.0).unwrap()).unwrap();
        let fit = eta_quadratic_fit(&alg, &power).unwrap();
        assert!(fit.residual < 1e-9);
        for (got, want) in fit.eta1.iter().zip([3.0, 0.0, 0.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-8);
        }
        for (got, want) in fit.eta2.iter().zip([0.0, 1.0, 0.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-8);
        }

        let wobble = NormCurve::from_fn((-0.5, 0.5), CurveKind::Custom, |t| {
            NormJet::new(
                t,
                0.5 + 0.1 * (3.0 * t).sin(),
                0.3 * (3.0 * t).cos(),
                -0.9 * (3.0 * t).sin(),
                -2.7 * (3.0 * t).cos(),
            )
        })
        .unwrap();
        assert!(eta_quadratic_residual(&alg, &wobble).unwrap() > 1e-3);
    }
}
