//! Initial-value solvers for the Landsberg and constant flag curvature
//! profiles.
//!
//! Both equations are regular at `t = 0` exactly when the initial jet lies in
//! the set 𝓜 of [`SeedM`]. Solutions are integrated outwards from 0 in both
//! directions and stored as piecewise Chebyshev interpolants of the full
//! 3-jet.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chebyshev::{adaptive, cover, ChebInterp, PiecewiseJetProfile};
use crate::error::{ensure_finite, Error, Result};
use crate::numdiff::linspace;
use crate::ode::{integrate, OdeOptions, Stop};
use crate::polar_norm::{margin_unchecked, CurveKind, NormCurve, NormJet, CERTIFICATE_SAMPLES};

/// Initial jet `(f, f', f'', f''')(0) = (a0, a1, a2, a3)` in 𝓜:
/// `a0 > 0`, `a1 != 0`, `2 a0 a2 - a1² + 4 a0² > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedM {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl SeedM {
    pub fn new(a0: f64, a1: f64, a2: f64, a3: f64) -> Result<Self> {
        let seed = SeedM { a0, a1, a2, a3 };
        seed.validate()?;
        Ok(seed)
    }

    /// Parses `"a0,a1,a2,a3"`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Validation(format!(
                "seed needs four comma-separated numbers a0,a1,a2,a3, got {text:?}"
            )));
        }
        let mut v = [0.0; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::Validation(format!("seed entry {p:?} is not a number")))?;
        }
        SeedM::new(v[0], v[1], v[2], v[3])
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("seed", &[self.a0, self.a1, self.a2, self.a3]).map_err(|e| Error::Validation(e.to_string()))?;
        if self.a0 <= 0.0 {
            return Err(Error::Validation(format!("seed violates a0 > 0 (a0 = {})", self.a0)));
        }
        if self.a1 == 0.0 {
            return Err(Error::Validation("seed violates a1 != 0".into()));
        }
        let m = self.margin();
        if m <= 0.0 {
            return Err(Error::Validation(format!(
                "seed violates 2*a0*a2 - a1^2 + 4*a0^2 > 0 (value {m})"
            )));
        }
        Ok(())
    }

    /// `2 a0 a2 - a1² + 4 a0²`, the convexity margin of the seed jet.
    pub fn margin(&self) -> f64 {
        2.0 * self.a0 * self.a2 - self.a1 * self.a1 + 4.0 * self.a0 * self.a0
    }

    /// The margin divided by `4 a0²`, invariant under `f -> k f`.
    pub fn normalized_margin(&self) -> f64 {
        self.margin() / (4.0 * self.a0 * self.a0)
    }

    pub fn jet(&self) -> NormJet {
        NormJet {
            t: 0.0,
            f: self.a0,
            df: self.a1,
            d2f: self.a2,
            d3f: self.a3,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a0, self.a1, self.a2, self.a3]
    }
}

/// The Cartan scalar of the unit tangent,
/// `κ = (f'/f + f'''/(4f)) · 8 f³ / margin^{3/2}`; constant along a profile
/// exactly when the metric is Landsberg.
pub fn landsberg_first_integral(jet: &NormJet) -> Result<f64> {
    ensure_finite("jet", &[jet.f, jet.df, jet.d2f, jet.d3f])?;
    let m = margin_unchecked(jet);
    if m <= 0.0 {
        return Err(Error::Convexity { t: jet.t, margin: m });
    }
    let cartan = jet.df / jet.f + jet.d3f / (4.0 * jet.f);
    Ok(cartan * 8.0 * jet.f.powi(3) / m.powf(1.5))
}

fn indicatrix_speed_factor(t: f64, f: f64, df: f64) -> f64 {
    -2.0 * f * t.sin() - df * t.cos()
}

/// `λ` with `u = λ·η` on the indicatrix for `[e1, e2] = e2`:
/// `sqrt(2 f · margin) / (-2 f sin t - f' cos t)`.
pub fn cfc_lambda(jet: &NormJet) -> Result<f64> {
    ensure_finite("jet", &[jet.t, jet.f, jet.df, jet.d2f])?;
    let m = margin_unchecked(jet);
    if m <= 0.0 {
        return Err(Error::Convexity { t: jet.t, margin: m });
    }
    let d = indicatrix_speed_factor(jet.t, jet.f, jet.df);
    if d.abs() <= 1e-13 * (2.0 * jet.f + jet.df.abs()) {
        return Err(Error::Singularity(format!(
            "η vanishes on the indicatrix at t = {}",
            jet.t
        )));
    }
    Ok((2.0 * jet.f * m).sqrt() / d)
}

/// Coverage of a solved profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub requested: (f64, f64),
    pub covered: (f64, f64),
    pub truncated: bool,
    pub message: Option<String>,
    /// Chebyshev nodes used on each side of 0, summed over pieces.
    pub nodes: (usize, usize),
    /// Where integration itself stopped on each side; equal to `requested`
    /// unless the solution degenerates first. `covered` backs off from it.
    pub integrated: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct SolvedCurve {
    pub curve: NormCurve,
    pub report: SolveReport,
}

/// Default interval of integration.
pub const DEFAULT_T_SPAN: (f64, f64) = (-0.15, 0.15);

fn check_t_span(t_span: (f64, f64), tol: f64) -> Result<()> {
    let (lo, hi) = t_span;
    if !(lo.is_finite() && hi.is_finite() && lo <= 0.0 && hi >= 0.0 && lo < hi) {
        return Err(Error::Validation(format!("t-span [{lo}, {hi}] must contain 0")));
    }
    if hi - lo > std::f64::consts::PI {
        return Err(Error::Validation(format!("t-span [{lo}, {hi}] is wider than pi")));
    }
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(Error::Validation(format!("tolerance {tol} must lie in (0, 1e-2)")));
    }
    Ok(())
}

const CHEB_START: usize = 16;
const CHEB_MAX: usize = 128;
// Smallest piece, relative to the side length, worth splitting further.
const MIN_PIECE: f64 = 1e-6;
/// Tolerance of the runs sampling the interpolants, relative to the solve tolerance.
const SAMPLE_TOL_FACTOR: f64 = 1e-2;

fn solve_profile<const N: usize, R, G, J>(
    rhs: R,
    guard: G,
    to_jet: J,
    y0: [f64; N],
    t_span: (f64, f64),
    tol: f64,
    kind: CurveKind,
) -> Result<SolvedCurve>
where
    R: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    G: Fn(f64, &[f64; N]) -> Result<()>,
    J: Fn(f64, &[f64; N]) -> Result<[f64; 4]>,
{
    let opts = OdeOptions {
        h_init: Some(1e-3),
        ..OdeOptions::with_tol(tol)
    };
    // Pieces are sampled by separate runs from 0; their global errors differ,
    // and differences across piece boundaries would see the jump.
    let sample_opts = OdeOptions {
        h_init: Some(1e-3),
        ..OdeOptions::with_tol((tol * SAMPLE_TOL_FACTOR).max(1e-13))
    };
    let cheb_tol = (tol * 10.0).max(1e-13);
    let mut messages = Vec::new();
    let mut side = |end: f64| -> Result<(Vec<ChebInterp<4>>, f64, f64)> {
        if end == 0.0 {
            return Ok((Vec::new(), 0.0, 0.0));
        }
        let scout = integrate(&rhs, &guard, 0.0, y0, end, &[], &opts);
        let mut reach = end;
        let integrated = if scout.stop == Stop::Completed {
            end
        } else {
            scout.t_last()
        };
        if scout.stop != Stop::Completed {
            if let Some(m) = &scout.message {
                messages.push(m.clone());
            }
            // Stay a hair inside the last certified point.
            reach = scout.t_last() * (1.0 - 1e-9);
            if reach.abs() < 1e-6 {
                return Ok((Vec::new(), 0.0, scout.t_last()));
            }
        }
        let fit = |a: f64, b: f64| {
            adaptive::<4, _>(a, b, CHEB_START, CHEB_MAX, cheb_tol, |nodes| {
                // Integrate outwards from 0 through the nodes.
                let mut outward: Vec<f64> = nodes.to_vec();
                if reach < 0.0 {
                    outward.reverse();
                }
                let from_zero = outward[0] == 0.0;
                let targets = if from_zero { &outward[1..] } else { &outward[..] };
                let far = *outward.last().expect("nodes");
                let run = integrate(&rhs, &guard, 0.0, y0, far, targets, &sample_opts);
                if run.outputs.len() != targets.len() {
                    return Err(Error::Singularity(format!(
                        "profile integration stopped at t = {}: {}",
                        run.t_last(),
                        run.message.clone().unwrap_or_default()
                    )));
                }
                let mut jets = Vec::with_capacity(outward.len());
                if from_zero {
                    jets.push(to_jet(0.0, &y0)?);
                }
                for (t, y) in targets.iter().zip(&run.outputs) {
                    jets.push(to_jet(*t, y)?);
                }
                if reach < 0.0 {
                    jets.reverse();
                }
                Ok(jets)
            })
        };
        let (mut pieces, mut covered, err) = cover(0.0, reach, MIN_PIECE * reach.abs(), fit);
        if let Some(e) = err {
            messages.push(format!("no interpolant beyond t = {covered}: {e}"));
        }
        // Certify outwards and cut at the first failing piece.
        if reach < 0.0 {
            pieces.reverse();
        }
        let mut kept = Vec::with_capacity(pieces.len());
        for piece in pieces {
            let bad = linspace(piece.lo(), piece.hi(), CERTIFICATE_SAMPLES)
                .into_iter()
                .find_map(|t| {
                    let [f, df, d2f, _] = piece.eval(t);
                    let m = 2.0 * f * d2f - df * df + 4.0 * f * f;
                    (!(f > 0.0 && m > 0.0)).then_some(Error::Convexity { t, margin: m })
                });
            if let Some(e) = bad {
                covered = if reach < 0.0 { piece.hi() } else { piece.lo() };
                messages.push(format!("interpolant not certified: {e}"));
                break;
            }
            kept.push(piece);
        }
        Ok((kept, covered, integrated))
    };
    let (left, lo, int_lo) = side(t_span.0)?;
    let (right, hi, int_hi) = side(t_span.1)?;
    if lo == hi {
        return Err(Error::Singularity(format!(
            "no interval around 0 could be integrated: {}",
            messages.join("; ")
        )));
    }
    let count = |p: &[ChebInterp<4>]| p.iter().map(|c| c.degree() + 1).sum();
    let nodes = (count(&left), count(&right));
    let profile = PiecewiseJetProfile::new(left.into_iter().chain(right).collect())?;
    let curve = NormCurve::new((lo, hi), kind, Arc::new(profile))?;
    let truncated = lo > t_span.0 || hi < t_span.1;
    Ok(SolvedCurve {
        curve,
        report: SolveReport {
            requested: t_span,
            covered: (lo, hi),
            integrated: (int_lo, int_hi),
            truncated,
            message: (!messages.is_empty()).then(|| messages.join("; ")),
            nodes,
        },
    })
}

fn profile_guard(f: f64, m: f64, t: f64) -> Result<()> {
    if !(f >= 1e-8) || !(m >= 1e-6 * 4.0 * f * f) {
        return Err(Error::Convexity { t, margin: m });
    }
    Ok(())
}

/// Solves the Landsberg equation from `seed`: the first integral `κ` is held
/// at its seed value and solved for `f'''`, giving a third-order system in
/// `(f, f', f'')`.
///
/// If convexity degenerates inside `t_span`, the returned curve covers the
/// largest certified sub-interval and the report says so.
pub fn solve_landsberg(seed: &SeedM, t_span: (f64, f64), tol: f64) -> Result<SolvedCurve> {
    seed.validate()?;
    check_t_span(t_span, tol)?;
    let kappa = landsberg_first_integral(&seed.jet())?;
    let third = move |f: f64, df: f64, d2f: f64| {
        let m = 2.0 * f * d2f - df * df + 4.0 * f * f;
        (m, kappa * m.max(0.0).powf(1.5) / (2.0 * f * f) - 4.0 * df)
    };
    let rhs = move |t: f64, y: &[f64; 3]| {
        let (m, d3f) = third(y[0], y[1], y[2]);
        profile_guard(y[0], m, t)?;
        Ok([y[1], y[2], d3f])
    };
    let guard = move |t: f64, y: &[f64; 3]| profile_guard(y[0], third(y[0], y[1], y[2]).0, t);
    let to_jet = move |t: f64, y: &[f64; 3]| {
        if t == 0.0 {
            return Ok(seed.as_array());
        }
        Ok([y[0], y[1], y[2], third(y[0], y[1], y[2]).1])
    };
    solve_profile(
        rhs,
        guard,
        to_jet,
        [seed.a0, seed.a1, seed.a2],
        t_span,
        tol,
        CurveKind::SolvedLandsberg,
    )
}

struct CfcPoint {
    d2f: f64,
    ds_dt: f64,
    d3f: f64,
}

fn cfc_point(t: f64, y: &[f64; 4]) -> Result<CfcPoint> {
    let [f, df, lambda, mu] = *y;
    if !(f >= 1e-8) {
        return Err(Error::Convexity { t, margin: f64::NAN });
    }
    let d = indicatrix_speed_factor(t, f, df);
    if d.abs() <= 1e-10 * (2.0 * f + df.abs()) {
        return Err(Error::Singularity(format!("η vanishes on the indicatrix at t = {t}")));
    }
    let m = lambda * lambda * d * d / (2.0 * f);
    profile_guard(f, m, t)?;
    let d2f = (m + df * df - 4.0 * f * f) / (2.0 * f);
    let rho = (2.0 * f).sqrt() * d / m;
    let ds_dt = -1.0 / rho;
    let dlambda = mu * ds_dt;
    let (s, co) = t.sin_cos();
    let dd = -df * s - 2.0 * f * co - d2f * co;
    let d3f = (m / f) * (dlambda / lambda - df / (2.0 * f) + dd / d) - 4.0 * df;
    Ok(CfcPoint { d2f, ds_dt, d3f })
}

/// Solves the constant flag curvature equation `K ≡ c` from `seed`.
///
/// The state is `(f, f', λ, μ)` with `u = λ η` on the indicatrix and
/// `μ = dλ/ds`; the curvature condition is `λ''(s) = -c λ(s)`, and `f''`,
/// `f'''` are recovered algebraically from `λ` and `μ`.
pub fn solve_cfc(seed: &SeedM, c: f64, t_span: (f64, f64), tol: f64) -> Result<SolvedCurve> {
    seed.validate()?;
    check_t_span(t_span, tol)?;
    ensure_finite("c", &[c]).map_err(|e| Error::Validation(e.to_string()))?;
    let jet0 = seed.jet();
    let lambda0 = cfc_lambda(&jet0)?;
    // λ'/λ from the t-derivatives of sqrt(2 f m) and of D = -2 f sin t - f' cos t.
    let m0 = seed.margin();
    let dm0 = 2.0 * seed.a0 * (seed.a3 + 4.0 * seed.a1);
    let d0 = -seed.a1;
    let dd0 = -2.0 * seed.a0 - seed.a2;
    let dlog = 0.5 * seed.a1 / seed.a0 + 0.5 * dm0 / m0 - dd0 / d0;
    let rho0 = (2.0 * seed.a0).sqrt() * d0 / m0;
    let mu0 = -rho0 * lambda0 * dlog;

    let rhs = move |t: f64, y: &[f64; 4]| {
        let p = cfc_point(t, y)?;
        Ok([y[1], p.d2f, y[3] * p.ds_dt, -c * y[2] * p.ds_dt])
    };
    let guard = move |t: f64, y: &[f64; 4]| cfc_point(t, y).map(|_| ());
    let to_jet = move |t: f64, y: &[f64; 4]| {
        if t == 0.0 {
            return Ok(seed.as_array());
        }
        let p = cfc_point(t, y)?;
        Ok([y[0], y[1], p.d2f, p.d3f])
    };
    solve_profile(
        rhs,
        guard,
        to_jet,
        [seed.a0, seed.a1, lambda0, mu0],
        t_span,
        tol,
        CurveKind::SolvedCfc,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn seed_membership() {
        assert!(SeedM::new(0.5, 0.5, 0.0, 0.0).is_ok());
        let e = SeedM::new(0.5, 0.0, 0.0, 0.0).unwrap_err().to_string();
        assert!(e.contains("a1 != 0"), "{e}");
        let e = SeedM::new(-0.5, 0.5, 0.0, 0.0).unwrap_err().to_string();
        assert!(e.contains("a0 > 0"), "{e}");
        let e = SeedM::new(1.0, 3.0, 0.0, 0.0).unwrap_err().to_string();
        assert!(e.contains("2*a0*a2 - a1^2 + 4*a0^2 > 0"), "{e}");
        assert_eq!(
            SeedM::parse("0.5, 0.5,0,0").unwrap(),
            SeedM::new(0.5, 0.5, 0.0, 0.0).unwrap()
        );
        assert!(SeedM::parse("0.5,0.5,0").is_err());
    }

    #[test]
    fn first_integral_examples() {
        let j = |f, df, d2f, d3f| NormJet::new(0.0, f, df, d2f, d3f).unwrap();
        assert_eq!(landsberg_first_integral(&j(0.5, 0.0, 0.0, 0.0)).unwrap(), 0.0);
        assert_relative_eq!(
            landsberg_first_integral(&j(0.5, 0.5, 0.0, 0.0)).unwrap(),
            1.539600717839002,
            epsilon = 1e-12
        );
        let base = j(0.7, -0.3, 0.4, 1.3);
        for k in [0.5, 2.0] {
            assert_relative_eq!(
                landsberg_first_integral(&base.scaled(k)).unwrap(),
                landsberg_first_integral(&base).unwrap(),
                max_relative = 1e-14
            );
        }
        assert!(matches!(
            landsberg_first_integral(&j(1.0, 3.0, 0.0, 0.0)),
            Err(Error::Convexity { .. })
        ));
    }

    #[test]
    fn lambda_examples() {
        let j = NormJet::new(0.0, 0.5, 0.5, 0.0, 0.0).unwrap();
        assert_relative_eq!(cfc_lambda(&j).unwrap(), -(3.0f64.sqrt()), epsilon = 1e-14);
        let flat = NormJet::new(0.0, 0.5, 0.0, 0.0, 0.0).unwrap();
        assert!(matches!(cfc_lambda(&flat), Err(Error::Singularity(_))));
        let k: f64 = 2.0;
        assert_relative_eq!(
            cfc_lambda(&j.scaled(k)).unwrap(),
            k.sqrt() * cfc_lambda(&j).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn landsberg_solution_conserves_kappa() {
        let seed = SeedM::new(0.5, 0.5, 0.0, 0.0).unwrap();
        let sol = solve_landsberg(&seed, DEFAULT_T_SPAN, 1e-10).unwrap();
        assert!(!sol.report.truncated);
        let j0 = sol.curve.jet_at(0.0).unwrap();
        assert_eq!([j0.f, j0.df, j0.d2f, j0.d3f], seed.as_array());
        let k0 = landsberg_first_integral(&j0).unwrap();
        for i in 0..=40 {
            let t = -0.15 + 0.3 * i as f64 / 40.0;
            let k = landsberg_first_integral(&sol.curve.jet_at(t).unwrap()).unwrap();
            assert_relative_eq!(k, k0, max_relative = 1e-10);
        }
    }

    #[test]
    fn cfc_solution_reproduces_seed() {
        let seed = SeedM::new(0.5, 0.5, 0.0, 0.0).unwrap();
        let sol = solve_cfc(&seed, -1.0, DEFAULT_T_SPAN, 1e-10).unwrap();
        let j0 = sol.curve.jet_at(0.0).unwrap();
        assert_eq!(j0.f, 0.5);
        assert_eq!(j0.df, 0.5);
        assert_eq!(j0.d2f, 0.0);
        // The jet at a point next to 0 carries the reconstructed f''' of the state.
        let near = sol.curve.jet_at(1e-9).unwrap();
        assert_relative_eq!(near.d3f, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn bad_spans_rejected() {
        let seed = SeedM::new(0.5, 0.5, 0.0, 0.0).unwrap();
        assert!(solve_landsberg(&seed, (0.1, 0.2), 1e-10).is_err());
        assert!(solve_landsberg(&seed, (-0.1, 0.1), 0.0).is_err());
    }
}
