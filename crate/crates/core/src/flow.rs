//! Geodesics, parallel transport and curvature measured along the η-flow.
//!
//! Geodesic velocities in the Lie algebra are integral curves of `-η`; a
//! vector field `w(s)` along one is linearly parallel when
//! `w' + N(y, w) + [y, w] = 0`. Curvature is recovered from transported data
//! by Lie derivatives along `η`, independently of the closed-form profile
//! formulas used by the solvers.

use crate::error::{Error, Result};
use crate::lie_spray::{eta_at, eta_on_indicatrix, s_rate, LieAlgebra2D};
use crate::numdiff::{d1_5pt, d2_5pt, settle_steps};
use crate::ode::{integrate, OdeOptions, OdeRun, Stop};
use crate::polar_norm::{
    cartan_cubic, gram_in_basis, margin_unchecked, norm_value, polar_frame, NormCurve, NormJet, Vec2G,
};
use crate::solvers::landsberg_first_integral;

/// Default absolute and relative tolerance of every flow integration.
pub const FLOW_TOL: f64 = 1e-10;
/// Relative displacement of `y` per step of the nested Lie derivatives in
/// [`riemann_apply`].
pub const LIE_STEP: f64 = 3e-4;
/// Step in `t` of the finite differences taken along a profile.
pub const PROFILE_STEP: f64 = 1e-3;
/// Number of step halvings tried by [`flag_curvature`].
pub const CURVATURE_HALVINGS: usize = 8;
/// Number of step halvings tried by [`riemann_apply`], from `4·LIE_STEP`.
pub const LIE_HALVINGS: usize = 5;

/// Fails unless `y` lies in the cone of `curve` with `f >= 1e-8` and a
/// convexity margin of at least `1e-6·4f²`.
pub fn check_admissible(curve: &NormCurve, y: Vec2G) -> Result<NormJet> {
    if !y.is_finite() || y.radius() == 0.0 {
        return Err(Error::Domain(format!("vector ({}, {}) is not admissible", y.y1, y.y2)));
    }
    let jet = curve.jet_at(y.angle())?;
    let m = margin_unchecked(&jet);
    if jet.f < 1e-8 || m < 1e-6 * 4.0 * jet.f * jet.f {
        return Err(Error::Convexity { t: jet.t, margin: m });
    }
    Ok(jet)
}

/// `F(y)`.
pub fn norm_at(curve: &NormCurve, y: Vec2G) -> Result<f64> {
    let jet = curve.jet_at(y.angle())?;
    Ok(norm_value(&jet, y.radius()))
}

/// `g_y(u, v)`.
pub fn metric_at(curve: &NormCurve, y: Vec2G, u: Vec2G, v: Vec2G) -> Result<f64> {
    let jet = curve.jet_at(y.angle())?;
    Ok(gram_in_basis(&jet, y.radius())?.apply(u, v))
}

/// The `g`-unit vector `u(t)` tangent to the indicatrix at angle `jet.t`,
/// pointing towards increasing `t`.
pub fn unit_tangent(jet: &NormJet) -> Vec2G {
    let r = 1.0 / (2.0 * jet.f).sqrt();
    let (_, x) = polar_frame(jet, r);
    x * (2.0 * jet.f / margin_unchecked(jet).sqrt())
}

/// How a two-sided flow integration ended.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    /// `[s_lo, s_hi]` actually integrated.
    pub covered: (f64, f64),
    pub requested: (f64, f64),
    /// `η(y0) = 0`: the geodesic is a fixed point and nothing was integrated.
    pub stationary: bool,
    pub stop_backward: Stop,
    pub stop_forward: Stop,
    pub message: Option<String>,
}

impl FlowReport {
    pub fn completed(&self) -> bool {
        self.stop_backward == Stop::Completed && self.stop_forward == Stop::Completed
    }
}

#[derive(Debug, Clone)]
struct TwoSided<const N: usize> {
    backward: OdeRun<N>,
    forward: OdeRun<N>,
}

impl<const N: usize> TwoSided<N> {
    fn eval(&self, s: f64) -> Option<[f64; N]> {
        if s < 0.0 {
            self.backward.eval(s)
        } else {
            self.forward.eval(s)
        }
    }

    fn report(&self, requested: (f64, f64)) -> FlowReport {
        let message = self.backward.message.clone().or_else(|| self.forward.message.clone());
        FlowReport {
            covered: (self.backward.t_last(), self.forward.t_last()),
            requested,
            stationary: false,
            stop_backward: self.backward.stop,
            stop_forward: self.forward.stop,
            message,
        }
    }

    fn samples(&self) -> impl Iterator<Item = (f64, [f64; N])> + '_ {
        self.backward
            .knots
            .iter()
            .rev()
            .chain(self.forward.knots.iter().skip(1))
            .map(|k| (k.t, k.y))
    }
}

fn two_sided<const N: usize, R, G>(
    rhs: R,
    guard: G,
    y0: [f64; N],
    span: (f64, f64),
    nodes: &[f64],
    tol: f64,
) -> TwoSided<N>
where
    R: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    G: Fn(f64, &[f64; N]) -> Result<()>,
{
    let opts = OdeOptions {
        h_init: Some(((span.1 - span.0).abs() * 1e-2).max(1e-6)),
        ..OdeOptions::with_tol(tol)
    };
    let mut back: Vec<f64> = nodes.iter().copied().filter(|&s| s < 0.0).collect();
    back.sort_by(|a, b| b.total_cmp(a));
    let mut fwd: Vec<f64> = nodes.iter().copied().filter(|&s| s > 0.0).collect();
    fwd.sort_by(|a, b| a.total_cmp(b));
    TwoSided {
        backward: integrate(&rhs, &guard, 0.0, y0, span.0, &back, &opts),
        forward: integrate(&rhs, &guard, 0.0, y0, span.1, &fwd, &opts),
    }
}

fn check_span(span: (f64, f64), tol: f64) -> Result<()> {
    if !(span.0 <= 0.0 && span.1 >= 0.0 && span.0.is_finite() && span.1.is_finite()) {
        return Err(Error::Validation(format!(
            "s-span [{}, {}] must contain 0",
            span.0, span.1
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Validation(format!("tolerance {tol} must be positive")));
    }
    Ok(())
}

fn vec(a: &[f64]) -> Vec2G {
    Vec2G::new(a[0], a[1])
}

/// A solution `s -> y(s)` of `y' = -η(y)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    y0: Vec2G,
    tol: f64,
    flow: Option<TwoSided<2>>,
    report: FlowReport,
}

impl Trajectory {
    pub fn y0(&self) -> Vec2G {
        self.y0
    }

    pub fn report(&self) -> &FlowReport {
        &self.report
    }

    /// Dense output; `None` outside the covered range.
    pub fn eval(&self, s: f64) -> Option<Vec2G> {
        match &self.flow {
            Some(flow) => flow.eval(s).map(|y| vec(&y)),
            None => Some(self.y0),
        }
    }

    /// Accepted integration points in increasing `s`.
    pub fn samples(&self) -> Vec<(f64, Vec2G)> {
        match &self.flow {
            Some(flow) => flow.samples().map(|(s, y)| (s, vec(&y))).collect(),
            None => vec![(0.0, self.y0)],
        }
    }
}

/// Integrates the geodesic equation `y'(s) = -η(y(s))` over `s_span`
/// (which must contain 0) from `y(0) = y0`.
///
/// The flow stops early, with the reason in the report, when `y` reaches the
/// edge of the admissible cone.
pub fn integrate_minus_eta(
    alg: &LieAlgebra2D,
    curve: &NormCurve,
    y0: Vec2G,
    s_span: (f64, f64),
    tol: f64,
) -> Result<Trajectory> {
    check_span(s_span, tol)?;
    check_admissible(curve, y0)?;
    let eta0 = eta_at(alg, curve, y0)?;
    if eta0.radius() <= 1e-13 * y0.dot(y0) {
        return Ok(Trajectory {
            y0,
            tol,
            flow: None,
            report: FlowReport {
                covered: s_span,
                requested: s_span,
                stationary: true,
                stop_backward: Stop::Completed,
                stop_forward: Stop::Completed,
                message: Some("η(y0) = 0: stationary point".into()),
            },
        });
    }
    let rhs = |_: f64, y: &[f64; 2]| {
        let e = eta_at(alg, curve, vec(y))?;
        Ok([-e.y1, -e.y2])
    };
    let guard = |_: f64, y: &[f64; 2]| check_admissible(curve, vec(y)).map(|_| ());
    let flow = two_sided(rhs, guard, [y0.y1, y0.y2], s_span, &[], tol);
    let report = flow.report(s_span);
    Ok(Trajectory {
        y0,
        tol,
        flow: Some(flow),
        report,
    })
}

/// A geodesic together with a parallel field along it.
#[derive(Debug, Clone)]
pub struct Transport {
    flow: TwoSided<4>,
    report: FlowReport,
    nodes: Vec<(f64, Vec2G, Vec2G)>,
}

impl Transport {
    pub fn report(&self) -> &FlowReport {
        &self.report
    }

    /// `(y(s), w(s))`; `None` outside the covered range.
    pub fn eval(&self, s: f64) -> Option<(Vec2G, Vec2G)> {
        self.flow.eval(s).map(|v| (vec(&v[..2]), vec(&v[2..])))
    }

    /// Values at the exact `s` nodes requested, in increasing `s`.
    pub fn nodes(&self) -> &[(f64, Vec2G, Vec2G)] {
        &self.nodes
    }
}

fn transport_rhs<'a>(alg: &'a LieAlgebra2D, curve: &'a NormCurve) -> impl Fn(f64, &[f64; 4]) -> Result<[f64; 4]> + 'a {
    move |_, v| {
        let y = vec(&v[..2]);
        let w = vec(&v[2..]);
        let e = eta_at(alg, curve, y)?;
        // N(y, w) = ½ Dη(y, w) - ½ [y, w].
        let n = directional_eta_5pt(alg, curve, y, w)? * 0.5 - alg.bracket(y, w) * 0.5;
        let dw = -(n + alg.bracket(y, w));
        Ok([-e.y1, -e.y2, dw.y1, dw.y2])
    }
}

/// Co-integrates `y' = -η(y)` and `w' = -N(y, w) - [y, w]` from `(y0, w0)`,
/// landing exactly on every `s` in `nodes`.
pub fn transport(
    alg: &LieAlgebra2D,
    curve: &NormCurve,
    y0: Vec2G,
    w0: Vec2G,
    s_span: (f64, f64),
    nodes: &[f64],
    tol: f64,
) -> Result<Transport> {
    check_span(s_span, tol)?;
    check_admissible(curve, y0)?;
    if eta_at(alg, curve, y0)?.radius() <= 1e-13 * y0.dot(y0) {
        return Err(Error::Singularity(
            "η(y0) = 0: no geodesic flow to transport along".into(),
        ));
    }
    let guard = |_: f64, v: &[f64; 4]| check_admissible(curve, vec(&v[..2])).map(|_| ());
    let flow = two_sided(
        transport_rhs(alg, curve),
        guard,
        [y0.y1, y0.y2, w0.y1, w0.y2],
        s_span,
        nodes,
        tol,
    );
    let report = flow.report(s_span);
    let mut sorted: Vec<f64> = nodes.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    let mut out = Vec::with_capacity(sorted.len());
    let (mut ib, mut if_) = (0usize, 0usize);
    let n_back = sorted.iter().filter(|&&s| s < 0.0).count();
    for &s in &sorted {
        let v = if s < 0.0 {
            // Backward outputs are stored from 0 outwards.
            let idx = n_back - 1 - ib;
            ib += 1;
            flow.backward.outputs.get(idx).copied()
        } else if s == 0.0 {
            Some([y0.y1, y0.y2, w0.y1, w0.y2])
        } else {
            let v = flow.forward.outputs.get(if_).copied();
            if_ += 1;
            v
        };
        match v {
            Some(v) => out.push((s, vec(&v[..2]), vec(&v[2..]))),
            None => {
                return Err(Error::Domain(format!(
                    "transport did not reach s = {s}: {}",
                    report.message.clone().unwrap_or_default()
                )))
            }
        }
    }
    Ok(Transport {
        flow,
        report,
        nodes: out,
    })
}

/// Parallel transport of `w0` along `traj`, co-integrated with the geodesic
/// over the trajectory's span and tolerance.
pub fn parallel_transport(alg: &LieAlgebra2D, curve: &NormCurve, traj: &Trajectory, w0: Vec2G) -> Result<Transport> {
    transport(alg, curve, traj.y0, w0, traj.report.requested, &[], traj.tol)
}

/// `R_y w` from Lie derivatives along `η`.
///
/// `w` is transported to `s ∈ {±δ, ±2δ}`. Along the transported field the
/// connection field `N = -L_η w = dw/ds + Dη(y) w` equals `N(y(s), w(s))`
/// by the transport equation, and the curvature is `R = L_η N =
/// -dN/ds - Dη(y) N` with `d/ds` a five-point difference. `δ` is the time in
/// which `y` moves by `LIE_STEP·|y|` times a power of two, halved while the
/// extrapolated results keep converging.
pub fn riemann_apply(alg: &LieAlgebra2D, curve: &NormCurve, y: Vec2G, w: Vec2G) -> Result<Vec2G> {
    check_admissible(curve, y)?;
    let speed = eta_at(alg, curve, y)?.radius() / y.radius();
    if !(speed > 0.0) {
        return Err(Error::Singularity(
            "η(y) = 0: no geodesic flow to differentiate along".into(),
        ));
    }
    let d = LIE_STEP / speed;
    settle_steps(
        |d| riemann_at_step(alg, curve, y, w, d),
        4.0 * d,
        LIE_HALVINGS,
        4,
        |v: Vec2G| v.radius(),
    )
}

fn riemann_at_step(alg: &LieAlgebra2D, curve: &NormCurve, y: Vec2G, w: Vec2G, d: f64) -> Result<Vec2G> {
    let nodes = [-2.0 * d, -d, 0.0, d, 2.0 * d];
    let tr = transport(alg, curve, y, w, (-2.0 * d, 2.0 * d), &nodes, FLOW_TOL * 1e-2)?;
    let v = tr.nodes();
    let n_at = |k: usize| -> Result<Vec2G> {
        let (_, y, w) = v[k];
        Ok(directional_eta_5pt(alg, curve, y, w)? * 0.5 - alg.bracket(y, w) * 0.5)
    };
    let n: Vec<Vec2G> = (0..5).map(n_at).collect::<Result<_>>()?;
    let dn_ds = ((n[3] - n[1]) * 8.0 - (n[4] - n[0])) * (1.0 / (12.0 * d));
    Ok(-dn_ds - directional_eta_5pt(alg, curve, v[2].1, n[2])?)
}

/// Largest relative step of the five-point `Dη` inside [`riemann_apply`]
/// and [`transport`]. The outer difference divides its rounding error by
/// `δ`, so it starts much larger than the step of [`connection_n`] and is
/// halved at most `RIEMANN_ETA_HALVINGS` times.
pub const RIEMANN_ETA_STEP: f64 = 4e-3;
pub const RIEMANN_ETA_HALVINGS: usize = 6;

fn directional_eta_5pt(alg: &LieAlgebra2D, curve: &NormCurve, y: Vec2G, v: Vec2G) -> Result<Vec2G> {
    let vn = v.radius();
    if vn == 0.0 {
        return Ok(Vec2G::default());
    }
    let h = RIEMANN_ETA_STEP * y.radius() / vn;
    let d_eta = |h: f64| d1_5pt(|x: f64| eta_at(alg, curve, y + v * x), 0.0, h);
    settle_steps(d_eta, h, RIEMANN_ETA_HALVINGS, 4, |v: Vec2G| v.radius())
}

/// Flag curvature `g_y(R_y u, u)` at the indicatrix point of angle `t`,
/// with `u` the unit tangent; computed by [`riemann_apply`].
pub fn flag_curvature_lie(alg: &LieAlgebra2D, curve: &NormCurve, t: f64) -> Result<f64> {
    let jet = curve.jet_at(t)?;
    let r = 1.0 / (2.0 * jet.f).sqrt();
    let y = Vec2G::from_polar(r, t);
    let u = unit_tangent(&jet);
    let ru = riemann_apply(alg, curve, y, u)?;
    Ok(gram_in_basis(&jet, r)?.apply(ru, u))
}

/// Step for differences along the profile around `t`, shrunk near the
/// domain edge.
fn profile_step(curve: &NormCurve, t: f64) -> Result<f64> {
    let (lo, hi) = curve.domain();
    let room = (t - lo).min(hi - t) / 20.0;
    let h = PROFILE_STEP.min(room);
    if h < 1e-5 {
        return Err(Error::Domain(format!(
            "t = {t} too close to the profile edge [{lo}, {hi}] for differencing"
        )));
    }
    Ok(h)
}

/// `λ(t)` with `u(t) = λ(t)·η(y(t))`: `1/(ρ(t)·|dy/dt|_g)`.
pub fn unit_field_coefficient(alg: &LieAlgebra2D, jet: &NormJet) -> Result<f64> {
    let rho = eta_on_indicatrix(alg, jet)?;
    s_rate(alg, jet)?;
    let speed = margin_unchecked(jet).sqrt() / (2.0 * jet.f);
    Ok(1.0 / (rho * speed))
}

/// Flag curvature `K = -λ''(s)/λ(s)` at angle `t`, with the `s`-derivatives
/// taken through `ds/dt = -1/ρ` and five-point differences in `t`. The step
/// starts at `4·PROFILE_STEP` (less near the domain edge) and is halved
/// while the extrapolated results keep converging.
pub fn flag_curvature(alg: &LieAlgebra2D, curve: &NormCurve, t: f64) -> Result<f64> {
    let lambda = |t: f64| unit_field_coefficient(alg, &curve.jet_at(t)?);
    let rho = |t: f64| eta_on_indicatrix(alg, &curve.jet_at(t)?);
    let l = lambda(t)?;
    let r = rho(t)?;
    let at_step = |h: f64| -> Result<f64> {
        let l_t: f64 = d1_5pt(lambda, t, h)?;
        let l_tt: f64 = d2_5pt(lambda, t, h)?;
        let r_t: f64 = d1_5pt(rho, t, h)?;
        Ok(-r * (r_t * l_t + r * l_tt) / l)
    };
    // Sharp features of the profile need steps well below the largest one.
    let (lo, hi) = curve.domain();
    let h0 = (4.0 * PROFILE_STEP).min((t - lo).min(hi - t) / 4.0);
    if h0 < 1e-5 {
        return Err(Error::Domain(format!(
            "t = {t} too close to the profile edge [{lo}, {hi}] for differencing"
        )));
    }
    settle_steps(at_step, h0, CURVATURE_HALVINGS, 4, f64::abs)
}

/// `dκ/dt`, the derivative of the Landsberg first integral along the
/// profile; zero exactly where the metric is Landsberg.
pub fn landsberg_scalar(curve: &NormCurve, t: f64) -> Result<f64> {
    let h = profile_step(curve, t)?;
    d1_5pt(|t: f64| landsberg_first_integral(&curve.jet_at(t)?), t, h)
}

/// Step in `s` for [`landsberg_via_transport`].
pub const TRANSPORT_STEP: f64 = 1e-3;

/// The same quantity as [`landsberg_scalar`], measured as
/// `d/ds C_{y(s)}(W, W, W)·ds/dt` with `W` the parallel transport of the unit
/// tangent along the geodesic through the indicatrix point at `t`.
pub fn landsberg_via_transport(alg: &LieAlgebra2D, curve: &NormCurve, t: f64) -> Result<f64> {
    let jet = curve.jet_at(t)?;
    let y0 = Vec2G::from_polar(1.0 / (2.0 * jet.f).sqrt(), t);
    let w0 = unit_tangent(&jet);
    let ds = TRANSPORT_STEP;
    let nodes = [-2.0 * ds, -ds, 0.0, ds, 2.0 * ds];
    let tr = transport(alg, curve, y0, w0, (-2.0 * ds, 2.0 * ds), &nodes, FLOW_TOL * 1e-2)?;
    let c = |k: usize| -> Result<f64> {
        let (_, y, w) = tr.nodes()[k];
        cartan_cubic(&curve.jet_at(y.angle())?, y.radius(), w)
    };
    let (m2, m1, p1, p2) = (c(0)?, c(1)?, c(3)?, c(4)?);
    let dc_ds = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * ds);
    Ok(dc_ds * s_rate(alg, &jet)?)
}
