//! Batch verification that Landsberg profiles coincide with the Berwald
//! profiles built from their matched matrices, plus CSV/JSON export and the
//! invariant suite behind the `invariants` subcommand.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::berwald::{
    berwald_pde_residual, eta_quadratic_residual, indicatrix_covering, norm_from_indicatrix, seed_to_matrix,
    BerwaldMatrix,
};
use crate::error::{Error, Result};
use crate::flow::{flag_curvature, integrate_minus_eta, metric_at, norm_at, parallel_transport, unit_tangent};
use crate::lie_spray::{connection_n, spray_eta, LieAlgebra2D};
use crate::numdiff::linspace;
use crate::polar_norm::{convexity_margin, gram_in_basis, NormCurve, Vec2G};
use crate::solvers::{landsberg_first_integral, solve_cfc, solve_landsberg, SeedM};

/// Version of the JSON report layout; bumped on any incompatible change.
pub const SCHEMA_VERSION: u32 = 1;

/// Sampling box for random seeds. `a1` is drawn with a random sign from
/// `±[a1_abs.0, a1_abs.1]`; draws whose margin `2 a0 a2 - a1² + 4 a0²` is
/// below `margin` are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedBox {
    pub a0: (f64, f64),
    pub a1_abs: (f64, f64),
    pub a2: (f64, f64),
    pub a3: (f64, f64),
    pub margin: f64,
}

impl Default for SeedBox {
    fn default() -> Self {
        SeedBox {
            a0: (0.2, 2.0),
            a1_abs: (0.1, 1.5),
            a2: (-1.0, 1.0),
            a3: (-2.0, 2.0),
            margin: 0.05,
        }
    }
}

const MAX_REJECTIONS: usize = 10_000;

impl SeedBox {
    pub fn validate(&self) -> Result<()> {
        let ranges = [("a0", self.a0), ("|a1|", self.a1_abs), ("a2", self.a2), ("a3", self.a3)];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Validation(format!("seed box range for {name} is [{lo}, {hi}]")));
            }
        }
        if !(self.a0.0 > 0.0) {
            return Err(Error::Validation("seed box needs a0 > 0".into()));
        }
        if !(self.a1_abs.0 > 0.0) {
            return Err(Error::Validation("seed box needs |a1| bounded away from 0".into()));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::Validation(format!(
                "seed box margin {} must be positive",
                self.margin
            )));
        }
        Ok(())
    }

    /// One seed by rejection sampling.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<SeedM> {
        let mut draw = |(lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..hi) };
        for _ in 0..MAX_REJECTIONS {
            let a0 = draw(self.a0);
            let a1 = draw(self.a1_abs);
            let a2 = draw(self.a2);
            let a3 = draw(self.a3);
            let sign = if draw((0.0, 1.0)) < 0.5 { -1.0 } else { 1.0 };
            let seed = SeedM {
                a0,
                a1: sign * a1,
                a2,
                a3,
            };
            if seed.margin() >= self.margin {
                return Ok(seed);
            }
        }
        Err(Error::Validation(format!(
            "seed box rejected {MAX_REJECTIONS} draws in a row; margin {} is unreachable",
            self.margin
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub rng_seed: u64,
    pub n_cases: usize,
    pub t_half_width: f64,
    pub tol_ode: f64,
    pub tol_compare: f64,
    /// Number of points of the comparison grid.
    pub grid_points: usize,
    pub seed_box: SeedBox,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rng_seed: 42,
            n_cases: 100,
            t_half_width: 0.1,
            tol_ode: 1e-10,
            tol_compare: 1e-7,
            grid_points: 101,
            seed_box: SeedBox::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_half_width", self.t_half_width),
            ("tol_ode", self.tol_ode),
            ("tol_compare", self.tol_compare),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{name} = {v} must be positive")));
            }
        }
        if self.t_half_width > 1.0 {
            return Err(Error::Validation(format!(
                "t_half_width = {} is too wide for a local solution",
                self.t_half_width
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::Validation("comparison grid needs at least 2 points".into()));
        }
        self.seed_box.validate()
    }

    pub fn grid(&self) -> Vec<f64> {
        linspace(-self.t_half_width, self.t_half_width, self.grid_points)
    }
}

/// Seeds `0..n_cases` drawn from `rng_seed`, in order.
pub fn sample_seeds(cfg: &RunConfig) -> Result<Vec<SeedM>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    (0..cfg.n_cases).map(|_| cfg.seed_box.sample(&mut rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Truncated,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Relative misfit of `η` of the matrix profile by quadratic forms.
    pub eta_residual: Option<f64>,
    /// Relative drift of the first integral along the Landsberg profile.
    pub landsberg_drift: Option<f64>,
    /// Residual of the linear PDE `A y · ∇F = 0` on the Landsberg profile.
    pub pde_residual: Option<f64>,
    /// For truncated cases, the distance between the angles at which the
    /// two profiles end (`null` or infinite if only one of them ends).
    pub endpoint_gap: Option<f64>,
}

/// Largest gap between the end angles of the two profiles for a truncated
/// case to count as consistent.
pub const ENDPOINT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremDReport {
    pub seed: SeedM,
    pub matrix: Option<BerwaldMatrix>,
    /// `sup |f1 - f2| / a0` over the grid points both profiles cover.
    pub sup_error: Option<f64>,
    pub grid: GridSpec,
    pub status: Status,
    /// Interval covered by both profiles.
    pub covered: (f64, f64),
    pub diagnostics: Diagnostics,
    pub message: Option<String>,
}

fn relative_drift(curve: &NormCurve, grid: &[f64], k0: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in grid.iter().filter(|&&t| curve.contains(t)) {
        let k = landsberg_first_integral(&curve.jet_at(t)?)?;
        worst = worst.max((k - k0).abs());
    }
    Ok(worst / k0.abs().max(1.0))
}

/// Solves the Landsberg profile of `seed`, builds the Berwald profile of
/// its matched matrix, and compares the two on the configured grid.
///
/// Errors only for invalid input; a pipeline that stops short of the grid
/// gives status `truncated`.
pub fn verify_theorem_d(seed: &SeedM, cfg: &RunConfig) -> Result<TheoremDReport> {
    seed.validate()?;
    cfg.validate()?;
    let w = cfg.t_half_width;
    let grid = GridSpec {
        lo: -w,
        hi: w,
        points: cfg.grid_points,
    };
    let ts = grid.values();
    let mut report = TheoremDReport {
        seed: *seed,
        matrix: None,
        sup_error: None,
        grid,
        status: Status::Fail,
        covered: (0.0, 0.0),
        diagnostics: Diagnostics::default(),
        message: None,
    };
    let mut notes = Vec::new();

    let f1 = match solve_landsberg(seed, (-w, w), cfg.tol_ode) {
        Ok(s) => s,
        Err(e) => {
            report.message = Some(format!("landsberg solve failed: {e}"));
            return Ok(report);
        }
    };
    if let Some(m) = &f1.report.message {
        notes.push(format!("landsberg: {m}"));
    }
    let k0 = landsberg_first_integral(&seed.jet())?;
    report.diagnostics.landsberg_drift = relative_drift(&f1.curve, &ts, k0).ok();

    let m = seed_to_matrix(seed)?;
    report.matrix = Some(m);
    report.diagnostics.pde_residual = berwald_pde_residual(&m, &f1.curve).ok();
    let f2 = match indicatrix_covering(&m, seed.a0, (-w, w)).and_then(|ind| {
        if let Some(r) = &ind.report().reason {
            notes.push(format!("orbit: {r}"));
        }
        norm_from_indicatrix(&ind)
    }) {
        Ok(c) => c,
        Err(e) => {
            notes.push(format!("orbit failed: {e}"));
            report.message = Some(notes.join("; "));
            return Ok(report);
        }
    };
    report.diagnostics.eta_residual = eta_quadratic_residual(&LieAlgebra2D::CANONICAL, &f2).ok();

    let (l1, h1) = f1.curve.domain();
    let (l2, h2) = f2.domain();
    report.covered = (l1.max(l2).max(-w), h1.min(h2).min(w));
    let mut sup = 0.0f64;
    for &t in &ts {
        if !(f1.curve.contains(t) && f2.contains(t)) {
            continue;
        }
        let d = (f1.curve.jet_at(t)?.f - f2.jet_at(t)?.f).abs() / seed.a0;
        sup = sup.max(d);
    }
    report.sup_error = Some(sup);
    let full = ts.iter().all(|&t| f1.curve.contains(t) && f2.contains(t));
    // A short side is only a consistent truncation if both pipelines end there.
    let ends = [(f1.report.integrated.0, l2, -w), (f1.report.integrated.1, h2, w)];
    let mut gap = 0.0f64;
    for (e1, e2, want) in ends {
        let short1 = if want < 0.0 { e1 > want } else { e1 < want };
        let short2 = if want < 0.0 { e2 > want } else { e2 < want };
        if short1 || short2 {
            gap = gap.max(if short1 && short2 {
                (e1 - e2).abs()
            } else {
                f64::INFINITY
            });
        }
    }
    if !full {
        report.diagnostics.endpoint_gap = Some(gap);
    }
    report.status = if sup > cfg.tol_compare {
        Status::Fail
    } else if !full {
        if gap <= ENDPOINT_TOL {
            Status::Truncated
        } else {
            notes.push(format!("the two profiles end {gap:e} apart"));
            Status::Fail
        }
    } else {
        Status::Pass
    };
    if !notes.is_empty() {
        report.message = Some(notes.join("; "));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseEntry {
    pub index: usize,
    #[serde(flatten)]
    pub report: TheoremDReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub truncated: usize,
    pub max_sup_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub cases: Vec<CaseEntry>,
    pub summary: Summary,
}

impl BatchReport {
    /// True when no case failed. Truncated cases count as consistent: both
    /// profiles agree up to a common end angle inside the grid.
    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }
}

/// Runs [`verify_theorem_d`] on `cfg.n_cases` sampled seeds in parallel.
pub fn batch_verify(cfg: &RunConfig) -> Result<BatchReport> {
    let seeds = sample_seeds(cfg)?;
    let mut cases: Vec<CaseEntry> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, seed)| {
            let report = verify_theorem_d(seed, cfg).unwrap_or_else(|e| TheoremDReport {
                seed: *seed,
                matrix: None,
                sup_error: None,
                grid: GridSpec {
                    lo: -cfg.t_half_width,
                    hi: cfg.t_half_width,
                    points: cfg.grid_points,
                },
                status: Status::Fail,
                covered: (0.0, 0.0),
                diagnostics: Diagnostics::default(),
                message: Some(e.to_string()),
            });
            CaseEntry { index, report }
        })
        .collect();
    cases.sort_by_key(|c| c.index);
    let mut summary = Summary::default();
    for c in &cases {
        match c.report.status {
            Status::Pass => summary.pass += 1,
            Status::Fail => summary.fail += 1,
            Status::Truncated => summary.truncated += 1,
        }
        if let Some(e) = c.report.sup_error {
            summary.max_sup_error = Some(summary.max_sup_error.map_or(e, |m: f64| m.max(e)));
        }
    }
    Ok(BatchReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        cases,
        summary,
    })
}

/// Header of profile CSV files.
pub const PROFILE_HEADER: &str = "t,f,df,d2f,d3f,margin";

/// Writes `points` evenly spaced rows of the profile jet and its margin.
pub fn write_profile_csv(curve: &NormCurve, points: usize, out: &mut (impl Write + ?Sized)) -> Result<()> {
    let (lo, hi) = curve.domain();
    writeln!(out, "{PROFILE_HEADER}")?;
    for t in linspace(lo, hi, points) {
        let j = curve.jet_at(t)?;
        let m = convexity_margin(&j)?;
        if !(m > 0.0) {
            return Err(Error::Convexity { t, margin: m });
        }
        writeln!(out, "{},{},{},{},{},{}", t, j.f, j.df, j.d2f, j.d3f, m)?;
    }
    Ok(())
}

/// Flag curvature at `points` angles strictly inside the profile's domain,
/// as `(t, K)` pairs.
pub fn curvature_profile(curve: &NormCurve, points: usize) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = curve.domain();
    // Keep the finite-difference stencils inside the domain.
    let pad = 0.05 * (hi - lo);
    let alg = LieAlgebra2D::CANONICAL;
    linspace(lo + pad, hi - pad, points)
        .into_iter()
        .map(|t| Ok((t, flag_curvature(&alg, curve, t)?)))
        .collect()
}

pub fn write_curvature_csv(rows: &[(f64, f64)], out: &mut (impl Write + ?Sized)) -> Result<()> {
    writeln!(out, "t,K")?;
    for (t, k) in rows {
        writeln!(out, "{t},{k}")?;
    }
    Ok(())
}

/// One line of the invariant suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl InvariantCheck {
    fn new(name: &str, worst: f64, tolerance: f64) -> Self {
        InvariantCheck {
            name: name.into(),
            worst,
            tolerance,
            pass: worst <= tolerance,
        }
    }
}

fn suite_curves() -> Result<Vec<NormCurve>> {
    let cfg = RunConfig {
        n_cases: 4,
        rng_seed: 7,
        ..RunConfig::default()
    };
    let mut curves = Vec::new();
    let mut seeds = vec![SeedM::new(0.5, 0.5, 0.0, 0.0)?];
    seeds.extend(sample_seeds(&cfg)?);
    for (i, s) in seeds.iter().enumerate() {
        curves.push(solve_landsberg(s, (-0.1, 0.1), 1e-10)?.curve);
        let c = [-1.0, 0.0, 1.0][i % 3];
        curves.push(solve_cfc(s, c, (-0.1, 0.1), 1e-10)?.curve);
    }
    Ok(curves)
}

/// The property suite: algebraic identities of `η` and `N`, speed and
/// g-norm preservation along flows, conservation of the Landsberg first
/// integral, and byte-identical batch reports.
pub fn run_invariants() -> Result<Vec<InvariantCheck>> {
    let alg = LieAlgebra2D::CANONICAL;
    let curves = suite_curves()?;
    let mut orth = 0.0f64;
    let mut homog = 0.0f64;
    let mut n_eta = 0.0f64;
    let mut speed = 0.0f64;
    let mut gnorm = 0.0f64;
    for curve in &curves {
        let (lo, hi) = curve.domain();
        for t in linspace(lo + 0.01, hi - 0.01, 7) {
            let jet = curve.jet_at(t)?;
            for r in [0.5, 1.0, 2.0] {
                let y = Vec2G::from_polar(r, t);
                let g = gram_in_basis(&jet, r)?;
                let eta = spray_eta(&alg, &jet, r)?;
                let scale = (g.apply(y, y) * g.apply(eta, eta)).sqrt().max(1e-300);
                orth = orth.max(g.apply(eta, y).abs() / scale);
                let eta2 = spray_eta(&alg, &jet, 2.0 * r)?;
                homog = homog.max((eta2 - eta * 4.0).radius() / (4.0 * eta.radius()).max(1e-300));
                let n = connection_n(&alg, curve, y, y)?;
                n_eta = n_eta.max((n - eta).radius() / eta.radius().max(r * r));
            }
        }
        // Flows from the unit vector at the middle of the domain.
        let tm = 0.5 * (lo + hi);
        let jet = curve.jet_at(tm)?;
        let y0 = Vec2G::from_polar(1.0 / (2.0 * jet.f).sqrt(), tm);
        let traj = integrate_minus_eta(&alg, curve, y0, (-1.0, 1.0), 1e-10)?;
        let f0 = norm_at(curve, y0)?;
        let w0 = unit_tangent(&jet);
        let tr = parallel_transport(&alg, curve, &traj, w0)?;
        let g0 = metric_at(curve, y0, w0, w0)?;
        let (s_lo, s_hi) = tr.report().covered;
        for s in linspace(s_lo, s_hi, 41) {
            let Some((y, w)) = tr.eval(s) else { continue };
            speed = speed.max((norm_at(curve, y)? - f0).abs() / f0);
            gnorm = gnorm.max((metric_at(curve, y, w, w)? - g0).abs() / g0);
        }
        for (_, y) in traj.samples() {
            speed = speed.max((norm_at(curve, y)? - f0).abs() / f0);
        }
    }

    let mut drift = 0.0f64;
    for s in sample_seeds(&RunConfig {
        n_cases: 6,
        rng_seed: 11,
        ..RunConfig::default()
    })? {
        let curve = solve_landsberg(&s, (-0.1, 0.1), 1e-10)?.curve;
        let k0 = landsberg_first_integral(&s.jet())?;
        drift = drift.max(relative_drift(&curve, &linspace(-0.1, 0.1, 41), k0)?);
    }

    let cfg = RunConfig {
        n_cases: 3,
        rng_seed: 5,
        ..RunConfig::default()
    };
    let a = batch_verify(&cfg)?.to_json();
    let b = batch_verify(&cfg)?.to_json();
    let det = if a == b { 0.0 } else { 1.0 };

    Ok(vec![
        InvariantCheck::new("g_y(eta, y) = 0", orth, 1e-12),
        InvariantCheck::new("eta is 2-homogeneous", homog, 1e-12),
        InvariantCheck::new("N(y, y) = eta(y)", n_eta, 1e-8),
        InvariantCheck::new("geodesic speed preserved", speed, 1e-8),
        InvariantCheck::new("parallel g-norm preserved", gnorm, 1e-7),
        InvariantCheck::new("Landsberg first integral conserved", drift, 1e-10),
        InvariantCheck::new("batch report deterministic", det, 0.0),
    ])
}
