//! Left-invariant conic Finsler metrics on the 2-dimensional non-Abelian
//! Lie group.
//!
//! A left-invariant metric is determined by a Minkowski norm on the Lie
//! algebra, written in polar form `F = r·sqrt(2 f(t))`. The crate computes
//! the spray vector field and connection operator of such a norm, integrates
//! geodesics and parallel transport, measures flag and Landsberg curvature by
//! independent routes, solves the Landsberg and constant flag curvature
//! ODEs for the profile `f`, and builds the explicit Berwald families.
//!
//! ```
//! use conic_finsler::{landsberg_first_integral, SeedM};
//!
//! let seed = SeedM::new(0.5, 0.5, 0.0, 0.0).unwrap();
//! let kappa = landsberg_first_integral(&seed.jet()).unwrap();
//! assert!((kappa - 0.75f64.powf(-1.5)).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod berwald;
pub mod chebyshev;
pub mod cli;
pub mod error;
pub mod flow;
pub mod harness;
pub mod lie_spray;
pub mod numdiff;
pub mod ode;
pub mod polar_norm;
pub mod solvers;

pub use berwald::{
    berwald_norm, berwald_pde_residual, catalog_norm, eta_quadratic_fit, eta_quadratic_residual,
    indicatrix_from_matrix, norm_from_indicatrix, seed_to_matrix, BerwaldMatrix, CatalogCase, CatalogParams,
    IndicatrixCurve, QuadraticFit,
};
pub use error::{Error, Result};
pub use flow::{
    flag_curvature, flag_curvature_lie, integrate_minus_eta, landsberg_scalar, landsberg_via_transport,
    parallel_transport, riemann_apply, Trajectory, Transport,
};
pub use lie_spray::{connection_n, eta_at, eta_on_indicatrix, s_rate, spray_eta, LieAlgebra2D};
pub use polar_norm::{
    cartan_cubic, cartan_scalar, convexity_margin, gram_in_basis, indicatrix_point, polar_gram, CurveKind, Gram2,
    NormCurve, NormJet, PolarGram, Vec2G,
};
pub use solvers::{cfc_lambda, landsberg_first_integral, solve_cfc, solve_landsberg, SeedM, SolvedCurve};
