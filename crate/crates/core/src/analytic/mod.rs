//! Contour quadrature, Riesz projectors, eigenvalue tracking, directional
//! Taylor series and analyticity checks.

pub mod contour;
pub mod family;
pub mod projector;
pub mod solve;
pub mod taylor;
pub mod tracking;
pub mod verify;

pub use contour::{
    cauchy_derivative, radius_of_convergence, taylor_coefficients, CauchyValue, Contour,
    RadiusEstimate,
};
pub use family::{AffineFamily, Direction, FnFamily, OperatorFamily};
pub use projector::{apply_projector, riesz_projector, ProjectorTolerance, RieszProjector};
pub use solve::{resolvent_apply, resolvent_apply_matrix, BandedLu, ShiftedSolver};
pub use taylor::{taylor_along, TaylorOptions, TaylorSeries};
pub use tracking::{
    eigen_taylor, resolve_start, sweep_eigenvalue, sweep_eigenvalue_partial, track_eigenvalue,
    EigenPath, PathSample, TrackOptions, TrackStart, TrackedState,
};
pub use verify::{
    gamma_membership, verify_analytic_family, AnalyticReport, Membership, VerifyOptions,
    VerifySamples,
};
