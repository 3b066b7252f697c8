use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: usize,
        budget: usize,
    },

    #[error("divergent tail: requires k > m (got k = {k}, m = {m})")]
    DivergentTail { k: f64, m: usize },

    #[error("not in Stummel class: {0}")]
    NotInClass(String),

    #[error("closure hypotheses violated: {0}")]
    HypothesesViolated(String),

    #[error("λ within tolerance of spectrum (|pivot| = {pivot:e})")]
    NearSpectrum { pivot: f64 },

    #[error("under-resolved contour quadrature: {0}")]
    UnderResolved(String),

    #[error(
        "degeneracy or eigenvalue crossed contour (trace = {trace}); shrink step or re-center"
    )]
    TraceNotOne { trace: f64 },

    #[error("left the Kato–Rellich neighborhood: |P(β)ψ₀| = {overlap:e}")]
    LeftNeighborhood { overlap: f64 },

    #[error("eigen-residual too large: {residual:e} > {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("radius too large or singularity inside disk: reconstruction error {error:e} > {tolerance:e}")]
    Reconstruction { error: f64, tolerance: f64 },

    #[error("cannot certify resolvent point: {0}")]
    Certification(String),

    #[error("tracking failed: {0}")]
    Tracking(String),
}
