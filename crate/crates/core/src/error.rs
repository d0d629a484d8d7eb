use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Variants are grouped loosely by the kind of failure so that front ends can
/// map them onto exit codes without inspecting messages.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("slot {slot} out of range for rank {rank} tensor")]
    SlotOutOfRange { slot: usize, rank: usize },
    #[error("slot {slot} has the wrong variance for this operation")]
    VarianceMismatch { slot: usize },
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("tensor is not antisymmetric (defect {defect:e})")]
    NotAntisymmetric { defect: f64 },
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("internal consistency check `{check}` failed: residual {residual:e} exceeds {tolerance:e}")]
    Consistency {
        check: String,
        residual: f64,
        tolerance: f64,
    },
    #[error("step size underflow at affine parameter {tau}")]
    StepUnderflow { tau: f64 },
    #[error("no sign change of {what} in [{lo}, {hi}]")]
    NoRoot { what: String, lo: f64, hi: f64 },
    #[error("time step violates stability bound: cfl {cfl} > max {max_cfl}")]
    Cfl { cfl: f64, max_cfl: f64 },
    #[error("non-finite value detected at step {step}")]
    NonFinite { step: usize },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("mismatched grids: {0}")]
    GridMismatch(String),
    #[error("insufficient time levels: need {needed}, have {available}")]
    TimeLevels { needed: usize, available: usize },
    #[error("source support touches the temporal boundary")]
    SupportAtBoundary,
    #[error("characteristic data disagree at the vertex: {0:e}")]
    VertexMismatch(f64),
    #[error("connection is not constant on the boundary collars")]
    CollarViolation,
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("boundary eigenvalue {value:e} lies inside the guard band")]
    GuardBand { value: f64 },
    #[error("mode cutoff too small: {0}")]
    ModeCutoff(String),
}

pub type Result<T> = std::result::Result<T, Error>;
