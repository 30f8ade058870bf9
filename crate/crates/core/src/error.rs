use thiserror::Error;

/// Errors raised by field evaluation, model domains and metric assembly.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    /// A field returned a non-finite value somewhere inside a stencil.
    #[error("non-finite field value at {point:?}")]
    NonFinite { point: Vec<f64> },

    /// The point is not in the domain of the model or metric.
    #[error("outside domain: {0}")]
    Domain(String),

    /// `f = Σ N_IJ z^I z̄^J` is not positive.
    #[error("point outside the cone: f = {f}")]
    OutsideCone { f: f64 },

    /// A structural property of the model failed at this point
    /// (signature of N, definiteness of Im 𝒩, ...).
    #[error("model violation: {0}")]
    ModelViolation(String),

    #[error("singular matrix ({what}), condition number {condition:e}")]
    Singular { what: String, condition: f64 },

    /// The assembled metric is not positive definite.
    #[error("metric assembly failed: {0}")]
    Assembly(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, GeomError>;
