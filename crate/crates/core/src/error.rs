use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// Fractional order outside (0, 1], or an operator that excludes the classical value.
    #[error("invalid fractional order {alpha}: {detail}")]
    InvalidOrder { alpha: f64, detail: &'static str },

    /// Sample times do not form a uniform grid starting at zero.
    #[error("sample times are not a uniform grid starting at 0 (node {node})")]
    NonUniformGrid { node: usize },

    /// A solver or grid configuration fails its preconditions.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The explicit PDE update would violate its stability restriction.
    #[error("CFL restriction violated at node {node}, step {step}: number {number:.6} > limit {limit:.6}")]
    Cfl {
        node: usize,
        step: usize,
        number: f64,
        limit: f64,
    },

    /// Evaluation at a point where a closed-form solution diverges.
    #[error("closed form diverges at t = {t}")]
    Divergence { t: f64 },

    /// Two algebraically identical expressions disagree beyond tolerance.
    #[error("inconsistent {what}: {left} vs {right} (relative {relative:e})")]
    Inconsistent {
        what: &'static str,
        left: f64,
        right: f64,
        relative: f64,
    },

    /// The refinement ladder never crossed its threshold before the horizon.
    #[error("no blow-up detected below horizon {horizon}")]
    NoBlowup { horizon: f64 },

    /// Boundary data could not be evaluated at the requested point.
    #[error("boundary data unavailable at x = {x}, t = {t}")]
    BoundaryUnavailable { x: f64, t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
