//! Numerical kernels for elastic-loop / soap-film energy minimization.
//!
//! The library is organized around four subsystems:
//!
//! - [`rod`] — Kirchhoff rods described by flexural/twist strain densities:
//!   frame reconstruction, elastic and gravitational energies, solid-tube
//!   geometry and injectivity measures.
//! - [`topology`] — linking numbers, twist/writhe, spanning tests against
//!   loop families, global radius of curvature, and an isotopy-preservation
//!   guard for optimizer steps.
//! - [`film`] — area-minimizing spanning surfaces: a Dirichlet-energy disc
//!   solver, triangle-mesh area descent with remeshing, and a nonlinear
//!   finite-difference solver for minimal graphs.
//! - [`optimizer`] — the coupled problem: minimize rod energy plus spanning
//!   film area under closure, gluing, linking, and injectivity constraints,
//!   with linked-rod, repulsive, thin-limit, elastica, and quasi-static
//!   variants.

pub mod film;
pub mod io;
pub mod optimizer;
pub mod rod;
pub mod topology;

mod linalg;

use thiserror::Error;

/// Errors shared across the solver subsystems.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data failed a structural invariant (wrong length, bad range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A value that must be finite was NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(String),
    /// The two curves touch or cross; the requested invariant is undefined.
    #[error("curves intersect (min separation {min_dist:.3e})")]
    CurvesIntersect { min_dist: f64 },
    /// A Gauss integral did not land near an integer.
    #[error("linking value {value:.6} is not within 0.1 of an integer; curves too close or too coarse")]
    AmbiguousLinking { value: f64 },
    /// A solver ran out of iterations without meeting its tolerance.
    #[error("{solver} did not converge: {detail}")]
    NoConvergence { solver: &'static str, detail: String },
    /// A constraint required at entry does not hold.
    #[error("infeasible: constraint `{constraint}` violated ({detail})")]
    Infeasible { constraint: &'static str, detail: String },
    /// A produced surface failed its spanning-class verification.
    #[error("spanning verification failed: {0}")]
    SpanningFailed(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
