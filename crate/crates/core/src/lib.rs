//! Quantum logic gates realized as monodromy of logarithmic connections.
//!
//! The crate covers the full loop from connection to gate:
//!
//! - [`gate`]: qubit states, named gates, controlled gates, tensor products.
//! - [`paths`]: piecewise line/arc contours in ℂⁿ, puncture loops, braid
//!   and pure-braid paths in configuration space.
//! - [`fuchsian`]: logarithmic connections, parallel transport (path-ordered
//!   exponential), monodromy, matrix logarithms and flatness checks.
//! - [`lappo`]: Chen iterated integrals and the order-by-order synthesis of a
//!   connection family with prescribed monodromy.
//! - [`kz`]: sl₂ spin modules, Casimir operators and the
//!   Knizhnik-Zamolodchikov connection with its braid-group action.
//! - [`universality`]: heuristic density screening of finite gate sets.
//!
//! Monodromy matrices act on solution columns, `dF = Ω F`. Concatenating a
//! path `γ` followed by `δ` multiplies transports as `M(δ)·M(γ)`.

pub mod fuchsian;
pub mod gate;
pub mod kz;
pub mod lappo;
pub mod matrix;
pub mod ode;
pub mod paths;
pub mod universality;

pub use matrix::{CMatrix, C64};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("path comes within {distance:.3e} of the divisor")]
    DivisorContact { distance: f64 },

    #[error("step size underflow at t = {t} on segment {segment} (closest approach to divisor {closest:.3e})")]
    StepUnderflow { segment: usize, t: f64, closest: f64 },

    #[error("matrix is defective within tolerance: {0}")]
    Defective(String),

    #[error("eigenvalue argument {argument} lies on the branch cut at {cut}; shift the window")]
    BranchCut { argument: f64, cut: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DivisorContact { .. }
                | Error::StepUnderflow { .. }
                | Error::Defective(_)
                | Error::BranchCut { .. }
                | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
