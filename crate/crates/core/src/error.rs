//! Error and termination types shared across the solver suite.

use thiserror::Error;

/// Why a run stopped being integrable.
///
/// Blowup is a scientific outcome, not a crash: runners record it in the
/// diagnostics stream and terminate cleanly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupCause {
    /// The adaptive step fell below the controller's `dt_min`.
    DtUnderflow,
    /// A field or scalar stopped being finite (NaN or infinity).
    NonFinite,
    /// A sup-norm exceeded the explosion threshold.
    NormExplosion,
    /// The Lagrangian flow-map Jacobian lost positivity.
    JacobianCollapse,
}

impl std::fmt::Display for BlowupCause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BlowupCause::DtUnderflow => "dt-underflow",
            BlowupCause::NonFinite => "non-finite",
            BlowupCause::NormExplosion => "norm-explosion",
            BlowupCause::JacobianCollapse => "jacobian-collapse",
        };
        f.write_str(s)
    }
}

/// Errors raised by model operations.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    /// Stream-function inversion requires a mean-free input.
    #[error("stream inversion needs a mean-free field (mean = {mean:e}, tolerance {tol:e})")]
    NonZeroMean { mean: f64, tol: f64 },

    /// The decoupled ODE solution has a pole at `t_pole` and was evaluated at or past it.
    #[error("exact ODE solution has a pole at t = {t_pole} (u0 = 0, v0 < 0)")]
    BlowupAtPole { t_pole: f64 },

    /// Integration detected a finite-time blowup; `t` is the last finite time.
    #[error("blowup at t = {t} ({cause})")]
    Blowup { t: f64, cause: BlowupCause },

    /// The Lagrangian map stopped being monotone: particles crossed.
    #[error("particle crossing at t = {t}: flow map is no longer monotone")]
    ParticleCrossing { t: f64 },

    /// Inputs to the 3D lift fail their structural consistency requirement.
    #[error("inconsistent lift input: {0}")]
    InconsistentInput(String),

    /// Invalid parameters for grid or initial-data construction.
    #[error("bad parameters: {0}")]
    BadParams(String),
}

impl ModelError {
    /// The blowup payload, if this error is one.
    pub fn as_blowup(&self) -> Option<(f64, BlowupCause)> {
        match self {
            ModelError::Blowup { t, cause } => Some((*t, *cause)),
            _ => None,
        }
    }
}
