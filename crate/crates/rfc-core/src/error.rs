//! Error and warning types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    Dimension {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("polynomial has no roots (degree 0 or zero polynomial)")]
    NoRoots,

    #[error("eigenvalue iteration did not converge after {iterations} steps")]
    NoConvergence { iterations: usize },

    #[error("degenerate sampling: rational interpolation system is singular at degrees ({num_deg}, {den_deg})")]
    DegenerateSampling { num_deg: usize, den_deg: usize },

    #[error("rational fit residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    FitResidual { residual: f64, tolerance: f64 },

    #[error("disturbance model ({order} states) is not observable")]
    Unobservable { order: usize },

    #[error("wrong loop stage: operation requires {required}, system is {actual}")]
    WrongStage {
        required: &'static str,
        actual: &'static str,
    },

    #[error("transfer-function extraction failed on the {channel} channel: {source}")]
    Extraction {
        channel: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("root locus failed at gain {gain}: {source}")]
    Locus {
        gain: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("pole cross-check mismatch {mismatch:.3e} exceeds bound {bound:.3e}")]
    PoleMismatch { mismatch: f64, bound: f64 },

    #[error("simulation diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("singular linear system")]
    SingularSystem,
}

/// Non-fatal conditions attached to results. Every warning carries a stable
/// machine-readable code for reports.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// `dt * max |Re eig(A)|` exceeds the RK4 stability budget.
    StepSize { dt_lambda: f64 },
    /// A pole/zero pair was cancelled during transfer-function reduction.
    Cancellation { location: (f64, f64) },
    /// The open loop carries a right-half-plane zero.
    RhpZero { location: (f64, f64) },
    /// A step response never entered the 2% band.
    Unsettled,
    /// Step metrics computed in absolute units because the target is zero.
    AbsoluteMetrics,
}

impl Warning {
    /// Stable identifier for machine consumption.
    pub fn code(&self) -> &'static str {
        match self {
            Warning::StepSize { .. } => "W-RK4-STEP",
            Warning::Cancellation { .. } => "W-CANCEL",
            Warning::RhpZero { .. } => "W-RHP-ZERO",
            Warning::Unsettled => "W-UNSETTLED",
            Warning::AbsoluteMetrics => "W-ABS-METRICS",
        }
    }

    /// Human-readable description used by reports.
    pub fn describe(&self) -> String {
        match self {
            Warning::StepSize { dt_lambda } => format!(
                "integration step too large: dt * max|Re eig| = {dt_lambda:.3} > 2.5"
            ),
            Warning::Cancellation { location } => format!(
                "pole/zero pair cancelled near {:.6e} {:+.6e}j",
                location.0, location.1
            ),
            Warning::RhpZero { location } => format!(
                "right-half-plane zero at {:.6e} {:+.6e}j",
                location.0, location.1
            ),
            Warning::Unsettled => "response did not settle within the horizon".to_string(),
            Warning::AbsoluteMetrics => {
                "step target is zero; metrics are in absolute units".to_string()
            }
        }
    }
}
