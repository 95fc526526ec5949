//! Post-processing: closed-form cross-check oracles, nonlinear
//! least-squares fits, and feature extraction from sweep data.
//!
//! Everything in this module is a pure function of its inputs. The oracles
//! evaluate the perturbative formulas the simulated dynamics should agree
//! with; the fitters recover decay times and oscillation frequencies from
//! simulated (or imported) time series; the extractors locate spectral
//! features such as avoided crossings in two-dimensional sweeps.

pub mod extract;
pub mod fit;
pub mod oracles;

pub use extract::{
    count_interior_extrema, extract_avoided_crossing, parabolic_peak, AvoidedCrossing,
};
pub use fit::{fit_damped_sinusoid, fit_exponential, fit_multi_frequency, FitParameter, FitResult};

/// Errors from analysis routines.
///
/// Fit routines reserve errors for structurally unusable input (wrong
/// lengths, too few samples, non-finite values). Data-quality problems that
/// only surface while fitting (degenerate amplitude, non-convergence) are
/// reported through the [`FitResult::converged`] flag and its message
/// instead, so a caller always gets the best available parameters plus an
/// honest quality verdict.
#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    /// Input arrays are malformed (mismatched lengths, non-finite values,
    /// non-increasing abscissae, out-of-range options).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Not enough samples to constrain the requested model.
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    /// A dispersive-regime formula was called with zero detuning.
    #[error("zero detuning: dispersive formulas require a nonzero detuning")]
    ZeroDetuning,
    /// A spectral feature could not be resolved in the data.
    #[error("unresolved spectral feature: {0}")]
    Unresolved(String),
}
