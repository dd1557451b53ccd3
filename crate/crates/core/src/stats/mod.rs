//! Bootstrap uncertainties, weighted fits of the scaling models, diagnostics
//! and AIC-based model selection.

use thiserror::Error;

use crate::game::GameError;

mod bootstrap;
mod fit;
mod select;

pub use bootstrap::{bootstrap_nts, BootstrapConfig, BootstrapResult, GameSetup};
pub use fit::{diagnostics, fit_model, Diagnostics, FitResult, Model, ScalingPoint, MAX_ITERATIONS};
pub use select::{
    akaike_weights, fit_report, select_model, stable_onset, FitReportRow, SelectionReport,
    SelectionRow, SpeedupClass, WFits, BETA_CLASSICAL, DEFAULT_THRESHOLD,
};

/// Smallest cutoff for which unrestricted fits have enough residual degrees
/// of freedom.
pub const MIN_UNRESTRICTED_W: usize = 7;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("point n = {n} has sigma {sigma}; must be positive and finite")]
    BadSigma { n: usize, sigma: f64 },
    #[error("point n = {n} needs N_w >= 2 and a finite value")]
    BadPoint { n: usize },
    #[error("{model:?} fit did not converge in {iterations} iterations; last (iter, chi2, lambda): {trace:?}")]
    NotConverged {
        model: Model,
        iterations: usize,
        trace: Vec<(usize, f64, f64)>,
    },
    #[error("AICc needs more than 3 points, got {points}")]
    AiccUndefined { points: usize },
    #[error("cutoffs must be contiguous, found {0} then {1}")]
    NonContiguous(usize, usize),
    #[error("bootstrap needs folds >= 2 and resamples >= 1 (got {folds}, {resamples})")]
    BadBootstrap { folds: usize, resamples: usize },
    #[error("class {class} has {records} evaluation records, fewer than {folds} folds")]
    TooFewRecords {
        class: usize,
        records: usize,
        folds: usize,
    },
    #[error("no resample produced a positive mean score")]
    NoSolution,
    #[error(transparent)]
    Game(#[from] GameError),
}
