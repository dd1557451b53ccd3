use serde::Serialize;

use super::fit::{FitResult, Model};
use super::StatsError;

/// The classical bound grows as `N_w^(1/2)`.
pub const BETA_CLASSICAL: f64 = 0.5;

pub const DEFAULT_THRESHOLD: f64 = 10.0;

/// `exp(−Δ_i/2)` normalized, with `Δ_i = AIC_i − min AIC`.
pub fn akaike_weights(aic: &[f64]) -> Vec<f64> {
    let min = aic.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = aic.iter().map(|a| (-(a - min) / 2.0).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeedupClass {
    Exponential,
    Polynomial,
    None,
    Inconclusive,
}

/// Both fits for one cutoff `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct WFits {
    pub w: usize,
    pub polylog: FitResult,
    pub poly: FitResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionRow {
    pub w: usize,
    /// `AIC_poly − AIC_polylog`; positive favors polylog.
    pub delta_aic: f64,
    /// Akaike weights `(polylog, poly)`.
    pub weights: [f64; 2],
    pub preferred: Model,
    /// `|ΔAIC|` reached the threshold.
    pub strong: bool,
    pub speedup_class: SpeedupClass,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionReport {
    pub threshold: f64,
    pub rows: Vec<SelectionRow>,
    pub w_c: Option<usize>,
}

fn classify(row_pref: Model, strong: bool, poly: &FitResult) -> SpeedupClass {
    match (strong, row_pref) {
        (false, _) => SpeedupClass::Inconclusive,
        (true, Model::Polylog) => SpeedupClass::Exponential,
        (true, Model::Poly) if poly.exponent() < BETA_CLASSICAL => SpeedupClass::Polynomial,
        (true, Model::Poly) => SpeedupClass::None,
    }
}

/// Smallest index whose strong sign agrees with every later strong sign.
pub fn stable_onset(delta: &[f64], threshold: f64) -> Option<usize> {
    let strong: Vec<(usize, bool)> = delta
        .iter()
        .enumerate()
        .filter(|(_, d)| d.abs() >= threshold)
        .map(|(k, d)| (k, *d > 0.0))
        .collect();
    let (_, last_sign) = *strong.last()?;
    let mut onset = None;
    for &(k, sign) in strong.iter().rev() {
        if sign != last_sign {
            break;
        }
        onset = Some(k);
    }
    onset
}

pub fn select_model(fits: &[WFits], threshold: f64) -> Result<SelectionReport, StatsError> {
    if fits.is_empty() {
        return Err(StatsError::TooFewPoints(0));
    }
    for pair in fits.windows(2) {
        if pair[1].w != pair[0].w + 1 {
            return Err(StatsError::NonContiguous(pair[0].w, pair[1].w));
        }
    }
    let rows: Vec<SelectionRow> = fits
        .iter()
        .map(|f| {
            let delta = f.poly.aic() - f.polylog.aic();
            let weights = akaike_weights(&[f.polylog.aic(), f.poly.aic()]);
            let preferred = if delta >= 0.0 { Model::Polylog } else { Model::Poly };
            let strong = delta.abs() >= threshold;
            SelectionRow {
                w: f.w,
                delta_aic: delta,
                weights: [weights[0], weights[1]],
                preferred,
                strong,
                speedup_class: classify(preferred, strong, &f.poly),
            }
        })
        .collect();
    let deltas: Vec<f64> = rows.iter().map(|r| r.delta_aic).collect();
    let w_c = stable_onset(&deltas, threshold).map(|k| rows[k].w);
    Ok(SelectionReport {
        threshold,
        rows,
        w_c,
    })
}

/// One line of the fit report: a model's fit at a cutoff plus the selection
/// outcome for that cutoff.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReportRow {
    pub dataset: String,
    pub w: usize,
    pub model: Model,
    pub params: [f64; 2],
    pub cov: [[f64; 2]; 2],
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "adjR2")]
    pub adj_r2: f64,
    #[serde(rename = "AIC")]
    pub aic: f64,
    #[serde(rename = "AICc")]
    pub aicc: Option<f64>,
    #[serde(rename = "BIC")]
    pub bic: f64,
    pub t: f64,
    pub p: f64,
    #[serde(rename = "dAIC")]
    pub d_aic: f64,
    pub weights: [f64; 2],
    pub preferred: Model,
    pub w_c: Option<usize>,
    pub speedup_class: SpeedupClass,
}

pub fn fit_report(dataset: &str, fits: &[WFits], report: &SelectionReport) -> Vec<FitReportRow> {
    fits.iter()
        .zip(&report.rows)
        .flat_map(|(f, row)| {
            [&f.polylog, &f.poly].map(|fit| {
                let d = &fit.diagnostics;
                FitReportRow {
                    dataset: dataset.to_string(),
                    w: f.w,
                    model: fit.model,
                    params: fit.params,
                    cov: fit.cov,
                    r2: d.r2,
                    adj_r2: d.adj_r2,
                    aic: d.aic,
                    aicc: d.aicc,
                    bic: d.bic,
                    t: d.t_stat,
                    p: d.p_value,
                    d_aic: row.delta_aic,
                    weights: row.weights,
                    preferred: row.preferred,
                    w_c: report.w_c,
                    speedup_class: row.speedup_class,
                }
            })
        })
        .collect()
}
