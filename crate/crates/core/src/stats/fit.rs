use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::StatsError;

/// Scaling models, both zero at `N_w = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// `a (log2 N_w)^α`
    Polylog,
    /// `b (N_w^β − 1)`
    Poly,
}

impl Model {
    pub fn eval(self, p: [f64; 2], n_w: f64) -> f64 {
        match self {
            Model::Polylog => p[0] * n_w.log2().powf(p[1]),
            Model::Poly => p[0] * (n_w.powf(p[1]) - 1.0),
        }
    }

    /// `(∂m/∂p0, ∂m/∂p1)`.
    pub fn gradient(self, p: [f64; 2], n_w: f64) -> [f64; 2] {
        match self {
            Model::Polylog => {
                let l = n_w.log2();
                let la = l.powf(p[1]);
                [la, p[0] * la * l.ln()]
            }
            Model::Poly => {
                let nb = n_w.powf(p[1]);
                [nb - 1.0, p[0] * nb * n_w.ln()]
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Polylog => "polylog",
            Model::Poly => "poly",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub n_w: f64,
    pub y: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "adjR2")]
    pub adj_r2: f64,
    #[serde(rename = "LL")]
    pub log_likelihood: f64,
    #[serde(rename = "AIC")]
    pub aic: f64,
    /// Absent when `N <= k + 1`.
    #[serde(rename = "AICc")]
    pub aicc: Option<f64>,
    #[serde(rename = "BIC")]
    pub bic: f64,
    #[serde(rename = "t")]
    pub t_stat: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub model: Model,
    pub params: [f64; 2],
    pub cov: [[f64; 2]; 2],
    /// `Σ ((y − ŷ)/σ)²`.
    pub rss_weighted: f64,
    pub iterations: usize,
    pub points: usize,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    pub fn exponent(&self) -> f64 {
        self.params[1]
    }

    pub fn exponent_se(&self) -> f64 {
        self.cov[1][1].max(0.0).sqrt()
    }

    pub fn aic(&self) -> f64 {
        self.diagnostics.aic
    }

    pub fn predict(&self, n_w: f64) -> f64 {
        self.model.eval(self.params, n_w)
    }
}

pub const MAX_ITERATIONS: usize = 500;
const K: usize = 2;

fn chi2(model: Model, p: [f64; 2], pts: &[ScalingPoint]) -> f64 {
    pts.iter()
        .map(|q| ((q.y - model.eval(p, q.n_w)) / q.sigma).powi(2))
        .sum()
}

/// `JᵀJ` and `Jᵀr` for the weighted residuals.
fn normal_equations(model: Model, p: [f64; 2], pts: &[ScalingPoint]) -> ([[f64; 2]; 2], [f64; 2]) {
    let mut a = [[0.0; 2]; 2];
    let mut g = [0.0; 2];
    for q in pts {
        let j = model.gradient(p, q.n_w).map(|d| d / q.sigma);
        let r = (q.y - model.eval(p, q.n_w)) / q.sigma;
        for u in 0..2 {
            g[u] += j[u] * r;
            for v in 0..2 {
                a[u][v] += j[u] * j[v];
            }
        }
    }
    (a, g)
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        (b[0] * a[1][1] - a[0][1] * b[1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ])
}

fn invert2(a: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ])
}

fn initial_guess(model: Model, pts: &[ScalingPoint]) -> [f64; 2] {
    let last = pts.iter().max_by(|a, b| a.n_w.total_cmp(&b.n_w)).expect("nonempty");
    match model {
        Model::Polylog => [last.y / last.n_w.log2(), 1.0],
        Model::Poly => [last.y / (last.n_w.sqrt() - 1.0), 0.5],
    }
}

fn validate(pts: &[ScalingPoint]) -> Result<(), StatsError> {
    if pts.len() < 3 {
        return Err(StatsError::TooFewPoints(pts.len()));
    }
    for q in pts {
        if !(q.sigma > 0.0) || !q.sigma.is_finite() {
            return Err(StatsError::BadSigma { n: q.n, sigma: q.sigma });
        }
        if !(q.n_w >= 2.0) || !q.y.is_finite() {
            return Err(StatsError::BadPoint { n: q.n });
        }
    }
    Ok(())
}

/// Weighted Levenberg–Marquardt fit.
pub fn fit_model(points: &[ScalingPoint], model: Model) -> Result<FitResult, StatsError> {
    validate(points)?;
    let mut p = initial_guess(model, points);
    let mut cost = chi2(model, p, points);
    let mut lambda = 1e-3;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let (a, g) = normal_equations(model, p, points);
        let damped = [
            [a[0][0] * (1.0 + lambda), a[0][1]],
            [a[1][0], a[1][1] * (1.0 + lambda)],
        ];
        let Some(step) = solve2(damped, g) else {
            lambda *= 10.0;
            if lambda > 1e20 {
                break;
            }
            continue;
        };
        let trial = [p[0] + step[0], p[1] + step[1]];
        let trial_cost = chi2(model, trial, points);
        trace.push((iterations, cost, lambda));
        if trial_cost.is_finite() && trial_cost <= cost {
            let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
            let step_norm = step[0].hypot(step[1]);
            p = trial;
            cost = trial_cost;
            lambda = (lambda / 10.0).max(1e-12);
            if rel < 1e-12 || step_norm < 1e-10 {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e20 {
                // No downhill step exists at any damping: a stationary point.
                converged = true;
                break;
            }
        }
    }
    if !converged || !p.iter().all(|v| v.is_finite()) {
        return Err(StatsError::NotConverged {
            model,
            iterations,
            trace: trace.into_iter().rev().take(10).collect(),
        });
    }
    let (a, _) = normal_equations(model, p, points);
    let dof = (points.len() - K) as f64;
    let cov = invert2(a)
        .map(|inv| inv.map(|row| row.map(|v| v * cost / dof)))
        .unwrap_or([[f64::INFINITY; 2]; 2]);
    let diagnostics = compute_diagnostics(p[1], cov[1][1].max(0.0).sqrt(), cost, points);
    Ok(FitResult {
        model,
        params: p,
        cov,
        rss_weighted: cost,
        iterations,
        points: points.len(),
        diagnostics,
    })
}

fn compute_diagnostics(exponent: f64, se: f64, rss: f64, pts: &[ScalingPoint]) -> Diagnostics {
    let n = pts.len() as f64;
    let k = K as f64;
    let wsum: f64 = pts.iter().map(|q| q.sigma.powi(-2)).sum();
    let ybar: f64 = pts.iter().map(|q| q.y * q.sigma.powi(-2)).sum::<f64>() / wsum;
    let tss: f64 = pts.iter().map(|q| ((q.y - ybar) / q.sigma).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { f64::NAN };
    let adj_r2 = if tss > 0.0 {
        1.0 - (rss / (n - k)) / (tss / (n - 1.0))
    } else {
        f64::NAN
    };
    let ll = -0.5
        * pts
            .iter()
            .map(|q| (2.0 * std::f64::consts::PI * q.sigma * q.sigma).ln())
            .sum::<f64>()
        - 0.5 * rss;
    let aic = -2.0 * ll + 2.0 * k;
    let aicc = (n > k + 1.0).then(|| aic + 2.0 * k * (k + 1.0) / (n - k - 1.0));
    let bic = -2.0 * ll + k * n.ln();
    let t_stat = if se > 0.0 {
        exponent / se
    } else {
        f64::INFINITY.copysign(exponent)
    };
    let p_value = if t_stat.is_finite() {
        let dist = StudentsT::new(0.0, 1.0, n - k).expect("positive dof");
        2.0 * (1.0 - dist.cdf(t_stat.abs()))
    } else {
        0.0
    };
    Diagnostics {
        r2,
        adj_r2,
        log_likelihood: ll,
        aic,
        aicc,
        bic,
        t_stat,
        p_value,
    }
}

/// Full diagnostic set; refuses fits whose AICc is undefined.
pub fn diagnostics(fit: &FitResult, points: &[ScalingPoint]) -> Result<Diagnostics, StatsError> {
    if points.len() <= K + 1 {
        return Err(StatsError::AiccUndefined { points: points.len() });
    }
    Ok(compute_diagnostics(fit.exponent(), fit.exponent_se(), fit.rss_weighted, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(model: Model, p: [f64; 2], sigma_rel: f64) -> Vec<ScalingPoint> {
        (2..=15)
            .map(|n| {
                let n_w = 2f64.powi(n) - 1.0;
                let y = model.eval(p, n_w);
                ScalingPoint {
                    n: n as usize,
                    n_w,
                    y,
                    sigma: (y * sigma_rel).max(1e-3),
                }
            })
            .collect()
    }

    #[test]
    fn recovers_polylog() {
        let pts: Vec<ScalingPoint> = synth(Model::Polylog, [2.0, 1.5], 0.0)
            .into_iter()
            .map(|q| ScalingPoint { sigma: 1e-3, ..q })
            .collect();
        let f = fit_model(&pts, Model::Polylog).unwrap();
        assert!((f.params[0] - 2.0).abs() < 1e-6 && (f.params[1] - 1.5).abs() < 1e-6, "{:?}", f.params);
        assert!(f.rss_weighted < 1e-12);
        assert!((f.diagnostics.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_poly() {
        let pts: Vec<ScalingPoint> = synth(Model::Poly, [0.3, 0.5], 0.0)
            .into_iter()
            .map(|q| ScalingPoint { sigma: 1e-3, ..q })
            .collect();
        let f = fit_model(&pts, Model::Poly).unwrap();
        assert!((f.params[0] - 0.3).abs() < 1e-6 && (f.params[1] - 0.5).abs() < 1e-6, "{:?}", f.params);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for model in [Model::Polylog, Model::Poly] {
            for &(p, n_w) in &[([1.3, 0.7], 37.0), ([0.2, 1.9], 1000.0), ([4.0, 0.35], 3.0)] {
                let g = model.gradient(p, n_w);
                for k in 0..2 {
                    let h = 1e-6 * p[k].abs().max(1.0);
                    let mut hi = p;
                    let mut lo = p;
                    hi[k] += h;
                    lo[k] -= h;
                    let fd = (model.eval(hi, n_w) - model.eval(lo, n_w)) / (2.0 * h);
                    assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1e-8), "{model:?} {k}");
                }
            }
        }
    }

    #[test]
    fn sigma_scale_leaves_parameters() {
        let mut pts = synth(Model::Polylog, [1.0, 1.2], 0.05);
        for (k, q) in pts.iter_mut().enumerate() {
            q.y *= 1.0 + 0.03 * ((k * 7 % 5) as f64 - 2.0);
        }
        let a = fit_model(&pts, Model::Polylog).unwrap();
        let scaled: Vec<ScalingPoint> = pts.iter().map(|q| ScalingPoint { sigma: q.sigma * 3.0, ..*q }).collect();
        let b = fit_model(&scaled, Model::Polylog).unwrap();
        for k in 0..2 {
            assert!((a.params[k] - b.params[k]).abs() < 1e-8 * a.params[k].abs());
        }
        assert!((a.rss_weighted / 9.0 - b.rss_weighted).abs() < 1e-9 * a.rss_weighted);
    }

    #[test]
    fn input_checks() {
        let pts = synth(Model::Poly, [1.0, 0.5], 0.05);
        assert!(matches!(fit_model(&pts[..2], Model::Poly), Err(StatsError::TooFewPoints(2))));
        let mut bad = pts.clone();
        bad[0].sigma = 0.0;
        assert!(matches!(fit_model(&bad, Model::Poly), Err(StatsError::BadSigma { .. })));
        let f = fit_model(&pts[..3], Model::Poly).unwrap();
        assert!(f.diagnostics.aicc.is_none());
        assert!(diagnostics(&f, &pts[..3]).is_err());
        let f = fit_model(&pts[..4], Model::Poly).unwrap();
        assert!(diagnostics(&f, &pts[..4]).unwrap().aicc.is_some());
    }

    #[test]
    fn polylog_data_prefers_polylog() {
        let mut pts = synth(Model::Polylog, [1.0, 1.5], 0.05);
        for (k, q) in pts.iter_mut().enumerate() {
            q.y *= 1.0 + 0.02 * ((k % 3) as f64 - 1.0);
        }
        let a = fit_model(&pts, Model::Polylog).unwrap();
        let b = fit_model(&pts, Model::Poly).unwrap();
        assert!(a.diagnostics.r2 > b.diagnostics.r2);
        assert!(a.aic() < b.aic());
    }
}
