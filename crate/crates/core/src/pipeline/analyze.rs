use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::game::{
    estimate_f_hat, n_w_f64, nts_c_lower_bound_f64, nts_iq_interpolation, GameError, DEFAULT_THETA,
    MAX_CANDIDATES,
};
use crate::sampler::ShotRecord;
use crate::stats::{
    bootstrap_nts, fit_model, fit_report, select_model, BootstrapConfig, FitReportRow, GameSetup,
    Model, ScalingPoint, SelectionReport, StatsError, WFits, DEFAULT_THRESHOLD, MIN_UNRESTRICTED_W,
};

use super::{reduce_from_largest, write_atomic, PipelineError};

pub const PLOT_HEADER: &str = "n,log2_Nw,log2_NTSQ,sigma_log2,NTSC_lb,NTS_IQ";

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyzeConfig {
    pub n_min: usize,
    /// Largest size to analyze; the largest size in the data when absent.
    pub n_max: Option<usize>,
    pub w_max: Option<usize>,
    pub theta: f64,
    pub bootstrap: BootstrapConfig,
    /// Wall-clock budget per `(n, w)` job, in seconds.
    pub budget_secs: Option<f64>,
    pub threshold: f64,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: None,
            w_max: None,
            theta: DEFAULT_THETA,
            bootstrap: BootstrapConfig::default(),
            budget_secs: None,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Why a cutoff stopped being available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Refusal {
    FhatLeHalf,
    MemoryGuard,
    BudgetExhausted,
    NoSolution,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NtsRow {
    pub n: usize,
    pub w: usize,
    #[serde(rename = "N_w")]
    pub n_w: f64,
    pub max_f_hat: Option<f64>,
    pub refusal: Option<Refusal>,
    /// Closed form on the pooled evaluation rounds.
    pub nts: Option<f64>,
    pub boot_mean: Option<f64>,
    pub boot_sigma: Option<f64>,
    #[serde(rename = "Q_i")]
    pub q_i: Vec<f64>,
    #[serde(rename = "p_i")]
    pub p_i: Vec<f64>,
    pub rounds: usize,
    /// Sizes reduced from a larger experiment record the source size.
    pub source_n: usize,
}

impl NtsRow {
    fn usable(&self) -> bool {
        self.refusal.is_none() && self.boot_mean.is_some()
    }

    fn point(&self) -> Option<ScalingPoint> {
        match (self.usable(), self.boot_mean, self.boot_sigma) {
            (true, Some(y), Some(sigma)) => Some(ScalingPoint {
                n: self.n,
                n_w: self.n_w,
                y,
                sigma,
            }),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AvailabilityEntry {
    pub n: usize,
    /// Largest `w` with every cutoff `1..=w` usable.
    pub max_w: usize,
    pub reason: Option<Refusal>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotRow {
    pub n: usize,
    pub log2_nw: f64,
    pub log2_ntsq: f64,
    pub sigma_log2: f64,
    pub ntsc_lb: f64,
    pub nts_iq: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DatasetReport {
    pub name: String,
    pub points: BTreeMap<usize, Vec<ScalingPoint>>,
    pub selection: Option<SelectionReport>,
    pub fits: Vec<FitReportRow>,
    pub fit_errors: Vec<String>,
    #[serde(skip)]
    pub plots: BTreeMap<usize, Vec<PlotRow>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub nts_table: Vec<NtsRow>,
    pub availability: Vec<AvailabilityEntry>,
    pub restricted: DatasetReport,
    pub unrestricted: DatasetReport,
}

impl AnalysisReport {
    pub fn row(&self, n: usize, w: usize) -> Option<&NtsRow> {
        self.nts_table.iter().find(|r| r.n == n && r.w == w)
    }

    pub fn max_w(&self, n: usize) -> usize {
        self.availability.iter().find(|a| a.n == n).map_or(0, |a| a.max_w)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for a in &self.availability {
            let why = a.reason.map_or(String::new(), |r| format!(" ({})", refusal_name(r)));
            let _ = writeln!(s, "n = {:>3}: usable w <= {}{why}", a.n, a.max_w);
        }
        for d in [&self.restricted, &self.unrestricted] {
            match &d.selection {
                Some(sel) => {
                    let _ = writeln!(
                        s,
                        "{}: {} cutoffs fitted, w_c = {}",
                        d.name,
                        sel.rows.len(),
                        sel.w_c.map_or("none".into(), |w| w.to_string())
                    );
                }
                None => {
                    let _ = writeln!(s, "{}: no fits", d.name);
                }
            }
        }
        s
    }
}

fn refusal_name(r: Refusal) -> &'static str {
    match r {
        Refusal::FhatLeHalf => "fhat-le-half",
        Refusal::MemoryGuard => "memory-guard",
        Refusal::BudgetExhausted => "budget-exhausted",
        Refusal::NoSolution => "no-solution",
    }
}

/// Records for size `n`: its own, or those of the smallest larger size with
/// enough classes, reduced.
fn records_for(
    by_n: &BTreeMap<usize, Vec<ShotRecord>>,
    n: usize,
) -> Result<Option<(usize, Vec<ShotRecord>)>, PipelineError> {
    if let Some(r) = by_n.get(&n) {
        return Ok(Some((n, r.clone())));
    }
    let Some((&src, recs)) = by_n.range(n + 1..).next() else {
        return Ok(None);
    };
    let kept: Vec<ShotRecord> = recs.iter().filter(|r| r.hw() <= n).cloned().collect();
    Ok(Some((src, reduce_from_largest(&kept, n)?)))
}

fn blank_row(n: usize, w: usize, n_w: f64, source_n: usize) -> NtsRow {
    NtsRow {
        n,
        w,
        n_w,
        max_f_hat: None,
        refusal: None,
        nts: None,
        boot_mean: None,
        boot_sigma: None,
        q_i: Vec::new(),
        p_i: Vec::new(),
        rounds: 0,
        source_n,
    }
}

/// Seeds differ per `(n, w)` so jobs are independent of their run order.
fn job_seed(base: u64, n: usize, w: usize) -> u64 {
    base.wrapping_add(((n as u64) << 24) | w as u64)
}

fn analyze_size(
    n: usize,
    source_n: usize,
    recs: &[ShotRecord],
    w_top: usize,
    cfg: &AnalyzeConfig,
) -> Result<Vec<NtsRow>, PipelineError> {
    let mut rows = Vec::with_capacity(w_top);
    let mut over_budget = false;
    for w in 1..=w_top {
        let n_w = n_w_f64(n, w)?;
        let mut row = blank_row(n, w, n_w, source_n);
        if over_budget {
            row.refusal = Some(Refusal::BudgetExhausted);
            rows.push(row);
            continue;
        }
        if n_w > MAX_CANDIDATES as f64 {
            row.refusal = Some(Refusal::MemoryGuard);
            rows.push(row);
            continue;
        }
        let f_hat = estimate_f_hat(recs, n, w)?;
        let max_f = f_hat.max_up_to(w);
        row.max_f_hat = Some(max_f);
        if max_f <= 0.5 {
            row.refusal = Some(Refusal::FhatLeHalf);
            rows.push(row);
            continue;
        }
        let start = Instant::now();
        let setup = GameSetup {
            n,
            w,
            theta: cfg.theta,
            f_hat: &f_hat,
        };
        let boot = BootstrapConfig {
            seed: job_seed(cfg.bootstrap.seed, n, w),
            ..cfg.bootstrap
        };
        match bootstrap_nts(recs, &setup, &boot) {
            Ok(b) => {
                row.nts = b.pooled;
                row.boot_mean = Some(b.mean);
                row.boot_sigma = Some(b.sigma);
                row.q_i = b.q_i;
                row.p_i = b.p_i;
                row.rounds = b.rounds;
                if b.pooled.is_none() {
                    row.refusal = Some(Refusal::NoSolution);
                }
            }
            Err(StatsError::NoSolution) => row.refusal = Some(Refusal::NoSolution),
            Err(StatsError::Game(GameError::Refused { .. })) => row.refusal = Some(Refusal::FhatLeHalf),
            Err(e) => return Err(e.into()),
        }
        if cfg
            .budget_secs
            .is_some_and(|b| start.elapsed().as_secs_f64() > b)
        {
            over_budget = true;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Runs every `(n, w)` job, builds the availability matrix and fits both
/// scaling datasets.
pub fn analyze(records: &[ShotRecord], cfg: &AnalyzeConfig) -> Result<AnalysisReport, PipelineError> {
    let mut by_n: BTreeMap<usize, Vec<ShotRecord>> = BTreeMap::new();
    for r in records {
        by_n.entry(r.n).or_default().push(r.clone());
    }
    let n_max = cfg
        .n_max
        .or_else(|| by_n.keys().next_back().copied())
        .ok_or(PipelineError::NoData(cfg.n_min))?;
    let sizes: Vec<usize> = (cfg.n_min.max(1)..=n_max).collect();

    let per_size: Vec<Vec<NtsRow>> = sizes
        .par_iter()
        .map(|&n| {
            let Some((src, recs)) = records_for(&by_n, n)? else {
                return Ok(Vec::new());
            };
            let classes: std::collections::BTreeSet<usize> = recs.iter().map(|r| r.hw()).collect();
            let covered = (1..).take_while(|i| classes.contains(i)).count();
            let w_top = n.min(covered).min(cfg.w_max.unwrap_or(n));
            analyze_size(n, src, &recs, w_top, cfg)
        })
        .collect::<Result<_, PipelineError>>()?;

    let mut availability = Vec::new();
    for rows in per_size.iter().filter(|r| !r.is_empty()) {
        let max_w = rows.iter().take_while(|r| r.usable()).count();
        availability.push(AvailabilityEntry {
            n: rows[0].n,
            max_w,
            reason: rows.get(max_w).and_then(|r| r.refusal),
        });
    }
    let nts_table: Vec<NtsRow> = per_size.into_iter().flatten().collect();

    let mut report = AnalysisReport {
        nts_table,
        availability,
        restricted: DatasetReport::default(),
        unrestricted: DatasetReport::default(),
    };
    report.restricted = restricted_dataset(&report, cfg);
    report.unrestricted = unrestricted_dataset(&report, cfg);
    Ok(report)
}

fn plot_row(p: &ScalingPoint, n: usize, w_eff: usize) -> Option<PlotRow> {
    if p.y <= 0.0 {
        return None;
    }
    Some(PlotRow {
        n,
        log2_nw: p.n_w.log2(),
        log2_ntsq: p.y.log2(),
        sigma_log2: p.sigma / (p.y * std::f64::consts::LN_2),
        ntsc_lb: nts_c_lower_bound_f64(p.n_w),
        nts_iq: nts_iq_interpolation(n, w_eff).ok()?,
    })
}

/// `w ↦ NTS(n; min(w, n))` for `n` up to the largest size offering `w`.
fn restricted_dataset(rep: &AnalysisReport, cfg: &AnalyzeConfig) -> DatasetReport {
    let mut out = DatasetReport {
        name: "restricted".into(),
        ..Default::default()
    };
    let top = rep.availability.iter().map(|a| a.max_w).max().unwrap_or(0);
    for w in 1..=top {
        let Some(n_hi) = rep.availability.iter().filter(|a| a.max_w >= w).map(|a| a.n).max() else {
            continue;
        };
        let mut pts = Vec::new();
        let mut plot = Vec::new();
        for a in rep.availability.iter().filter(|a| a.n >= 2 && a.n <= n_hi) {
            let we = w.min(a.n);
            if a.max_w < we {
                continue;
            }
            if let Some(p) = rep.row(a.n, we).and_then(NtsRow::point) {
                plot.extend(plot_row(&p, a.n, we));
                pts.push(p);
            }
        }
        out.points.insert(w, pts);
        out.plots.insert(w, plot);
    }
    finish(out, cfg)
}

/// `w ↦ NTS(n; n)` for `n = 2..=w`, for cutoffs where every such `n` is usable.
fn unrestricted_dataset(rep: &AnalysisReport, cfg: &AnalyzeConfig) -> DatasetReport {
    let mut out = DatasetReport {
        name: "unrestricted".into(),
        ..Default::default()
    };
    let full = |n: usize| rep.row(n, n).and_then(NtsRow::point).filter(|_| rep.max_w(n) >= n);
    let mut all = Vec::new();
    let mut plot = Vec::new();
    for n in 2.. {
        match full(n) {
            Some(p) => {
                plot.extend(plot_row(&p, n, n));
                all.push(p);
            }
            None => break,
        }
    }
    for w in MIN_UNRESTRICTED_W..=all.len() + 1 {
        out.points.insert(w, all[..w - 1].to_vec());
    }
    if !plot.is_empty() {
        out.plots.insert(0, plot);
    }
    finish(out, cfg)
}

fn finish(mut out: DatasetReport, cfg: &AnalyzeConfig) -> DatasetReport {
    let mut fits: Vec<WFits> = Vec::new();
    for (&w, pts) in &out.points {
        if pts.iter().any(|p| !(p.sigma > 0.0)) {
            out.fit_errors.push(format!("w = {w}: a point has zero bootstrap spread"));
            continue;
        }
        match (fit_model(pts, Model::Polylog), fit_model(pts, Model::Poly)) {
            (Ok(polylog), Ok(poly)) => fits.push(WFits { w, polylog, poly }),
            (Err(e), _) | (_, Err(e)) => out.fit_errors.push(format!("w = {w}: {e}")),
        }
    }
    // Selection needs consecutive cutoffs; keep the longest run.
    let mut best: &[WFits] = &[];
    let mut start = 0;
    for k in 1..=fits.len() {
        if k == fits.len() || fits[k].w != fits[k - 1].w + 1 {
            if k - start > best.len() {
                best = &fits[start..k];
            }
            start = k;
        }
    }
    if !best.is_empty() {
        match select_model(best, cfg.threshold) {
            Ok(sel) => {
                out.fits = fit_report(&out.name, best, &sel);
                out.selection = Some(sel);
            }
            Err(e) => out.fit_errors.push(e.to_string()),
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x}"))
}

fn nts_csv(rows: &[NtsRow]) -> String {
    let mut s = String::from("n,w,N_w,max_f_hat,refusal,nts,boot_mean,boot_sigma,rounds,source_n\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.w,
            r.n_w,
            opt(r.max_f_hat),
            r.refusal.map_or("", refusal_name),
            opt(r.nts),
            opt(r.boot_mean),
            opt(r.boot_sigma),
            r.rounds,
            r.source_n
        );
    }
    s
}

fn plot_csv(rows: &[PlotRow]) -> String {
    let mut s = format!("{PLOT_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.n, r.log2_nw, r.log2_ntsq, r.sigma_log2, r.ntsc_lb, r.nts_iq
        );
    }
    s
}

/// Writes the tables, fit reports and plot data into `dir`; returns the
/// paths written.
pub fn write_analysis(rep: &AnalysisReport, dir: &Path) -> Result<Vec<std::path::PathBuf>, PipelineError> {
    let mut files: Vec<(String, String)> = vec![
        ("nts_table.json".into(), serde_json::to_string_pretty(&rep.nts_table)?),
        ("nts_table.csv".into(), nts_csv(&rep.nts_table)),
        ("availability.json".into(), serde_json::to_string_pretty(&rep.availability)?),
        ("fits_restricted.json".into(), serde_json::to_string_pretty(&rep.restricted)?),
        ("fits_unrestricted.json".into(), serde_json::to_string_pretty(&rep.unrestricted)?),
    ];
    for (w, rows) in &rep.restricted.plots {
        files.push((format!("plot_restricted_w{w}.csv"), plot_csv(rows)));
    }
    if let Some(rows) = rep.unrestricted.plots.get(&0) {
        files.push(("plot_unrestricted.csv".into(), plot_csv(rows)));
    }
    files
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            write_atomic(&path, body.as_bytes())?;
            Ok(path)
        })
        .collect()
}
