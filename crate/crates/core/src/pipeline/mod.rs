//! Configuration, file formats and the end-to-end pipelines that tie the
//! other modules together.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{
    alap_schedule, build_query_circuit, lower_to_native, CircuitError, GateDurations, TimedCircuit,
    WireIdle,
};
use crate::game::{GameError, DEFAULT_THETA};
use crate::layout::{embed_query, verify_swap_free, ChainEmbedding, CouplingGraph, LayoutError};
use crate::oracle::{build_constant_depth_oracle, OracleError};
use crate::sampler::{read_shots, write_shots, NoiseProfile, SamplerError, ShotRecord};
use crate::stats::{BootstrapConfig, StatsError};

mod analyze;

pub use analyze::{
    analyze, write_analysis, AnalysisReport, AnalyzeConfig, AvailabilityEntry, DatasetReport,
    NtsRow, PlotRow, Refusal, PLOT_HEADER,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SIMON_OUT_DIR";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot reduce a weight-{hw} record to Simon-{m}")]
    ReduceWeight { hw: usize, m: usize },
    #[error("cannot reduce Simon-{n} records to the larger size {m}")]
    ReduceSize { n: usize, m: usize },
    #[error("record {shot} does not use the canonical hidden string")]
    NotCanonical { shot: u64 },
    #[error("no shot records for n = {0}")]
    NoData(usize),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into(),
            source,
        }
    }
}

/// A noise profile given inline or as a path to a profile file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseRef {
    Path(PathBuf),
    Inline(NoiseProfile),
}

impl Default for NoiseRef {
    fn default() -> Self {
        NoiseRef::Inline(NoiseProfile::noiseless())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Largest problem size.
    pub n: usize,
    /// Smallest problem size to simulate directly; only `n` when absent.
    pub n_min: Option<usize>,
    /// Hamming-weight cutoff.
    pub w: usize,
    pub shots_per_class: usize,
    pub theta: f64,
    pub noise: NoiseRef,
    pub device: Option<String>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub folds: usize,
    pub resamples: usize,
    /// Wall-clock budget per `(n, w)` analysis job, in seconds.
    pub budget_secs: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 3,
            n_min: None,
            w: 3,
            shots_per_class: 15_000,
            theta: DEFAULT_THETA,
            noise: NoiseRef::default(),
            device: None,
            seed: 0,
            output: None,
            folds: 10,
            resamples: 15_000,
            budget_secs: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads JSON, or TOML when the extension is `.toml`. Relative profile
    /// paths resolve against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?
        };
        if let NoiseRef::Path(p) = &mut cfg.noise {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.w == 0 || self.w > self.n {
            return bad(format!("w = {} must lie in [1, n = {}]", self.w, self.n));
        }
        if let Some(lo) = self.n_min {
            if lo == 0 || lo > self.n {
                return bad(format!("n_min = {lo} must lie in [1, n = {}]", self.n));
            }
        }
        if self.shots_per_class == 0 {
            return bad("shots_per_class must be at least 1".into());
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("theta = {} is outside (0, 1)", self.theta));
        }
        if self.folds < 2 || self.resamples == 0 {
            return bad("folds must be at least 2 and resamples at least 1".into());
        }
        Ok(())
    }

    pub fn sizes(&self) -> Vec<usize> {
        (self.n_min.unwrap_or(self.n)..=self.n).collect()
    }

    pub fn profile(&self) -> Result<NoiseProfile, PipelineError> {
        match &self.noise {
            NoiseRef::Inline(p) => {
                p.validate()?;
                Ok(p.clone())
            }
            NoiseRef::Path(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
                Ok(NoiseProfile::from_json(&text)?)
            }
        }
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            folds: self.folds,
            resamples: self.resamples,
            seed: self.seed,
        }
    }

    /// `output`, else `$SIMON_OUT_DIR`, else the working directory.
    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(default_output_dir)
    }
}

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| PipelineError::io(path, e))?;
    tmp.persist(path).map_err(|e| PipelineError::io(path, e.error))?;
    Ok(())
}

pub fn save_shots(path: &Path, records: &[ShotRecord]) -> Result<(), PipelineError> {
    let mut buf = Vec::new();
    write_shots(&mut buf, records)?;
    write_atomic(path, &buf)
}

pub fn load_shots(path: &Path) -> Result<Vec<ShotRecord>, PipelineError> {
    let f = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(read_shots(BufReader::new(f))?)
}

/// Keeps the trailing `m` bits of `b` and `z`. On the canonical strings the
/// dropped leading positions form boxes that never interact with the kept
/// block, so noiseless records stay exact Simon-`m` samples.
pub fn reduce_from_largest(records: &[ShotRecord], m: usize) -> Result<Vec<ShotRecord>, PipelineError> {
    records
        .iter()
        .map(|r| {
            let hw = r.hw();
            if m > r.n {
                return Err(PipelineError::ReduceSize { n: r.n, m });
            }
            if hw > m || m == 0 {
                return Err(PipelineError::ReduceWeight { hw, m });
            }
            if r.b.first_one() != Some(r.n - hw) {
                return Err(PipelineError::NotCanonical { shot: r.shot });
            }
            Ok(ShotRecord {
                n: m,
                b: r.b.suffix(m),
                z: r.z.suffix(m),
                shot: r.shot,
                tag: r.tag,
            })
        })
        .collect()
}

/// A compiled Simon-`n` experiment at cutoff `w` on one device.
#[derive(Clone, Debug)]
pub struct CompileOutput {
    pub embedding: ChainEmbedding,
    /// `(i, swap-free)` for every class.
    pub certificates: Vec<(usize, bool)>,
    /// Timed native circuit of the largest class.
    pub timed: TimedCircuit,
    pub idle: Vec<WireIdle>,
}

#[derive(Serialize)]
struct CertificateFile<'a> {
    n: usize,
    w: usize,
    qubits_used: usize,
    swap_free: bool,
    classes: &'a [(usize, bool)],
}

impl CompileOutput {
    pub fn swap_free(&self) -> bool {
        self.certificates.iter().all(|c| c.1)
    }

    pub fn certificate_json(&self) -> String {
        serde_json::to_string_pretty(&CertificateFile {
            n: self.embedding.n,
            w: self.embedding.w,
            qubits_used: self.embedding.qubits_used(),
            swap_free: self.swap_free(),
            classes: &self.certificates,
        })
        .expect("plain data serializes")
    }

    pub fn idle_json(&self) -> String {
        serde_json::to_string_pretty(&self.idle).expect("plain data serializes")
    }
}

pub fn compile_experiment(
    n: usize,
    w: usize,
    graph: &CouplingGraph,
    durations: &GateDurations,
) -> Result<CompileOutput, PipelineError> {
    durations.validate()?;
    let embedding = embed_query(n, w, graph)?;
    let mut certificates = Vec::with_capacity(w);
    let mut last = None;
    for i in 1..=w {
        let oracle = build_constant_depth_oracle(n, i)?;
        let query = build_query_circuit(&oracle.circuit)?;
        certificates.push((i, verify_swap_free(&embedding.map_for_class(i), graph, &query)?));
        if i == w {
            last = Some(query);
        }
    }
    let query = last.expect("w >= 1");
    let timed = alap_schedule(&lower_to_native(&query), durations);
    let idle = timed.idle_report();
    Ok(CompileOutput {
        embedding,
        certificates,
        timed,
        idle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{simulate_shots, Tag};

    #[test]
    fn reduction_examples() {
        let recs = simulate_shots(5, 2, 50, &NoiseProfile::noiseless(), 1).unwrap();
        let two: Vec<ShotRecord> = recs.into_iter().filter(|r| r.hw() == 2).collect();
        let red = reduce_from_largest(&two, 3).unwrap();
        assert!(red.iter().all(|r| r.b.to_string() == "011" && r.is_valid() && r.n == 3));
        assert_eq!(reduce_from_largest(&two, 5).unwrap(), two);
        assert!(matches!(reduce_from_largest(&two, 1), Err(PipelineError::ReduceWeight { hw: 2, m: 1 })));
        assert!(reduce_from_largest(&two, 6).is_err());
        let mut odd = two[0].clone();
        odd.b = "10100".parse().unwrap();
        odd.tag = Tag::Evaluation;
        assert!(matches!(reduce_from_largest(&[odd], 3), Err(PipelineError::NotCanonical { .. })));
    }

    #[test]
    fn config_defaults_and_formats() {
        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("c.json");
        std::fs::write(&json, "{}").unwrap();
        let cfg = ExperimentConfig::load(&json).unwrap();
        assert_eq!((cfg.n, cfg.w, cfg.shots_per_class), (3, 3, 15_000));

        let toml_path = dir.path().join("c.toml");
        std::fs::write(&toml_path, "n = 6\nw = 2\nnoise = \"p.json\"\n").unwrap();
        let cfg = ExperimentConfig::load(&toml_path).unwrap();
        assert_eq!(cfg.noise, NoiseRef::Path(dir.path().join("p.json")));
        assert!(cfg.profile().is_err(), "missing profile file");
        std::fs::write(dir.path().join("p.json"), r#"{"kind":"parametric","epsilon":0.01}"#).unwrap();
        assert!(cfg.profile().is_ok());

        let inline = dir.path().join("i.json");
        std::fs::write(&inline, r#"{"n":4,"w":4,"noise":{"kind":"table","f":{"1":0.9,"2":0.9,"3":0.8,"4":0.7}}}"#).unwrap();
        let cfg = ExperimentConfig::load(&inline).unwrap();
        assert_eq!(cfg.profile().unwrap().f(4, 3).unwrap(), 0.8);

        std::fs::write(&json, r#"{"n":2,"w":3}"#).unwrap();
        assert!(matches!(ExperimentConfig::load(&json), Err(PipelineError::Config(_))));
        std::fs::write(&json, r#"{"nn":2}"#).unwrap();
        assert!(ExperimentConfig::load(&json).is_err());
    }

    #[test]
    fn atomic_write_and_shot_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("shots.jsonl");
        let recs = simulate_shots(3, 2, 4, &NoiseProfile::noiseless(), 2).unwrap();
        save_shots(&path, &recs).unwrap();
        assert_eq!(load_shots(&path).unwrap(), recs);
        assert!(load_shots(&dir.path().join("none")).is_err());
    }

    #[test]
    fn compile_grid() {
        let g = crate::layout::square_grid(10, 12).unwrap();
        let out = compile_experiment(60, 3, &g, &GateDurations::boston()).unwrap();
        assert!(out.swap_free());
        assert_eq!(out.embedding.qubits_used(), 120);
        assert_eq!(out.idle.len(), 120);
        let cert = out.certificate_json();
        assert!(cert.contains("\"swap_free\": true"));
    }
}
