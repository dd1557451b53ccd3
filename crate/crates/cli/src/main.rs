use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use simon_core::circuit::{entangling_depth, CircuitError};
use simon_core::game::{
    estimate_f_hat, n_w_f64, nts_c_lower_bound_f64, nts_closed_form, nts_iq_interpolation,
    play_monte_carlo, play_shot_records, FHatTable, GameError, GameReport, PlayConfig,
    DEFAULT_THETA,
};
use simon_core::layout::{DeviceSpec, LayoutError};
use simon_core::oracle::{build_constant_depth_oracle, build_star_oracle, OracleError};
use simon_core::pipeline::{
    analyze, compile_experiment, default_output_dir, load_shots, reduce_from_largest, save_shots,
    write_analysis, write_atomic, AnalyzeConfig, ExperimentConfig, PipelineError,
};
use simon_core::sampler::{simulate_experiment, NoiseProfile, SamplerError};
use simon_core::stats::{
    fit_model, fit_report, select_model, BootstrapConfig, Model, ScalingPoint, StatsError, WFits,
    DEFAULT_THRESHOLD,
};
use simon_core::{CouplingGraph, GateDurations};

#[derive(Parser)]
#[command(name = "simon", version, about = "Restricted-weight Simon benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Construction {
    ConstantDepth,
    Star,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Build the oracle circuit for b = 0^(n-hw) 1^hw.
    Oracle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        hw: usize,
        #[arg(long, value_enum, default_value = "constant-depth")]
        construction: Construction,
        #[arg(long, value_enum, default_value = "both")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed, certify and time the query circuit on a device.
    Compile {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        w: usize,
        /// `grid:RxC`, `heavy-hex:boston-156`, `heavy-hex:RxC[@O]` or a graph JSON file.
        #[arg(long)]
        device: String,
        /// Gate durations JSON; defaults follow the device family.
        #[arg(long)]
        durations: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample calibration and evaluation shots from a config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Shot file to write; `shots.jsonl` in the output directory by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate f̂(i) from calibration shots.
    EstimateF {
        #[arg(long)]
        shots: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        w: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play the guessing game on recorded shots or on fresh Monte Carlo rounds.
    Play {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        w: usize,
        /// Recorded shots; without this the game is simulated.
        #[arg(long)]
        shots: Option<PathBuf>,
        #[arg(long)]
        fhat: Option<PathBuf>,
        /// Noise profile for simulated rounds.
        #[arg(long)]
        noise: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        rounds: usize,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form NTS from per-class Q_i and p_i, with the reference curves.
    Nts {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        w: usize,
        /// Comma-separated Q_1..Q_w.
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        /// Comma-separated p_1..p_w.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
    },
    /// Fit both scaling models per cutoff and select between them.
    Fit {
        /// JSON map from w to scaling points, or a dataset report from `analyze`.
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value = "custom")]
        dataset: String,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full analysis: NTS table, availability, fits and plot data.
    Analyze {
        #[arg(long, required = true, num_args = 1..)]
        shots: Vec<PathBuf>,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        w_max: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 15_000)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Wall-clock seconds allowed per (n, w) job.
        #[arg(long)]
        budget_secs: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce Simon-n shots to Simon-m by dropping leading boxes.
    Reduce {
        #[arg(long)]
        shots: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// An error with a chosen exit status.
#[derive(Debug)]
struct Coded(u8, String);

impl fmt::Display for Coded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Coded {}

const USAGE: u8 = 2;
const REFUSAL: u8 = 3;
const NUMERIC: u8 = 4;

fn oracle_code(e: &OracleError) -> u8 {
    match e {
        OracleError::InvalidSize | OracleError::InvalidWeight { .. } | OracleError::InvalidCutoff { .. } => USAGE,
        _ => 1,
    }
}

fn layout_code(e: &LayoutError) -> u8 {
    match e {
        LayoutError::ChainNotFound { .. } | LayoutError::InsufficientQubits { .. } => REFUSAL,
        LayoutError::UnknownDevice(_) | LayoutError::UnknownPreset(_) | LayoutError::InvalidCutoff { .. } => USAGE,
        _ => 1,
    }
}

fn game_code(e: &GameError) -> u8 {
    match e {
        GameError::Refused { .. } | GameError::TooManyCandidates { .. } => REFUSAL,
        GameError::InvalidTheta(_) | GameError::ZeroRounds | GameError::InvalidFHat { .. } => USAGE,
        GameError::ClassCount { .. } | GameError::MissingClasses(_) => USAGE,
        GameError::DegenerateScore => NUMERIC,
        GameError::Oracle(o) => oracle_code(o),
        GameError::Sampler(s) => sampler_code(s),
    }
}

fn sampler_code(e: &SamplerError) -> u8 {
    match e {
        SamplerError::Io(_) => 1,
        SamplerError::Oracle(o) => oracle_code(o),
        _ => USAGE,
    }
}

fn stats_code(e: &StatsError) -> u8 {
    match e {
        StatsError::Game(g) => game_code(g),
        StatsError::BadBootstrap { .. } | StatsError::NonContiguous(..) => USAGE,
        _ => NUMERIC,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(c) = cause.downcast_ref::<Coded>() {
            return c.0;
        }
        if cause.downcast_ref::<clap::Error>().is_some() {
            return USAGE;
        }
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            return match e {
                PipelineError::Config(_)
                | PipelineError::ReduceWeight { .. }
                | PipelineError::ReduceSize { .. }
                | PipelineError::NotCanonical { .. }
                | PipelineError::NoData(_) => USAGE,
                PipelineError::Io { .. } | PipelineError::Json(_) => 1,
                PipelineError::Oracle(o) => oracle_code(o),
                PipelineError::Circuit(_) => USAGE,
                PipelineError::Layout(l) => layout_code(l),
                PipelineError::Sampler(s) => sampler_code(s),
                PipelineError::Game(g) => game_code(g),
                PipelineError::Stats(s) => stats_code(s),
            };
        }
        if let Some(e) = cause.downcast_ref::<OracleError>() {
            return oracle_code(e);
        }
        if let Some(e) = cause.downcast_ref::<LayoutError>() {
            return layout_code(e);
        }
        if let Some(e) = cause.downcast_ref::<GameError>() {
            return game_code(e);
        }
        if let Some(e) = cause.downcast_ref::<StatsError>() {
            return stats_code(e);
        }
        if let Some(e) = cause.downcast_ref::<SamplerError>() {
            return sampler_code(e);
        }
        if cause.downcast_ref::<CircuitError>().is_some() {
            return USAGE;
        }
    }
    1
}

fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(default_output_dir)
}

fn write(path: &Path, body: &str) -> Result<()> {
    write_atomic(path, body.as_bytes())?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_device(s: &str) -> Result<CouplingGraph> {
    match s.parse::<DeviceSpec>() {
        Ok(spec) => Ok(spec.build()?),
        Err(parse_err) => {
            let path = Path::new(s);
            if path.exists() {
                let text = read(path)?;
                Ok(CouplingGraph::from_json(&text).with_context(|| format!("parsing graph {s}"))?)
            } else {
                Err(parse_err.into())
            }
        }
    }
}

fn cmd_oracle(n: usize, hw: usize, construction: Construction, format: Format, out: Option<PathBuf>) -> Result<()> {
    let oc = match construction {
        Construction::ConstantDepth => build_constant_depth_oracle(n, hw)?,
        Construction::Star => build_star_oracle(n, hw)?,
    };
    let dir = out_dir(out);
    let stem = format!("oracle_n{n}_hw{hw}");
    if matches!(format, Format::Json | Format::Both) {
        write(&dir.join(format!("{stem}.json")), &oc.to_json())?;
    }
    if matches!(format, Format::Dot | Format::Both) {
        write(&dir.join(format!("{stem}.dot")), &oc.to_dot())?;
    }
    println!(
        "oracle n = {n}, hw = {hw}: {} gates, entangling depth {}",
        oc.circuit.len(),
        entangling_depth(&oc.circuit)
    );
    Ok(())
}

fn cmd_compile(n: usize, w: usize, device: &str, durations: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let graph = load_device(device)?;
    let durations = match durations {
        Some(p) => {
            let d: GateDurations = serde_json::from_str(&read(&p)?).context("parsing durations")?;
            d.validate()?;
            d
        }
        None if device.starts_with("grid:") => GateDurations::miami(),
        None => GateDurations::boston(),
    };
    let compiled = match compile_experiment(n, w, &graph, &durations) {
        Err(PipelineError::Layout(LayoutError::ChainNotFound { requested, longest })) => {
            return Err(Coded(
                REFUSAL,
                format!(
                    "chain-not-found: need {requested} qubits in a line, longest found is {} on {} qubits",
                    longest.len(),
                    graph.qubit_count()
                ),
            )
            .into());
        }
        other => other?,
    };
    let dir = out_dir(out);
    let stem = format!("compile_n{n}_w{w}");
    write(&dir.join(format!("{stem}_embedding.json")), &compiled.embedding.to_json())?;
    write(&dir.join(format!("{stem}_certificate.json")), &compiled.certificate_json())?;
    write(&dir.join(format!("{stem}_timed.json")), &compiled.timed.to_json())?;
    write(&dir.join(format!("{stem}_idle.json")), &compiled.idle_json())?;
    println!("{}", compiled.embedding);
    println!(
        "{} qubits used, swap-free: {}, makespan {:.1} ns",
        compiled.embedding.qubits_used(),
        compiled.swap_free(),
        compiled.timed.makespan()
    );
    Ok(())
}

fn cmd_simulate(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let profile = cfg.profile()?;
    if let Some(dev) = &cfg.device {
        let graph = load_device(dev)?;
        simon_core::layout::embed_query(cfg.n, cfg.w, &graph)
            .with_context(|| format!("Simon-{} at w = {} does not fit on {dev}", cfg.n, cfg.w))?;
    }
    let records = simulate_experiment(&cfg.sizes(), cfg.w, cfg.shots_per_class, &profile, cfg.seed)?;
    let path = out.unwrap_or_else(|| cfg.output_dir().join("shots.jsonl"));
    save_shots(&path, &records)?;
    let calib = records.iter().filter(|r| r.tag == simon_core::sampler::Tag::Calibration).count();
    println!(
        "wrote {} records ({} calibration, {} evaluation) to {}",
        records.len(),
        calib,
        records.len() - calib,
        path.display()
    );
    Ok(())
}

fn cmd_estimate_f(shots: &Path, n: usize, w: usize, out: Option<PathBuf>) -> Result<()> {
    let records = load_shots(shots)?;
    let table = estimate_f_hat(&records, n, w)?;
    let path = out.unwrap_or_else(|| default_output_dir().join(format!("fhat_n{n}_w{w}.json")));
    write(&path, &table.to_json())?;
    for (i, f) in table.iter() {
        println!("f̂({i}) = {f:.5} over {} shots", table.shots(i).unwrap_or(0));
    }
    let max = table.max_up_to(w);
    if max <= 0.5 {
        println!("max f̂ = {max:.4} <= 0.5: NTS would be refused");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_play(
    n: usize,
    w: usize,
    shots: Option<PathBuf>,
    fhat: Option<PathBuf>,
    noise: Option<PathBuf>,
    rounds: usize,
    theta: f64,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let fhat = match &fhat {
        Some(p) => Some(FHatTable::from_json(&read(p)?).context("parsing f̂ table")?),
        None => None,
    };
    let report = match shots {
        Some(path) => {
            let records = load_shots(&path)?;
            let table = match fhat {
                Some(t) => t,
                None => estimate_f_hat(&records, n, w)?,
            };
            play_shot_records(&records, n, w, &table, theta)?
        }
        None => {
            let truth = match &noise {
                Some(p) => NoiseProfile::from_json(&read(p)?).context("parsing noise profile")?,
                None => NoiseProfile::noiseless(),
            };
            truth.validate()?;
            let table = match fhat {
                Some(t) => t,
                None => FHatTable::new((1..=w).map(|i| Ok((i, truth.f(n, i)?))).collect::<Result<_, SamplerError>>()?)?,
            };
            let cfg = PlayConfig {
                theta,
                ..PlayConfig::new(n, w, rounds, seed)
            };
            let est = play_monte_carlo(&cfg, &truth, &table)?;
            GameReport {
                n,
                w,
                theta,
                rounds: est.rounds,
                q_i: est.classes.iter().map(|c| c.q).collect(),
                p_i: est.classes.iter().map(|c| c.p).collect(),
                nts: est.value,
                nts_se: est.se,
                flags: est.flags,
                classes: est.classes,
            }
        }
    };
    let path = out.unwrap_or_else(|| default_output_dir().join(format!("game_n{n}_w{w}.json")));
    write(&path, &report.to_json())?;
    match (report.nts, report.nts_se) {
        (Some(v), Some(se)) => println!("NTS(n = {n}, w = {w}) = {v:.4} ± {se:.4} over {} rounds", report.rounds),
        (Some(v), None) => println!("NTS(n = {n}, w = {w}) = {v:.4} over {} rounds", report.rounds),
        _ => return Err(Coded(NUMERIC, format!("no NTS: expected score is not positive ({} rounds)", report.rounds)).into()),
    }
    for f in &report.flags {
        println!("flag: {f}");
    }
    Ok(())
}

fn cmd_nts(n: usize, w: usize, q: &[f64], p: &[f64]) -> Result<()> {
    let n_w = n_w_f64(n, w)?;
    let value = nts_closed_form(n, w, q, p)?;
    println!("N_w = {n_w}");
    println!("NTS_C lower bound = {:.6}", nts_c_lower_bound_f64(n_w));
    println!("NTS_IQ (interpolated) = {:.6}", nts_iq_interpolation(n, w)?);
    match value {
        Some(v) => {
            println!("NTS = {v:.6}");
            Ok(())
        }
        None => Err(Coded(NUMERIC, "NTS undefined: Σ C(n,i) p_i <= 1".into()).into()),
    }
}

fn parse_points(text: &str) -> Result<BTreeMap<usize, Vec<ScalingPoint>>> {
    let mut v: serde_json::Value = serde_json::from_str(text).context("parsing points")?;
    if let Some(inner) = v.get_mut("points") {
        v = inner.take();
    }
    let raw: BTreeMap<String, Vec<ScalingPoint>> = serde_json::from_value(v).context("points must map w to a list of points")?;
    raw.into_iter()
        .map(|(k, pts)| Ok((k.parse().with_context(|| format!("cutoff key {k:?}"))?, pts)))
        .collect()
}

fn cmd_fit(points: &Path, dataset: &str, threshold: f64, out: Option<PathBuf>) -> Result<()> {
    let by_w = parse_points(&read(points)?)?;
    let mut fits = Vec::new();
    for (&w, pts) in &by_w {
        match (fit_model(pts, Model::Polylog), fit_model(pts, Model::Poly)) {
            (Ok(polylog), Ok(poly)) => fits.push(WFits { w, polylog, poly }),
            (Err(e), _) | (_, Err(e)) => eprintln!("w = {w}: {e}"),
        }
    }
    if fits.is_empty() {
        return Err(Coded(NUMERIC, "no cutoff could be fitted".into()).into());
    }
    let sel = select_model(&fits, threshold)?;
    let rows = fit_report(dataset, &fits, &sel);
    let path = out.unwrap_or_else(|| default_output_dir().join(format!("fits_{dataset}.json")));
    write(&path, &serde_json::to_string_pretty(&rows)?)?;
    println!("{:>4} {:>10} {:>10} {:>10} {:>9} {:>13}", "w", "alpha", "beta", "dAIC", "preferred", "speedup");
    for (f, r) in fits.iter().zip(&sel.rows) {
        println!(
            "{:>4} {:>10.4} {:>10.4} {:>10.2} {:>9} {:>13}",
            f.w,
            f.polylog.exponent(),
            f.poly.exponent(),
            r.delta_aic,
            r.preferred.name(),
            format!("{:?}", r.speedup_class).to_lowercase()
        );
    }
    println!("w_c = {}", sel.w_c.map_or("none".into(), |w| w.to_string()));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Oracle { n, hw, construction, format, out } => cmd_oracle(n, hw, construction, format, out),
        Command::Compile { n, w, device, durations, out } => cmd_compile(n, w, &device, durations, out),
        Command::Simulate { config, out } => cmd_simulate(&config, out),
        Command::EstimateF { shots, n, w, out } => cmd_estimate_f(&shots, n, w, out),
        Command::Play { n, w, shots, fhat, noise, rounds, theta, seed, out } => {
            cmd_play(n, w, shots, fhat, noise, rounds, theta, seed, out)
        }
        Command::Nts { n, w, q, p } => cmd_nts(n, w, &q, &p),
        Command::Fit { points, dataset, threshold, out } => cmd_fit(&points, &dataset, threshold, out),
        Command::Analyze {
            shots,
            n_min,
            n_max,
            w_max,
            theta,
            folds,
            resamples,
            seed,
            budget_secs,
            threshold,
            out,
        } => {
            let mut records = Vec::new();
            for p in &shots {
                records.extend(load_shots(p)?);
            }
            let cfg = AnalyzeConfig {
                n_min,
                n_max,
                w_max,
                theta,
                bootstrap: BootstrapConfig { folds, resamples, seed },
                budget_secs,
                threshold,
            };
            let report = analyze(&records, &cfg)?;
            let dir = out_dir(out);
            let written = write_analysis(&report, &dir)?;
            print!("{}", report.summary());
            println!("wrote {} files to {}", written.len(), dir.display());
            if report.availability.iter().all(|a| a.max_w == 0) {
                return Err(Coded(REFUSAL, "no (n, w) pair has a usable NTS".into()).into());
            }
            Ok(())
        }
        Command::Reduce { shots, m, out } => {
            let records = load_shots(&shots)?;
            let reduced = reduce_from_largest(&records, m)?;
            save_shots(&out, &reduced)?;
            println!("reduced {} records to Simon-{m} in {}", reduced.len(), out.display());
            Ok(())
        }
    }
}
