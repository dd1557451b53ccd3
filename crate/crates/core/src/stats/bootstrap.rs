use std::collections::BTreeMap;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::game::{nts_closed_form, play_class_stream, FHatTable};
use crate::sampler::{SeededRng, ShotRecord, Tag};

use super::StatsError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub folds: usize,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            resamples: 15_000,
            seed: 0,
        }
    }
}

/// Game settings the bootstrap replays.
#[derive(Clone, Debug, PartialEq)]
pub struct GameSetup<'a> {
    pub n: usize,
    pub w: usize,
    pub theta: f64,
    pub f_hat: &'a FHatTable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub mean: f64,
    pub sigma: f64,
    /// Resamples whose NTS existed.
    pub used: usize,
    /// Resamples with a nonpositive closed-form denominator.
    pub no_solution: usize,
    /// Closed form on all folds pooled.
    pub pooled: Option<f64>,
    #[serde(rename = "Q_i")]
    pub q_i: Vec<f64>,
    #[serde(rename = "p_i")]
    pub p_i: Vec<f64>,
    pub rounds: usize,
}

/// Round totals of one fold of one class.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct FoldTally {
    rounds: f64,
    queries: f64,
    correct: f64,
}

/// Splits every class's evaluation stream into `folds` contiguous slices,
/// plays each slice once, then resamples `folds − 1` slice indices with
/// replacement (the same indices for every class) and recomputes the closed
/// form NTS from the pooled rounds.
pub fn bootstrap_nts(
    records: &[ShotRecord],
    game: &GameSetup<'_>,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult, StatsError> {
    if cfg.folds < 2 || cfg.resamples == 0 {
        return Err(StatsError::BadBootstrap {
            folds: cfg.folds,
            resamples: cfg.resamples,
        });
    }
    game.f_hat.check_informative(game.w)?;
    let mut streams: BTreeMap<usize, (BitString, Vec<BitString>)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.tag == Tag::Evaluation && r.n == game.n) {
        let hw = r.hw();
        if (1..=game.w).contains(&hw) {
            streams
                .entry(hw)
                .or_insert_with(|| (r.b.clone(), Vec::new()))
                .1
                .push(r.z.clone());
        }
    }
    for i in 1..=game.w {
        let len = streams.get(&i).map_or(0, |s| s.1.len());
        if len < cfg.folds {
            return Err(StatsError::TooFewRecords {
                class: i,
                records: len,
                folds: cfg.folds,
            });
        }
    }

    let tallies: Vec<Vec<FoldTally>> = streams
        .par_iter()
        .map(|(_, (b, zs))| {
            (0..cfg.folds)
                .map(|f| {
                    let lo = f * zs.len() / cfg.folds;
                    let hi = (f + 1) * zs.len() / cfg.folds;
                    let rounds = play_class_stream(game.n, game.w, b, &zs[lo..hi], game.f_hat, game.theta)?;
                    Ok(FoldTally {
                        rounds: rounds.len() as f64,
                        queries: rounds.iter().map(|r| r.queries as f64).sum(),
                        correct: rounds.iter().filter(|r| r.correct).count() as f64,
                    })
                })
                .collect::<Result<Vec<_>, StatsError>>()
        })
        .collect::<Result<_, _>>()?;

    let draws = cfg.folds - 1;
    let values: Vec<Option<f64>> = (0..cfg.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = SeededRng::new(cfg.seed, r as u64);
            let picks: Vec<usize> = (0..draws)
                .map(|_| (rng.next_u64() % cfg.folds as u64) as usize)
                .collect();
            resample_nts(game, &tallies, &picks)
        })
        .collect::<Result<_, _>>()?;

    let all: Vec<usize> = (0..cfg.folds).collect();
    let (q_i, p_i) = pooled_rates(&tallies, &all);
    let pooled = nts_closed_form(game.n, game.w, &q_i, &p_i)?;
    let rounds = tallies.iter().flatten().map(|t| t.rounds as usize).sum();
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let no_solution = values.len() - ok.len();
    if ok.is_empty() {
        return Err(StatsError::NoSolution);
    }
    let m = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / m;
    let sigma = if ok.len() > 1 {
        (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(BootstrapResult {
        mean,
        sigma,
        used: ok.len(),
        no_solution,
        pooled,
        q_i,
        p_i,
        rounds,
    })
}

/// Per-class `Q_i` and `p_i` over the picked folds.
fn pooled_rates(tallies: &[Vec<FoldTally>], picks: &[usize]) -> (Vec<f64>, Vec<f64>) {
    tallies
        .iter()
        .map(|class| {
            let t = picks.iter().fold(FoldTally::default(), |acc, &k| FoldTally {
                rounds: acc.rounds + class[k].rounds,
                queries: acc.queries + class[k].queries,
                correct: acc.correct + class[k].correct,
            });
            (t.queries / t.rounds, t.correct / t.rounds)
        })
        .unzip()
}

fn resample_nts(game: &GameSetup<'_>, tallies: &[Vec<FoldTally>], picks: &[usize]) -> Result<Option<f64>, StatsError> {
    let (q, p) = pooled_rates(tallies, picks);
    Ok(nts_closed_form(game.n, game.w, &q, &p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::play_shot_records;
    use crate::sampler::{simulate_shots, NoiseProfile};

    fn eval(n: usize, b: &str, zs: &[&str]) -> Vec<ShotRecord> {
        zs.iter()
            .enumerate()
            .map(|(k, z)| ShotRecord {
                n,
                b: b.parse().unwrap(),
                z: z.parse().unwrap(),
                shot: k as u64,
                tag: Tag::Evaluation,
            })
            .collect()
    }

    #[test]
    fn constant_data_has_no_spread() {
        // z = 10 rules out b = 10 at once, so every round is one query.
        let recs = eval(2, "01", &["10"; 40]);
        let f = FHatTable::uniform(1, 1.0);
        let g = GameSetup { n: 2, w: 1, theta: 0.8, f_hat: &f };
        let r = bootstrap_nts(&recs, &g, &BootstrapConfig { folds: 10, resamples: 500, seed: 1 }).unwrap();
        assert!(r.sigma < 1e-12);
        assert!((r.mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_folds_pick_one_fold_each_time() {
        // Fold 0: rounds of one query; fold 1: rounds of two.
        let mut zs = vec!["10"; 4];
        zs.extend(["00", "10", "00", "10"]);
        let recs = eval(2, "01", &zs);
        let f = FHatTable::uniform(1, 1.0);
        let g = GameSetup { n: 2, w: 1, theta: 0.8, f_hat: &f };
        let r = bootstrap_nts(&recs, &g, &BootstrapConfig { folds: 2, resamples: 20_000, seed: 4 }).unwrap();
        // The NTS of each fold is 1 and 2; each is drawn with probability 1/2.
        assert!((r.mean - 1.5).abs() < 0.02, "{}", r.mean);
        assert!((r.sigma - 0.5).abs() < 0.01, "{}", r.sigma);
    }

    #[test]
    fn noiseless_mean_tracks_closed_form() {
        let recs = simulate_shots(3, 3, 6000, &NoiseProfile::noiseless(), 12).unwrap();
        let f = FHatTable::uniform(3, 1.0);
        let g = GameSetup { n: 3, w: 3, theta: 0.8, f_hat: &f };
        let cfg = BootstrapConfig { folds: 10, resamples: 2000, seed: 3 };
        let r = bootstrap_nts(&recs, &g, &cfg).unwrap();
        let direct = play_shot_records(&recs, 3, 3, &f, 0.8).unwrap().nts.unwrap();
        assert!((r.mean - direct).abs() < r.sigma, "{} vs {direct} ± {}", r.mean, r.sigma);
        assert_eq!(r, bootstrap_nts(&recs, &g, &cfg).unwrap());
    }

    #[test]
    fn too_few_records() {
        let recs = eval(2, "01", &["10"; 5]);
        let f = FHatTable::uniform(1, 1.0);
        let g = GameSetup { n: 2, w: 1, theta: 0.8, f_hat: &f };
        assert!(matches!(
            bootstrap_nts(&recs, &g, &BootstrapConfig::default()),
            Err(StatsError::TooFewRecords { .. })
        ));
    }
}
