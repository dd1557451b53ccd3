//! The guessing game: the Bayesian player, scoring, NTS estimators, classical
//! bounds and the ideal-quantum reference.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::oracle::OracleError;
use crate::sampler::{weight_keyed, SamplerError, ShotRecord, Tag};

mod classical;
mod nts;
mod play;
mod posterior;

pub use classical::{baseline_classical_player, classical_f_b, ClassicalRound};
pub use nts::{
    k_min, n_w_f64, nts_c_lower_bound, nts_c_lower_bound_f64, nts_closed_form, nts_closed_form_se,
    nts_iq_interpolation, score_round, ClassMoments, ERDOS_BORWEIN, EULER_GAMMA,
};
pub use play::{
    class_stats, play_class_stream, play_monte_carlo, play_shot_records, ClassStats, GameReport,
    NtsEstimate, PlayConfig, RoundResult,
};
pub use posterior::{bayes_solve, run_player, Candidates, PosteriorState, Solve, Update};

/// Largest candidate set the player will enumerate.
pub const MAX_CANDIDATES: u64 = 1 << 26;

pub const DEFAULT_THETA: f64 = 0.8;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("Simon-{w}-{n} has more than {limit} candidates")]
    TooManyCandidates { n: usize, w: usize, limit: u64 },
    #[error("no data for weight classes {0:?}")]
    MissingClasses(Vec<usize>),
    #[error("f̂({i}) = {f} is not a probability")]
    InvalidFHat { i: usize, f: f64 },
    #[error("threshold {0} is outside (0, 1)")]
    InvalidTheta(f64),
    #[error("score is undefined for a single candidate")]
    DegenerateScore,
    #[error("expected {expected} classes, got {q} query means and {p} success rates")]
    ClassCount { expected: usize, q: usize, p: usize },
    #[error("max f̂ = {max_f_hat} <= 0.5: too noisy for NTS")]
    Refused { max_f_hat: f64 },
    #[error("rounds must be at least 1")]
    ZeroRounds,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// Estimated validity rate `f̂(i)` per weight class.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FHatTable {
    #[serde(flatten)]
    f: BTreeMap<usize, f64>,
    #[serde(skip)]
    counts: BTreeMap<usize, usize>,
}

impl FHatTable {
    pub fn new(f: BTreeMap<usize, f64>) -> Result<Self, GameError> {
        for (&i, &v) in &f {
            if !(0.0..=1.0).contains(&v) {
                return Err(GameError::InvalidFHat { i, f: v });
            }
        }
        Ok(Self {
            f,
            counts: BTreeMap::new(),
        })
    }

    pub fn uniform(w: usize, f: f64) -> Self {
        Self {
            f: (1..=w).map(|i| (i, f)).collect(),
            counts: BTreeMap::new(),
        }
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.f.get(&i).copied()
    }

    pub fn shots(&self, i: usize) -> Option<usize> {
        self.counts.get(&i).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.f.iter().map(|(&i, &f)| (i, f))
    }

    /// Largest estimate over classes `1..=w`.
    pub fn max_up_to(&self, w: usize) -> f64 {
        self.f.range(1..=w).map(|(_, &f)| f).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Refuses tables whose classes `1..=w` are all at or below one half.
    pub fn check_informative(&self, w: usize) -> Result<(), GameError> {
        let m = self.max_up_to(w);
        if m > 0.5 {
            Ok(())
        } else {
            Err(GameError::Refused { max_f_hat: m })
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.f).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut de = serde_json::Deserializer::from_str(text);
        let f = weight_keyed(&mut de)?;
        de.end()?;
        Self::new(f).map_err(serde::de::Error::custom)
    }
}

/// `f̂(i)`: share of weight-`i` calibration shots of size `n` with `z·b = 0`.
pub fn estimate_f_hat(records: &[ShotRecord], n: usize, w: usize) -> Result<FHatTable, GameError> {
    let mut tally: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.tag == Tag::Calibration && r.n == n) {
        let hw = r.hw();
        if hw >= 1 && hw <= w {
            let t = tally.entry(hw).or_default();
            t.0 += 1;
            t.1 += usize::from(r.is_valid());
        }
    }
    let missing: Vec<usize> = (1..=w).filter(|i| !tally.contains_key(i)).collect();
    if !missing.is_empty() {
        return Err(GameError::MissingClasses(missing));
    }
    Ok(FHatTable {
        f: tally
            .iter()
            .map(|(&i, &(shots, valid))| (i, valid as f64 / shots as f64))
            .collect(),
        counts: tally.iter().map(|(&i, &(shots, _))| (i, shots)).collect(),
    })
}
