use std::collections::BTreeMap;
use std::sync::Arc;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::bits::BitString;
use crate::oracle::HiddenString;
use crate::sampler::{sample_noisy_with, NoiseProfile, SeededRng, ShotRecord, Tag};

use super::nts::{n_w_f64, nts_closed_form_se, score_round, ClassMoments};
use super::posterior::{check_theta, run_player, Candidates, PosteriorState};
use super::{FHatTable, GameError, DEFAULT_THETA};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundResult {
    pub hw: usize,
    pub queries: usize,
    pub guess: BitString,
    pub correct: bool,
    pub score: f64,
    pub exhausted: bool,
    pub degenerate_updates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassStats {
    pub i: usize,
    pub rounds: usize,
    /// Mean queries per round, `Q_i`.
    pub q: f64,
    /// Share of correct guesses, `p_i`.
    pub p: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub cov_qp: f64,
    pub exhausted: usize,
}

impl ClassStats {
    pub fn moments(&self) -> ClassMoments {
        ClassMoments {
            q: self.q,
            p: self.p,
            var_q: self.var_q,
            var_p: self.var_p,
            cov_qp: self.cov_qp,
        }
    }
}

/// Sample means of `(x, y)` pairs with the variances and covariance of those
/// means.
fn mean_moments(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> (usize, f64, f64, f64, f64, f64) {
    let count = pairs.clone().count();
    if count == 0 {
        return (0, 0.0, 0.0, 0.0, 0.0, 0.0);
    }
    let r = count as f64;
    let (sx, sy) = pairs.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / r, sy / r);
    if count < 2 {
        return (count, mx, my, 0.0, 0.0, 0.0);
    }
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
        cxy += (x - mx) * (y - my);
    }
    let d = (r - 1.0) * r;
    (count, mx, my, vx / d, vy / d, cxy / d)
}

/// Per-class `Q_i` and `p_i` with their sampling variances.
pub fn class_stats(i: usize, rounds: &[RoundResult]) -> ClassStats {
    let (count, q, p, var_q, var_p, cov_qp) = mean_moments(
        rounds
            .iter()
            .map(|r| (r.queries as f64, if r.correct { 1.0 } else { 0.0 })),
    );
    ClassStats {
        i,
        rounds: count,
        q,
        p,
        var_q,
        var_p,
        cov_qp,
        exhausted: rounds.iter().filter(|r| r.exhausted).count(),
    }
}

/// NTS with its delta-method standard error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NtsEstimate {
    /// `⟨Q⟩/⟨P⟩`; `None` when `⟨P⟩ <= 0`.
    pub value: Option<f64>,
    pub se: Option<f64>,
    pub mean_q: f64,
    pub mean_p: f64,
    pub rounds: usize,
    pub classes: Vec<ClassStats>,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayConfig {
    pub n: usize,
    pub w: usize,
    pub theta: f64,
    pub rounds: usize,
    /// Shots a round may consume before it is scored as exhausted.
    pub max_queries: usize,
    pub seed: u64,
}

impl PlayConfig {
    pub fn new(n: usize, w: usize, rounds: usize, seed: u64) -> Self {
        Self {
            n,
            w,
            theta: DEFAULT_THETA,
            rounds,
            max_queries: 10_000,
            seed,
        }
    }
}

fn round_flags(rounds: &[RoundResult]) -> Vec<String> {
    let mut flags = Vec::new();
    let ex = rounds.iter().filter(|r| r.exhausted).count();
    if ex > 0 {
        flags.push(format!("exhausted-rounds:{ex}"));
    }
    let dg: usize = rounds.iter().map(|r| r.degenerate_updates).sum();
    if dg > 0 {
        flags.push(format!("degenerate-updates:{dg}"));
    }
    flags
}

/// Plays `rounds` independent rounds, each on a hidden string drawn uniformly
/// from the candidate set with shots from `truth`. Round `r` uses stream `r`
/// of `seed`, so results do not depend on thread count.
pub fn play_monte_carlo(
    cfg: &PlayConfig,
    truth: &NoiseProfile,
    f_hat: &FHatTable,
) -> Result<NtsEstimate, GameError> {
    check_theta(cfg.theta)?;
    if cfg.rounds == 0 {
        return Err(GameError::ZeroRounds);
    }
    f_hat.check_informative(cfg.w)?;
    let n_w = n_w_f64(cfg.n, cfg.w)?;
    let candidates = Arc::new(Candidates::new(cfg.n, cfg.w)?);
    let f_true: Vec<f64> = (0..=cfg.w)
        .map(|i| if i == 0 { Ok(1.0) } else { truth.f(cfg.n, i) })
        .collect::<Result<_, _>>()?;
    let proto = PosteriorState::new(candidates.clone(), f_hat)?;

    let results: Vec<RoundResult> = (0..cfg.rounds)
        .into_par_iter()
        .map_init(
            || proto.clone(),
            |state, r| {
                let mut rng = SeededRng::new(cfg.seed, r as u64);
                let k = (rng.next_u64() % candidates.len() as u64) as usize;
                let b = HiddenString::new(candidates.get(k)).expect("candidates are nonzero");
                let f = f_true[b.hw()];
                state.reset();
                let stream = (0..cfg.max_queries).map(|_| sample_noisy_with(&b, f, &mut rng));
                let s = run_player(state, stream, cfg.theta);
                let correct = &s.guess == b.bits();
                Ok(RoundResult {
                    hw: b.hw(),
                    queries: s.queries,
                    guess: s.guess,
                    correct,
                    score: score_round(correct, n_w)?,
                    exhausted: s.exhausted,
                    degenerate_updates: s.degenerate_updates,
                })
            },
        )
        .collect::<Result<_, GameError>>()?;

    let (count, mean_q, mean_p, var_q, var_p, cov) =
        mean_moments(results.iter().map(|r| (r.queries as f64, r.score)));
    let (value, se) = if mean_p > 0.0 {
        let v = mean_q / mean_p;
        let var = var_q / (mean_p * mean_p) + mean_q * mean_q * var_p / mean_p.powi(4)
            - 2.0 * mean_q * cov / mean_p.powi(3);
        (Some(v), Some(var.max(0.0).sqrt()))
    } else {
        (None, None)
    };
    let mut by_class: BTreeMap<usize, Vec<RoundResult>> = BTreeMap::new();
    for r in &results {
        by_class.entry(r.hw).or_default().push(r.clone());
    }
    let mut flags = round_flags(&results);
    if value.is_none() {
        flags.push("no-solution".into());
    }
    Ok(NtsEstimate {
        value,
        se,
        mean_q,
        mean_p,
        rounds: count,
        classes: by_class.iter().map(|(&i, rs)| class_stats(i, rs)).collect(),
        flags,
    })
}

/// Plays consecutive rounds on one class stream: each round starts where the
/// previous one stopped. A final round cut short by the end of the stream is
/// dropped when at least one round finished; otherwise it is kept and
/// flagged exhausted.
pub fn play_class_stream(
    n: usize,
    w: usize,
    b: &BitString,
    zs: &[BitString],
    f_hat: &FHatTable,
    theta: f64,
) -> Result<Vec<RoundResult>, GameError> {
    check_theta(theta)?;
    let n_w = n_w_f64(n, w)?;
    let candidates = Arc::new(Candidates::new(n, w)?);
    let mut state = PosteriorState::new(candidates, f_hat)?;
    let mut rounds = Vec::new();
    let mut pos = 0;
    loop {
        state.reset();
        let s = run_player(&mut state, zs[pos..].iter().cloned(), theta);
        pos += s.queries;
        let correct = &s.guess == b;
        let round = RoundResult {
            hw: b.weight(),
            queries: s.queries,
            guess: s.guess,
            correct,
            score: score_round(correct, n_w)?,
            exhausted: s.exhausted,
            degenerate_updates: s.degenerate_updates,
        };
        if round.exhausted {
            if rounds.is_empty() {
                rounds.push(round);
            }
            break;
        }
        rounds.push(round);
        if pos >= zs.len() || s.queries == 0 {
            break;
        }
    }
    Ok(rounds)
}

/// Report shape for one `(n, w)` game.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameReport {
    pub n: usize,
    pub w: usize,
    pub theta: f64,
    pub rounds: usize,
    #[serde(rename = "Q_i")]
    pub q_i: Vec<f64>,
    #[serde(rename = "p_i")]
    pub p_i: Vec<f64>,
    pub nts: Option<f64>,
    pub nts_se: Option<f64>,
    pub flags: Vec<String>,
    #[serde(skip)]
    pub classes: Vec<ClassStats>,
}

impl GameReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Plays every class on its evaluation shots and combines the classes with
/// the closed form.
pub fn play_shot_records(
    records: &[ShotRecord],
    n: usize,
    w: usize,
    f_hat: &FHatTable,
    theta: f64,
) -> Result<GameReport, GameError> {
    f_hat.check_informative(w)?;
    let mut streams: BTreeMap<usize, (BitString, Vec<BitString>)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.tag == Tag::Evaluation && r.n == n) {
        let hw = r.hw();
        if (1..=w).contains(&hw) {
            streams
                .entry(hw)
                .or_insert_with(|| (r.b.clone(), Vec::new()))
                .1
                .push(r.z.clone());
        }
    }
    let missing: Vec<usize> = (1..=w).filter(|i| !streams.contains_key(i)).collect();
    if !missing.is_empty() {
        return Err(GameError::MissingClasses(missing));
    }
    let played: Vec<Vec<RoundResult>> = streams
        .par_iter()
        .map(|(_, (b, zs))| play_class_stream(n, w, b, zs, f_hat, theta))
        .collect::<Result<_, _>>()?;
    let classes: Vec<ClassStats> = played
        .iter()
        .enumerate()
        .map(|(k, rs)| class_stats(k + 1, rs))
        .collect();
    let all: Vec<RoundResult> = played.into_iter().flatten().collect();
    let moments: Vec<ClassMoments> = classes.iter().map(ClassStats::moments).collect();
    let closed = nts_closed_form_se(n, w, &moments)?;
    let mut flags = round_flags(&all);
    if closed.is_none() {
        flags.push("no-solution".into());
    }
    Ok(GameReport {
        n,
        w,
        theta,
        rounds: all.len(),
        q_i: classes.iter().map(|c| c.q).collect(),
        p_i: classes.iter().map(|c| c.p).collect(),
        nts: closed.map(|c| c.0),
        nts_se: closed.map(|c| c.1),
        flags,
        classes,
    })
}
