use std::sync::Arc;

use crate::bits::{parity_words, words_for, BitString};
use crate::oracle::CandidateSet;

use super::{FHatTable, GameError, MAX_CANDIDATES};

/// All strings with `1 <= HW <= w`, ascending weight, lexicographic within a
/// weight. Stored flat with a fixed word stride.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidates {
    n: usize,
    w: usize,
    stride: usize,
    words: Vec<u64>,
    weights: Vec<u32>,
}

impl Candidates {
    pub fn new(n: usize, w: usize) -> Result<Self, GameError> {
        let set = CandidateSet::new(n, w)?;
        let size = set.size_u64().filter(|&s| s <= MAX_CANDIDATES).ok_or(
            GameError::TooManyCandidates {
                n,
                w,
                limit: MAX_CANDIDATES,
            },
        )? as usize;
        let stride = words_for(n);
        let mut words = Vec::with_capacity(size * stride);
        let mut weights = Vec::with_capacity(size);
        let mut cur = vec![0u64; stride];
        for k in 1..=w {
            fill(n, k, 0, &mut cur, &mut words, &mut weights);
        }
        debug_assert_eq!(weights.len(), size);
        Ok(Self {
            n,
            w,
            stride,
            words,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, k: usize) -> usize {
        self.weights[k] as usize
    }

    pub fn words(&self, k: usize) -> &[u64] {
        &self.words[k * self.stride..(k + 1) * self.stride]
    }

    pub fn get(&self, k: usize) -> BitString {
        BitString::from_words(self.n, self.words(k).to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = BitString> + '_ {
        (0..self.len()).map(|k| self.get(k))
    }

    /// Position of `b` in the enumeration.
    pub fn index_of(&self, b: &BitString) -> Option<usize> {
        if b.len() != self.n {
            return None;
        }
        (0..self.len()).find(|&k| self.words(k) == b.words())
    }
}

/// Emits every completion of `cur[..pos]` with `ones` more bits set, zeros
/// tried before ones.
fn fill(n: usize, ones: usize, pos: usize, cur: &mut [u64], out: &mut Vec<u64>, weights: &mut Vec<u32>) {
    if ones == 0 {
        out.extend_from_slice(cur);
        weights.push(cur.iter().map(|w| w.count_ones()).sum());
        return;
    }
    if n - pos < ones {
        return;
    }
    fill(n, ones, pos + 1, cur, out, weights);
    cur[pos / 64] |= 1 << (pos % 64);
    fill(n, ones - 1, pos + 1, cur, out, weights);
    cur[pos / 64] &= !(1 << (pos % 64));
}

/// Outcome of folding one `z` into the posterior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Update {
    Applied,
    /// Every candidate had zero likelihood; the posterior was left as it was.
    Degenerate,
}

/// Log posterior over the candidate set.
#[derive(Clone, Debug)]
pub struct PosteriorState {
    candidates: Arc<Candidates>,
    log_probs: Vec<f64>,
    /// `ln f̂(i)` and `ln(1 - f̂(i))`, indexed by weight.
    ln_valid: Vec<f64>,
    ln_invalid: Vec<f64>,
    scratch: Vec<f64>,
}

impl PosteriorState {
    pub fn new(candidates: Arc<Candidates>, f_hat: &FHatTable) -> Result<Self, GameError> {
        let w = candidates.w();
        let mut ln_valid = vec![0.0; w + 1];
        let mut ln_invalid = vec![0.0; w + 1];
        for i in 1..=w {
            let f = f_hat.get(i).ok_or_else(|| GameError::MissingClasses(vec![i]))?;
            ln_valid[i] = f.ln();
            ln_invalid[i] = (1.0 - f).ln();
        }
        let size = candidates.len();
        let mut s = Self {
            candidates,
            log_probs: vec![0.0; size],
            ln_valid,
            ln_invalid,
            scratch: Vec::with_capacity(size),
        };
        s.reset();
        Ok(s)
    }

    /// Back to the uniform prior `1/N_w`.
    pub fn reset(&mut self) {
        let u = -(self.candidates.len() as f64).ln();
        self.log_probs.iter_mut().for_each(|p| *p = u);
    }

    pub fn candidates(&self) -> &Candidates {
        &self.candidates
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn update(&mut self, z: &BitString) -> Update {
        let c = &self.candidates;
        self.scratch.clear();
        let mut top = f64::NEG_INFINITY;
        for k in 0..c.len() {
            let hw = c.weight(k);
            let ll = if parity_words(c.words(k), z.words()) {
                self.ln_invalid[hw]
            } else {
                self.ln_valid[hw]
            };
            let v = self.log_probs[k] + ll;
            top = top.max(v);
            self.scratch.push(v);
        }
        if top == f64::NEG_INFINITY {
            return Update::Degenerate;
        }
        let sum: f64 = self.scratch.iter().map(|v| (v - top).exp()).sum();
        let norm = top + sum.ln();
        for (p, v) in self.log_probs.iter_mut().zip(&self.scratch) {
            *p = v - norm;
        }
        Update::Applied
    }

    /// Index and probability of the most probable candidate; the first one
    /// in enumeration order wins ties.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, &p) in self.log_probs.iter().enumerate() {
            if p > best.1 {
                best = (k, p);
            }
        }
        (best.0, best.1.exp())
    }

    /// `ln Σ exp(log_probs)`; zero for a normalized state.
    pub fn log_total(&self) -> f64 {
        let top = self.log_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return top;
        }
        top + self.log_probs.iter().map(|p| (p - top).exp()).sum::<f64>().ln()
    }
}

/// Result of running the player on one stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Solve {
    pub guess: BitString,
    pub queries: usize,
    pub max_posterior: f64,
    /// The stream ran out before the threshold was reached.
    pub exhausted: bool,
    pub degenerate_updates: usize,
}

/// Consumes `z`s until the largest posterior reaches `theta`, then guesses
/// the argmax.
pub fn run_player<I>(state: &mut PosteriorState, stream: I, theta: f64) -> Solve
where
    I: IntoIterator<Item = BitString>,
{
    let mut queries = 0;
    let mut degenerate = 0;
    let (mut best, mut pmax) = state.argmax();
    let mut reached = pmax >= theta;
    if !reached {
        for z in stream {
            queries += 1;
            if state.update(&z) == Update::Degenerate {
                degenerate += 1;
            }
            (best, pmax) = state.argmax();
            if pmax >= theta {
                reached = true;
                break;
            }
        }
    }
    Solve {
        guess: state.candidates().get(best),
        queries,
        max_posterior: pmax,
        exhausted: !reached,
        degenerate_updates: degenerate,
    }
}

/// One-shot form of the player: builds the posterior, runs it on `stream`,
/// and hands back the final state.
pub fn bayes_solve<I>(
    n: usize,
    w: usize,
    stream: I,
    f_hat: &FHatTable,
    theta: f64,
) -> Result<(Solve, PosteriorState), GameError>
where
    I: IntoIterator<Item = BitString>,
{
    check_theta(theta)?;
    let candidates = Arc::new(Candidates::new(n, w)?);
    let mut state = PosteriorState::new(candidates, f_hat)?;
    let solve = run_player(&mut state, stream, theta);
    Ok((solve, state))
}

pub(crate) fn check_theta(theta: f64) -> Result<(), GameError> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(GameError::InvalidTheta(theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn enumeration_order() {
        let c = Candidates::new(4, 2).unwrap();
        let got: Vec<String> = c.iter().map(|b| b.to_string()).collect();
        assert_eq!(
            got,
            ["0001", "0010", "0100", "1000", "0011", "0101", "0110", "1001", "1010", "1100"]
        );
        assert_eq!(Candidates::new(10, 10).unwrap().len(), 1023);
        assert_eq!(Candidates::new(70, 2).unwrap().len(), 70 + 70 * 69 / 2);
        assert!(matches!(
            Candidates::new(40, 40),
            Err(GameError::TooManyCandidates { .. })
        ));
    }

    #[test]
    fn hand_executed_example() {
        let f = FHatTable::uniform(2, 1.0);
        let (s, post) = bayes_solve(2, 2, [bs("11")], &f, 0.8).unwrap();
        assert_eq!((s.guess.to_string(), s.queries, s.exhausted), ("11".into(), 1, false));
        assert!(post.log_total().abs() < 1e-9);

        let (s, post) = bayes_solve(2, 2, [bs("00")], &f, 0.8).unwrap();
        assert!(s.exhausted);
        assert_eq!(s.queries, 1);
        for &p in post.log_probs() {
            assert!((p.exp() - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uninformative_likelihood_never_moves() {
        let f = FHatTable::uniform(3, 0.5);
        let stream = ["101", "011", "111", "100"].map(bs);
        let (s, _) = bayes_solve(3, 3, stream, &f, 0.8).unwrap();
        assert!(s.exhausted);
        assert!((s.max_posterior - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn single_candidate_needs_no_queries() {
        let f = FHatTable::uniform(1, 1.0);
        let (s, _) = bayes_solve(1, 1, Vec::<BitString>::new(), &f, 0.8).unwrap();
        assert_eq!((s.queries, s.guess.to_string(), s.exhausted), (0, "1".into(), false));
    }

    #[test]
    fn elimination_then_contradiction() {
        let f = FHatTable::uniform(2, 1.0);
        let (s, _) = bayes_solve(2, 2, [bs("00"), bs("01"), bs("10")], &f, 0.99).unwrap();
        assert_eq!((s.guess.to_string(), s.queries), ("10".into(), 2));

        // 11 leaves only b = 11, which 10 then contradicts.
        let c = Arc::new(Candidates::new(2, 2).unwrap());
        let mut st = PosteriorState::new(c, &f).unwrap();
        assert_eq!(st.update(&bs("11")), Update::Applied);
        assert_eq!(st.update(&bs("10")), Update::Degenerate);
        assert!(st.log_total().abs() < 1e-12);
        assert_eq!(st.argmax().0, 2);
    }

    #[test]
    fn bad_theta() {
        let f = FHatTable::uniform(2, 1.0);
        for t in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(bayes_solve(2, 2, [bs("11")], &f, t).is_err());
        }
    }
}
