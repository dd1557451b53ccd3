use std::collections::{HashMap, HashSet};

use rand::RngCore;
use serde::Serialize;

use crate::bits::{words_for, BitString};
use crate::oracle::{count_candidates, HiddenString};

use super::posterior::Candidates;
use super::GameError;

/// A 2-to-1 function with period `b`: the smaller of `x` and `x ⊕ b`.
pub fn classical_f_b(b: &BitString, x: &BitString) -> BitString {
    let y = x.xor(b);
    if &y < x {
        y
    } else {
        x.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassicalRound {
    pub queries: usize,
    pub guess: BitString,
    pub correct: bool,
}

/// Queries distinct random inputs until two collide, or until every candidate
/// but one has been ruled out by the pairs seen so far.
pub fn baseline_classical_player(
    n: usize,
    w: usize,
    b: &HiddenString,
    rng: &mut impl RngCore,
) -> Result<ClassicalRound, GameError> {
    let n_w = u64::try_from(&count_candidates(n, w)?).unwrap_or(u64::MAX);
    let done = |guess: BitString, queries| ClassicalRound {
        correct: &guess == b.bits(),
        guess,
        queries,
    };
    if n_w == 1 {
        return Ok(done(BitString::ones(n), 0));
    }
    let mut seen: HashMap<BitString, BitString> = HashMap::new();
    let mut inputs: Vec<BitString> = Vec::new();
    let mut excluded: HashSet<BitString> = HashSet::new();
    loop {
        let x = loop {
            let words = (0..words_for(n)).map(|_| rng.next_u64()).collect();
            let x = BitString::from_words(n, words);
            if !seen.values().any(|v| v == &x) {
                break x;
            }
        };
        let y = classical_f_b(b.bits(), &x);
        if let Some(prev) = seen.get(&y) {
            return Ok(done(prev.xor(&x), inputs.len() + 1));
        }
        for prev in &inputs {
            let d = prev.xor(&x);
            let hw = d.weight();
            if hw >= 1 && hw <= w {
                excluded.insert(d);
            }
        }
        seen.insert(y, x.clone());
        inputs.push(x);
        if n_w - excluded.len() as u64 == 1 {
            let last = Candidates::new(n, w)?
                .iter()
                .find(|c| !excluded.contains(c))
                .expect("one candidate remains");
            return Ok(done(last, inputs.len()));
        }
    }
}
