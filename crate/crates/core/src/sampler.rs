//! Measurement-outcome streams: exact noiseless Simon sampling and the
//! per-Hamming-weight noise model, where a shot on a weight-`i` string is a
//! uniform orthogonal `z` with probability `f(i)` and a uniform
//! non-orthogonal one otherwise.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::oracle::{binomial_f64, canonical_b, HiddenString, OracleError};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("the zero string has no orthocomplement basis of the expected shape")]
    ZeroHidden,
    #[error("noise profile defines no f({0})")]
    MissingWeight(usize),
    #[error("f({i}) = {f} is not a probability")]
    InvalidProbability { i: usize, f: f64 },
    #[error("shots per class must be at least 1")]
    ZeroShots,
    #[error("no shot records")]
    Empty,
    #[error("record {shot}: {reason}")]
    BadRecord { shot: u64, reason: String },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Probability `f(i)` that a shot on a weight-`i` string satisfies `z·b = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseProfile {
    /// Explicit `f(i)` per weight.
    Table {
        #[serde(deserialize_with = "weight_keyed")]
        f: BTreeMap<usize, f64>,
    },
    /// `f(i) = 0.5 + 0.5 (1 - epsilon)^(n + i - 2)`: the exponent is the gate
    /// count of the constant-depth oracle. Synthetic, not a device model.
    Parametric { epsilon: f64 },
    /// `f(i) = 1 − epsilon (n + i − 2)`, clamped to `[0, 1]`. Falls to and
    /// below one half for large circuits.
    Linear { epsilon: f64 },
}

/// JSON object keys are strings; the tagged-enum buffer will not coerce them.
pub(crate) fn weight_keyed<'de, D>(de: D) -> Result<BTreeMap<usize, f64>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let raw: BTreeMap<String, f64> = Deserialize::deserialize(de)?;
    raw.into_iter()
        .map(|(k, v)| {
            k.trim()
                .parse()
                .map(|i| (i, v))
                .map_err(|_| serde::de::Error::custom(format!("weight key {k:?} is not an integer")))
        })
        .collect()
}

impl NoiseProfile {
    pub fn noiseless() -> Self {
        NoiseProfile::Parametric { epsilon: 0.0 }
    }

    /// Same `f` for every weight `1..=n`.
    pub fn uniform(n: usize, f: f64) -> Self {
        NoiseProfile::Table {
            f: (1..=n).map(|i| (i, f)).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        match self {
            NoiseProfile::Table { f } => {
                for (&i, &p) in f {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(SamplerError::InvalidProbability { i, f: p });
                    }
                }
                Ok(())
            }
            NoiseProfile::Parametric { epsilon } | NoiseProfile::Linear { epsilon } => {
                if (0.0..=1.0).contains(epsilon) {
                    Ok(())
                } else {
                    Err(SamplerError::InvalidProbability { i: 0, f: *epsilon })
                }
            }
        }
    }

    pub fn f(&self, n: usize, i: usize) -> Result<f64, SamplerError> {
        match self {
            NoiseProfile::Table { f } => f.get(&i).copied().ok_or(SamplerError::MissingWeight(i)),
            NoiseProfile::Parametric { epsilon } => {
                let gates = (n + i).saturating_sub(2) as i32;
                Ok(0.5 + 0.5 * (1.0 - epsilon).powi(gates))
            }
            NoiseProfile::Linear { epsilon } => {
                let gates = (n + i).saturating_sub(2) as f64;
                Ok((1.0 - epsilon * gates).clamp(0.0, 1.0))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let p: Self = serde_json::from_str(text)?;
        p.validate().map_err(serde::de::Error::custom)?;
        Ok(p)
    }
}

/// ChaCha8 keyed by a seed and a stream id. Equal pairs give equal output;
/// different stream ids give independent streams under one seed.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Basis of `{ z : z·b = 0 }`. With `p` the first one of `b`, the vectors are
/// `e_j` for `b_j = 0` and `e_j + e_p` for `b_j = 1`, `j != p`.
pub fn orthocomplement_basis(b: &BitString) -> Result<Vec<BitString>, SamplerError> {
    let p = b.first_one().ok_or(SamplerError::ZeroHidden)?;
    let n = b.len();
    Ok((0..n)
        .filter(|&j| j != p)
        .map(|j| {
            let mut v = BitString::unit(n, j);
            if b.get(j) {
                v.set(p, true);
            }
            v
        })
        .collect())
}

fn random_string(n: usize, rng: &mut impl RngCore) -> BitString {
    let words = (0..crate::bits::words_for(n)).map(|_| rng.next_u64()).collect();
    BitString::from_words(n, words)
}

/// Uniform `z` with `z·b = parity`. A uniform string with its pivot bit
/// fixed up is the same as a uniform combination of the basis vectors plus a
/// fixed offset.
fn sample_with_parity(b: &HiddenString, parity: bool, rng: &mut impl RngCore) -> BitString {
    let bits = b.bits();
    let mut z = random_string(bits.len(), rng);
    if z.dot(bits) != parity {
        z.flip(bits.first_one().expect("hidden strings are nonzero"));
    }
    z
}

pub fn sample_noiseless(b: &HiddenString, rng: &mut impl RngCore) -> BitString {
    sample_with_parity(b, false, rng)
}

fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn sample_noisy(
    b: &HiddenString,
    profile: &NoiseProfile,
    rng: &mut impl RngCore,
) -> Result<BitString, SamplerError> {
    let f = profile.f(b.n(), b.hw())?;
    Ok(sample_noisy_with(b, f, rng))
}

/// Noisy draw with `f(HW(b))` already looked up.
pub fn sample_noisy_with(b: &HiddenString, f: f64, rng: &mut impl RngCore) -> BitString {
    let valid = f >= 1.0 || unit_f64(rng) < f;
    sample_with_parity(b, !valid, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Calibration,
    Evaluation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub n: usize,
    pub b: BitString,
    pub z: BitString,
    pub shot: u64,
    pub tag: Tag,
}

impl ShotRecord {
    pub fn hw(&self) -> usize {
        self.b.weight()
    }

    pub fn is_valid(&self) -> bool {
        !self.z.dot(&self.b)
    }

    fn check(&self) -> Result<(), SamplerError> {
        let bad = |reason: String| SamplerError::BadRecord {
            shot: self.shot,
            reason,
        };
        if self.b.len() != self.n || self.z.len() != self.n {
            return Err(bad(format!(
                "lengths b = {}, z = {} differ from n = {}",
                self.b.len(),
                self.z.len(),
                self.n
            )));
        }
        if self.b.is_zero() {
            return Err(bad("b is zero".into()));
        }
        Ok(())
    }
}

fn stream_id(n: usize, tag: Tag, i: usize) -> u64 {
    let t = match tag {
        Tag::Calibration => 0,
        Tag::Evaluation => 1,
    };
    ((n as u64) << 33) | (t << 32) | i as u64
}

/// `shots_per_class` records for each class `i = 1..=w` on the canonical
/// strings, all with one tag. Class `i` draws from its own stream, keyed by
/// `(n, tag, i)`, so the output depends only on `seed`.
pub fn simulate_tagged(
    n: usize,
    w: usize,
    shots_per_class: usize,
    profile: &NoiseProfile,
    seed: u64,
    tag: Tag,
) -> Result<Vec<ShotRecord>, SamplerError> {
    if shots_per_class == 0 {
        return Err(SamplerError::ZeroShots);
    }
    profile.validate()?;
    if w == 0 || w > n {
        return Err(OracleError::InvalidCutoff { n, w }.into());
    }
    let classes: Vec<(HiddenString, f64)> = (1..=w)
        .map(|i| Ok((canonical_b(n, i)?, profile.f(n, i)?)))
        .collect::<Result<_, SamplerError>>()?;
    let per_class: Vec<Vec<ShotRecord>> = classes
        .par_iter()
        .enumerate()
        .map(|(k, (b, f))| {
            let mut rng = SeededRng::new(seed, stream_id(n, tag, k + 1));
            (0..shots_per_class)
                .map(|s| ShotRecord {
                    n,
                    b: b.bits().clone(),
                    z: sample_noisy_with(b, *f, &mut rng),
                    shot: (k * shots_per_class + s) as u64,
                    tag,
                })
                .collect()
        })
        .collect();
    Ok(per_class.into_iter().flatten().collect())
}

/// Evaluation shots for classes `1..=w`.
pub fn simulate_shots(
    n: usize,
    w: usize,
    shots_per_class: usize,
    profile: &NoiseProfile,
    seed: u64,
) -> Result<Vec<ShotRecord>, SamplerError> {
    simulate_tagged(n, w, shots_per_class, profile, seed, Tag::Evaluation)
}

/// Calibration and evaluation streams of equal size for every `n` in `ns`,
/// classes `1..=min(n, w_max)`. Shot ids run consecutively over the output.
pub fn simulate_experiment(
    ns: &[usize],
    w_max: usize,
    shots_per_class: usize,
    profile: &NoiseProfile,
    seed: u64,
) -> Result<Vec<ShotRecord>, SamplerError> {
    let mut out = Vec::new();
    for &n in ns {
        let w = w_max.min(n);
        for tag in [Tag::Calibration, Tag::Evaluation] {
            out.extend(simulate_tagged(n, w, shots_per_class, profile, seed, tag)?);
        }
    }
    for (k, r) in out.iter_mut().enumerate() {
        r.shot = k as u64;
    }
    Ok(out)
}

pub fn write_shots<W: Write>(mut out: W, records: &[ShotRecord]) -> Result<(), SamplerError> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_shots<R: BufRead>(input: R) -> Result<Vec<ShotRecord>, SamplerError> {
    let mut records = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ShotRecord = serde_json::from_str(&line).map_err(|source| SamplerError::Parse {
            line: k + 1,
            source,
        })?;
        r.check()?;
        records.push(r);
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassValidity {
    pub n: usize,
    pub i: usize,
    pub shots: usize,
    /// `Pr(z·b = 0)`.
    pub valid: f64,
    /// `Pr(z·b = 0 and z != 0)`.
    pub valid_nonzero: f64,
}

/// Class average weighted by `C(n, i)` over the classes present.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedValidity {
    pub n: usize,
    pub valid: f64,
    pub valid_nonzero: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidityReport {
    pub classes: Vec<ClassValidity>,
    pub weighted: Vec<WeightedValidity>,
}

pub fn empirical_validity(records: &[ShotRecord]) -> Result<ValidityReport, SamplerError> {
    if records.is_empty() {
        return Err(SamplerError::Empty);
    }
    let mut tally: BTreeMap<(usize, usize), [usize; 3]> = BTreeMap::new();
    for r in records {
        let t = tally.entry((r.n, r.hw())).or_default();
        t[0] += 1;
        if r.is_valid() {
            t[1] += 1;
            if !r.z.is_zero() {
                t[2] += 1;
            }
        }
    }
    let classes: Vec<ClassValidity> = tally
        .into_iter()
        .map(|((n, i), [shots, valid, nonzero])| ClassValidity {
            n,
            i,
            shots,
            valid: valid as f64 / shots as f64,
            valid_nonzero: nonzero as f64 / shots as f64,
        })
        .collect();
    let mut sums: BTreeMap<usize, [f64; 3]> = BTreeMap::new();
    for c in &classes {
        let h = binomial_f64(c.n, c.i);
        let s = sums.entry(c.n).or_default();
        s[0] += h;
        s[1] += h * c.valid;
        s[2] += h * c.valid_nonzero;
    }
    let weighted = sums
        .into_iter()
        .map(|(n, [h, v, nz])| WeightedValidity {
            n,
            valid: v / h,
            valid_nonzero: nz / h,
        })
        .collect();
    Ok(ValidityReport { classes, weighted })
}
