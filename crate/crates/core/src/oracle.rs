//! Hidden strings, the canonical 2-to-1 function `f_b`, and the CNOT
//! circuits that implement it.
//!
//! Only the canonical representative `b = 0^(n-i) 1^i` of each Hamming-weight
//! class is ever built as a circuit; any other `b` of the same weight is a
//! relabeling of bit positions.
//!
//! Wires `0..n` are the data register `d_0..d_{n-1}`, wires `n..2n` the
//! ancilla register `a_0..a_{n-1}`.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BitMatrix, BitString, BitsError};
use crate::circuit::{Cnot, CnotCircuit};

/// Largest `n` for which exhaustive 2-to-1 checking is attempted.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("problem size must be at least 1")]
    InvalidSize,
    #[error("invalid Hamming weight {i} for n = {n} (need 1 <= i <= n)")]
    InvalidWeight { n: usize, i: usize },
    #[error("invalid cutoff w = {w} for n = {n} (need 1 <= w <= n)")]
    InvalidCutoff { n: usize, w: usize },
    #[error(transparent)]
    Shape(#[from] BitsError),
    #[error("n = {n} exceeds the brute-force limit {limit}; use the kernel check")]
    TooLarge { n: usize, limit: usize },
    #[error("gate {control}->{target} is not a data-controlled, ancilla-targeted CNOT")]
    UnsupportedStructure { control: usize, target: usize },
}

/// A nonzero hidden string together with its cached weight.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BitString", into = "BitString")]
pub struct HiddenString {
    bits: BitString,
    hw: usize,
}

impl HiddenString {
    pub fn new(bits: BitString) -> Result<Self, OracleError> {
        if bits.is_empty() {
            return Err(OracleError::InvalidSize);
        }
        let hw = bits.weight();
        if hw == 0 {
            return Err(OracleError::InvalidWeight { n: bits.len(), i: 0 });
        }
        Ok(Self { bits, hw })
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn hw(&self) -> usize {
        self.hw
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn is_canonical(&self) -> bool {
        let n = self.n();
        (0..n).all(|j| self.bits.get(j) == (j >= n - self.hw))
    }
}

impl TryFrom<BitString> for HiddenString {
    type Error = OracleError;
    fn try_from(bits: BitString) -> Result<Self, Self::Error> {
        Self::new(bits)
    }
}

impl From<HiddenString> for BitString {
    fn from(h: HiddenString) -> Self {
        h.bits
    }
}

impl fmt::Display for HiddenString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.bits.fmt(f)
    }
}

impl fmt::Debug for HiddenString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HiddenString({})", self.bits)
    }
}

/// `b = 0^(n-i) 1^i`.
pub fn canonical_b(n: usize, i: usize) -> Result<HiddenString, OracleError> {
    if n == 0 {
        return Err(OracleError::InvalidSize);
    }
    if i == 0 || i > n {
        return Err(OracleError::InvalidWeight { n, i });
    }
    let bits = BitString::from_bits((0..n).map(|j| j >= n - i));
    Ok(HiddenString { bits, hw: i })
}

fn binomial(n: usize, k: usize) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for j in 0..k {
        acc = acc * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    acc
}

/// `N_w = sum_{j=1..w} C(n, j)`, exact.
pub fn count_candidates(n: usize, w: usize) -> Result<BigUint, OracleError> {
    if w == 0 || w > n {
        return Err(OracleError::InvalidCutoff { n, w });
    }
    Ok((1..=w).map(|j| binomial(n, j)).sum())
}

/// `C(n, k)` as a float; exact for the sizes that fit in 53 bits.
pub fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// The admissible set `S = { b : 1 <= HW(b) <= w }`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    n: usize,
    w: usize,
    size: BigUint,
}

impl CandidateSet {
    pub fn new(n: usize, w: usize) -> Result<Self, OracleError> {
        let size = count_candidates(n, w)?;
        Ok(Self { n, w, size })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn size(&self) -> &BigUint {
        &self.size
    }

    pub fn size_u64(&self) -> Option<u64> {
        u64::try_from(&self.size).ok()
    }

    pub fn size_f64(&self) -> f64 {
        self.size.to_string().parse().unwrap_or(f64::INFINITY)
    }

    pub fn contains(&self, b: &BitString) -> bool {
        let hw = b.weight();
        b.len() == self.n && hw >= 1 && hw <= self.w
    }
}

/// Linear description of `f_b` for the canonical `b` of weight `i`:
/// `f_b(x) = M x` over GF(2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleSpec {
    n: usize,
    i: usize,
    transfer: BitMatrix,
}

impl OracleSpec {
    pub fn new(n: usize, i: usize) -> Result<Self, OracleError> {
        canonical_b(n, i)?;
        let pivot = n - i;
        let rows = (0..n)
            .map(|j| {
                let mut row = BitString::zeros(n);
                if j < pivot {
                    row.set(j, true);
                } else if j > pivot {
                    row.set(j - 1, true);
                    row.set(j, true);
                }
                row
            })
            .collect();
        let transfer = BitMatrix::from_rows(n, rows)?;
        Ok(Self { n, i, transfer })
    }

    /// Wraps an arbitrary transfer matrix, e.g. to audit a corrupted oracle.
    pub fn from_matrix(n: usize, i: usize, transfer: BitMatrix) -> Result<Self, OracleError> {
        canonical_b(n, i)?;
        if transfer.row_count() != n || transfer.col_count() != n {
            return Err(BitsError::LengthMismatch {
                expected: n,
                actual: transfer.row_count(),
            }
            .into());
        }
        Ok(Self { n, i, transfer })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hw(&self) -> usize {
        self.i
    }

    pub fn transfer(&self) -> &BitMatrix {
        &self.transfer
    }

    pub fn hidden(&self) -> HiddenString {
        canonical_b(self.n, self.i).expect("validated at construction")
    }

    pub fn eval(&self, x: &BitString) -> Result<BitString, OracleError> {
        Ok(self.transfer.mul_vec(x)?)
    }

    /// True iff the kernel of the transfer matrix is exactly `{0, b}`.
    pub fn kernel_matches_hidden(&self) -> bool {
        let basis = self.transfer.kernel_basis();
        basis.len() == 1 && basis[0] == *self.hidden().bits()
    }

    /// Exhaustive check that `f(x) = f(y)` iff `y ∈ {x, x ⊕ b}`.
    pub fn verify_two_to_one(&self) -> Result<bool, OracleError> {
        if self.n > BRUTE_FORCE_LIMIT {
            return Err(OracleError::TooLarge {
                n: self.n,
                limit: BRUTE_FORCE_LIMIT,
            });
        }
        let b = self.hidden().bits().to_index();
        let mut preimages: HashMap<u64, Vec<u64>> = HashMap::with_capacity(1 << self.n);
        for x in 0..(1u64 << self.n) {
            let fx = self.eval(&BitString::from_index(self.n, x))?.to_index();
            preimages.entry(fx).or_default().push(x);
        }
        Ok(preimages.values().all(|xs| {
            xs.len() == 2 && xs[0] ^ xs[1] == b
        }))
    }
}

/// Applies `f_b` for the canonical `b` of weight `i`.
pub fn eval_f_b(spec: &OracleSpec, x: &BitString) -> Result<BitString, OracleError> {
    spec.eval(x)
}

/// Which oracle family a circuit was built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// Two entangling layers regardless of weight.
    ConstantDepth,
    /// Pivot fan-out construction, depth grows with the weight.
    Star,
}

/// An oracle circuit together with the class it implements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleCircuit {
    pub n: usize,
    pub hw: usize,
    pub construction: Construction,
    pub circuit: CnotCircuit,
}

#[derive(Serialize, Deserialize)]
struct OracleCircuitFile {
    n: usize,
    hw: usize,
    gates: Vec<[usize; 2]>,
}

impl OracleCircuit {
    pub fn to_json(&self) -> String {
        let file = OracleCircuitFile {
            n: self.n,
            hw: self.hw,
            gates: self
                .circuit
                .gates()
                .iter()
                .map(|g| [g.control, g.target])
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }

    /// Parses the `{n, hw, gates}` format. The construction is not stored in
    /// the file, so the caller names it.
    pub fn from_json(text: &str, construction: Construction) -> Result<Self, serde_json::Error> {
        let file: OracleCircuitFile = serde_json::from_str(text)?;
        let gates = file
            .gates
            .into_iter()
            .map(|[control, target]| Cnot { control, target })
            .collect();
        let circuit = CnotCircuit::new(2 * file.n, gates).map_err(serde::de::Error::custom)?;
        Ok(Self {
            n: file.n,
            hw: file.hw,
            construction,
            circuit,
        })
    }

    /// Graphviz digraph, one arrow per CNOT from control to target.
    pub fn to_dot(&self) -> String {
        let n = self.n;
        let label = |w: usize| {
            if w < n {
                format!("d{w}")
            } else {
                format!("a{}", w - n)
            }
        };
        let mut out = format!("digraph oracle_n{}_hw{} {{\n  rankdir=LR;\n", n, self.hw);
        out.push_str("  subgraph cluster_data { label=\"data\";");
        for j in 0..n {
            out.push_str(&format!(" d{j};"));
        }
        out.push_str(" }\n  subgraph cluster_ancilla { label=\"ancilla\";");
        for j in 0..n {
            out.push_str(&format!(" a{j};"));
        }
        out.push_str(" }\n");
        for g in self.circuit.gates() {
            out.push_str(&format!("  {} -> {};\n", label(g.control), label(g.target)));
        }
        out.push_str("}\n");
        out
    }
}

fn d(j: usize) -> usize {
    j
}

fn a(n: usize, j: usize) -> usize {
    n + j
}

/// Constant-depth oracle: one CNOT `d_j -> a_j` for every leading zero of
/// `b`, then the pair `d_{j-1} -> a_j`, `d_j -> a_j` for each trailing one
/// after the first. `a_{n-i}` is left idle. Gate count is `n + i - 2`.
pub fn build_constant_depth_oracle(n: usize, i: usize) -> Result<OracleCircuit, OracleError> {
    canonical_b(n, i)?;
    let pivot = n - i;
    let mut gates = Vec::with_capacity(n + i - 2);
    for j in 0..pivot {
        gates.push(Cnot::new(d(j), a(n, j)));
    }
    for j in pivot + 1..n {
        gates.push(Cnot::new(d(j - 1), a(n, j)));
        gates.push(Cnot::new(d(j), a(n, j)));
    }
    let circuit = CnotCircuit::new(2 * n, gates).expect("wires in range by construction");
    Ok(OracleCircuit {
        n,
        hw: i,
        construction: Construction::ConstantDepth,
        circuit,
    })
}

/// Star oracle: `d_{n-i}` fans out to every `a_j` with `j > n-i`. Kept as a
/// depth baseline.
pub fn build_star_oracle(n: usize, i: usize) -> Result<OracleCircuit, OracleError> {
    canonical_b(n, i)?;
    let pivot = n - i;
    let mut gates = Vec::with_capacity(n + i - 2);
    for j in 0..pivot {
        gates.push(Cnot::new(d(j), a(n, j)));
    }
    for j in pivot + 1..n {
        gates.push(Cnot::new(d(pivot), a(n, j)));
    }
    for j in pivot + 1..n {
        gates.push(Cnot::new(d(j), a(n, j)));
    }
    let circuit = CnotCircuit::new(2 * n, gates).expect("wires in range by construction");
    Ok(OracleCircuit {
        n,
        hw: i,
        construction: Construction::Star,
        circuit,
    })
}

/// GF(2) transfer matrix of a data-controlled, ancilla-targeted CNOT circuit:
/// the circuit maps `(x, a)` to `(x, a ⊕ M x)`.
pub fn oracle_matrix(circuit: &CnotCircuit) -> Result<BitMatrix, OracleError> {
    let n = circuit.wire_count() / 2;
    let mut m = BitMatrix::zeros(n, n);
    for g in circuit.gates() {
        if g.control >= n || g.target < n {
            return Err(OracleError::UnsupportedStructure {
                control: g.control,
                target: g.target,
            });
        }
        m.toggle(g.target - n, g.control);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn candidate_counts() {
        assert_eq!(count_candidates(3, 3).unwrap(), BigUint::from(7u32));
        assert_eq!(count_candidates(5, 4).unwrap(), BigUint::from(30u32));
        assert_eq!(count_candidates(5, 3).unwrap(), BigUint::from(25u32));
        assert!(matches!(count_candidates(3, 4), Err(OracleError::InvalidCutoff { .. })));
        assert!(matches!(count_candidates(3, 0), Err(OracleError::InvalidCutoff { .. })));
    }

    #[test]
    fn full_cutoff_is_all_nonzero_strings() {
        for n in 1..=64usize {
            let expected = (BigUint::from(1u32) << n) - BigUint::from(1u32);
            assert_eq!(count_candidates(n, n).unwrap(), expected, "n = {n}");
        }
    }

    #[test]
    fn large_counts_stay_exact() {
        let expected = (BigUint::from(1u32) << 100usize) - BigUint::from(1u32);
        assert_eq!(count_candidates(100, 100).unwrap(), expected);
    }

    #[test]
    fn canonical_strings() {
        assert_eq!(canonical_b(3, 2).unwrap().to_string(), "011");
        assert_eq!(canonical_b(5, 5).unwrap().to_string(), "11111");
        assert_eq!(canonical_b(5, 1).unwrap().to_string(), "00001");
        assert!(canonical_b(5, 1).unwrap().is_canonical());
        assert!(matches!(canonical_b(3, 0), Err(OracleError::InvalidWeight { .. })));
        assert!(matches!(canonical_b(3, 4), Err(OracleError::InvalidWeight { .. })));
    }

    #[test]
    fn hidden_string_rejects_zero() {
        assert!(HiddenString::new(bs("000")).is_err());
        let h = HiddenString::new(bs("010")).unwrap();
        assert_eq!(h.hw(), 1);
        assert!(!h.is_canonical());
    }

    #[test]
    fn f_b_componentwise() {
        let spec = OracleSpec::new(3, 2).unwrap();
        assert_eq!(eval_f_b(&spec, &bs("101")).unwrap().to_string(), "101");
        let spec = OracleSpec::new(5, 3).unwrap();
        assert_eq!(eval_f_b(&spec, &bs("10110")).unwrap().to_string(), "10001");
        assert_eq!(eval_f_b(&spec, &bs("10001")).unwrap().to_string(), "10001");
        assert!(matches!(eval_f_b(&spec, &bs("101")), Err(OracleError::Shape(_))));
    }

    #[test]
    fn two_to_one_small_cases() {
        assert!(OracleSpec::new(3, 2).unwrap().verify_two_to_one().unwrap());
        assert!(OracleSpec::new(5, 5).unwrap().verify_two_to_one().unwrap());
    }

    #[test]
    fn corrupted_matrix_is_not_two_to_one() {
        let (n, i) = (4, 2);
        let mut m = OracleSpec::new(n, i).unwrap().transfer().clone();
        m.set(n - i, n - i, true);
        let spec = OracleSpec::from_matrix(n, i, m).unwrap();
        assert!(!spec.verify_two_to_one().unwrap());
        assert!(!spec.kernel_matches_hidden());
        assert!(spec.transfer().kernel_basis().is_empty());
    }

    #[test]
    fn brute_force_guard() {
        let spec = OracleSpec::new(21, 3).unwrap();
        assert!(matches!(spec.verify_two_to_one(), Err(OracleError::TooLarge { .. })));
        assert!(spec.kernel_matches_hidden());
    }

    fn edges(c: &OracleCircuit) -> Vec<(String, String)> {
        let n = c.n;
        let name = |w: usize| if w < n { format!("d{w}") } else { format!("a{}", w - n) };
        let mut e: Vec<_> = c.circuit.gates().iter().map(|g| (name(g.control), name(g.target))).collect();
        e.sort();
        e
    }

    fn edge_set(list: &[(&str, &str)]) -> Vec<(String, String)> {
        let mut e: Vec<_> = list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        e.sort();
        e
    }

    #[test]
    fn constant_depth_matches_published_edge_sets() {
        let c = build_constant_depth_oracle(5, 4).unwrap();
        assert_eq!(
            edges(&c),
            edge_set(&[
                ("d0", "a0"),
                ("d1", "a2"),
                ("d2", "a3"),
                ("d3", "a4"),
                ("d2", "a2"),
                ("d3", "a3"),
                ("d4", "a4"),
            ])
        );
        let c = build_constant_depth_oracle(5, 1).unwrap();
        assert_eq!(
            edges(&c),
            edge_set(&[("d0", "a0"), ("d1", "a1"), ("d2", "a2"), ("d3", "a3")])
        );
        let c = build_constant_depth_oracle(3, 2).unwrap();
        assert_eq!(edges(&c), edge_set(&[("d0", "a0"), ("d1", "a2"), ("d2", "a2")]));
    }

    #[test]
    fn star_matches_published_edge_set() {
        let c = build_star_oracle(5, 4).unwrap();
        assert_eq!(
            edges(&c),
            edge_set(&[
                ("d0", "a0"),
                ("d1", "a2"),
                ("d1", "a3"),
                ("d1", "a4"),
                ("d2", "a2"),
                ("d3", "a3"),
                ("d4", "a4"),
            ])
        );
        assert_eq!(
            build_star_oracle(5, 1).unwrap().circuit,
            build_constant_depth_oracle(5, 1).unwrap().circuit
        );
        let c = build_star_oracle(4, 3).unwrap();
        let fan: Vec<_> = edges(&c).into_iter().filter(|(s, _)| s == "d1").collect();
        assert_eq!(fan, edge_set(&[("d1", "a2"), ("d1", "a3")]));
    }

    #[test]
    fn gate_counts() {
        for n in 1..=12 {
            for i in 1..=n {
                assert_eq!(build_constant_depth_oracle(n, i).unwrap().circuit.len(), n + i - 2);
            }
        }
    }

    #[test]
    fn matrices_of_small_circuits() {
        let m = oracle_matrix(&build_constant_depth_oracle(3, 2).unwrap().circuit).unwrap();
        assert_eq!(m.row(0).to_string(), "100");
        assert_eq!(m.row(1).to_string(), "000");
        assert_eq!(m.row(2).to_string(), "011");

        let empty = CnotCircuit::new(6, vec![]).unwrap();
        assert_eq!(oracle_matrix(&empty).unwrap(), BitMatrix::zeros(3, 3));

        let star = oracle_matrix(&build_star_oracle(5, 4).unwrap().circuit).unwrap();
        let cd = oracle_matrix(&build_constant_depth_oracle(5, 4).unwrap().circuit).unwrap();
        assert_ne!(star, cd);
        let b = canonical_b(5, 4).unwrap();
        for m in [star, cd] {
            let k = m.kernel_basis();
            assert_eq!(k.len(), 1);
            assert_eq!(&k[0], b.bits());
        }
    }

    #[test]
    fn ancilla_controlled_gate_is_rejected() {
        let c = CnotCircuit::new(4, vec![Cnot::new(2, 0)]).unwrap();
        assert!(matches!(oracle_matrix(&c), Err(OracleError::UnsupportedStructure { .. })));
    }

    #[test]
    fn json_and_dot_exports() {
        let c = build_constant_depth_oracle(3, 2).unwrap();
        let json = c.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["n"], 3);
        assert_eq!(v["hw"], 2);
        assert_eq!(v["gates"][0], serde_json::json!([0, 3]));
        let back = OracleCircuit::from_json(&json, Construction::ConstantDepth).unwrap();
        assert_eq!(back, c);
        let dot = c.to_dot();
        assert!(dot.contains("d1 -> a2;"));
        assert!(dot.starts_with("digraph"));
    }
}
