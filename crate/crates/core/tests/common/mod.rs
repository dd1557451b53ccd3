//! Reference implementations used as test oracles. None of these share code
//! with the library beyond its plain data types.

#![allow(dead_code)]

use num_complex::Complex64;
use simon_core::circuit::{NativeCircuit, NativeKind};
use simon_core::{BitString, CnotCircuit};

/// Dense statevector over `wires` qubits; wire `k` is bit `k` of the index.
pub struct StateVector {
    pub wires: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(wires: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << wires];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { wires, amps }
    }

    fn one_qubit(&mut self, w: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1 << w;
        for k in 0..self.amps.len() {
            if k & bit == 0 {
                let (a0, a1) = (self.amps[k], self.amps[k | bit]);
                self.amps[k] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[k | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn rz(&mut self, w: usize, theta: f64) {
        let z = Complex64::new(0.0, 0.0);
        let m = [
            [Complex64::from_polar(1.0, -theta / 2.0), z],
            [z, Complex64::from_polar(1.0, theta / 2.0)],
        ];
        self.one_qubit(w, m);
    }

    pub fn sqrt_x(&mut self, w: usize) {
        let p = Complex64::new(0.5, 0.5);
        let q = Complex64::new(0.5, -0.5);
        self.one_qubit(w, [[p, q], [q, p]]);
    }

    pub fn h(&mut self, w: usize) {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.one_qubit(w, [[s, s], [s, -s]]);
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        let mask = (1 << a) | (1 << b);
        for (k, amp) in self.amps.iter_mut().enumerate() {
            if k & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// Applies every unitary of a native circuit. `Init` must precede all
    /// other ops on its wire and `Measure` must follow them; both are then
    /// the identity on a state that starts in the computational basis and is
    /// read out at the end.
    pub fn run_native(&mut self, c: &NativeCircuit) {
        let mut started = vec![false; c.wires];
        let mut measured = vec![false; c.wires];
        for op in &c.ops {
            for &w in &op.wires {
                assert!(!measured[w], "op after measurement on wire {w}");
            }
            match op.kind {
                NativeKind::Init => {
                    assert!(!started[op.wires[0]], "late init");
                }
                NativeKind::Rz => self.rz(op.wires[0], op.angle.expect("rz angle")),
                NativeKind::SqrtX => self.sqrt_x(op.wires[0]),
                NativeKind::Cz => self.cz(op.wires[0], op.wires[1]),
                NativeKind::Measure => measured[op.wires[0]] = true,
            }
            for &w in &op.wires {
                started[w] = true;
            }
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Exact distribution of the data register after running a native query
/// circuit from `|0…0⟩`, indexed by `BitString::to_index` of `z`.
pub fn native_z_distribution(c: &NativeCircuit, n: usize) -> Vec<f64> {
    let mut sv = StateVector::basis(c.wires, 0);
    sv.run_native(c);
    let mut dist = vec![0.0; 1 << n];
    for (k, p) in sv.probabilities().into_iter().enumerate() {
        let z = BitString::from_bits((0..n).map(|j| k >> j & 1 == 1));
        dist[z.to_index() as usize] += p;
    }
    dist
}

/// `(x, a) ↦ (x, a ⊕ Mx)` by running the CNOT list on a bit vector.
pub fn cnot_classical(c: &CnotCircuit, input: &[bool]) -> Vec<bool> {
    let mut s = input.to_vec();
    for g in c.gates() {
        if s[g.control] {
            s[g.target] = !s[g.target];
        }
    }
    s
}

/// Minimal entangling depth by exhaustive search: layers may not share a
/// wire, and two gates that share a wire without commuting keep their order.
pub fn minimal_depth(c: &CnotCircuit) -> usize {
    let g = c.gates();
    if g.is_empty() {
        return 0;
    }
    let conflicts = |a: usize, b: usize| {
        let (x, y) = (g[a], g[b]);
        x.control == y.control || x.target == y.target || x.control == y.target || x.target == y.control
    };
    let ordered = |a: usize, b: usize| {
        let (x, y) = (g[a], g[b]);
        x.control == y.target || x.target == y.control
    };
    fn assign(
        k: usize,
        depth: usize,
        layer: &mut Vec<usize>,
        n: usize,
        conflicts: &dyn Fn(usize, usize) -> bool,
        ordered: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        if k == n {
            return true;
        }
        for l in 0..depth {
            let ok = (0..k).all(|j| {
                if !conflicts(j, k) {
                    return true;
                }
                layer[j] != l && (!ordered(j, k) || layer[j] < l)
            });
            if ok {
                layer.push(l);
                if assign(k + 1, depth, layer, n, conflicts, ordered) {
                    return true;
                }
                layer.pop();
            }
        }
        false
    }
    (1..=g.len())
        .find(|&d| assign(0, d, &mut Vec::new(), g.len(), &conflicts, &ordered))
        .expect("one gate per layer always works")
}

/// Expected queries until the ideal player is certain, for `w = n` and
/// `f̂ ≡ 1`: an absorbing chain on the rank of the observed `z` within the
/// `(n−1)`-dimensional space orthogonal to `b`, solved by elimination.
pub fn full_rank_expected_queries(n: usize) -> f64 {
    let d = n - 1;
    if d == 0 {
        return 0.0;
    }
    // Transient states r = 0..d−1; t = (I − Q)^{-1} 1.
    let size = d;
    let mut a = vec![vec![0.0; size + 1]; size];
    for r in 0..d {
        let stay = 2f64.powi(r as i32 - d as i32);
        a[r][r] = 1.0 - stay;
        if r + 1 < d {
            a[r][r + 1] = -(1.0 - stay);
        }
        a[r][size] = 1.0;
    }
    for col in 0..size {
        let piv = (col..size)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in 0..size {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=size {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    a[0][size] / a[0][0]
}

/// Upper-tail probability of a chi-square statistic.
pub fn chi_square_p(stat: f64, dof: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    if dof == 0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat)
}
