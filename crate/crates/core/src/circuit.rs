//! Circuit IR: pure-CNOT oracles, entangling-layer scheduling, the full
//! Simon query circuit, lowering to the `{Rz, √X, CZ}` native set, and
//! as-late-as-possible timing.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("gate {control}->{target} acts twice on one wire")]
    SelfLoop { control: usize, target: usize },
    #[error("gate {control}->{target} references a wire outside 0..{wires}")]
    WireOutOfRange {
        control: usize,
        target: usize,
        wires: usize,
    },
    #[error("query circuits need an even, nonzero wire count, got {0}")]
    OddWireCount(usize),
    #[error("gate duration {name} must be positive, got {value}")]
    NonPositiveDuration { name: &'static str, value: f64 },
}

/// A CNOT from `control` to `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cnot {
    pub control: usize,
    pub target: usize,
}

impl Cnot {
    pub const fn new(control: usize, target: usize) -> Self {
        Self { control, target }
    }

    pub fn shares_wire(&self, other: &Cnot) -> bool {
        self.control == other.control
            || self.control == other.target
            || self.target == other.control
            || self.target == other.target
    }

    /// Two CNOTs commute unless the control of one is the target of the other.
    pub fn commutes_with(&self, other: &Cnot) -> bool {
        self.control != other.target && self.target != other.control
    }
}

/// Ordered list of CNOTs over a fixed number of wires.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnotCircuit {
    wires: usize,
    gates: Vec<Cnot>,
}

impl CnotCircuit {
    pub fn new(wires: usize, gates: Vec<Cnot>) -> Result<Self, CircuitError> {
        for g in &gates {
            if g.control == g.target {
                return Err(CircuitError::SelfLoop {
                    control: g.control,
                    target: g.target,
                });
            }
            if g.control >= wires || g.target >= wires {
                return Err(CircuitError::WireOutOfRange {
                    control: g.control,
                    target: g.target,
                    wires,
                });
            }
        }
        Ok(Self { wires, gates })
    }

    pub fn wire_count(&self) -> usize {
        self.wires
    }

    pub fn gates(&self) -> &[Cnot] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Groups of wires connected by at least one gate. Wires no gate
    /// touches form singleton groups. Each group is sorted; groups are
    /// ordered by their smallest wire.
    pub fn interaction_boxes(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.wires).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for g in &self.gates {
            let (ra, rb) = (find(&mut parent, g.control), find(&mut parent, g.target));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.wires];
        for w in 0..self.wires {
            let r = find(&mut parent, w);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(w);
        }
        groups
    }
}

/// Partition of a circuit's gates into entangling layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSchedule {
    /// `layers[k]` lists the indices (into the circuit's gate list) placed in
    /// layer `k`, in emission order.
    pub layers: Vec<Vec<usize>>,
    /// Layer index of every gate.
    pub layer_of: Vec<usize>,
}

impl LayerSchedule {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

/// Greedy earliest-fit layering in emission order.
///
/// Each gate goes into the first layer that has no wire in common with it
/// and that comes after every earlier gate it does not commute with. Gates
/// that commute may therefore move ahead of each other; non-commuting gates
/// keep their relative order.
pub fn schedule_layers(circuit: &CnotCircuit) -> LayerSchedule {
    let w = circuit.wire_count();
    let mut busy: Vec<Vec<bool>> = Vec::new();
    let mut layers: Vec<Vec<usize>> = Vec::new();
    let mut layer_of = Vec::with_capacity(circuit.len());
    // Highest layer holding a gate that uses the wire as control / as target.
    let mut last_as_control: Vec<Option<usize>> = vec![None; w];
    let mut last_as_target: Vec<Option<usize>> = vec![None; w];

    for (idx, g) in circuit.gates().iter().enumerate() {
        let after = |x: Option<usize>| x.map_or(0, |l| l + 1);
        let lower = after(last_as_control[g.target]).max(after(last_as_target[g.control]));
        let mut layer = lower;
        while layer < busy.len() && (busy[layer][g.control] || busy[layer][g.target]) {
            layer += 1;
        }
        if layer == busy.len() {
            busy.push(vec![false; w]);
            layers.push(Vec::new());
        }
        busy[layer][g.control] = true;
        busy[layer][g.target] = true;
        layers[layer].push(idx);
        layer_of.push(layer);
        last_as_control[g.control] = Some(last_as_control[g.control].map_or(layer, |l| l.max(layer)));
        last_as_target[g.target] = Some(last_as_target[g.target].map_or(layer, |l| l.max(layer)));
    }
    LayerSchedule { layers, layer_of }
}

pub fn entangling_depth(circuit: &CnotCircuit) -> usize {
    schedule_layers(circuit).depth()
}

/// Logical operation of the full query circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryOp {
    H(usize),
    Cnot(Cnot),
    /// Measurement; ancilla outcomes are marked for discarding.
    Measure { wire: usize, discard: bool },
}

/// `H^n` on the data register, the oracle, `H^n` again, then measurement of
/// all `2n` wires. The data outcomes form `z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryCircuit {
    n: usize,
    oracle: CnotCircuit,
}

impl QueryCircuit {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn oracle(&self) -> &CnotCircuit {
        &self.oracle
    }

    pub fn wire_count(&self) -> usize {
        2 * self.n
    }

    pub fn ops(&self) -> Vec<QueryOp> {
        let n = self.n;
        let mut ops = Vec::with_capacity(4 * n + self.oracle.len());
        ops.extend((0..n).map(QueryOp::H));
        ops.extend(self.oracle.gates().iter().copied().map(QueryOp::Cnot));
        ops.extend((0..n).map(QueryOp::H));
        ops.extend((0..2 * n).map(|w| QueryOp::Measure {
            wire: w,
            discard: w >= n,
        }));
        ops
    }
}

pub fn build_query_circuit(oracle: &CnotCircuit) -> Result<QueryCircuit, CircuitError> {
    let wires = oracle.wire_count();
    if wires == 0 || !wires.is_multiple_of(2) {
        return Err(CircuitError::OddWireCount(wires));
    }
    Ok(QueryCircuit {
        n: wires / 2,
        oracle: oracle.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NativeKind {
    Init,
    Rz,
    SqrtX,
    #[serde(rename = "CZ")]
    Cz,
    Measure,
}

/// One native gate. `angle` is set for `Rz` only; CZ wires are unordered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NativeOp {
    pub kind: NativeKind,
    pub wires: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub angle: Option<f64>,
}

impl NativeOp {
    fn single(kind: NativeKind, wire: usize) -> Self {
        Self {
            kind,
            wires: vec![wire],
            angle: None,
        }
    }

    fn rz(wire: usize, angle: f64) -> Self {
        Self {
            kind: NativeKind::Rz,
            wires: vec![wire],
            angle: Some(angle),
        }
    }

    fn cz(a: usize, b: usize) -> Self {
        Self {
            kind: NativeKind::Cz,
            wires: vec![a.min(b), a.max(b)],
            angle: None,
        }
    }
}

/// Untimed native circuit in program order.
#[derive(Clone, Debug, PartialEq)]
pub struct NativeCircuit {
    pub wires: usize,
    pub ops: Vec<NativeOp>,
}

impl NativeCircuit {
    pub fn count(&self, kind: NativeKind) -> usize {
        self.ops.iter().filter(|o| o.kind == kind).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum HLevel {
    H(usize),
    Cz(usize, usize),
    Measure(usize),
}

impl HLevel {
    fn touches(&self, w: usize) -> bool {
        match *self {
            HLevel::H(x) | HLevel::Measure(x) => x == w,
            HLevel::Cz(a, b) => a == w || b == w,
        }
    }
}

/// Lowers `H` to `Rz(π/2) √X Rz(π/2)` and `CNOT(c, t)` to
/// `H(t) CZ(c, t) H(t)`, cancelling `H H` pairs that end up adjacent on a
/// wire. Global phase is dropped.
pub fn lower_to_native(circuit: &QueryCircuit) -> NativeCircuit {
    let wires = circuit.wire_count();
    let mut seq: Vec<Option<HLevel>> = Vec::new();
    // Per-wire stack of live op positions in `seq`.
    let mut on_wire: Vec<Vec<usize>> = vec![Vec::new(); wires];

    let push = |op: HLevel, seq: &mut Vec<Option<HLevel>>, on_wire: &mut Vec<Vec<usize>>| {
        if let HLevel::H(w) = op {
            if let Some(&prev) = on_wire[w].last() {
                if seq[prev] == Some(HLevel::H(w)) {
                    seq[prev] = None;
                    on_wire[w].pop();
                    return;
                }
            }
        }
        let pos = seq.len();
        seq.push(Some(op));
        for (w, stack) in on_wire.iter_mut().enumerate() {
            if op.touches(w) {
                stack.push(pos);
            }
        }
    };

    for op in circuit.ops() {
        match op {
            QueryOp::H(w) => push(HLevel::H(w), &mut seq, &mut on_wire),
            QueryOp::Cnot(g) => {
                push(HLevel::H(g.target), &mut seq, &mut on_wire);
                push(HLevel::Cz(g.control, g.target), &mut seq, &mut on_wire);
                push(HLevel::H(g.target), &mut seq, &mut on_wire);
            }
            QueryOp::Measure { wire, .. } => push(HLevel::Measure(wire), &mut seq, &mut on_wire),
        }
    }

    let mut ops = Vec::new();
    for op in seq.into_iter().flatten() {
        match op {
            HLevel::H(w) => {
                ops.push(NativeOp::rz(w, FRAC_PI_2));
                ops.push(NativeOp::single(NativeKind::SqrtX, w));
                ops.push(NativeOp::rz(w, FRAC_PI_2));
            }
            HLevel::Cz(a, b) => ops.push(NativeOp::cz(a, b)),
            HLevel::Measure(w) => ops.push(NativeOp::single(NativeKind::Measure, w)),
        }
    }
    NativeCircuit { wires, ops }
}

/// Duration of each gate class in nanoseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateDurations {
    pub oneq_ns: f64,
    pub twoq_ns: f64,
    pub readout_ns: f64,
}

impl GateDurations {
    pub fn new(oneq_ns: f64, twoq_ns: f64, readout_ns: f64) -> Result<Self, CircuitError> {
        let d = Self {
            oneq_ns,
            twoq_ns,
            readout_ns,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        for (name, value) in [
            ("oneq_ns", self.oneq_ns),
            ("twoq_ns", self.twoq_ns),
            ("readout_ns", self.readout_ns),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CircuitError::NonPositiveDuration { name, value });
            }
        }
        Ok(())
    }

    /// Heavy-hex 156-qubit device (minimum 2q duration as reported).
    pub fn boston() -> Self {
        Self {
            oneq_ns: 32.0,
            twoq_ns: 68.0,
            readout_ns: 2200.0,
        }
    }

    /// Square-lattice 120-qubit device (mean 2q duration).
    pub fn miami() -> Self {
        Self {
            oneq_ns: 32.0,
            twoq_ns: 148.5,
            readout_ns: 2400.0,
        }
    }

    fn of(&self, kind: NativeKind) -> f64 {
        match kind {
            NativeKind::Init => 0.0,
            NativeKind::Rz | NativeKind::SqrtX => self.oneq_ns,
            NativeKind::Cz => self.twoq_ns,
            NativeKind::Measure => self.readout_ns,
        }
    }
}

impl Default for GateDurations {
    fn default() -> Self {
        Self::boston()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedOp {
    pub kind: NativeKind,
    pub wires: Vec<usize>,
    pub t_start_ns: f64,
    pub dur_ns: f64,
}

impl TimedOp {
    pub fn end(&self) -> f64 {
        self.t_start_ns + self.dur_ns
    }
}

/// Native circuit with start times. `Init` markers come first, one per used
/// wire, followed by the gates in program order.
#[derive(Clone, Debug, PartialEq)]
pub struct TimedCircuit {
    pub wires: usize,
    pub ops: Vec<TimedOp>,
}

/// Idle accounting for one wire between its `Init` and the end of its
/// measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireIdle {
    pub wire: usize,
    pub active_from_ns: f64,
    pub active_to_ns: f64,
    pub busy_ns: f64,
    pub idle_ns: f64,
    /// Gaps as `[start, end]`, in time order.
    pub gaps: Vec<[f64; 2]>,
}

impl TimedCircuit {
    pub fn makespan(&self) -> f64 {
        self.ops.iter().map(TimedOp::end).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.ops).expect("plain data serializes")
    }

    /// Operations (excluding `Init`) touching `wire`, in time order.
    pub fn wire_ops(&self, wire: usize) -> Vec<&TimedOp> {
        let mut ops: Vec<&TimedOp> = self
            .ops
            .iter()
            .filter(|o| o.kind != NativeKind::Init && o.wires.contains(&wire))
            .collect();
        ops.sort_by(|a, b| a.t_start_ns.total_cmp(&b.t_start_ns));
        ops
    }

    pub fn idle_report(&self) -> Vec<WireIdle> {
        const EPS: f64 = 1e-9;
        (0..self.wires)
            .filter_map(|w| {
                let ops = self.wire_ops(w);
                let first = ops.first()?;
                let last = ops.last()?;
                let mut gaps = Vec::new();
                let mut busy = 0.0;
                for pair in ops.windows(2) {
                    let (end, next) = (pair[0].end(), pair[1].t_start_ns);
                    if next - end > EPS {
                        gaps.push([end, next]);
                    }
                }
                for o in &ops {
                    busy += o.dur_ns;
                }
                let span = last.end() - first.t_start_ns;
                Some(WireIdle {
                    wire: w,
                    active_from_ns: first.t_start_ns,
                    active_to_ns: last.end(),
                    busy_ns: busy,
                    idle_ns: span - busy,
                    gaps,
                })
            })
            .collect()
    }
}

/// As-late-as-possible timing: the makespan is the length of the critical
/// path, every gate is pushed as late as its successors allow (so all
/// measurements end together), and each wire's `Init` sits immediately
/// before its first gate.
pub fn alap_schedule(circuit: &NativeCircuit, durations: &GateDurations) -> TimedCircuit {
    let wires = circuit.wires;
    let dur: Vec<f64> = circuit.ops.iter().map(|o| durations.of(o.kind)).collect();

    let mut ready = vec![0.0f64; wires];
    for (op, &d) in circuit.ops.iter().zip(&dur) {
        let start = op.wires.iter().map(|&w| ready[w]).fold(0.0, f64::max);
        for &w in &op.wires {
            ready[w] = start + d;
        }
    }
    let makespan = ready.iter().copied().fold(0.0, f64::max);

    let mut latest = vec![makespan; wires];
    let mut starts = vec![0.0f64; circuit.ops.len()];
    for (k, op) in circuit.ops.iter().enumerate().rev() {
        let end = op.wires.iter().map(|&w| latest[w]).fold(f64::INFINITY, f64::min);
        let start = end - dur[k];
        starts[k] = start;
        for &w in &op.wires {
            latest[w] = start;
        }
    }

    let mut first_start: Vec<Option<f64>> = vec![None; wires];
    for (op, &s) in circuit.ops.iter().zip(&starts) {
        for &w in &op.wires {
            first_start[w].get_or_insert(s);
        }
    }

    let mut ops: Vec<TimedOp> = first_start
        .iter()
        .enumerate()
        .filter_map(|(w, s)| {
            s.map(|s| TimedOp {
                kind: NativeKind::Init,
                wires: vec![w],
                t_start_ns: s,
                dur_ns: 0.0,
            })
        })
        .collect();
    ops.extend(circuit.ops.iter().zip(&starts).zip(&dur).map(|((op, &s), &d)| TimedOp {
        kind: op.kind,
        wires: op.wires.clone(),
        t_start_ns: s,
        dur_ns: d,
    }));
    TimedCircuit { wires, ops }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_constant_depth_oracle, build_star_oracle};

    fn cd(n: usize, i: usize) -> CnotCircuit {
        build_constant_depth_oracle(n, i).unwrap().circuit
    }

    fn star(n: usize, i: usize) -> CnotCircuit {
        build_star_oracle(n, i).unwrap().circuit
    }

    #[test]
    fn rejects_bad_gates() {
        assert!(matches!(
            CnotCircuit::new(2, vec![Cnot::new(1, 1)]),
            Err(CircuitError::SelfLoop { .. })
        ));
        assert!(matches!(
            CnotCircuit::new(2, vec![Cnot::new(0, 2)]),
            Err(CircuitError::WireOutOfRange { .. })
        ));
    }

    #[test]
    fn published_layer_counts() {
        assert_eq!(entangling_depth(&cd(5, 4)), 2);
        assert_eq!(entangling_depth(&star(5, 4)), 3);
        for n in 1..=10 {
            assert_eq!(entangling_depth(&cd(n, 1)), if n == 1 { 0 } else { 1 });
        }
        assert_eq!(entangling_depth(&cd(60, 16)), 2);
        assert_eq!(entangling_depth(&star(20, 20)), 19);
        assert_eq!(entangling_depth(&CnotCircuit::new(4, vec![]).unwrap()), 0);
    }

    #[test]
    fn layers_have_disjoint_wires() {
        for (n, i) in [(5, 4), (7, 3), (9, 9)] {
            for c in [cd(n, i), star(n, i)] {
                let s = schedule_layers(&c);
                for layer in &s.layers {
                    for (x, &gi) in layer.iter().enumerate() {
                        for &gj in &layer[x + 1..] {
                            assert!(!c.gates()[gi].shares_wire(&c.gates()[gj]));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn non_commuting_gates_keep_order() {
        // 0->1 then 1->2: the second must follow the first.
        let c = CnotCircuit::new(3, vec![Cnot::new(0, 1), Cnot::new(1, 2)]).unwrap();
        assert_eq!(schedule_layers(&c).layer_of, vec![0, 1]);
        // 1->2 then 0->1: disjoint-in-time is still required.
        let c = CnotCircuit::new(3, vec![Cnot::new(1, 2), Cnot::new(0, 1)]).unwrap();
        assert_eq!(schedule_layers(&c).layer_of, vec![0, 1]);
        // Later gate cannot hop in front of a non-commuting predecessor
        // even when an earlier layer is wire-free for it.
        let c = CnotCircuit::new(
            5,
            vec![Cnot::new(3, 4), Cnot::new(0, 1), Cnot::new(3, 2), Cnot::new(2, 0)],
        )
        .unwrap();
        let s = schedule_layers(&c);
        assert!(s.layer_of[3] > s.layer_of[2]);
        assert!(s.layer_of[3] > s.layer_of[1]);
    }

    #[test]
    fn query_circuit_counts() {
        let q = build_query_circuit(&cd(3, 2)).unwrap();
        let ops = q.ops();
        let h = ops.iter().filter(|o| matches!(o, QueryOp::H(_))).count();
        let cx = ops.iter().filter(|o| matches!(o, QueryOp::Cnot(_))).count();
        let m = ops.iter().filter(|o| matches!(o, QueryOp::Measure { .. })).count();
        assert_eq!((h, cx, m), (6, 3, 6));
        let discarded: Vec<usize> = ops
            .iter()
            .filter_map(|o| match o {
                QueryOp::Measure { wire, discard: true } => Some(*wire),
                _ => None,
            })
            .collect();
        assert_eq!(discarded, vec![3, 4, 5]);

        let q = build_query_circuit(&cd(2, 1)).unwrap();
        let ops = q.ops();
        assert_eq!(ops.iter().filter(|o| matches!(o, QueryOp::H(_))).count(), 4);
        assert_eq!(ops.iter().filter(|o| matches!(o, QueryOp::Cnot(_))).count(), 1);
        assert!(build_query_circuit(&CnotCircuit::new(3, vec![]).unwrap()).is_err());
    }

    #[test]
    fn single_cnot_lowering() {
        let oracle = CnotCircuit::new(2, vec![Cnot::new(0, 1)]).unwrap();
        let q = build_query_circuit(&oracle).unwrap();
        let native = lower_to_native(&q);
        let kinds: Vec<(NativeKind, Vec<usize>)> =
            native.ops.iter().map(|o| (o.kind, o.wires.clone())).collect();
        use NativeKind::*;
        let h = |w: usize| vec![(Rz, vec![w]), (SqrtX, vec![w]), (Rz, vec![w])];
        let mut expected = Vec::new();
        expected.extend(h(0));
        expected.extend(h(1));
        expected.push((Cz, vec![0, 1]));
        expected.extend(h(1));
        expected.extend(h(0));
        expected.push((Measure, vec![0]));
        expected.push((Measure, vec![1]));
        assert_eq!(kinds, expected);
        assert_eq!(native.count(Cz), 1);
    }

    #[test]
    fn adjacent_hadamards_cancel() {
        // Two CNOTs on the same target: H CZ H H CZ H -> H CZ CZ H.
        let oracle = CnotCircuit::new(4, vec![Cnot::new(0, 2), Cnot::new(1, 2)]).unwrap();
        let native = lower_to_native(&build_query_circuit(&oracle).unwrap());
        let on_target = native
            .ops
            .iter()
            .filter(|o| o.wires.contains(&2) && o.kind == NativeKind::SqrtX)
            .count();
        assert_eq!(on_target, 2);
        assert_eq!(native.count(NativeKind::Cz), 2);
    }

    #[test]
    fn hadamard_pair_vanishes() {
        // An empty oracle leaves H H on each data wire, which cancels.
        let q = build_query_circuit(&CnotCircuit::new(2, vec![]).unwrap()).unwrap();
        let native = lower_to_native(&q);
        assert_eq!(native.count(NativeKind::SqrtX), 0);
        assert_eq!(native.count(NativeKind::Rz), 0);
        assert_eq!(native.count(NativeKind::Measure), 2);
    }

    #[test]
    fn alap_properties() {
        let q = build_query_circuit(&cd(3, 2)).unwrap();
        let native = lower_to_native(&q);
        let timed = alap_schedule(&native, &GateDurations::boston());
        let t = timed.makespan();
        for op in timed.ops.iter().filter(|o| o.kind == NativeKind::Measure) {
            assert!((op.end() - t).abs() < 1e-9);
        }
        for w in 0..timed.wires {
            let ops = timed.wire_ops(w);
            for pair in ops.windows(2) {
                assert!(pair[0].end() <= pair[1].t_start_ns + 1e-9);
            }
            if let Some(first) = ops.first() {
                let init = timed
                    .ops
                    .iter()
                    .find(|o| o.kind == NativeKind::Init && o.wires == vec![w])
                    .unwrap();
                assert!((init.t_start_ns - first.t_start_ns).abs() < 1e-9);
            }
        }
        // The idle ancilla a_1 only gets measured: it starts with the readout.
        let a1 = timed.wire_ops(4);
        assert_eq!(a1.len(), 1);
        assert!((a1[0].t_start_ns - (t - 2200.0)).abs() < 1e-9);
        let report = timed.idle_report();
        assert_eq!(report.len(), 6);
        assert!(report.iter().all(|r| r.idle_ns >= -1e-9));
    }

    #[test]
    fn independent_gates_share_start_times() {
        let c = NativeCircuit {
            wires: 4,
            ops: vec![NativeOp::cz(0, 1), NativeOp::cz(2, 3)],
        };
        let timed = alap_schedule(&c, &GateDurations::boston());
        let cz: Vec<f64> = timed
            .ops
            .iter()
            .filter(|o| o.kind == NativeKind::Cz)
            .map(|o| o.t_start_ns)
            .collect();
        assert_eq!(cz[0], cz[1]);
    }

    #[test]
    fn durations_must_be_positive() {
        assert!(GateDurations::new(32.0, 0.0, 1.0).is_err());
        assert!(GateDurations::new(32.0, 68.0, 2200.0).is_ok());
    }

    #[test]
    fn boxes_of_constant_depth_oracle() {
        // n = 5, i = 3: boxes {d0,a0}, {d1,a1}, {a2}, {d2,a3,d3,a4,d4}.
        let boxes = cd(5, 3).interaction_boxes();
        let sizes: Vec<usize> = boxes.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 2, 5, 1]);
    }
}
