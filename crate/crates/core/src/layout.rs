//! Coupling graphs, linear-chain discovery and SWAP-free placement of query
//! circuits.
//!
//! The constant-depth oracle only ever couples `a_j`–`d_j` and
//! `d_{j-1}`–`a_j`, so the logical order `a_0, d_0, a_1, d_1, …` laid along a
//! simple path of the device needs no routing at all.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{QueryCircuit, QueryOp};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("edge ({0}, {1}) references a qubit outside the graph")]
    EdgeOutOfRange(usize, usize),
    #[error("self-loop on qubit {0}")]
    SelfLoop(usize),
    #[error("grid dimensions must be at least 1x1")]
    EmptyGrid,
    #[error("unknown heavy-hex preset {0:?}")]
    UnknownPreset(String),
    #[error("unrecognized device spec {0:?}")]
    UnknownDevice(String),
    #[error("no chain of {requested} qubits found; longest has {}", longest.len())]
    ChainNotFound {
        requested: usize,
        longest: Vec<usize>,
    },
    #[error("needs {needed} qubits but the graph has {available}")]
    InsufficientQubits { needed: usize, available: usize },
    #[error("invalid cutoff w = {w} for n = {n}")]
    InvalidCutoff { n: usize, w: usize },
    #[error("wire {0} has no physical qubit")]
    UnmappedWire(usize),
}

/// Which lattice a graph was generated from. Chain finding uses it to pick a
/// deterministic traversal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    SquareGrid {
        rows: usize,
        cols: usize,
    },
    /// Rows of `cols` qubits joined by rung qubits every fourth column. Rungs
    /// below even rows sit at columns `≡ rung_offset (mod 4)`, below odd rows
    /// at `≡ rung_offset + 2 (mod 4)`.
    HeavyHex {
        rows: usize,
        cols: usize,
        rung_offset: usize,
    },
    Custom,
}

/// Undirected simple graph over physical qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingGraph {
    qubit_count: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    family: Family,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    qubit_count: usize,
    edges: Vec<[usize; 2]>,
    family: Family,
}

impl CouplingGraph {
    pub fn new(
        qubit_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        family: Family,
    ) -> Result<Self, LayoutError> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(LayoutError::SelfLoop(u));
            }
            if u >= qubit_count || v >= qubit_count {
                return Err(LayoutError::EdgeOutOfRange(u, v));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adjacency = vec![Vec::new(); qubit_count];
        for &(u, v) in &set {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(Self {
            qubit_count,
            edges: set,
            adjacency,
            family,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn degree(&self, q: usize) -> usize {
        self.adjacency[q].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// True if `path` is a simple path whose consecutive entries are edges.
    pub fn is_simple_path(&self, path: &[usize]) -> bool {
        let mut seen = vec![false; self.qubit_count];
        for &q in path {
            if q >= self.qubit_count || seen[q] {
                return false;
            }
            seen[q] = true;
        }
        path.windows(2).all(|p| self.has_edge(p[0], p[1]))
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            qubit_count: self.qubit_count,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
            family: self.family,
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let file: GraphFile = serde_json::from_str(text)?;
        Self::new(
            file.qubit_count,
            file.edges.into_iter().map(|[u, v]| (u, v)),
            file.family,
        )
        .map_err(serde::de::Error::custom)
    }
}

/// `rows × cols` grid with 4-neighbor coupling; qubit `r * cols + c`.
pub fn square_grid(rows: usize, cols: usize) -> Result<CouplingGraph, LayoutError> {
    if rows == 0 || cols == 0 {
        return Err(LayoutError::EmptyGrid);
    }
    let q = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((q(r, c), q(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((q(r, c), q(r + 1, c)));
            }
        }
    }
    CouplingGraph::new(rows * cols, edges, Family::SquareGrid { rows, cols })
}

/// Parameters of a heavy-hex lattice built from rows of qubits and rungs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeavyHexParams {
    pub rows: usize,
    pub cols: usize,
    pub rung_offset: usize,
}

impl HeavyHexParams {
    /// The 156-qubit Heron-style layout: 8 rows of 16 with 4 rungs per gap.
    pub const BOSTON_156: Self = Self {
        rows: 8,
        cols: 16,
        rung_offset: 3,
    };

    /// One hexagonal cell: a 12-qubit ring.
    pub const SINGLE_CELL: Self = Self {
        rows: 2,
        cols: 5,
        rung_offset: 0,
    };

    fn rung_columns(&self, gap: usize) -> Vec<usize> {
        let residue = (self.rung_offset + 2 * (gap % 2)) % 4;
        (0..self.cols).filter(|c| c % 4 == residue).collect()
    }
}

/// Named heavy-hex layouts.
pub enum HeavyHexPreset<'a> {
    Named(&'a str),
    Params(HeavyHexParams),
}

pub fn heavy_hex(preset: HeavyHexPreset<'_>) -> Result<CouplingGraph, LayoutError> {
    let p = match preset {
        HeavyHexPreset::Named("boston-156") | HeavyHexPreset::Named("boston") => {
            HeavyHexParams::BOSTON_156
        }
        HeavyHexPreset::Named("single-cell") => HeavyHexParams::SINGLE_CELL,
        HeavyHexPreset::Named(other) => return Err(LayoutError::UnknownPreset(other.to_string())),
        HeavyHexPreset::Params(p) => p,
    };
    if p.rows == 0 || p.cols == 0 {
        return Err(LayoutError::EmptyGrid);
    }
    let mut edges = Vec::new();
    let mut next = 0usize;
    let mut row_start = Vec::with_capacity(p.rows);
    let mut rung_ids: Vec<Vec<(usize, usize)>> = Vec::new();
    for r in 0..p.rows {
        row_start.push(next);
        for c in 0..p.cols.saturating_sub(1) {
            edges.push((next + c, next + c + 1));
        }
        next += p.cols;
        if r + 1 < p.rows {
            let rungs: Vec<(usize, usize)> = p
                .rung_columns(r)
                .into_iter()
                .enumerate()
                .map(|(k, c)| (c, next + k))
                .collect();
            next += rungs.len();
            rung_ids.push(rungs);
        }
    }
    for (gap, rungs) in rung_ids.iter().enumerate() {
        for &(c, id) in rungs {
            edges.push((row_start[gap] + c, id));
            edges.push((id, row_start[gap + 1] + c));
        }
    }
    CouplingGraph::new(
        next,
        edges,
        Family::HeavyHex {
            rows: p.rows,
            cols: p.cols,
            rung_offset: p.rung_offset,
        },
    )
}

/// Device specs understood on the command line:
/// `grid:RxC`, `heavy-hex:boston-156`, `heavy-hex:RxC` or `heavy-hex:RxC@O`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeviceSpec {
    Grid { rows: usize, cols: usize },
    HeavyHexPreset(String),
    HeavyHex(usize, usize, usize),
}

impl FromStr for DeviceSpec {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LayoutError::UnknownDevice(s.to_string());
        let dims = |t: &str| -> Option<(usize, usize)> {
            let (r, c) = t.split_once('x')?;
            Some((r.parse().ok()?, c.parse().ok()?))
        };
        if let Some(rest) = s.strip_prefix("grid:") {
            let (rows, cols) = dims(rest).ok_or_else(bad)?;
            return Ok(DeviceSpec::Grid { rows, cols });
        }
        if let Some(rest) = s.strip_prefix("heavy-hex:") {
            let (shape, offset) = match rest.split_once('@') {
                Some((shape, off)) => (shape, off.parse().map_err(|_| bad())?),
                None => (rest, 3),
            };
            if let Some((rows, cols)) = dims(shape) {
                return Ok(DeviceSpec::HeavyHex(rows, cols, offset));
            }
            return Ok(DeviceSpec::HeavyHexPreset(shape.to_string()));
        }
        Err(bad())
    }
}

impl DeviceSpec {
    pub fn build(&self) -> Result<CouplingGraph, LayoutError> {
        match self {
            DeviceSpec::Grid { rows, cols } => square_grid(*rows, *cols),
            DeviceSpec::HeavyHexPreset(name) => heavy_hex(HeavyHexPreset::Named(name)),
            &DeviceSpec::HeavyHex(rows, cols, rung_offset) => {
                heavy_hex(HeavyHexPreset::Params(HeavyHexParams {
                    rows,
                    cols,
                    rung_offset,
                }))
            }
        }
    }
}

fn grid_snake(rows: usize, cols: usize) -> Vec<usize> {
    let mut path = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        if r % 2 == 0 {
            path.extend((0..cols).map(|c| r * cols + c));
        } else {
            path.extend((0..cols).rev().map(|c| r * cols + c));
        }
    }
    path
}

/// Walks each row towards the rung that is farthest from where the row was
/// entered, descends, and repeats; the last row runs to its far end. Both
/// starting ends of the first row are tried and the longer walk is kept.
fn heavy_hex_snake(p: HeavyHexParams) -> Vec<usize> {
    let mut row_start = Vec::with_capacity(p.rows);
    let mut rung_id: Vec<BTreeMap<usize, usize>> = Vec::new();
    let mut next = 0;
    for r in 0..p.rows {
        row_start.push(next);
        next += p.cols;
        if r + 1 < p.rows {
            let map: BTreeMap<usize, usize> = p
                .rung_columns(r)
                .into_iter()
                .enumerate()
                .map(|(k, c)| (c, next + k))
                .collect();
            next += map.len();
            rung_id.push(map);
        }
    }

    let walk = |start_col: usize| -> Vec<usize> {
        let mut path = Vec::new();
        let mut entry = start_col;
        for r in 0..p.rows {
            let exit = if r + 1 < p.rows {
                rung_id[r]
                    .keys()
                    .copied()
                    .max_by_key(|&c| (c.abs_diff(entry), c))
            } else {
                None
            };
            let exit_col = match exit {
                Some(c) => c,
                // Last row, or no rung below: run to the farther end.
                None => {
                    if entry >= p.cols - 1 - entry {
                        0
                    } else {
                        p.cols - 1
                    }
                }
            };
            if entry <= exit_col {
                path.extend((entry..=exit_col).map(|c| row_start[r] + c));
            } else {
                path.extend((exit_col..=entry).rev().map(|c| row_start[r] + c));
            }
            match exit {
                Some(c) => {
                    path.push(rung_id[r][&c]);
                    entry = c;
                }
                None => break,
            }
        }
        path
    };

    let left = walk(0);
    let right = walk(p.cols - 1);
    if right.len() > left.len() {
        right
    } else {
        left
    }
}

/// Randomized depth-first walks with a fewest-onward-neighbors preference.
/// Seeded, so repeated calls agree.
fn dfs_chain(graph: &CouplingGraph, length: usize, seed: u64, restarts: usize) -> Vec<usize> {
    let n = graph.qubit_count();
    if n == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Vec<usize> = Vec::new();
    for attempt in 0..restarts {
        let start = if attempt == 0 {
            (0..n).min_by_key(|&q| (graph.degree(q), q)).unwrap_or(0)
        } else {
            rng.random_range(0..n)
        };
        let mut visited = vec![false; n];
        let mut path = vec![start];
        visited[start] = true;
        loop {
            let cur = *path.last().expect("nonempty");
            let mut options: Vec<usize> = graph
                .neighbors(cur)
                .iter()
                .copied()
                .filter(|&v| !visited[v])
                .collect();
            if options.is_empty() {
                break;
            }
            options.shuffle(&mut rng);
            let onward = |v: usize| graph.neighbors(v).iter().filter(|&&u| !visited[u]).count();
            let pick = options
                .into_iter()
                .min_by_key(|&v| onward(v))
                .expect("nonempty");
            visited[pick] = true;
            path.push(pick);
        }
        if path.len() > best.len() {
            best = path;
        }
        if best.len() >= length {
            break;
        }
    }
    best
}

/// Greedily grows a path at both ends through unused neighbors.
fn extend_ends(graph: &CouplingGraph, mut path: Vec<usize>) -> Vec<usize> {
    let mut used = vec![false; graph.qubit_count()];
    for &q in &path {
        used[q] = true;
    }
    for _ in 0..2 {
        while let Some(&next) = path
            .last()
            .and_then(|&q| graph.neighbors(q).iter().find(|&&v| !used[v]))
        {
            used[next] = true;
            path.push(next);
        }
        path.reverse();
    }
    path
}

const DFS_SEED: u64 = 0x5157_4e43_4841_494e;
const DFS_RESTARTS: usize = 256;

/// A simple path of at least `length` qubits. Square grids use the
/// boustrophedon walk (Hamiltonian), heavy-hex lattices the row snake, and
/// anything else a seeded randomized DFS with restarts. The whole path found
/// is returned, which may be longer than requested.
pub fn find_linear_chain(graph: &CouplingGraph, length: usize) -> Result<Vec<usize>, LayoutError> {
    let structured = match graph.family() {
        Family::SquareGrid { rows, cols } => Some(grid_snake(rows, cols)),
        Family::HeavyHex {
            rows,
            cols,
            rung_offset,
        } => Some(heavy_hex_snake(HeavyHexParams {
            rows,
            cols,
            rung_offset,
        })),
        Family::Custom => None,
    };
    let mut path = match structured {
        Some(p) if graph.is_simple_path(&p) => extend_ends(graph, p),
        _ => Vec::new(),
    };
    if path.len() < length {
        let searched = dfs_chain(graph, length, DFS_SEED, DFS_RESTARTS);
        if searched.len() > path.len() {
            path = searched;
        }
    }
    if path.len() >= length && length > 0 {
        Ok(path)
    } else if length == 0 {
        Ok(Vec::new())
    } else {
        Err(LayoutError::ChainNotFound {
            requested: length,
            longest: path,
        })
    }
}

/// Logical wire → physical qubit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireMap(pub Vec<Option<usize>>);

impl WireMap {
    pub fn get(&self, wire: usize) -> Option<usize> {
        self.0.get(wire).copied().flatten()
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }
}

/// Placement of a `2n`-wire query circuit onto a device.
///
/// With a chain of `2n` qubits one map serves every weight class. With only
/// `2n - 1` chain qubits, the idle ancilla `a_{n-i}` of class `i` is taken off
/// the chain and put on the `isolated` qubit, so each class gets its own map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainEmbedding {
    pub n: usize,
    pub w: usize,
    /// Physical qubits in chain order, exactly the ones the layout uses.
    pub chain: Vec<usize>,
    pub isolated: Option<usize>,
    per_class: bool,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingFile {
    n: usize,
    w: usize,
    chain: Vec<usize>,
    map: BTreeMap<String, usize>,
    isolated: Option<usize>,
    per_class: bool,
}

impl ChainEmbedding {
    pub fn is_per_class(&self) -> bool {
        self.per_class
    }

    pub fn qubits_used(&self) -> usize {
        self.chain.len() + usize::from(self.isolated.is_some())
    }

    /// Map used for weight class `i`.
    pub fn map_for_class(&self, i: usize) -> WireMap {
        let n = self.n;
        let mut map = vec![None; 2 * n];
        // Logical order a_0, d_0, a_1, d_1, ...
        let order = (0..n).flat_map(|j| [n + j, j]);
        if self.per_class {
            let idle = n + (n - i.clamp(1, n));
            let mut pos = 0;
            for wire in order {
                if wire == idle {
                    map[wire] = self.isolated;
                } else {
                    map[wire] = self.chain.get(pos).copied();
                    pos += 1;
                }
            }
        } else {
            let mut pos = 0;
            for wire in order {
                if wire == n && self.isolated.is_some() {
                    map[wire] = self.isolated;
                } else {
                    map[wire] = self.chain.get(pos).copied();
                    pos += 1;
                }
            }
        }
        WireMap(map)
    }

    /// Export with the map of the largest class `w`.
    pub fn to_json(&self) -> String {
        let n = self.n;
        let map = self.map_for_class(self.w);
        let label = |w: usize| if w < n { format!("d{w}") } else { format!("a{}", w - n) };
        let file = EmbeddingFile {
            n,
            w: self.w,
            chain: self.chain.clone(),
            map: (0..2 * n)
                .filter_map(|wire| map.get(wire).map(|q| (label(wire), q)))
                .collect(),
            isolated: self.isolated,
            per_class: self.per_class,
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }
}

/// Places the query circuits of every class `i <= w` of Simon-`n`.
pub fn embed_query(n: usize, w: usize, graph: &CouplingGraph) -> Result<ChainEmbedding, LayoutError> {
    if n == 0 || w == 0 || w > n {
        return Err(LayoutError::InvalidCutoff { n, w });
    }
    if graph.qubit_count() < 2 * n {
        return Err(LayoutError::InsufficientQubits {
            needed: 2 * n,
            available: graph.qubit_count(),
        });
    }
    let path = find_linear_chain(graph, 2 * n - 1)?;
    if path.len() >= 2 * n {
        return Ok(ChainEmbedding {
            n,
            w,
            chain: path[..2 * n].to_vec(),
            isolated: None,
            per_class: false,
        });
    }
    let chain = path[..2 * n - 1].to_vec();
    let mut in_chain = vec![false; graph.qubit_count()];
    for &q in &chain {
        in_chain[q] = true;
    }
    // A free neighbor of d_0 can host a_0 for every class at once.
    if let Some(&q) = graph.neighbors(chain[0]).iter().find(|&&q| !in_chain[q]) {
        return Ok(ChainEmbedding {
            n,
            w,
            chain,
            isolated: Some(q),
            per_class: false,
        });
    }
    let isolated = (0..graph.qubit_count()).find(|&q| !in_chain[q]).ok_or(
        LayoutError::InsufficientQubits {
            needed: 2 * n,
            available: graph.qubit_count(),
        },
    )?;
    Ok(ChainEmbedding {
        n,
        w,
        chain,
        isolated: Some(isolated),
        per_class: true,
    })
}

/// True iff every two-wire gate of `circuit` lands on a coupling edge.
pub fn verify_swap_free(
    map: &WireMap,
    graph: &CouplingGraph,
    circuit: &QueryCircuit,
) -> Result<bool, LayoutError> {
    for wire in 0..circuit.wire_count() {
        if map.get(wire).is_none() {
            return Err(LayoutError::UnmappedWire(wire));
        }
    }
    for op in circuit.ops() {
        if let QueryOp::Cnot(g) = op {
            let (u, v) = (
                map.get(g.control).ok_or(LayoutError::UnmappedWire(g.control))?,
                map.get(g.target).ok_or(LayoutError::UnmappedWire(g.target))?,
            );
            if !graph.has_edge(u, v) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

impl fmt::Display for ChainEmbedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Simon-{} (w = {}): chain of {} qubits",
            self.n,
            self.w,
            self.chain.len()
        )?;
        if let Some(q) = self.isolated {
            write!(f, " + isolated qubit {q}")?;
        }
        if self.per_class {
            write!(f, " (idle ancilla placed per class)")?;
        }
        Ok(())
    }
}
