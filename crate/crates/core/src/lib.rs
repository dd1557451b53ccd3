//! Simon's problem with restricted Hamming weight: oracle construction,
//! circuit compilation and layout, shot sampling, the Bayesian guessing game
//! and the scaling analysis built on top of it.

pub mod bits;
pub mod circuit;
pub mod game;
pub mod layout;
pub mod oracle;
pub mod pipeline;
pub mod sampler;
pub mod stats;

pub use bits::{BitMatrix, BitString, BitsError};
pub use circuit::{CnotCircuit, GateDurations, NativeCircuit, QueryCircuit, TimedCircuit};
pub use layout::{ChainEmbedding, CouplingGraph, LayoutError};
pub use oracle::{CandidateSet, HiddenString, OracleCircuit, OracleError, OracleSpec};
