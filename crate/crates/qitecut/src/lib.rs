//! MaxCut via imaginary-time evolution of real product states.
//!
//! A graph's cut problem is encoded as a ZZ Hamiltonian whose ground energy
//! fixes the optimal cut. Evolution proceeds in discrete steps: each step
//! solves a linear system for per-qubit Y-rotation coefficients, accumulates
//! them, and line-searches a single imaginary-time parameter. Because the
//! updates never entangle, the whole trajectory lives in the one-angle-per-
//! qubit product family and simulates in linear space.
//!
//! The crate also ships the exact machinery used to validate all of this:
//! exhaustive cut oracles, dense statevector cross-checks, exact
//! imaginary-time evolution, and a greedy baseline, plus an experiment
//! harness behind the `qitecut` binary.

pub mod config;
pub mod graph;
pub mod metrics;
pub mod oracle;
pub mod plot;
pub mod qite;
pub mod state;
pub mod sweep;

pub use graph::{enumerate_connected, erdos_renyi_ensemble, Graph, GraphEnsemble, GraphError};
pub use metrics::{CutReference, MetricsReport};
pub use oracle::{brute_force_maxcut, greedy_cut, greedy_multistart, CutOracleResult, OracleError};
pub use qite::{
    itd_pair_search, run, ItdMode, ItdSchedule, QiteConfig, QiteError, RunResult, Termination,
};
pub use state::{EdgeWeights, ProductState};
