//! Space-time dGcG finite element solver for neural field equations with
//! space-dependent transmission delays.
//!
//! The model is the delayed integro-differential equation
//!
//!   ∂u/∂t(t,x) = −α u(t,x) + ∫_Ω J(x,r) S(u(t − τ(x,r), r)) dr + g(t,x)
//!
//! on a 1D interval, discretized with basis functions that are discontinuous
//! across time levels and continuous in space. Each space-time slab yields a
//! dense algebraic system solved by Newton iteration; delayed evaluation
//! times are resolved against the initial history, the current slab or an
//! earlier stored slab.
//!
//! The crate ships a library (mesh/basis/model/history/solver/analysis), an
//! experiment layer with built-in presets, and the `nfield` CLI.

// `!(x > 0.0)` style comparisons are deliberate: they reject NaN along with
// the out-of-range values. Index-based loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod basis;
pub mod config;
pub mod error;
pub mod experiment;
pub mod history;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod solver;

pub use analysis::{
    convergence_order, dde_oracle, l2_error_at_time, oscillation_diagnostics, Classification,
    ConvergenceTable, DdeReference, OscillationReport, OscillationThresholds, SlopeFit,
};
pub use config::{parse_config, render, Experiment, RunConfig};
pub use error::{Error, Result};
pub use experiment::{run_experiment, RunArtifacts, SnapshotSet};
pub use history::{DelayCase, Discretization, HistoryBuffer, SlabSolution};
pub use mesh::{Domain, SpaceMesh, TimePartition};
pub use model::{
    ActivationSpec, DelaySpec, InitialHistory, KernelSpec, NeuralFieldProblem,
};
pub use solver::{
    precompute_delay_tables, solve_trajectory, DelayTables, NewtonConfig, SlabSolver, SlabSystem,
    SolverOptions, SolverStats,
};
