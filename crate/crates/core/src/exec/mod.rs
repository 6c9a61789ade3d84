//! Execution of the compiled programs: sequential, fork-join and task modes,
//! plus the tree-walking baseline.

mod engine;
mod run;
mod scheduler;
mod tasks;
mod trace;

pub use engine::{
    algebraic_block, boundary_block, check_block, update_block, BcTable, Lane, NonFinite,
};
pub use run::{ExecConfig, RunOptions, RunStats, Simulation};
pub use scheduler::{execute, Outcome, SchedError, SchedStats};
pub use tasks::{
    a_node, b_node, block_graph, build_task_graph, face_neighbors, wrap_sources, Graph, TaskDeps,
    TaskKey, TaskNode, TaskRecord,
};
pub use trace::{parse_trace, write_trace, TaskKind, TraceRecord};

use thiserror::Error;

use crate::eqtree::EvalError;
use crate::grid::GridError;
use crate::lowering::LowerError;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    NonFinite(NonFinite),
    #[error("internal error: task graph deadlock with {0} tasks outstanding")]
    Deadlock(usize),
}
