//! Lowering of equation trees into fused per-point kernel programs.

mod cost;
mod cse;
mod listing;
mod lower;
mod program;

pub use cost::{cost_model, CostModel};
pub use cse::{cse, Dag, DagNode};
pub use listing::emit_listing;
pub use lower::{compile, lower, Compiled, LowerError};
pub use program::{KernelOp, KernelProgram, Opcode, Operand};
