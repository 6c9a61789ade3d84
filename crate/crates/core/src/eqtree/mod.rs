//! Equation trees, dimension inference and the tree-walking evaluator.

mod eval;
mod infer;
mod node;

pub use eval::{tree_eval_reference, EvalError, TreeEvaluator};
pub use infer::{classify, derivative_shape, infer_dims, InferError};
pub use node::{Axis, Op, TreeNode};

use std::collections::HashMap;

use crate::frontend::Problem;

pub fn field_dims(problem: &Problem) -> HashMap<String, usize> {
    problem
        .fields
        .iter()
        .map(|f| (f.name.clone(), f.components()))
        .collect()
}

/// Annotated right-hand side of every equation, in declaration order.
pub fn annotate_problem(problem: &Problem) -> Result<Vec<TreeNode>, InferError> {
    let dims = field_dims(problem);
    problem
        .equations
        .iter()
        .map(|e| infer_dims(&e.rhs, problem.mesh.dims, &dims))
        .collect()
}
