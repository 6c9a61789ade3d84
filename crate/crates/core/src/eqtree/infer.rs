use std::collections::HashMap;

use thiserror::Error;

use super::{Axis, Op, TreeNode};
use crate::frontend::{Equation, EquationKind};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InferError {
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("dimension mismatch in {op}: {left} vs {right} components")]
    Mismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },
    #[error("div needs a vector operand, got a scalar")]
    DivOfScalar,
    #[error("div needs {mesh} components, got {dims}")]
    DivDims { dims: usize, mesh: usize },
    #[error("grad needs a scalar operand, got {0} components")]
    GradOfVector(usize),
    #[error("derivative along {axis:?} on a {mesh}d mesh")]
    AxisOutOfRange { axis: Axis, mesh: usize },
    #[error("{0} must be applied directly to a field")]
    StencilOperand(&'static str),
    #[error("unsupported nesting of derivatives: {0}")]
    Nesting(String),
}

/// Shape of a derivative vertex: axis, order and differentiated field.
pub fn derivative_shape(node: &TreeNode) -> Option<(Axis, usize, &str)> {
    let Op::Derivative(a) = node.op else {
        return None;
    };
    let child = &node.children[0];
    match &child.op {
        Op::Field(f) => Some((a, 1, f)),
        Op::Derivative(b) if *b == a => child.children[0].field_name().map(|f| (a, 2, f)),
        _ => None,
    }
}

/// Annotates every vertex with the number of components of its value.
///
/// Stencil operators apply to fields directly; the only nesting accepted is
/// a repeated first derivative along one axis, which denotes the second
/// derivative along that axis.
pub fn infer_dims(
    tree: &TreeNode,
    mesh_dims: usize,
    field_dims: &HashMap<String, usize>,
) -> Result<TreeNode, InferError> {
    let children = tree
        .children
        .iter()
        .map(|c| infer_dims(c, mesh_dims, field_dims))
        .collect::<Result<Vec<_>, _>>()?;
    let dims = match &tree.op {
        Op::Field(name) => *field_dims
            .get(name)
            .ok_or_else(|| InferError::UnknownField(name.clone()))?,
        Op::Const { .. } => 1,
        Op::Add | Op::Sub => {
            let (l, r) = (children[0].dims, children[1].dims);
            if l != r {
                return Err(InferError::Mismatch {
                    op: if tree.op == Op::Add { "add" } else { "sub" },
                    left: l,
                    right: r,
                });
            }
            l
        }
        Op::Times => match (children[0].dims, children[1].dims) {
            (1, d) | (d, 1) => d,
            (l, r) => {
                return Err(InferError::Mismatch {
                    op: "times",
                    left: l,
                    right: r,
                })
            }
        },
        Op::Derivative(axis) => {
            if axis.index() >= mesh_dims {
                return Err(InferError::AxisOutOfRange {
                    axis: *axis,
                    mesh: mesh_dims,
                });
            }
            let c = &children[0];
            match &c.op {
                Op::Field(_) => {}
                Op::Derivative(b) if b == axis && c.children[0].field_name().is_some() => {}
                Op::Derivative(_) => {
                    return Err(InferError::Nesting(tree.to_string()));
                }
                _ => return Err(InferError::StencilOperand("a derivative")),
            }
            c.dims
        }
        Op::Lapla => {
            if children[0].field_name().is_none() {
                return Err(InferError::StencilOperand("lapla"));
            }
            children[0].dims
        }
        Op::Grad => {
            if children[0].field_name().is_none() {
                return Err(InferError::StencilOperand("grad"));
            }
            if children[0].dims != 1 {
                return Err(InferError::GradOfVector(children[0].dims));
            }
            mesh_dims
        }
        Op::Div => {
            if children[0].field_name().is_none() {
                return Err(InferError::StencilOperand("div"));
            }
            match children[0].dims {
                1 => return Err(InferError::DivOfScalar),
                d if d != mesh_dims => {
                    return Err(InferError::DivDims {
                        dims: d,
                        mesh: mesh_dims,
                    })
                }
                _ => 1,
            }
        }
    };
    Ok(TreeNode {
        op: tree.op.clone(),
        children,
        dims,
        hash: tree.hash,
    })
}

pub fn classify(eq: &Equation) -> EquationKind {
    eq.kind
}
