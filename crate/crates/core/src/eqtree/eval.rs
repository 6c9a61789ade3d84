use thiserror::Error;

use super::{annotate_problem, derivative_shape, InferError, Op, TreeNode};
use crate::frontend::{EquationKind, Problem};
use crate::grid::GridStore;
use crate::numerics::{apply_stencil, stencil_coeffs, var, StencilError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("point {0:?} is outside the valid stencil range")]
    OutOfRange([isize; 3]),
    #[error(transparent)]
    Infer(#[from] InferError),
    #[error(transparent)]
    Stencil(#[from] StencilError),
    #[error("grid does not hold field `{0}`")]
    MissingField(String),
}

/// Recursive per-point evaluator over the annotated equation trees.
///
/// Every operator is computed in the same order as the lowered programs, so
/// results agree bitwise.
#[derive(Clone, Debug)]
pub struct TreeEvaluator {
    pub trees: Vec<TreeNode>,
    pub kinds: Vec<EquationKind>,
    /// Grid field index of each equation's left-hand side.
    pub lhs: Vec<usize>,
    field_index: Vec<(String, usize)>,
    /// `weights[order - 1][axis]`.
    weights: [Vec<Vec<f64>>; 2],
    radius: usize,
    dims: usize,
}

impl TreeEvaluator {
    pub fn new(problem: &Problem, store: &GridStore) -> Result<TreeEvaluator, EvalError> {
        let trees = annotate_problem(problem)?;
        let mut field_index = Vec::new();
        for f in &problem.fields {
            let idx = store
                .field_index(&f.name)
                .ok_or_else(|| EvalError::MissingField(f.name.clone()))?;
            field_index.push((f.name.clone(), idx));
        }
        let lookup = |name: &str| {
            field_index
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, i)| *i)
                .ok_or_else(|| EvalError::MissingField(name.to_string()))
        };
        let lhs = problem
            .equations
            .iter()
            .map(|e| lookup(&e.lhs))
            .collect::<Result<Vec<_>, _>>()?;
        let acc = problem.numerics.acc;
        let dims = problem.mesh.dims;
        let mut weights = [Vec::new(), Vec::new()];
        for (o, w) in weights.iter_mut().enumerate() {
            for a in 0..dims {
                w.push(stencil_coeffs(o + 1, acc, problem.mesh.spacing(a))?.weights);
            }
        }
        Ok(TreeEvaluator {
            trees,
            kinds: problem.equations.iter().map(|e| e.kind).collect(),
            lhs,
            field_index,
            weights,
            radius: acc / 2,
            dims,
        })
    }

    fn field(&self, name: &str) -> usize {
        self.field_index
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, i)| *i)
            .expect("fields resolved at construction")
    }

    fn check_point(&self, store: &GridStore, p: [isize; 3]) -> Result<usize, EvalError> {
        let l = &store.layout;
        let idx = l.try_index(p).ok_or(EvalError::OutOfRange(p))?;
        for a in 0..self.dims {
            for d in [-(self.radius as isize), self.radius as isize] {
                let mut q = p;
                q[a] += d;
                l.try_index(q).ok_or(EvalError::OutOfRange(p))?;
            }
        }
        Ok(idx)
    }

    /// Right-hand side of equation `eq` at `point`, reading buffer `which`.
    pub fn eval_equation(
        &self,
        store: &GridStore,
        which: usize,
        eq: usize,
        point: [isize; 3],
    ) -> Result<Vec<f64>, EvalError> {
        let idx = self.check_point(store, point)?;
        Ok(self.eval_node(&self.trees[eq], store, which, idx))
    }

    /// Right-hand side at a point already known to be valid.
    pub fn eval_unchecked(&self, store: &GridStore, which: usize, eq: usize, idx: usize) -> Vec<f64> {
        self.eval_node(&self.trees[eq], store, which, idx)
    }

    fn stencil(&self, store: &GridStore, which: usize, f: usize, idx: usize, axis: usize, order: usize, comp: usize) -> f64 {
        let buf = store.buffer(f, which);
        apply_stencil(
            buf,
            idx,
            store.layout.stride(axis),
            store.fields[f].comps,
            comp,
            &self.weights[order - 1][axis],
        )
    }

    fn eval_node(&self, node: &TreeNode, store: &GridStore, which: usize, idx: usize) -> Vec<f64> {
        match &node.op {
            Op::Field(name) => {
                let f = self.field(name);
                var(store.buffer(f, which), idx, store.fields[f].comps).to_vec()
            }
            Op::Const { value, .. } => vec![*value],
            Op::Add | Op::Sub | Op::Times => {
                let a = self.eval_node(&node.children[0], store, which, idx);
                let b = self.eval_node(&node.children[1], store, which, idx);
                let n = node.dims;
                (0..n)
                    .map(|c| {
                        let x = a[if a.len() == 1 { 0 } else { c }];
                        let y = b[if b.len() == 1 { 0 } else { c }];
                        match node.op {
                            Op::Add => x + y,
                            Op::Sub => x - y,
                            _ => x * y,
                        }
                    })
                    .collect()
            }
            Op::Derivative(_) => {
                let (axis, order, name) = derivative_shape(node).expect("validated by inference");
                let f = self.field(name);
                (0..node.dims)
                    .map(|c| self.stencil(store, which, f, idx, axis.index(), order, c))
                    .collect()
            }
            Op::Lapla => {
                let f = self.field(node.children[0].field_name().expect("validated"));
                (0..node.dims)
                    .map(|c| {
                        let mut s = self.stencil(store, which, f, idx, 0, 2, c);
                        for a in 1..self.dims {
                            s += self.stencil(store, which, f, idx, a, 2, c);
                        }
                        s
                    })
                    .collect()
            }
            Op::Grad => {
                let f = self.field(node.children[0].field_name().expect("validated"));
                (0..self.dims)
                    .map(|a| self.stencil(store, which, f, idx, a, 1, 0))
                    .collect()
            }
            Op::Div => {
                let f = self.field(node.children[0].field_name().expect("validated"));
                let mut s = self.stencil(store, which, f, idx, 0, 1, 0);
                for a in 1..self.dims {
                    s += self.stencil(store, which, f, idx, a, 1, a);
                }
                vec![s]
            }
        }
    }
}

/// Right-hand sides of every equation at `point`, reading buffer `which`.
pub fn tree_eval_reference(
    problem: &Problem,
    store: &GridStore,
    which: usize,
    point: [isize; 3],
) -> Result<Vec<Vec<f64>>, EvalError> {
    let ev = TreeEvaluator::new(problem, store)?;
    (0..ev.trees.len())
        .map(|e| ev.eval_equation(store, which, e, point))
        .collect()
}
