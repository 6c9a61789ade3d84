use std::collections::HashMap;

use thiserror::Error;

use super::cse::{cse, Dag};
use super::program::{KernelOp, KernelProgram, Opcode, Operand};
use crate::eqtree::{annotate_problem, Axis, InferError, Op};
use crate::frontend::{EquationKind, Problem};
use crate::numerics::{stencil_coeffs, StencilError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LowerError {
    #[error(transparent)]
    Infer(#[from] InferError),
    #[error(transparent)]
    Stencil(#[from] StencilError),
    #[error("equation for undeclared field `{0}`")]
    UnknownField(String),
    #[error("internal lowering error: {0}")]
    Internal(String),
}

struct Emitter<'a> {
    dag: &'a Dag,
    field_index: &'a HashMap<String, usize>,
    comps: &'a [usize],
    ops: Vec<KernelOp>,
    regs: Vec<usize>,
    memo: Vec<Option<Operand>>,
    vars: HashMap<usize, usize>,
}

impl Emitter<'_> {
    fn push(&mut self, opcode: Opcode, inputs: Vec<Operand>, dims: usize) -> usize {
        let r = self.regs.len();
        self.regs.push(dims);
        self.ops.push(KernelOp {
            opcode,
            inputs,
            out: Some(r),
            dims,
        });
        r
    }

    fn field(&self, name: &str) -> Result<usize, LowerError> {
        self.field_index
            .get(name)
            .copied()
            .ok_or_else(|| LowerError::UnknownField(name.to_string()))
    }

    fn var(&mut self, field: usize) -> usize {
        if let Some(&r) = self.vars.get(&field) {
            return r;
        }
        let r = self.push(Opcode::Var { field }, vec![], self.comps[field]);
        self.vars.insert(field, r);
        r
    }

    fn stencil_field(&self, node: usize) -> Result<usize, LowerError> {
        let child = &self.dag.nodes[self.dag.nodes[node].children[0]];
        match &child.op {
            Op::Field(f) => self.field(f),
            Op::Derivative(_) => match &self.dag.nodes[child.children[0]].op {
                Op::Field(f) => self.field(f),
                _ => Err(LowerError::Internal("nested stencil operand".into())),
            },
            _ => Err(LowerError::Internal("stencil operand is not a field".into())),
        }
    }

    fn emit(&mut self, id: usize) -> Result<Operand, LowerError> {
        if let Some(o) = self.memo[id] {
            return Ok(o);
        }
        let node = &self.dag.nodes[id];
        let dims = node.dims;
        let out = match &node.op {
            Op::Field(f) => {
                let f = self.field(f)?;
                Operand::Reg(self.var(f))
            }
            Op::Const { value, .. } => Operand::Imm(*value),
            Op::Add | Op::Sub | Op::Times => {
                let (a, b) = (node.children[0], node.children[1]);
                let opcode = match node.op {
                    Op::Add => Opcode::Add,
                    Op::Sub => Opcode::Sub,
                    _ => Opcode::Times,
                };
                let a = self.emit(a)?;
                let b = self.emit(b)?;
                Operand::Reg(self.push(opcode, vec![a, b], dims))
            }
            Op::Derivative(axis) => {
                let axis: Axis = *axis;
                let inner = &self.dag.nodes[node.children[0]];
                let order = if matches!(inner.op, Op::Derivative(_)) { 2 } else { 1 };
                let f = self.stencil_field(id)?;
                let v = self.var(f);
                Operand::Reg(self.push(Opcode::Der { axis, order }, vec![Operand::Reg(v)], dims))
            }
            Op::Lapla | Op::Grad | Op::Div => {
                let opcode = match node.op {
                    Op::Lapla => Opcode::Lapla,
                    Op::Grad => Opcode::Grad,
                    _ => Opcode::Div,
                };
                let f = self.stencil_field(id)?;
                let v = self.var(f);
                Operand::Reg(self.push(opcode, vec![Operand::Reg(v)], dims))
            }
        };
        self.memo[id] = Some(out);
        Ok(out)
    }
}

fn lower_group(
    problem: &Problem,
    group: EquationKind,
    trees: &[crate::eqtree::TreeNode],
    field_index: &HashMap<String, usize>,
    comps: &[usize],
) -> Result<KernelProgram, LowerError> {
    let eqs: Vec<usize> = (0..problem.equations.len())
        .filter(|&i| problem.equations[i].kind == group)
        .collect();
    let group_trees: Vec<_> = eqs.iter().map(|&i| trees[i].clone()).collect();
    let dag = cse(&group_trees);
    let mut em = Emitter {
        dag: &dag,
        field_index,
        comps,
        ops: vec![],
        regs: vec![],
        memo: vec![None; dag.nodes.len()],
        vars: HashMap::new(),
    };
    for (k, &i) in eqs.iter().enumerate() {
        let eq = &problem.equations[i];
        let lhs = em.field(&eq.lhs)?;
        let mut rhs = em.emit(dag.roots[k])?;
        if let Operand::Imm(value) = rhs {
            rhs = Operand::Reg(em.push(Opcode::Const { value }, vec![], 1));
        }
        let dims = comps[lhs];
        let (opcode, inputs) = match group {
            EquationKind::TimeDerivative => {
                let u = em.var(lhs);
                (Opcode::EulerUpdate { field: lhs }, vec![Operand::Reg(u), rhs])
            }
            EquationKind::Algebraic => (Opcode::Store { field: lhs }, vec![rhs]),
        };
        em.ops.push(KernelOp {
            opcode,
            inputs,
            out: None,
            dims,
        });
    }
    let program = KernelProgram {
        group,
        ops: em.ops,
        regs: em.regs,
        mesh_dims: problem.mesh.dims,
        acc: problem.numerics.acc,
        field_names: problem.fields.iter().map(|f| f.name.clone()).collect(),
    };
    check_program(&program)?;
    Ok(program)
}

/// Single assignment, reads after writes, and register count within op count.
fn check_program(p: &KernelProgram) -> Result<(), LowerError> {
    let mut written = vec![false; p.regs.len()];
    for op in &p.ops {
        for r in op.inputs.iter().filter_map(|o| o.reg()) {
            if !written.get(r).copied().unwrap_or(false) {
                return Err(LowerError::Internal(format!("register r{r} read before write")));
            }
        }
        if let Some(r) = op.out {
            if r >= written.len() || written[r] {
                return Err(LowerError::Internal(format!("register r{r} written twice")));
            }
            written[r] = true;
        }
    }
    if p.regs.len() > p.ops.len() {
        return Err(LowerError::Internal("more registers than ops".into()));
    }
    Ok(())
}

/// Lowers the equations into the time-derivative and algebraic programs.
pub fn lower(problem: &Problem) -> Result<(KernelProgram, KernelProgram), LowerError> {
    let trees = annotate_problem(problem)?;
    let field_index: HashMap<String, usize> = problem
        .fields
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.clone(), i))
        .collect();
    let comps: Vec<usize> = problem.fields.iter().map(|f| f.components()).collect();
    let time = lower_group(
        problem,
        EquationKind::TimeDerivative,
        &trees,
        &field_index,
        &comps,
    )?;
    let alg = lower_group(problem, EquationKind::Algebraic, &trees, &field_index, &comps)?;
    Ok((time, alg))
}

/// Everything an executor needs: both programs and the bound stencil weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Compiled {
    pub time: KernelProgram,
    pub alg: KernelProgram,
    /// `weights[order - 1][axis]`, already divided by `h^order`.
    pub weights: [Vec<Vec<f64>>; 2],
    pub comps: Vec<usize>,
    pub dims: usize,
    pub acc: usize,
    pub dt: f64,
}

impl Compiled {
    pub fn radius(&self) -> usize {
        self.acc / 2
    }

    /// Largest register-file size of the two programs, in components.
    pub fn register_components(&self) -> usize {
        self.time
            .regs
            .iter()
            .sum::<usize>()
            .max(self.alg.regs.iter().sum::<usize>())
    }
}

pub fn compile(problem: &Problem) -> Result<Compiled, LowerError> {
    let (time, alg) = lower(problem)?;
    let mut weights = [Vec::new(), Vec::new()];
    for (o, w) in weights.iter_mut().enumerate() {
        for a in 0..problem.mesh.dims {
            w.push(stencil_coeffs(o + 1, problem.numerics.acc, problem.mesh.spacing(a))?.weights);
        }
    }
    Ok(Compiled {
        time,
        alg,
        weights,
        comps: problem.fields.iter().map(|f| f.components()).collect(),
        dims: problem.mesh.dims,
        acc: problem.numerics.acc,
        dt: problem.time.dt,
    })
}
