use super::program::{KernelProgram, Opcode};

/// Per-point memory accesses and floating-point operations of a program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostModel {
    /// Number of single-axis stencil applications.
    pub ops: usize,
    pub acc: usize,
    /// Non-stencil memory accesses (field loads and stores).
    pub x: usize,
    /// Non-stencil floating-point operations.
    pub y: usize,
}

impl CostModel {
    pub fn stencil_mem(&self) -> usize {
        self.ops * (self.acc + 1)
    }

    pub fn stencil_flop(&self) -> usize {
        self.ops * (2 * (self.acc + 1) + 1)
    }

    pub fn mem_per_point(&self) -> usize {
        self.x + self.stencil_mem()
    }

    pub fn flop_per_point(&self) -> usize {
        self.y + self.stencil_flop()
    }

    /// Sum of two programs' costs (same accuracy).
    pub fn combine(self, other: CostModel) -> CostModel {
        CostModel {
            ops: self.ops + other.ops,
            acc: self.acc.max(other.acc),
            x: self.x + other.x,
            y: self.y + other.y,
        }
    }
}

/// Counts stencil applications and the remaining loads, stores and arithmetic.
///
/// DER counts one stencil per component, LAPLA one per axis and component,
/// GRAD and DIV one per axis.
pub fn cost_model(p: &KernelProgram, acc: usize) -> CostModel {
    let d = p.mesh_dims;
    let mut c = CostModel {
        acc,
        ..CostModel::default()
    };
    for op in &p.ops {
        match op.opcode {
            Opcode::Der { .. } => c.ops += op.dims,
            Opcode::Lapla => c.ops += d * op.dims,
            Opcode::Grad | Opcode::Div => c.ops += d,
            Opcode::Var { .. } => c.x += op.dims,
            Opcode::Store { .. } => c.x += op.dims,
            Opcode::EulerUpdate { .. } => {
                c.x += op.dims;
                c.y += 2 * op.dims;
            }
            Opcode::Add | Opcode::Sub | Opcode::Times => c.y += op.dims,
            Opcode::Const { .. } => {}
        }
    }
    c
}
