use crate::eqtree::Axis;
use crate::frontend::EquationKind;

/// Input of a kernel op: a register or an immediate constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Operand {
    Reg(usize),
    Imm(f64),
}

impl Operand {
    pub fn reg(self) -> Option<usize> {
        match self {
            Operand::Reg(r) => Some(r),
            Operand::Imm(_) => None,
        }
    }

    fn same(self, other: Operand) -> bool {
        match (self, other) {
            (Operand::Reg(a), Operand::Reg(b)) => a == b,
            (Operand::Imm(a), Operand::Imm(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

/// Opcodes; field operands are grid field indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Opcode {
    /// Loads a field at the current point.
    Var { field: usize },
    /// Fills a register with a constant.
    Const { value: f64 },
    Add,
    Sub,
    Times,
    /// Derivative of order 1 or 2 along one axis of the input's field.
    Der { axis: Axis, order: usize },
    Lapla,
    Grad,
    Div,
    /// `field_new = u + dt * rhs`; inputs are `[u, rhs]`.
    EulerUpdate { field: usize },
    /// `field_new = rhs`.
    Store { field: usize },
}

impl Opcode {
    pub fn name(&self) -> &'static str {
        match self {
            Opcode::Var { .. } => "VAR",
            Opcode::Const { .. } => "CONST",
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Times => "TIMES",
            Opcode::Der { .. } => "DER",
            Opcode::Lapla => "LAPLA",
            Opcode::Grad => "GRAD",
            Opcode::Div => "DIV",
            Opcode::EulerUpdate { .. } => "EULER_UPDATE",
            Opcode::Store { .. } => "STORE",
        }
    }

    pub fn is_stencil(&self) -> bool {
        matches!(
            self,
            Opcode::Der { .. } | Opcode::Lapla | Opcode::Grad | Opcode::Div
        )
    }

    fn same(&self, other: &Opcode) -> bool {
        match (self, other) {
            (Opcode::Const { value: a }, Opcode::Const { value: b }) => a.to_bits() == b.to_bits(),
            (a, b) => a == b,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelOp {
    pub opcode: Opcode,
    /// Stencil ops take the `VAR` register of the differentiated field.
    pub inputs: Vec<Operand>,
    pub out: Option<usize>,
    /// Components produced (or written, for the closing ops).
    pub dims: usize,
}

impl KernelOp {
    /// Same opcode, constants and inputs.
    pub fn same_computation(&self, other: &KernelOp) -> bool {
        self.opcode.same(&other.opcode)
            && self.inputs.len() == other.inputs.len()
            && self.inputs.iter().zip(&other.inputs).all(|(a, b)| a.same(*b))
    }
}

/// A fused, CSE'd per-point program for one equation group.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelProgram {
    pub group: EquationKind,
    pub ops: Vec<KernelOp>,
    /// Components of each register.
    pub regs: Vec<usize>,
    pub mesh_dims: usize,
    pub acc: usize,
    /// Field names indexed like the grid, for listings.
    pub field_names: Vec<String>,
}

impl KernelProgram {
    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn register_count(&self) -> usize {
        self.regs.len()
    }

    /// Bytes of temporaries needed per point.
    pub fn footprint_bytes(&self) -> usize {
        self.regs.iter().sum::<usize>() * 8
    }

    pub fn count(&self, name: &str) -> usize {
        self.ops.iter().filter(|o| o.opcode.name() == name).count()
    }

    /// Fields read by the program's `VAR` ops.
    pub fn fields_read(&self) -> Vec<usize> {
        self.ops
            .iter()
            .filter_map(|o| match o.opcode {
                Opcode::Var { field } => Some(field),
                _ => None,
            })
            .collect()
    }

    /// Fields written by the program's closing ops.
    pub fn fields_written(&self) -> Vec<usize> {
        self.ops
            .iter()
            .filter_map(|o| match o.opcode {
                Opcode::EulerUpdate { field } | Opcode::Store { field } => Some(field),
                _ => None,
            })
            .collect()
    }
}
