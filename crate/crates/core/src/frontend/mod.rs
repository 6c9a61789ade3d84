//! Problem model, the textual specification language and its validator.
//!
//! ```text
//! mesh 1d nx=256 lx=1.0
//! field T scalar
//! const D = 0.1
//! eq dt(T) = D * lapla(T)
//! init T = sin(2 * pi * x)
//! bc T periodic on all
//! time dt=5e-5 steps=1000
//! numerics acc=2
//! ```

mod init;
mod parser;
mod printer;
mod validate;

pub use init::{InitBinOp, InitExpr, InitFn};
pub use parser::{parse_problem, ParseError};
pub use printer::print_problem;
pub use validate::{validate_problem, Diagnostic, Severity, ValidationReport};

use crate::eqtree::TreeNode;
use crate::Face;

#[derive(Clone, Debug, PartialEq)]
pub struct MeshSpec {
    pub dims: usize,
    /// Points per axis; unused axes hold 1.
    pub points: [usize; 3],
    /// Physical lengths; unused axes hold 1.0.
    pub lengths: [f64; 3],
}

impl MeshSpec {
    pub fn new(points: &[usize], lengths: &[f64]) -> MeshSpec {
        let mut p = [1; 3];
        let mut l = [1.0; 3];
        p[..points.len()].copy_from_slice(points);
        l[..lengths.len()].copy_from_slice(lengths);
        MeshSpec {
            dims: points.len(),
            points: p,
            lengths: l,
        }
    }

    /// Grid spacing `L / n`; point `i` sits at `i * h`.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.points[axis] as f64
    }

    pub fn interior_points(&self) -> usize {
        self.points.iter().product()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Vector(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub kind: FieldKind,
}

impl FieldDecl {
    pub fn components(&self) -> usize {
        match self.kind {
            FieldKind::Scalar => 1,
            FieldKind::Vector(k) => k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EquationKind {
    TimeDerivative,
    Algebraic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub kind: EquationKind,
    pub lhs: String,
    pub rhs: TreeNode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitSpec {
    pub field: String,
    /// Either one expression applied to every component or one per component.
    pub exprs: Vec<InitExpr>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BcRule {
    Dirichlet(f64),
    /// Zero gradient, realised as a mirror copy of the interior.
    Neumann,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceSel {
    All,
    One(Face),
}

impl FaceSel {
    pub fn covers(self, face: Face) -> bool {
        match self {
            FaceSel::All => true,
            FaceSel::One(f) => f == face,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcSpec {
    pub field: String,
    pub rule: BcRule,
    pub faces: FaceSel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSpec {
    pub dt: f64,
    pub steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Numerics {
    pub acc: usize,
}

/// A parsed simulation description. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub mesh: MeshSpec,
    pub fields: Vec<FieldDecl>,
    pub constants: Vec<(String, f64)>,
    pub equations: Vec<Equation>,
    pub inits: Vec<InitSpec>,
    pub bcs: Vec<BcSpec>,
    pub time: TimeSpec,
    pub numerics: Numerics,
}

impl Problem {
    pub fn builder(mesh: MeshSpec) -> ProblemBuilder {
        ProblemBuilder::new(mesh)
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    /// Halo radius of the stencils.
    pub fn radius(&self) -> usize {
        self.numerics.acc / 2
    }

    /// Boundary rule of `field` on `face`. Later declarations override
    /// earlier ones; faces without a declaration are periodic.
    pub fn bc(&self, field: &str, face: Face) -> BcRule {
        self.bcs
            .iter()
            .rev()
            .find(|b| b.field == field && b.faces.covers(face))
            .map(|b| b.rule)
            .unwrap_or(BcRule::Periodic)
    }

    pub fn is_periodic(&self, field: &str, axis: usize) -> bool {
        self.bc(field, Face::new(axis, false)) == BcRule::Periodic
    }

    /// True when every field is periodic along `axis`.
    pub fn axis_periodic(&self, axis: usize) -> bool {
        self.fields.iter().all(|f| self.is_periodic(&f.name, axis))
    }

    pub fn init(&self, field: &str) -> Option<&InitSpec> {
        self.inits.iter().rev().find(|i| i.field == field)
    }

    pub fn equation_for(&self, field: &str) -> Option<&Equation> {
        self.equations.iter().find(|e| e.lhs == field)
    }
}

/// Programmatic construction of a [`Problem`]. No checks are made here; run
/// [`validate_problem`] on the result.
#[derive(Clone, Debug)]
pub struct ProblemBuilder {
    problem: Problem,
}

impl ProblemBuilder {
    pub fn new(mesh: MeshSpec) -> ProblemBuilder {
        ProblemBuilder {
            problem: Problem {
                mesh,
                fields: vec![],
                constants: vec![],
                equations: vec![],
                inits: vec![],
                bcs: vec![],
                time: TimeSpec { dt: 1e-3, steps: 1 },
                numerics: Numerics { acc: 2 },
            },
        }
    }

    pub fn scalar(mut self, name: &str) -> Self {
        self.problem.fields.push(FieldDecl {
            name: name.into(),
            kind: FieldKind::Scalar,
        });
        self
    }

    pub fn vector(mut self, name: &str, components: usize) -> Self {
        self.problem.fields.push(FieldDecl {
            name: name.into(),
            kind: FieldKind::Vector(components),
        });
        self
    }

    pub fn constant(mut self, name: &str, value: f64) -> Self {
        self.problem.constants.push((name.into(), value));
        self
    }

    pub fn time_eq(mut self, field: &str, rhs: TreeNode) -> Self {
        self.problem.equations.push(Equation {
            kind: EquationKind::TimeDerivative,
            lhs: field.into(),
            rhs,
        });
        self
    }

    pub fn algebraic_eq(mut self, field: &str, rhs: TreeNode) -> Self {
        self.problem.equations.push(Equation {
            kind: EquationKind::Algebraic,
            lhs: field.into(),
            rhs,
        });
        self
    }

    pub fn init(mut self, field: &str, exprs: Vec<InitExpr>) -> Self {
        self.problem.inits.push(InitSpec {
            field: field.into(),
            exprs,
        });
        self
    }

    pub fn bc(mut self, field: &str, rule: BcRule, faces: FaceSel) -> Self {
        self.problem.bcs.push(BcSpec {
            field: field.into(),
            rule,
            faces,
        });
        self
    }

    pub fn time(mut self, dt: f64, steps: usize) -> Self {
        self.problem.time = TimeSpec { dt, steps };
        self
    }

    pub fn acc(mut self, acc: usize) -> Self {
        self.problem.numerics.acc = acc;
        self
    }

    pub fn build(self) -> Problem {
        self.problem
    }
}
