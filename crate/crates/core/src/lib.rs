//! Compiler and parallel runtime for explicit finite-difference PDE problems.
//!
//! A problem is described in a small line-oriented language (see
//! [`frontend`]), turned into annotated equation trees ([`eqtree`]), lowered
//! into fused kernel programs with shared partial results ([`lowering`]) and
//! executed over a padded, aligned and blocked grid ([`grid`]) either
//! sequentially, with fork-join lanes or as a task graph ([`exec`]), optionally
//! split across ranks that exchange halos over a message transport ([`dist`]).

pub mod analytic;
pub mod dist;
pub mod eqtree;
pub mod exec;
pub mod frontend;
pub mod grid;
pub mod lowering;
pub mod numerics;
pub mod snapshot;

pub use eqtree::{Axis, Op, TreeNode};
pub use frontend::{parse_problem, validate_problem, Problem};
pub use snapshot::{FieldSnapshot, Snapshot};

/// Cartesian faces of the mesh, ordered as `xmin, xmax, ymin, ymax, zmin, zmax`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::XMin,
        Face::XMax,
        Face::YMin,
        Face::YMax,
        Face::ZMin,
        Face::ZMax,
    ];

    pub fn axis(self) -> usize {
        self.index() / 2
    }

    /// True for the upper face of an axis.
    pub fn is_max(self) -> bool {
        self.index() % 2 == 1
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Face> {
        Face::ALL.get(i).copied()
    }

    pub fn new(axis: usize, max: bool) -> Face {
        Face::ALL[axis * 2 + usize::from(max)]
    }

    pub fn opposite(self) -> Face {
        Face::new(self.axis(), !self.is_max())
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::XMin => "xmin",
            Face::XMax => "xmax",
            Face::YMin => "ymin",
            Face::YMax => "ymax",
            Face::ZMin => "zmin",
            Face::ZMax => "zmax",
        }
    }

    pub fn parse(s: &str) -> Option<Face> {
        Face::ALL.iter().copied().find(|f| f.name() == s)
    }
}

impl std::fmt::Display for Face {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
