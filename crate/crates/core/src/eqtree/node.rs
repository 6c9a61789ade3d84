use std::fmt::{self, Write as _};

/// Spatial axis of a first-derivative vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        Axis::ALL.get(i).copied()
    }

    pub fn letter(self) -> char {
        ['x', 'y', 'z'][self.index()]
    }
}

/// Vertex operator of an equation tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Field(String),
    /// A constant; `name` is kept for printing, identity is the value.
    Const {
        name: Option<String>,
        value: f64,
    },
    Add,
    Sub,
    Times,
    /// First derivative along one axis.
    Derivative(Axis),
    Grad,
    Div,
    Lapla,
}

impl Op {
    pub fn arity(&self) -> usize {
        match self {
            Op::Field(_) | Op::Const { .. } => 0,
            Op::Derivative(_) | Op::Grad | Op::Div | Op::Lapla => 1,
            Op::Add | Op::Sub | Op::Times => 2,
        }
    }

    pub fn is_stencil(&self) -> bool {
        matches!(self, Op::Derivative(_) | Op::Grad | Op::Div | Op::Lapla)
    }

    fn tag(&self) -> u8 {
        match self {
            Op::Field(_) => 1,
            Op::Const { .. } => 2,
            Op::Add => 3,
            Op::Sub => 4,
            Op::Times => 5,
            Op::Derivative(_) => 6,
            Op::Grad => 7,
            Op::Div => 8,
            Op::Lapla => 9,
        }
    }

    pub fn mnemonic(&self) -> String {
        match self {
            Op::Field(name) => format!("var {name}"),
            Op::Const { name: Some(n), value } => format!("const {n}={value:?}"),
            Op::Const { name: None, value } => format!("const {value:?}"),
            Op::Add => "add".into(),
            Op::Sub => "sub".into(),
            Op::Times => "times".into(),
            Op::Derivative(a) => format!("der{}", a.letter()),
            Op::Grad => "grad".into(),
            Op::Div => "div".into(),
            Op::Lapla => "lapla".into(),
        }
    }
}

/// One vertex of an equation tree together with its children.
///
/// `dims` is the number of components of the vertex value; it is zero until
/// [`infer_dims`](super::infer_dims) has annotated the tree. `hash` is a
/// structural hash computed at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub op: Op,
    pub children: Vec<TreeNode>,
    pub dims: usize,
    pub hash: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv(mut h: u64, bytes: &[u8]) -> u64 {
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn structural_hash(op: &Op, children: &[TreeNode]) -> u64 {
    let mut h = fnv(FNV_OFFSET, &[op.tag()]);
    match op {
        Op::Field(name) => {
            h = fnv(h, name.as_bytes());
            h = fnv(h, &[0xff]);
        }
        Op::Const { value, .. } => h = fnv(h, &value.to_bits().to_le_bytes()),
        Op::Derivative(a) => h = fnv(h, &[a.index() as u8]),
        _ => {}
    }
    for c in children {
        h = fnv(h, &c.hash.to_le_bytes());
    }
    finalize(h)
}

impl TreeNode {
    pub fn new(op: Op, children: Vec<TreeNode>) -> TreeNode {
        debug_assert_eq!(op.arity(), children.len());
        let hash = structural_hash(&op, &children);
        TreeNode {
            op,
            children,
            dims: 0,
            hash,
        }
    }

    pub fn field(name: impl Into<String>) -> TreeNode {
        TreeNode::new(Op::Field(name.into()), vec![])
    }

    pub fn constant(value: f64) -> TreeNode {
        TreeNode::new(Op::Const { name: None, value }, vec![])
    }

    pub fn named_const(name: impl Into<String>, value: f64) -> TreeNode {
        TreeNode::new(
            Op::Const {
                name: Some(name.into()),
                value,
            },
            vec![],
        )
    }

    pub fn add(a: TreeNode, b: TreeNode) -> TreeNode {
        TreeNode::new(Op::Add, vec![a, b])
    }

    pub fn sub(a: TreeNode, b: TreeNode) -> TreeNode {
        TreeNode::new(Op::Sub, vec![a, b])
    }

    /// Product; two constant operands fold into one literal.
    pub fn times(a: TreeNode, b: TreeNode) -> TreeNode {
        if let (Some(x), Some(y)) = (a.const_value(), b.const_value()) {
            return TreeNode::constant(x * y);
        }
        TreeNode::new(Op::Times, vec![a, b])
    }

    pub fn neg(a: TreeNode) -> TreeNode {
        TreeNode::times(TreeNode::constant(-1.0), a)
    }

    pub fn der(axis: Axis, a: TreeNode) -> TreeNode {
        TreeNode::new(Op::Derivative(axis), vec![a])
    }

    pub fn grad(a: TreeNode) -> TreeNode {
        TreeNode::new(Op::Grad, vec![a])
    }

    pub fn div(a: TreeNode) -> TreeNode {
        TreeNode::new(Op::Div, vec![a])
    }

    pub fn lapla(a: TreeNode) -> TreeNode {
        TreeNode::new(Op::Lapla, vec![a])
    }

    pub fn const_value(&self) -> Option<f64> {
        match self.op {
            Op::Const { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn field_name(&self) -> Option<&str> {
        match &self.op {
            Op::Field(n) => Some(n),
            _ => None,
        }
    }

    /// Structural equality: same operators, same field names, bitwise equal
    /// constant values. Constant names are ignored.
    pub fn same_structure(&self, other: &TreeNode) -> bool {
        if self.hash != other.hash || self.children.len() != other.children.len() {
            return false;
        }
        let ops_eq = match (&self.op, &other.op) {
            (Op::Const { value: a, .. }, Op::Const { value: b, .. }) => a.to_bits() == b.to_bits(),
            (a, b) => a == b,
        };
        ops_eq
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.same_structure(b))
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(TreeNode::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(TreeNode::depth).max().unwrap_or(0)
    }

    /// Visits every vertex in post-order.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        for c in &self.children {
            c.visit(f);
        }
        f(self);
    }

    pub fn contains_stencil(&self) -> bool {
        self.op.is_stencil() || self.children.iter().any(TreeNode::contains_stencil)
    }

    /// Names of all fields referenced by the tree, in first-visit order.
    pub fn fields(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.visit(&mut |n| {
            if let Op::Field(name) = &n.op {
                if !out.iter().any(|o| o == name) {
                    out.push(name.clone());
                }
            }
        });
        out
    }

    /// Indented dump, one vertex per line: operator, dims and hash.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_into(&mut out, 0);
        out
    }

    fn dump_into(&self, out: &mut String, indent: usize) {
        let _ = writeln!(
            out,
            "{:width$}{} dims={} hash={:016x}",
            "",
            self.op.mnemonic(),
            self.dims,
            self.hash,
            width = indent * 2
        );
        for c in &self.children {
            c.dump_into(out, indent + 1);
        }
    }
}

/// Canonical infix form, fully parenthesised, readable back by the parser.
impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.op {
            Op::Field(name) => f.write_str(name),
            Op::Const { name: Some(n), .. } => f.write_str(n),
            Op::Const { name: None, value } => write!(f, "{value:?}"),
            Op::Add => write!(f, "({} + {})", self.children[0], self.children[1]),
            Op::Sub => write!(f, "({} - {})", self.children[0], self.children[1]),
            Op::Times => write!(f, "({} * {})", self.children[0], self.children[1]),
            Op::Derivative(a) => write!(f, "der{}({})", a.letter(), self.children[0]),
            Op::Grad => write!(f, "grad({})", self.children[0]),
            Op::Div => write!(f, "div({})", self.children[0]),
            Op::Lapla => write!(f, "lapla({})", self.children[0]),
        }
    }
}
