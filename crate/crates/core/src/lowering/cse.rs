use std::collections::HashMap;

use crate::eqtree::{Op, TreeNode};

/// One vertex of the shared expression graph.
#[derive(Clone, Debug, PartialEq)]
pub struct DagNode {
    pub op: Op,
    pub children: Vec<usize>,
    pub dims: usize,
}

/// Expression graph in which structurally equal subtrees are a single node.
/// Nodes are stored in creation order, so children precede their parents.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dag {
    pub nodes: Vec<DagNode>,
    pub roots: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    Field(String),
    Const(u64),
    Node(String, Vec<usize>),
}

fn key(op: &Op, children: &[usize]) -> Key {
    match op {
        Op::Field(f) => Key::Field(f.clone()),
        Op::Const { value, .. } => Key::Const(value.to_bits()),
        other => Key::Node(other.mnemonic(), children.to_vec()),
    }
}

struct Builder {
    dag: Dag,
    index: HashMap<Key, usize>,
}

impl Builder {
    fn insert(&mut self, t: &TreeNode) -> usize {
        let children: Vec<usize> = t.children.iter().map(|c| self.insert(c)).collect();
        let k = key(&t.op, &children);
        if let Some(&id) = self.index.get(&k) {
            return id;
        }
        let id = self.dag.nodes.len();
        self.dag.nodes.push(DagNode {
            op: t.op.clone(),
            children,
            dims: t.dims,
        });
        self.index.insert(k, id);
        id
    }
}

/// Merges annotated trees into one graph, sharing every repeated subtree.
pub fn cse(trees: &[TreeNode]) -> Dag {
    let mut b = Builder {
        dag: Dag::default(),
        index: HashMap::new(),
    };
    for t in trees {
        let r = b.insert(t);
        b.dag.roots.push(r);
    }
    b.dag
}

impl Dag {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}
