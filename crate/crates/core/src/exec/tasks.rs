use super::trace::TaskKind;
use crate::grid::BlockingPlan;

/// Sentinel arrays: one token cell per block plus a border cell on each side
/// of every axis. Block `(xb, yb, zb)` maps to cell `(xb+1, yb+1, zb+1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskDeps {
    pub nbl: [usize; 3],
    pub extent: [usize; 3],
    pub rep_src: Vec<u8>,
    pub rep_dst: Vec<u8>,
}

impl TaskDeps {
    pub fn new(nbl: [usize; 3]) -> TaskDeps {
        let extent = nbl.map(|n| n + 2);
        let cells = extent.iter().product();
        TaskDeps {
            nbl,
            extent,
            rep_src: vec![0; cells],
            rep_dst: vec![0; cells],
        }
    }

    pub fn cell(&self, block: [usize; 3]) -> [usize; 3] {
        block.map(|b| b + 1)
    }

    pub fn cell_index(&self, cell: [usize; 3]) -> usize {
        (cell[2] * self.extent[1] + cell[1]) * self.extent[0] + cell[0]
    }
}

/// Face neighbours of a block; `wrap[a]` adds the wrap-around neighbour on
/// axes that are periodic inside this grid. The block itself is excluded.
pub fn face_neighbors(nbl: [usize; 3], wrap: [bool; 3], id: [usize; 3]) -> Vec<[usize; 3]> {
    let mut out: Vec<[usize; 3]> = Vec::new();
    for a in 0..3 {
        if nbl[a] < 2 {
            continue;
        }
        for up in [false, true] {
            let mut n = id;
            if up {
                if id[a] + 1 < nbl[a] {
                    n[a] += 1;
                } else if wrap[a] {
                    n[a] = 0;
                } else {
                    continue;
                }
            } else if id[a] > 0 {
                n[a] -= 1;
            } else if wrap[a] {
                n[a] = nbl[a] - 1;
            } else {
                continue;
            }
            if n != id && !out.contains(&n) {
                out.push(n);
            }
        }
    }
    out
}

/// Blocks whose interior a boundary refresh of `id` copies from, besides
/// itself: the opposite end of each locally periodic axis it touches.
pub fn wrap_sources(nbl: [usize; 3], wrap: [bool; 3], id: [usize; 3]) -> Vec<[usize; 3]> {
    let mut out: Vec<[usize; 3]> = Vec::new();
    for a in 0..3 {
        if !wrap[a] || nbl[a] < 2 {
            continue;
        }
        for (at_edge, other) in [(id[a] == 0, nbl[a] - 1), (id[a] + 1 == nbl[a], 0)] {
            if at_edge {
                let mut n = id;
                n[a] = other;
                if n != id && !out.contains(&n) {
                    out.push(n);
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TaskKey {
    pub kind: TaskKind,
    pub block: [usize; 3],
    pub step: usize,
}

/// Static description of one task of the block graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskRecord {
    pub kind: TaskKind,
    pub block: [usize; 3],
    pub step: usize,
    /// Tasks that must complete first.
    pub deps: Vec<TaskKey>,
    /// Sentinel cells read (in the array of the dependency's step parity).
    pub cells_in: Vec<[usize; 3]>,
    pub cell_out: [usize; 3],
}

impl TaskRecord {
    pub fn in_count(&self) -> usize {
        self.deps.len()
    }
}

/// A-tasks and B-tasks for `niter` steps, step by step.
///
/// `A(b,t)` waits for `B(n,t-1)` on `b` and its face neighbours; `B(b,t)`
/// waits for `A(b,t)` and for the A-tasks of the blocks its periodic ghosts
/// copy from.
pub fn build_task_graph(plan: &BlockingPlan, wrap: [bool; 3], niter: usize) -> Vec<TaskRecord> {
    let deps = TaskDeps::new(plan.nbl);
    let mut out = Vec::with_capacity(2 * plan.count() * niter);
    for t in 0..niter {
        for id in plan.blocks() {
            let mut d = Vec::new();
            if t > 0 {
                d.push(TaskKey {
                    kind: TaskKind::B,
                    block: id,
                    step: t - 1,
                });
                for n in face_neighbors(plan.nbl, wrap, id) {
                    d.push(TaskKey {
                        kind: TaskKind::B,
                        block: n,
                        step: t - 1,
                    });
                }
            }
            out.push(TaskRecord {
                kind: TaskKind::A,
                block: id,
                step: t,
                cells_in: d.iter().map(|k| deps.cell(k.block)).collect(),
                deps: d,
                cell_out: deps.cell(id),
            });
        }
        for id in plan.blocks() {
            let mut d = vec![TaskKey {
                kind: TaskKind::A,
                block: id,
                step: t,
            }];
            for n in wrap_sources(plan.nbl, wrap, id) {
                d.push(TaskKey {
                    kind: TaskKind::A,
                    block: n,
                    step: t,
                });
            }
            out.push(TaskRecord {
                kind: TaskKind::B,
                block: id,
                step: t,
                cells_in: d.iter().map(|k| deps.cell(k.block)).collect(),
                deps: d,
                cell_out: deps.cell(id),
            });
        }
    }
    out
}

/// Node of an executable task graph.
#[derive(Clone, Debug)]
pub struct TaskNode {
    pub kind: TaskKind,
    pub block: [usize; 3],
    pub step: usize,
    pub group: usize,
    pub preds: u32,
    pub succ: Vec<u32>,
}

#[derive(Clone, Debug, Default)]
pub struct Graph {
    pub nodes: Vec<TaskNode>,
}

impl Graph {
    pub fn add(&mut self, kind: TaskKind, block: [usize; 3], step: usize, group: usize) -> u32 {
        self.nodes.push(TaskNode {
            kind,
            block,
            step,
            group,
            preds: 0,
            succ: Vec::new(),
        });
        (self.nodes.len() - 1) as u32
    }

    pub fn edge(&mut self, from: u32, to: u32) {
        if !self.nodes[from as usize].succ.contains(&to) {
            self.nodes[from as usize].succ.push(to);
            self.nodes[to as usize].preds += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn count(&self, kind: TaskKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }
}

/// Executable form of [`build_task_graph`]; returns the graph and the node
/// ids of `A(b,t)` / `B(b,t)` as `t * 2 * blocks + {0, blocks} + b`.
pub fn block_graph(plan: &BlockingPlan, wrap: [bool; 3], niter: usize) -> Graph {
    let nb = plan.count();
    let mut g = Graph::default();
    for t in 0..niter {
        for id in plan.blocks() {
            g.add(TaskKind::A, id, t, 0);
        }
        for id in plan.blocks() {
            g.add(TaskKind::B, id, t, 0);
        }
    }
    let a = |b: usize, t: usize| (t * 2 * nb + b) as u32;
    let bt = |b: usize, t: usize| (t * 2 * nb + nb + b) as u32;
    for t in 0..niter {
        for id in plan.blocks() {
            let b = plan.linear(id);
            if t > 0 {
                g.edge(bt(b, t - 1), a(b, t));
                for n in face_neighbors(plan.nbl, wrap, id) {
                    g.edge(bt(plan.linear(n), t - 1), a(b, t));
                }
            }
            g.edge(a(b, t), bt(b, t));
            for n in wrap_sources(plan.nbl, wrap, id) {
                g.edge(a(plan.linear(n), t), bt(b, t));
            }
        }
    }
    g
}

/// Node id of `A(b,t)` in a [`block_graph`].
pub fn a_node(plan: &BlockingPlan, block: usize, step: usize) -> u32 {
    (step * 2 * plan.count() + block) as u32
}

/// Node id of `B(b,t)` in a [`block_graph`].
pub fn b_node(plan: &BlockingPlan, block: usize, step: usize) -> u32 {
    (step * 2 * plan.count() + plan.count() + block) as u32
}
