//! Assertion helpers shared by the unit tests and the acceptance target.

use std::collections::HashMap;

use fdflow::eqtree::{tree_eval_reference, TreeEvaluator};
use fdflow::exec::{build_task_graph, ExecConfig, RunOptions, Simulation, TaskKind, TraceRecord};
use fdflow::frontend::EquationKind;
use fdflow::grid::{create_grid, derive_blocking_extents, max_blocks, BlockingPlan};
use fdflow::numerics::euler_update;
use fdflow::parse_problem;

/// Runs one compiled step of `src` and compares every interior value with a
/// per-point tree walk followed by the explicit update, bit for bit.
pub fn compiled_step_matches_tree_walk(src: &str) {
    let p = parse_problem(src).unwrap();
    let mut sim = Simulation::new(&p, ExecConfig::default()).unwrap();
    let before = sim.store.clone();
    let ev = TreeEvaluator::new(&p, &before).unwrap();
    sim.run_sequential(1, RunOptions::default()).unwrap();
    let n = sim.store.layout.n;
    let dt = p.time.dt;
    for (e, kind) in ev.kinds.iter().enumerate() {
        let f = ev.lhs[e];
        let comps = before.fields[f].comps;
        let got = sim.store.interior(f, 1);
        let old = before.interior(f, 0);
        let mut at = 0;
        for k in 0..n[2] as isize {
            for j in 0..n[1] as isize {
                for i in 0..n[0] as isize {
                    let expected: Vec<f64> = match kind {
                        EquationKind::TimeDerivative => {
                            let rhs = ev.eval_equation(&before, 0, e, [i, j, k]).unwrap();
                            (0..comps)
                                .map(|c| euler_update(old[at + c], dt, rhs[c]))
                                .collect()
                        }
                        EquationKind::Algebraic => ev.eval_equation(&sim.store, 1, e, [i, j, k]).unwrap(),
                    };
                    for c in 0..comps {
                        assert_eq!(
                            got[at + c].to_bits(),
                            expected[c].to_bits(),
                            "eq {e} at {i},{j},{k} comp {c}: {} vs {}\n{src}",
                            got[at + c],
                            expected[c]
                        );
                    }
                    at += comps;
                }
            }
        }
    }
}

type Key = (TaskKind, [usize; 3], usize);

/// Checks a task-mode trace: every task ran once, after all its
/// dependencies, and within the look-ahead window.
pub fn audit_trace(plan: &BlockingPlan, wrap: [bool; 3], steps: usize, window: usize, trace: &[TraceRecord]) {
    let recs = build_task_graph(plan, wrap, steps);
    assert_eq!(trace.len(), recs.len());
    let mut by_key: HashMap<Key, &TraceRecord> = HashMap::new();
    for t in trace {
        assert!(t.start_seq < t.end_seq && t.start_ns <= t.end_ns);
        assert!(by_key.insert((t.kind, t.block, t.step), t).is_none(), "task ran twice");
    }
    for r in &recs {
        let me = by_key[&(r.kind, r.block, r.step)];
        for d in &r.deps {
            let dep = by_key[&(d.kind, d.block, d.step)];
            assert!(dep.end_seq < me.start_seq, "{r:?} started before {d:?} finished");
        }
        let oldest_open = trace
            .iter()
            .filter(|t| t.end_seq > me.start_seq)
            .map(|t| t.step)
            .min()
            .unwrap();
        assert!(me.step < oldest_open + window, "{me:?} ran ahead of step {oldest_open}");
    }
}

/// Checks a derived plan against the constraints and returns whether they
/// were satisfiable; satisfiability is decided by the finest admissible cut.
pub fn check_plan(dims: usize, n: [usize; 3], r: usize, px: usize, l3: usize, threads: usize, bpp: usize) -> bool {
    let plan = derive_blocking_extents(dims, n, r, px, l3, threads, bpp);
    let my = if dims > 1 { max_blocks(n[1], r) } else { 1 };
    let mz = if dims > 2 { max_blocks(n[2], r) } else { 1 };
    let finest_ws = bpp * px * n[1].div_ceil(my) * n[2].div_ceil(mz);
    let satisfiable = (threads == 1 || my * mz >= threads) && threads * finest_ws <= l3;
    assert_eq!(plan.nbl[0], 1);
    assert!(plan.nbl[1] <= my && plan.nbl[2] <= mz);
    let mut covered = 0;
    for id in plan.blocks() {
        let rg = plan.ranges(id);
        covered += rg.iter().map(|r| r.len()).product::<usize>();
        for a in 1..dims {
            if plan.nbl[a] > 1 {
                assert!(rg[a].len() >= r, "block thinner than the radius");
            }
        }
    }
    assert_eq!(covered, n.iter().product::<usize>(), "blocks do not tile the mesh");
    if dims == 1 {
        assert_eq!(plan.count(), 1);
        return true;
    }
    if satisfiable {
        assert!(!plan.fallback, "{n:?} r={r} threads={threads} l3={l3}");
        assert!(threads == 1 || plan.count() >= threads);
        assert!(threads * plan.working_set <= l3);
    } else {
        assert!(plan.fallback);
        assert_eq!(plan.nbl, [1, my, mz]);
    }
    satisfiable
}

/// Largest error of a periodic sine's first or second derivative on `n`
/// points, evaluated by the tree walker.
pub fn max_derivative_error(order: usize, acc: usize, n: usize) -> f64 {
    let op = if order == 1 { "derx(u)" } else { "derx(derx(u))" };
    let p = parse_problem(&format!(
        "mesh 1d nx={n} lx=1\nfield u scalar\neq dt(u) = {op}\ninit u = sin(2 * pi * x)\n\
time dt=0.00001 steps=1\nnumerics acc={acc}\n"
    ))
    .unwrap();
    let store = create_grid(&p, 64, 8).unwrap();
    let k = 2.0 * std::f64::consts::PI;
    let h = p.mesh.spacing(0);
    (0..n)
        .map(|i| {
            let x = i as f64 * h;
            let exact = if order == 1 { k * (k * x).cos() } else { -k * k * (k * x).sin() };
            let got = tree_eval_reference(&p, &store, 0, [i as isize, 0, 0]).unwrap()[0][0];
            (got - exact).abs()
        })
        .fold(0.0, f64::max)
}

/// Observed orders between four successive refinements.
pub fn observed_orders(order: usize, acc: usize) -> Vec<f64> {
    let base = if acc >= 6 { 8 } else { 16 };
    let errs: Vec<f64> = (0..4).map(|r| max_derivative_error(order, acc, base << r)).collect();
    errs.windows(2).map(|p| (p[0] / p[1]).log2()).collect()
}
