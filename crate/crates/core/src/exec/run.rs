use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Barrier, Mutex};
use std::time::Instant;

use super::engine::{algebraic_block, boundary_block, check_block, update_block, BcTable, Lane};
use super::scheduler::{execute, Outcome, SchedError};
use super::tasks::block_graph;
use super::trace::{TaskKind, TraceRecord};
use super::ExecError;
use crate::eqtree::TreeEvaluator;
use crate::frontend::{validate_problem, EquationKind, Problem};
use crate::grid::{bytes_per_point, create_grid, derive_blocking, partition, BlockingPlan, GridStore};
use crate::lowering::{compile, Compiled};
use crate::numerics::{bc, var};
use crate::snapshot::Snapshot;

/// Grid and planner parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExecConfig {
    pub alignment: usize,
    pub vector_size: usize,
    pub l3_size: usize,
    pub threads: usize,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            alignment: 64,
            vector_size: 8,
            l3_size: 33 << 20,
            threads: 1,
        }
    }
}

/// Options of one run call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub threads: usize,
    /// Time levels a task chain may run ahead of the oldest unfinished step.
    pub window: usize,
    pub check_finite: bool,
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            threads: 1,
            window: 2,
            check_finite: false,
            trace: false,
        }
    }
}

/// Timings and counters of one run call.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    pub wall_ns: u64,
    /// Time in block updates (sequential and fork-join modes).
    pub compute_ns: u64,
    /// Time in boundary refreshes (sequential and fork-join modes).
    pub bc_ns: u64,
    pub a_tasks: usize,
    pub b_tasks: usize,
    pub busy_ns: Vec<u64>,
    pub idle_ns: Vec<u64>,
    pub nbl: [usize; 3],
    pub trace: Vec<TraceRecord>,
}

impl RunStats {
    fn lanes(&mut self, busy: Vec<u64>) {
        self.idle_ns = busy.iter().map(|b| self.wall_ns.saturating_sub(*b)).collect();
        self.busy_ns = busy;
    }
}

/// A problem bound to its grid, compiled programs and blocking plan.
pub struct Simulation {
    pub problem: Problem,
    pub compiled: Compiled,
    pub store: GridStore,
    pub plan: BlockingPlan,
    pub bcs: BcTable,
    pub config: ExecConfig,
    /// Number of completed steps; the current state is buffer `step % 2`.
    pub step: usize,
}

impl Simulation {
    /// Validates, compiles and initialises `problem`, including the initial
    /// evaluation of algebraic fields and all ghost layers.
    pub fn new(problem: &Problem, config: ExecConfig) -> Result<Simulation, ExecError> {
        let report = validate_problem(problem);
        if !report.is_ok() {
            let msgs: Vec<String> = report.errors.iter().map(|d| d.to_string()).collect();
            return Err(ExecError::Invalid(msgs.join("; ")));
        }
        let compiled = compile(problem)?;
        let store = create_grid(problem, config.alignment, config.vector_size)?;
        Simulation::with_store(problem, compiled, store, config)
    }

    /// Wraps an already initialised grid (buffer 0 holds the state).
    pub fn with_store(
        problem: &Problem,
        compiled: Compiled,
        store: GridStore,
        config: ExecConfig,
    ) -> Result<Simulation, ExecError> {
        let bpp = bytes_per_point(&compiled.comps);
        let plan = derive_blocking(&store.layout, config.l3_size, config.threads, bpp);
        let mut sim = Simulation {
            problem: problem.clone(),
            compiled,
            store,
            plan,
            bcs: BcTable::new(problem),
            config,
            step: 0,
        };
        sim.setup();
        Ok(sim)
    }

    fn setup(&mut self) {
        if !self.compiled.alg.is_empty() {
            let mut lane = Lane::new(&self.compiled, self.store.layout.n[0]);
            let raw = self.store.raw();
            for id in self.plan.blocks() {
                // SAFETY: single lane with exclusive access to the store.
                unsafe { algebraic_block(&self.compiled, &raw, &mut lane, &self.plan.ranges(id), 0) };
            }
        }
        bc::apply_all(&mut self.store, 0, &self.problem);
    }

    /// Re-derives the blocking plan for `threads` lanes.
    pub fn replan(&mut self, threads: usize) {
        self.config.threads = threads.max(1);
        let bpp = bytes_per_point(&self.compiled.comps);
        self.plan = derive_blocking(&self.store.layout, self.config.l3_size, self.config.threads, bpp);
    }

    pub fn current(&self) -> usize {
        self.step % 2
    }

    /// Axes periodic for every field; their ghost refresh copies across blocks.
    pub fn wrap(&self) -> [bool; 3] {
        [0, 1, 2].map(|a| a < self.problem.mesh.dims && self.problem.axis_periodic(a))
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::from_store(&self.store, self.current(), self.step, self.problem.time.dt)
    }

    pub fn field_names(&self) -> Vec<String> {
        self.bcs.names.clone()
    }

    /// Runs `steps` steps block by block on the calling thread.
    pub fn run_sequential(&mut self, steps: usize, opts: RunOptions) -> Result<RunStats, ExecError> {
        let start = Instant::now();
        let mut stats = RunStats {
            steps,
            nbl: self.plan.nbl,
            ..RunStats::default()
        };
        let mut lane = Lane::new(&self.compiled, self.store.layout.n[0]);
        let raw = self.store.raw();
        let names = self.field_names();
        let blocks: Vec<[usize; 3]> = self.plan.blocks().collect();
        for _ in 0..steps {
            let t = self.step;
            let t0 = Instant::now();
            for &id in &blocks {
                let ranges = self.plan.ranges(id);
                // SAFETY: single lane with exclusive access to the store.
                unsafe { update_block(&self.compiled, &raw, &mut lane, &ranges, t) };
                if opts.check_finite {
                    if let Some(nf) = check_block(&self.compiled, &raw, &names, &ranges, t) {
                        return Err(ExecError::NonFinite(nf));
                    }
                }
            }
            let t1 = Instant::now();
            for &id in &blocks {
                // SAFETY: as above.
                unsafe { boundary_block(&self.bcs, &raw, &self.plan, id, (t + 1) % 2, &|_| true) };
            }
            stats.compute_ns += (t1 - t0).as_nanos() as u64;
            stats.bc_ns += t1.elapsed().as_nanos() as u64;
            stats.a_tasks += blocks.len();
            stats.b_tasks += blocks.len();
            self.step += 1;
        }
        stats.wall_ns = start.elapsed().as_nanos() as u64;
        let busy = stats.compute_ns + stats.bc_ns;
        stats.lanes(vec![busy]);
        Ok(stats)
    }

    /// Runs `steps` steps on `opts.threads` lanes with a barrier after the
    /// update phase and after the boundary phase of every step.
    pub fn run_forkjoin(&mut self, steps: usize, opts: RunOptions) -> Result<RunStats, ExecError> {
        let threads = opts.threads.max(1);
        if self.plan.nbl[1] * self.plan.nbl[2] < threads || self.config.threads != threads {
            self.replan(threads);
        }
        let start = Instant::now();
        let raw = self.store.raw();
        let names = self.field_names();
        let blocks: Vec<[usize; 3]> = self.plan.blocks().collect();
        let barrier = Barrier::new(threads);
        let failed = AtomicBool::new(false);
        let error: Mutex<Option<ExecError>> = Mutex::new(None);
        let t_base = self.step;
        let (c, plan, bcs) = (&self.compiled, &self.plan, &self.bcs);
        let results: Vec<(u64, u64, u64)> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|l| {
                    let (raw, names, blocks, barrier, failed, error) =
                        (&raw, &names, &blocks, &barrier, &failed, &error);
                    s.spawn(move || {
                        let own = &blocks[partition(blocks.len(), threads, l)];
                        let mut lane = Lane::new(c, raw.layout.n[0]);
                        let (mut compute, mut bcn) = (0u64, 0u64);
                        let mut done = 0u64;
                        for s in 0..steps {
                            let t = t_base + s;
                            let t0 = Instant::now();
                            for id in own {
                                let ranges = plan.ranges(*id);
                                // SAFETY: blocks are disjoint across lanes and
                                // the barrier orders reads of neighbour data.
                                unsafe { update_block(c, raw, &mut lane, &ranges, t) };
                                if opts.check_finite {
                                    if let Some(nf) = check_block(c, raw, names, &ranges, t) {
                                        failed.store(true, Ordering::SeqCst);
                                        let mut e = error.lock().expect("error lock");
                                        let replace = match &*e {
                                            Some(ExecError::NonFinite(old)) => {
                                                (nf.point[2], nf.point[1], nf.point[0])
                                                    < (old.point[2], old.point[1], old.point[0])
                                            }
                                            _ => true,
                                        };
                                        if replace {
                                            *e = Some(ExecError::NonFinite(nf));
                                        }
                                        break;
                                    }
                                }
                            }
                            compute += t0.elapsed().as_nanos() as u64;
                            barrier.wait();
                            if failed.load(Ordering::SeqCst) {
                                break;
                            }
                            let t1 = Instant::now();
                            for id in own {
                                // SAFETY: ghost cells of distinct blocks are
                                // disjoint; all updates finished at the barrier.
                                unsafe { boundary_block(bcs, raw, plan, *id, (t + 1) % 2, &|_| true) };
                            }
                            bcn += t1.elapsed().as_nanos() as u64;
                            barrier.wait();
                            done += 1;
                        }
                        (compute, bcn, done)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("fork-join lane panicked"))
                .collect()
        });
        if let Some(e) = error.into_inner().expect("error lock") {
            return Err(e);
        }
        self.step += steps;
        let mut stats = RunStats {
            steps,
            wall_ns: start.elapsed().as_nanos() as u64,
            nbl: self.plan.nbl,
            a_tasks: blocks.len() * steps,
            b_tasks: blocks.len() * steps,
            ..RunStats::default()
        };
        stats.compute_ns = results.iter().map(|r| r.0).max().unwrap_or(0);
        stats.bc_ns = results.iter().map(|r| r.1).max().unwrap_or(0);
        stats.lanes(results.iter().map(|r| r.0 + r.1).collect());
        Ok(stats)
    }

    /// Runs `steps` steps as a dataflow graph of block updates (A) and
    /// boundary refreshes (B) without per-step barriers.
    pub fn run_tasks(&mut self, steps: usize, opts: RunOptions) -> Result<RunStats, ExecError> {
        let threads = opts.threads.max(1);
        if self.config.threads != threads {
            self.replan(threads);
        }
        let graph = block_graph(&self.plan, self.wrap(), steps);
        let raw = self.store.raw();
        let names = self.field_names();
        let t_base = self.step;
        let (c, plan, bcs) = (&self.compiled, &self.plan, &self.bcs);
        let result = execute(
            &graph,
            threads,
            opts.window,
            0,
            opts.trace,
            |_| Lane::new(c, raw.layout.n[0]),
            |lane, node| {
                let t = t_base + node.step;
                match node.kind {
                    TaskKind::A => {
                        let ranges = plan.ranges(node.block);
                        // SAFETY: the graph orders every conflicting access.
                        unsafe { update_block(c, &raw, lane, &ranges, t) };
                        if opts.check_finite {
                            if let Some(nf) = check_block(c, &raw, &names, &ranges, t) {
                                return Err(ExecError::NonFinite(nf));
                            }
                        }
                    }
                    _ => {
                        // SAFETY: as above.
                        unsafe { boundary_block(bcs, &raw, plan, node.block, (t + 1) % 2, &|_| true) };
                    }
                }
                Ok(Outcome::Done)
            },
        );
        let sched = match result {
            Ok(s) => s,
            Err(SchedError::Task(e)) => return Err(e),
            Err(SchedError::Deadlock(n)) => return Err(ExecError::Deadlock(n)),
        };
        self.step += steps;
        let mut stats = RunStats {
            steps,
            wall_ns: sched.wall_ns,
            nbl: self.plan.nbl,
            a_tasks: graph.count(TaskKind::A),
            b_tasks: graph.count(TaskKind::B),
            trace: sched.trace,
            ..RunStats::default()
        };
        stats.lanes(sched.busy_ns);
        Ok(stats)
    }

    /// Reference executor: walks the equation trees recursively at every
    /// point, then refreshes all ghost layers.
    pub fn run_baseline(&mut self, steps: usize) -> Result<RunStats, ExecError> {
        let start = Instant::now();
        let ev = TreeEvaluator::new(&self.problem, &self.store)?;
        let l = self.store.layout.clone();
        let dt = self.problem.time.dt;
        for _ in 0..steps {
            let (src, dst) = (self.current(), 1 - self.current());
            for kind in [EquationKind::TimeDerivative, EquationKind::Algebraic] {
                let read = if kind == EquationKind::TimeDerivative { src } else { dst };
                for e in (0..ev.trees.len()).filter(|&e| ev.kinds[e] == kind) {
                    let f = ev.lhs[e];
                    let comps = self.store.fields[f].comps;
                    let mut out = Vec::with_capacity(l.interior_points() * comps);
                    for k in 0..l.n[2] as isize {
                        for j in 0..l.n[1] as isize {
                            for i in 0..l.n[0] as isize {
                                let idx = l.linear_index(i, j, k);
                                let rhs = ev.eval_unchecked(&self.store, read, e, idx);
                                if kind == EquationKind::TimeDerivative {
                                    let u = var(self.store.buffer(f, src), idx, comps);
                                    for c in 0..comps {
                                        out.push(u[c] + dt * rhs[if rhs.len() == 1 { 0 } else { c }]);
                                    }
                                } else {
                                    for c in 0..comps {
                                        out.push(rhs[if rhs.len() == 1 { 0 } else { c }]);
                                    }
                                }
                            }
                        }
                    }
                    self.store.set_interior(f, dst, &out);
                }
            }
            bc::apply_all(&mut self.store, dst, &self.problem);
            self.step += 1;
        }
        let wall = start.elapsed().as_nanos() as u64;
        let mut stats = RunStats {
            steps,
            wall_ns: wall,
            compute_ns: wall,
            nbl: [1, 1, 1],
            ..RunStats::default()
        };
        stats.lanes(vec![wall]);
        Ok(stats)
    }
}
