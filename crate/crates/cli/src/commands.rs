use std::fmt::Write as _;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use fdflow::analytic::{analytic_solution, AnalyticKind};
use fdflow::dist::{run_inprocess, DistConfig, DistError, DistMode, DistStats, TransportKind};
use fdflow::exec::{write_trace, ExecConfig, ExecError, RunOptions, RunStats, Simulation, TraceRecord};
use fdflow::lowering::{compile, cost_model, emit_listing, CostModel};
use fdflow::snapshot::compare_snapshots;
use fdflow::{Problem, Snapshot};

use crate::args::{
    AnalyticArgs, AnalyticKindArg, BenchArgs, CompareArgs, GridArgs, Mode, PlotCsvArgs, RunArgs,
    SpecArgs,
};
use crate::metrics::Metrics;
use crate::{load_problem, procs, usage, write_file, Failure};

/// Writes to standard output, treating a closed pipe as a normal end.
fn write_stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

macro_rules! out {
    ($($t:tt)*) => { write_stdout(&format!($($t)*)) };
}

macro_rules! outln {
    ($($t:tt)*) => { write_stdout(&format!("{}\n", format_args!($($t)*))) };
}

/// Final state, metrics and schedule trace of one run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub snapshot: Snapshot,
    pub metrics: Metrics,
    pub trace: Vec<TraceRecord>,
}

/// How distributed ranks are hosted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Launch {
    /// Rank threads exchanging messages over in-process channels.
    Threads,
    /// One worker process per rank connected by Unix sockets.
    Processes,
}

impl Launch {
    /// Reads `FDM_TRANSPORT` (`inproc`, the default, or `socket`).
    pub fn from_env() -> Result<Launch> {
        match std::env::var("FDM_TRANSPORT").ok().as_deref() {
            None | Some("") | Some("inproc") => Ok(Launch::Threads),
            Some("socket") => Ok(Launch::Processes),
            Some(other) => Err(usage(format!(
                "FDM_TRANSPORT must be `inproc` or `socket`, got `{other}`"
            ))),
        }
    }
}

pub fn exec_config(g: &GridArgs, threads: usize) -> ExecConfig {
    ExecConfig {
        alignment: g.alignment,
        vector_size: g.vector_size,
        l3_size: g.l3_size,
        threads,
    }
}

fn check_grid_args(g: &GridArgs) -> Result<()> {
    if g.alignment < 8 || !g.alignment.is_power_of_two() {
        bail!(usage(format!(
            "--alignment must be a power of two of at least 8, got {}",
            g.alignment
        )));
    }
    if !g.vector_size.is_power_of_two() {
        bail!(usage(format!("--vector-size must be a power of two, got {}", g.vector_size)));
    }
    if g.l3_size == 0 {
        bail!(usage("--l3-size must be positive"));
    }
    Ok(())
}

pub fn parse_rank_grid(s: &str) -> Result<[usize; 3]> {
    let parts: Vec<usize> = s
        .split('x')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--rank-grid must look like 2x2x1, got `{s}`")))?;
    if parts.is_empty() || parts.len() > 3 || parts.contains(&0) {
        bail!(usage(format!("--rank-grid must look like 2x2x1, got `{s}`")));
    }
    let mut g = [1; 3];
    g[..parts.len()].copy_from_slice(&parts);
    Ok(g)
}

/// Rejects flag combinations that cannot be honoured.
pub fn check_run_args(a: &RunArgs) -> Result<()> {
    check_grid_args(&a.grid)?;
    if a.threads == 0 {
        bail!(usage("--threads must be at least 1"));
    }
    if a.ranks == 0 {
        bail!(usage("--ranks must be at least 1"));
    }
    if a.comm_blocks == 0 {
        bail!(usage("--comm-blocks must be at least 1"));
    }
    if a.window == 0 {
        bail!(usage("--window must be at least 1"));
    }
    if !(a.tol >= 0.0 && a.tol.is_finite()) {
        bail!(usage("--tol must be a finite non-negative number"));
    }
    if !a.mode.is_dist() {
        if a.ranks != 1 {
            bail!(usage(format!(
                "--ranks {} needs a distributed mode (dist-pure, dist-forkjoin or dist-task)",
                a.ranks
            )));
        }
        if a.rank_grid.is_some() {
            bail!(usage("--rank-grid needs a distributed mode"));
        }
    }
    if let Some(every) = a.dump_every {
        if every == 0 {
            bail!(usage("--dump-every must be at least 1"));
        }
        if a.dump.is_none() {
            bail!(usage("--dump-every needs --dump"));
        }
        if a.mode.is_dist() {
            bail!(usage("--dump-every is only supported in seq, forkjoin and task modes"));
        }
    }
    if a.trace.is_some() && !matches!(a.mode, Mode::Task | Mode::DistTask) {
        bail!(usage("--trace is only recorded in task and dist-task modes"));
    }
    if a.mode == Mode::DistPure && a.threads != 1 {
        bail!(usage("dist-pure runs one lane per rank; use dist-forkjoin or dist-task for --threads > 1"));
    }
    if let Some(g) = &a.rank_grid {
        let g = parse_rank_grid(g)?;
        if g.iter().product::<usize>() != a.ranks {
            bail!(usage(format!(
                "--rank-grid {}x{}x{} does not multiply to --ranks {}",
                g[0], g[1], g[2], a.ranks
            )));
        }
    }
    Ok(())
}

pub fn steps_for(problem: &Problem, over: Option<usize>) -> usize {
    over.unwrap_or(problem.time.steps)
}

/// Per-point cost of one full step (time and algebraic programs).
pub fn problem_cost(problem: &Problem) -> Result<CostModel> {
    let c = compile(problem).context("lowering failed")?;
    Ok(cost_model(&c.time, c.acc).combine(cost_model(&c.alg, c.acc)))
}

fn base_metrics(a: &RunArgs, problem: &Problem, steps: usize) -> Result<Metrics> {
    let cost = problem_cost(problem)?;
    let points = problem.mesh.interior_points();
    let work = points as u64 * steps as u64;
    Ok(Metrics {
        mode: a.mode.name().to_string(),
        spec: a.spec.display().to_string(),
        ranks: a.ranks,
        threads: a.threads,
        nbg: [1; 3],
        steps,
        interior_points: points,
        flop_per_point: cost.flop_per_point(),
        mem_per_point: cost.mem_per_point(),
        stencil_flop_per_point: cost.stencil_flop(),
        stencil_mem_per_point: cost.stencil_mem(),
        flop_total: cost.flop_per_point() as u64 * work,
        mem_total: cost.mem_per_point() as u64 * work,
        note: if steps == 0 {
            "zero steps run; throughput reported as 0".into()
        } else {
            String::new()
        },
        ..Metrics::default()
    })
}

fn exec_failure(e: ExecError) -> anyhow::Error {
    match e {
        ExecError::NonFinite(nf) => Failure::Numeric(nf.to_string()).into(),
        ExecError::Invalid(m) => usage(m),
        other => other.into(),
    }
}

pub(crate) fn dist_failure(e: DistError) -> anyhow::Error {
    match e {
        DistError::Exec(e) => exec_failure(e),
        DistError::Decompose(_) | DistError::Mesh(_) => usage(e.to_string()),
        other => other.into(),
    }
}

fn merge_stats(total: &mut RunStats, s: RunStats) {
    total.steps += s.steps;
    total.wall_ns += s.wall_ns;
    total.compute_ns += s.compute_ns;
    total.bc_ns += s.bc_ns;
    total.a_tasks += s.a_tasks;
    total.b_tasks += s.b_tasks;
    for (i, v) in s.busy_ns.iter().enumerate() {
        if i >= total.busy_ns.len() {
            total.busy_ns.push(0);
        }
        total.busy_ns[i] += v;
    }
    for (i, v) in s.idle_ns.iter().enumerate() {
        if i >= total.idle_ns.len() {
            total.idle_ns.push(0);
        }
        total.idle_ns[i] += v;
    }
    total.nbl = s.nbl;
    total.trace.extend(s.trace);
}

fn secs(ns: u64) -> f64 {
    ns as f64 * 1e-9
}

fn secs_list(ns: &[u64]) -> Vec<f64> {
    ns.iter().map(|&v| secs(v)).collect()
}

fn dump_path(base: &Path, step: usize) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(format!(".{step}"));
    PathBuf::from(s)
}

fn run_single(a: &RunArgs, problem: &Problem, steps: usize, mut m: Metrics) -> Result<RunOutcome> {
    let mut sim = Simulation::new(problem, exec_config(&a.grid, a.threads)).map_err(exec_failure)?;
    let opts = RunOptions {
        threads: a.threads,
        window: a.window,
        check_finite: a.check_finite,
        trace: a.trace.is_some(),
    };
    let mode = a.mode;
    let run = |sim: &mut Simulation, n: usize| match mode {
        Mode::Seq => sim.run_sequential(n, opts),
        Mode::Forkjoin => sim.run_forkjoin(n, opts),
        Mode::Task => sim.run_tasks(n, opts),
        _ => unreachable!("distributed modes are handled elsewhere"),
    };
    let stats = match (a.dump_every, &a.dump) {
        (Some(every), Some(base)) => {
            let mut total = RunStats::default();
            let mut done = 0;
            while done < steps {
                let n = every.min(steps - done);
                merge_stats(&mut total, run(&mut sim, n).map_err(exec_failure)?);
                done += n;
                write_file(&dump_path(base, sim.step), &sim.snapshot().to_bytes())?;
            }
            total
        }
        _ => run(&mut sim, steps).map_err(exec_failure)?,
    };
    m.nbl = stats.nbl;
    m.wall_s = secs(stats.wall_ns);
    m.compute_s = secs(stats.compute_ns);
    m.bc_s = secs(stats.bc_ns);
    m.a_tasks = stats.a_tasks;
    m.b_tasks = stats.b_tasks;
    m.lane_busy_s = secs_list(&stats.busy_ns);
    m.lane_idle_s = secs_list(&stats.idle_ns);
    m.mpoints_per_s = Metrics::throughput(m.interior_points, steps, m.wall_s);
    Ok(RunOutcome {
        snapshot: sim.snapshot(),
        metrics: m,
        trace: stats.trace,
    })
}

pub fn dist_config(a: &RunArgs) -> Result<DistConfig> {
    let mode = match a.mode {
        Mode::DistPure => DistMode::Pure,
        Mode::DistForkjoin => DistMode::ForkJoin,
        Mode::DistTask => DistMode::Task,
        m => bail!(usage(format!("{} is not a distributed mode", m.name()))),
    };
    Ok(DistConfig {
        ranks: a.ranks,
        mode,
        threads: a.threads,
        comm_blocks: a.comm_blocks,
        exec: exec_config(&a.grid, a.threads),
        nbg: a.rank_grid.as_deref().map(parse_rank_grid).transpose()?,
        window: a.window,
        trace: a.trace.is_some(),
        check_finite: a.check_finite,
        timeout: Duration::from_secs(a.timeout.max(1)),
    })
}

/// Folds per-rank statistics into run metrics: times are the slowest rank's,
/// counters are summed and lane times are listed rank by rank.
pub(crate) fn fill_dist_metrics(m: &mut Metrics, stats: &DistStats) {
    m.nbg = stats.nbg;
    m.wall_s = secs(stats.wall_ns);
    m.nbl = stats.ranks.first().map(|r| r.run.nbl).unwrap_or([1; 3]);
    let max = |f: &dyn Fn(&fdflow::dist::RankStats) -> u64| stats.ranks.iter().map(f).max().unwrap_or(0);
    m.compute_s = secs(max(&|r| r.run.compute_ns));
    m.bc_s = secs(max(&|r| r.run.bc_ns));
    m.exchange_s = secs(max(&|r| r.exchange_ns));
    m.a_tasks = stats.ranks.iter().map(|r| r.run.a_tasks).sum();
    m.b_tasks = stats.ranks.iter().map(|r| r.run.b_tasks).sum();
    m.c_tasks = stats.ranks.iter().map(|r| r.c_tasks).sum();
    m.lane_busy_s = stats.ranks.iter().flat_map(|r| secs_list(&r.run.busy_ns)).collect();
    m.lane_idle_s = stats.ranks.iter().flat_map(|r| secs_list(&r.run.idle_ns)).collect();
    m.bytes_sent = stats.ranks.iter().map(|r| r.bytes_sent).sum();
    m.messages_sent = stats.ranks.iter().map(|r| r.messages_sent).sum();
    m.mpoints_per_s = Metrics::throughput(m.interior_points, m.steps, m.wall_s);
}

/// Runs `problem` as described by `a` (flags must already be checked).
pub fn execute_run(a: &RunArgs, problem: &Problem, launch: Launch) -> Result<RunOutcome> {
    let steps = steps_for(problem, a.steps_override);
    let mut m = base_metrics(a, problem, steps)?;
    if !a.mode.is_dist() {
        return run_single(a, problem, steps, m);
    }
    let cfg = dist_config(a)?;
    let (snapshot, stats) = match launch {
        Launch::Threads => {
            run_inprocess(problem, &cfg, steps, TransportKind::InProc).map_err(dist_failure)?
        }
        Launch::Processes => procs::launch(a, problem, &cfg, steps)?,
    };
    fill_dist_metrics(&mut m, &stats);
    if launch == Launch::Processes && m.note.is_empty() {
        m.note = "socket transport, one process per rank".into();
    }
    let trace = stats.ranks.iter().flat_map(|r| r.run.trace.clone()).collect();
    Ok(RunOutcome {
        snapshot,
        metrics: m,
        trace,
    })
}

pub fn read_dump(path: &Path) -> Result<Snapshot> {
    let f = std::fs::File::open(path)
        .map_err(|e| usage(format!("cannot open dump {}: {e}", path.display())))?;
    Snapshot::read_from(&mut BufReader::new(f))
        .map_err(|e| usage(format!("cannot read dump {}: {e}", path.display())))
}

pub fn cmd_run(a: &RunArgs) -> Result<()> {
    check_run_args(a)?;
    let launch = if a.mode.is_dist() { Launch::from_env()? } else { Launch::Threads };
    let problem = load_problem(&a.spec)?;
    let out = execute_run(a, &problem, launch)?;
    if let Some(p) = &a.dump {
        write_file(p, &out.snapshot.to_bytes())?;
    }
    if let Some(p) = &a.metrics {
        write_file(p, out.metrics.to_kv().as_bytes())?;
    }
    if let Some(p) = &a.trace {
        write_file(p, write_trace(&out.trace).as_bytes())?;
    }
    if !a.quiet {
        out!("{}", out.metrics.table());
    }
    if let Some(reference) = &a.compare {
        let r = read_dump(reference)?;
        let rep = compare_snapshots(&out.snapshot, &r, a.tol)
            .map_err(|e| Failure::Numeric(format!("comparison with {}: {e}", reference.display())))?;
        outln!(
            "compare {}: {} max_abs={:e} max_rel={:e}",
            reference.display(),
            if rep.pass { "PASS" } else { "FAIL" },
            rep.max_abs,
            rep.max_rel
        );
        if !rep.pass {
            let (f, p, c) = rep.first_mismatch.unwrap_or_default();
            bail!(Failure::Numeric(format!(
                "result differs from {} (first mismatch: field `{f}` point ({}, {}, {}) component {c})",
                reference.display(),
                p[0],
                p[1],
                p[2]
            )));
        }
    }
    Ok(())
}

/// Timings of the tree-walking baseline against the sequential executor.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub steps: usize,
    pub interior_points: usize,
    pub baseline_s: f64,
    pub optimized_s: f64,
    pub speedup: f64,
    /// Whether both runs produced bitwise identical fields.
    pub identical: bool,
    pub max_abs: f64,
}

pub fn bench(problem: &Problem, steps: usize, exec: ExecConfig) -> Result<BenchReport> {
    let mut base = Simulation::new(problem, exec).map_err(exec_failure)?;
    let t = Instant::now();
    base.run_baseline(steps).map_err(exec_failure)?;
    let baseline_s = t.elapsed().as_secs_f64();
    let mut opt = Simulation::new(problem, exec).map_err(exec_failure)?;
    let t = Instant::now();
    opt.run_sequential(steps, RunOptions::default()).map_err(exec_failure)?;
    let optimized_s = t.elapsed().as_secs_f64();
    let rep = compare_snapshots(&base.snapshot(), &opt.snapshot(), 0.0)?;
    Ok(BenchReport {
        steps,
        interior_points: problem.mesh.interior_points(),
        baseline_s,
        optimized_s,
        speedup: if optimized_s > 0.0 { baseline_s / optimized_s } else { 0.0 },
        identical: rep.pass,
        max_abs: rep.max_abs,
    })
}

pub fn cmd_bench(a: &BenchArgs) -> Result<()> {
    check_grid_args(&a.grid)?;
    let problem = load_problem(&a.spec)?;
    let steps = steps_for(&problem, a.steps_override);
    let r = bench(&problem, steps, exec_config(&a.grid, 1))?;
    let pts = r.interior_points;
    let mut s = String::new();
    let _ = writeln!(s, "steps={}", r.steps);
    let _ = writeln!(s, "interior_points={pts}");
    let _ = writeln!(s, "baseline_s={:?}", r.baseline_s);
    let _ = writeln!(s, "optimized_s={:?}", r.optimized_s);
    let _ = writeln!(s, "baseline_mpoints_per_s={:?}", Metrics::throughput(pts, r.steps, r.baseline_s));
    let _ = writeln!(s, "optimized_mpoints_per_s={:?}", Metrics::throughput(pts, r.steps, r.optimized_s));
    let _ = writeln!(s, "speedup={:?}", r.speedup);
    let _ = writeln!(s, "identical={}", r.identical);
    out!("{s}");
    if let Some(p) = &a.metrics {
        write_file(p, s.as_bytes())?;
    }
    if !r.identical {
        bail!(Failure::Numeric(format!(
            "baseline and optimised results differ (max abs {:e})",
            r.max_abs
        )));
    }
    Ok(())
}

pub fn cmd_compare(a: &CompareArgs) -> Result<()> {
    if !(a.tol >= 0.0 && a.tol.is_finite()) {
        bail!(usage("--tol must be a finite non-negative number"));
    }
    let x = read_dump(&a.a)?;
    let y = read_dump(&a.b)?;
    let rep = compare_snapshots(&x, &y, a.tol).map_err(|e| Failure::Numeric(e.to_string()))?;
    outln!(
        "{} tol={:e} max_abs={:e} max_rel={:e}",
        if rep.pass { "PASS" } else { "FAIL" },
        rep.tol,
        rep.max_abs,
        rep.max_rel
    );
    if let Some((f, p, c)) = &rep.first_mismatch {
        outln!("first mismatch: field `{f}` point ({}, {}, {}) component {c}", p[0], p[1], p[2]);
    }
    if !rep.pass {
        bail!(Failure::Numeric("dumps differ".into()));
    }
    Ok(())
}

pub fn cmd_listing(a: &SpecArgs) -> Result<()> {
    let problem = load_problem(&a.spec)?;
    let c = compile(&problem).context("lowering failed")?;
    out!("{}", emit_listing(&c.time));
    out!("{}", emit_listing(&c.alg));
    for (name, cm) in [
        ("time", cost_model(&c.time, c.acc)),
        ("algebraic", cost_model(&c.alg, c.acc)),
    ] {
        outln!(
            "cost {name}: stencil_ops={} mem/point={} (stencil {}) flop/point={} (stencil {})",
            cm.ops,
            cm.mem_per_point(),
            cm.stencil_mem(),
            cm.flop_per_point(),
            cm.stencil_flop()
        );
    }
    Ok(())
}

pub fn cmd_check(a: &SpecArgs) -> Result<()> {
    let problem = load_problem(&a.spec)?;
    let m = &problem.mesh;
    outln!(
        "ok: {}D mesh {}, {} fields, {} equations, acc={}, radius={}, dt={:e}, steps={}",
        m.dims,
        m.points[..m.dims]
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join("x"),
        problem.fields.len(),
        problem.equations.len(),
        problem.numerics.acc,
        problem.radius(),
        problem.time.dt,
        problem.time.steps
    );
    Ok(())
}

pub fn cmd_analytic(a: &AnalyticArgs) -> Result<()> {
    let problem = load_problem(&a.spec)?;
    let field = match &a.field {
        Some(f) => f.clone(),
        None => problem
            .fields
            .first()
            .map(|f| f.name.clone())
            .ok_or_else(|| usage("specification declares no fields"))?,
    };
    let kind = match a.kind {
        AnalyticKindArg::Heat => AnalyticKind::Heat { diffusivity: a.coef },
        AnalyticKindArg::Advection => AnalyticKind::Advection { velocity: a.coef },
    };
    let steps = steps_for(&problem, a.steps_override);
    let sol = analytic_solution(&problem, &field, kind, steps).map_err(|e| usage(e.to_string()))?;
    write_file(&a.out, &sol.snapshot.to_bytes())?;
    outln!("time={:?}", sol.time);
    outln!("estimate={:?}", sol.estimate);
    Ok(())
}

pub fn cmd_plot_csv(a: &PlotCsvArgs) -> Result<()> {
    let snap = read_dump(&a.dump)?;
    let f = snap
        .field(&a.field)
        .ok_or_else(|| usage(format!("dump has no field `{}`", a.field)))?;
    if a.component >= f.comps {
        bail!(usage(format!(
            "field `{}` has {} components, asked for component {}",
            f.name, f.comps, a.component
        )));
    }
    let [nx, ny, nz] = f.extents;
    let at = |i: usize, j: usize, k: usize| f.data[((k * ny + j) * nx + i) * f.comps + a.component];
    let mut s = String::new();
    if ny == 1 && nz == 1 {
        s.push_str("i,value\n");
        for i in 0..nx {
            let _ = writeln!(s, "{i},{:?}", at(i, 0, 0));
        }
    } else {
        let k = a.slice.unwrap_or(nz / 2);
        if k >= nz {
            bail!(usage(format!("--slice {k} is outside 0..{nz}")));
        }
        s.push_str("i,j,value\n");
        for j in 0..ny {
            for i in 0..nx {
                let _ = writeln!(s, "{i},{j},{:?}", at(i, j, k));
            }
        }
    }
    match &a.out {
        Some(p) => write_file(p, s.as_bytes()),
        None => {
            out!("{s}");
            Ok(())
        }
    }
}
