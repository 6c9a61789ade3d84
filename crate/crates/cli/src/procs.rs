//! One worker process per rank, connected through socket files in a scratch
//! directory. Workers leave their results there for the launcher to merge.

use std::fmt::Write as _;
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use fdflow::dist::{plan_for, run_rank, DistConfig, DistStats, RankStats, SocketEndpoint};
use fdflow::exec::{parse_trace, write_trace};
use fdflow::{parse_problem, Problem, Snapshot};

use crate::args::{RunArgs, WorkerArgs};
use crate::commands::{dist_config, dist_failure, read_dump};
use crate::{usage, write_file, Failure};

const FINAL_DUMP: &str = "final.dump";

fn stats_path(dir: &Path, rank: usize) -> std::path::PathBuf {
    dir.join(format!("rank-{rank}.stats"))
}

fn trace_path(dir: &Path, rank: usize) -> std::path::PathBuf {
    dir.join(format!("rank-{rank}.trace"))
}

fn error_path(dir: &Path, rank: usize) -> std::path::PathBuf {
    dir.join(format!("rank-{rank}.error"))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn encode_stats(s: &RankStats) -> String {
    let mut o = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(o, "{k}={v}");
    };
    kv("rank", s.rank.to_string());
    kv("extents", join(&s.extents));
    kv("offset", join(&s.offset));
    kv("nbl", join(&s.run.nbl));
    kv("steps", s.run.steps.to_string());
    kv("wall_ns", s.run.wall_ns.to_string());
    kv("compute_ns", s.run.compute_ns.to_string());
    kv("bc_ns", s.run.bc_ns.to_string());
    kv("a_tasks", s.run.a_tasks.to_string());
    kv("b_tasks", s.run.b_tasks.to_string());
    kv("busy_ns", join(&s.run.busy_ns));
    kv("idle_ns", join(&s.run.idle_ns));
    kv("exchange_ns", s.exchange_ns.to_string());
    kv("bytes_sent", s.bytes_sent.to_string());
    kv("messages_sent", s.messages_sent.to_string());
    kv("c_tasks", s.c_tasks.to_string());
    o
}

fn nums<T: std::str::FromStr>(v: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|p| p.parse::<T>().map_err(|_| anyhow!("bad number `{p}`")))
        .collect()
}

fn triple(v: &str) -> Result<[usize; 3]> {
    nums::<usize>(v)?
        .try_into()
        .map_err(|_| anyhow!("bad triple `{v}`"))
}

fn decode_stats(text: &str) -> Result<RankStats> {
    let mut s = RankStats::default();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("bad stats line `{line}`"))?;
        let n = || v.parse::<u64>().map_err(|_| anyhow!("bad value for `{k}`"));
        match k {
            "rank" => s.rank = n()? as usize,
            "extents" => s.extents = triple(v)?,
            "offset" => s.offset = triple(v)?,
            "nbl" => s.run.nbl = triple(v)?,
            "steps" => s.run.steps = n()? as usize,
            "wall_ns" => s.run.wall_ns = n()?,
            "compute_ns" => s.run.compute_ns = n()?,
            "bc_ns" => s.run.bc_ns = n()?,
            "a_tasks" => s.run.a_tasks = n()? as usize,
            "b_tasks" => s.run.b_tasks = n()? as usize,
            "busy_ns" => s.run.busy_ns = nums(v)?,
            "idle_ns" => s.run.idle_ns = nums(v)?,
            "exchange_ns" => s.exchange_ns = n()?,
            "bytes_sent" => s.bytes_sent = n()?,
            "messages_sent" => s.messages_sent = n()?,
            "c_tasks" => s.c_tasks = n()? as usize,
            _ => bail!("unknown stats key `{k}`"),
        }
    }
    Ok(s)
}

/// Flags a worker needs to rebuild the launcher's configuration.
fn worker_flags(a: &RunArgs, steps: usize) -> Vec<String> {
    let mut f: Vec<String> = vec![
        "--spec".into(),
        a.spec.display().to_string(),
        "--mode".into(),
        a.mode.name().into(),
        "--threads".into(),
        a.threads.to_string(),
        "--ranks".into(),
        a.ranks.to_string(),
        "--alignment".into(),
        a.grid.alignment.to_string(),
        "--vector-size".into(),
        a.grid.vector_size.to_string(),
        "--l3-size".into(),
        a.grid.l3_size.to_string(),
        "--comm-blocks".into(),
        a.comm_blocks.to_string(),
        "--steps-override".into(),
        steps.to_string(),
        "--window".into(),
        a.window.to_string(),
        "--timeout".into(),
        a.timeout.to_string(),
    ];
    if let Some(g) = &a.rank_grid {
        f.push("--rank-grid".into());
        f.push(g.clone());
    }
    if a.check_finite {
        f.push("--check-finite".into());
    }
    if a.trace.is_some() {
        // Workers write their trace into the scratch directory.
        f.push("--trace".into());
        f.push("-".into());
    }
    f
}

fn wait_all(children: &mut [Child], grace: Duration) -> Result<Vec<Option<i32>>> {
    let mut codes: Vec<Option<Option<i32>>> = vec![None; children.len()];
    let mut failed_at: Option<Instant> = None;
    loop {
        for (c, slot) in children.iter_mut().zip(codes.iter_mut()) {
            if slot.is_none() {
                if let Some(st) = c.try_wait()? {
                    if !st.success() && failed_at.is_none() {
                        failed_at = Some(Instant::now());
                    }
                    *slot = Some(st.code());
                }
            }
        }
        if codes.iter().all(Option::is_some) {
            return Ok(codes.into_iter().map(|c| c.flatten()).collect());
        }
        if failed_at.is_some_and(|t| t.elapsed() > grace) {
            for (c, slot) in children.iter_mut().zip(codes.iter_mut()) {
                if slot.is_none() {
                    let _ = c.kill();
                    let _ = c.wait();
                    *slot = Some(None);
                }
            }
        }
        std::thread::sleep(Duration::from_millis(2));
    }
}

/// Spawns one worker per rank and merges their results.
pub fn launch(a: &RunArgs, problem: &Problem, cfg: &DistConfig, steps: usize) -> Result<(Snapshot, DistStats)> {
    let plan = plan_for(problem, cfg).map_err(dist_failure)?;
    let n = plan.ranks();
    let dir = tempfile::tempdir().context("cannot create socket directory")?;
    let exe = std::env::current_exe().context("cannot locate the fdflow executable")?;
    let flags = worker_flags(a, steps);
    let start = Instant::now();
    let mut children = Vec::with_capacity(n);
    for r in 0..n {
        let child = Command::new(&exe)
            .arg("rank-worker")
            .args(["--rank", &r.to_string(), "--size", &n.to_string()])
            .arg("--socket-dir")
            .arg(dir.path())
            .args(&flags)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .with_context(|| format!("cannot spawn rank {r}"))?;
        children.push(child);
    }
    let codes = wait_all(&mut children, Duration::from_secs(a.timeout.max(1)))?;
    let wall_ns = start.elapsed().as_nanos() as u64;
    if codes.iter().any(|c| *c != Some(0)) {
        // Prefer the rank that failed first-hand over ranks that were aborted.
        let mut errors: Vec<(usize, String, String)> = Vec::new();
        for r in 0..n {
            if let Ok(t) = std::fs::read_to_string(error_path(dir.path(), r)) {
                let (kind, msg) = t.split_once('\n').unwrap_or(("runtime", t.as_str()));
                errors.push((r, kind.to_string(), msg.trim().to_string()));
            }
        }
        errors.sort_by_key(|e| e.1 == "aborted");
        return Err(match errors.first() {
            Some((r, kind, msg)) => {
                let msg = format!("rank {r}: {msg}");
                match kind.as_str() {
                    "numeric" => Failure::Numeric(msg).into(),
                    "usage" => usage(msg),
                    _ => anyhow!(msg),
                }
            }
            None => anyhow!("rank workers exited with statuses {codes:?}"),
        });
    }
    let snapshot = read_dump(&dir.path().join(FINAL_DUMP))?;
    let mut ranks = Vec::with_capacity(n);
    for r in 0..n {
        let text = std::fs::read_to_string(stats_path(dir.path(), r))
            .with_context(|| format!("rank {r} left no statistics"))?;
        let mut s = decode_stats(&text).with_context(|| format!("rank {r} statistics"))?;
        if a.trace.is_some() {
            let t = std::fs::read_to_string(trace_path(dir.path(), r)).unwrap_or_default();
            s.run.trace = parse_trace(&t).map_err(|e| anyhow!("rank {r} trace: {e}"))?;
        }
        ranks.push(s);
    }
    Ok((
        snapshot,
        DistStats {
            nbg: plan.nbg,
            wall_ns,
            ranks,
        },
    ))
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    match e.downcast_ref::<Failure>() {
        Some(Failure::Usage(_)) => "usage",
        Some(Failure::Numeric(_)) => "numeric",
        None if e.to_string().contains("aborted the run") => "aborted",
        None => "runtime",
    }
}

fn worker_run(w: &WorkerArgs) -> Result<()> {
    let a = &w.run;
    let text = std::fs::read_to_string(&a.spec)
        .map_err(|e| usage(format!("cannot read specification {}: {e}", a.spec.display())))?;
    let problem = parse_problem(&text).map_err(|e| usage(format!("{}:{e}", a.spec.display())))?;
    let cfg = dist_config(a)?;
    let steps = a.steps_override.unwrap_or(problem.time.steps);
    let ep = SocketEndpoint::connect_dir(&w.socket_dir, w.rank, w.size, cfg.timeout)
        .with_context(|| format!("rank {} could not connect", w.rank))?;
    let (snap, stats) = run_rank(&problem, &cfg, &ep, steps).map_err(dist_failure)?;
    if let Some(s) = snap {
        write_file(&w.socket_dir.join(FINAL_DUMP), &s.to_bytes())?;
    }
    if a.trace.is_some() {
        write_file(&trace_path(&w.socket_dir, w.rank), write_trace(&stats.run.trace).as_bytes())?;
    }
    write_file(&stats_path(&w.socket_dir, w.rank), encode_stats(&stats).as_bytes())
}

/// Entry point of the hidden `rank-worker` command.
pub fn worker(w: &WorkerArgs) -> Result<()> {
    let r = worker_run(w);
    if let Err(e) = &r {
        let _ = std::fs::write(
            error_path(&w.socket_dir, w.rank),
            format!("{}\n{e:#}", error_kind(e)),
        );
    }
    r
}
