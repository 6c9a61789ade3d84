//! Run metrics: a human-readable table and a lossless `key=value` form.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub mode: String,
    pub spec: String,
    pub ranks: usize,
    pub threads: usize,
    pub nbg: [usize; 3],
    pub nbl: [usize; 3],
    pub steps: usize,
    pub interior_points: usize,
    pub wall_s: f64,
    pub compute_s: f64,
    pub bc_s: f64,
    pub exchange_s: f64,
    pub mpoints_per_s: f64,
    pub flop_per_point: usize,
    pub mem_per_point: usize,
    pub stencil_flop_per_point: usize,
    pub stencil_mem_per_point: usize,
    pub flop_total: u64,
    pub mem_total: u64,
    pub a_tasks: usize,
    pub b_tasks: usize,
    pub c_tasks: usize,
    pub lane_busy_s: Vec<f64>,
    pub lane_idle_s: Vec<f64>,
    pub bytes_sent: u64,
    pub messages_sent: u64,
    pub note: String,
}

fn list<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn triple(v: [usize; 3]) -> String {
    format!("{}x{}x{}", v[0], v[1], v[2])
}

fn parse_triple(s: &str) -> Result<[usize; 3]> {
    let parts: Vec<usize> = s
        .split('x')
        .map(|p| p.parse::<usize>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad triple `{s}`"))?;
    parts
        .try_into()
        .map_err(|_| anyhow!("bad triple `{s}`"))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.parse::<f64>().with_context(|| format!("bad number `{p}`")))
        .collect()
}

impl Metrics {
    /// Mpoints/s from interior points, steps and wall time; 0 when nothing ran.
    pub fn throughput(points: usize, steps: usize, wall_s: f64) -> f64 {
        if steps == 0 || wall_s <= 0.0 {
            0.0
        } else {
            points as f64 * steps as f64 / wall_s / 1e6
        }
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("mode", self.mode.clone());
        kv("spec", self.spec.clone());
        kv("ranks", self.ranks.to_string());
        kv("threads", self.threads.to_string());
        kv("nbg", triple(self.nbg));
        kv("nbl", triple(self.nbl));
        kv("steps", self.steps.to_string());
        kv("interior_points", self.interior_points.to_string());
        kv("wall_s", format!("{:?}", self.wall_s));
        kv("compute_s", format!("{:?}", self.compute_s));
        kv("bc_s", format!("{:?}", self.bc_s));
        kv("exchange_s", format!("{:?}", self.exchange_s));
        kv("mpoints_per_s", format!("{:?}", self.mpoints_per_s));
        kv("flop_per_point", self.flop_per_point.to_string());
        kv("mem_per_point", self.mem_per_point.to_string());
        kv("stencil_flop_per_point", self.stencil_flop_per_point.to_string());
        kv("stencil_mem_per_point", self.stencil_mem_per_point.to_string());
        kv("flop_total", self.flop_total.to_string());
        kv("mem_total", self.mem_total.to_string());
        kv("a_tasks", self.a_tasks.to_string());
        kv("b_tasks", self.b_tasks.to_string());
        kv("c_tasks", self.c_tasks.to_string());
        kv("lane_busy_s", list(&self.lane_busy_s));
        kv("lane_idle_s", list(&self.lane_idle_s));
        kv("bytes_sent", self.bytes_sent.to_string());
        kv("messages_sent", self.messages_sent.to_string());
        kv("note", self.note.clone());
        s
    }

    pub fn from_kv(text: &str) -> Result<Metrics> {
        let mut m = Metrics::default();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value", n + 1))?;
            let ctx = || format!("line {}: bad value for `{k}`", n + 1);
            match k {
                "mode" => m.mode = v.to_string(),
                "spec" => m.spec = v.to_string(),
                "ranks" => m.ranks = v.parse().with_context(ctx)?,
                "threads" => m.threads = v.parse().with_context(ctx)?,
                "nbg" => m.nbg = parse_triple(v).with_context(ctx)?,
                "nbl" => m.nbl = parse_triple(v).with_context(ctx)?,
                "steps" => m.steps = v.parse().with_context(ctx)?,
                "interior_points" => m.interior_points = v.parse().with_context(ctx)?,
                "wall_s" => m.wall_s = v.parse().with_context(ctx)?,
                "compute_s" => m.compute_s = v.parse().with_context(ctx)?,
                "bc_s" => m.bc_s = v.parse().with_context(ctx)?,
                "exchange_s" => m.exchange_s = v.parse().with_context(ctx)?,
                "mpoints_per_s" => m.mpoints_per_s = v.parse().with_context(ctx)?,
                "flop_per_point" => m.flop_per_point = v.parse().with_context(ctx)?,
                "mem_per_point" => m.mem_per_point = v.parse().with_context(ctx)?,
                "stencil_flop_per_point" => m.stencil_flop_per_point = v.parse().with_context(ctx)?,
                "stencil_mem_per_point" => m.stencil_mem_per_point = v.parse().with_context(ctx)?,
                "flop_total" => m.flop_total = v.parse().with_context(ctx)?,
                "mem_total" => m.mem_total = v.parse().with_context(ctx)?,
                "a_tasks" => m.a_tasks = v.parse().with_context(ctx)?,
                "b_tasks" => m.b_tasks = v.parse().with_context(ctx)?,
                "c_tasks" => m.c_tasks = v.parse().with_context(ctx)?,
                "lane_busy_s" => m.lane_busy_s = parse_list(v).with_context(ctx)?,
                "lane_idle_s" => m.lane_idle_s = parse_list(v).with_context(ctx)?,
                "bytes_sent" => m.bytes_sent = v.parse().with_context(ctx)?,
                "messages_sent" => m.messages_sent = v.parse().with_context(ctx)?,
                "note" => m.note = v.to_string(),
                _ => bail!("line {}: unknown key `{k}`", n + 1),
            }
        }
        Ok(m)
    }

    pub fn table(&self) -> String {
        let rows: Vec<(&str, String)> = vec![
            ("mode", self.mode.clone()),
            ("ranks x threads", format!("{} x {}", self.ranks, self.threads)),
            ("rank grid", triple(self.nbg)),
            ("blocks per rank", triple(self.nbl)),
            ("steps", self.steps.to_string()),
            ("interior points", self.interior_points.to_string()),
            ("wall time [s]", format!("{:.6}", self.wall_s)),
            ("compute [s]", format!("{:.6}", self.compute_s)),
            ("boundary [s]", format!("{:.6}", self.bc_s)),
            ("exchange [s]", format!("{:.6}", self.exchange_s)),
            ("Mpoints/s", format!("{:.3}", self.mpoints_per_s)),
            (
                "FLOP/point",
                format!("{} (stencil {})", self.flop_per_point, self.stencil_flop_per_point),
            ),
            (
                "mem/point",
                format!("{} (stencil {})", self.mem_per_point, self.stencil_mem_per_point),
            ),
            ("A/B/C tasks", format!("{}/{}/{}", self.a_tasks, self.b_tasks, self.c_tasks)),
            (
                "lane busy [s]",
                self.lane_busy_s.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" "),
            ),
            (
                "lane idle [s]",
                self.lane_idle_s.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" "),
            ),
            ("bytes sent", self.bytes_sent.to_string()),
        ];
        let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<w$}  {v}");
        }
        if !self.note.is_empty() {
            let _ = writeln!(s, "{:<w$}  {}", "note", self.note);
        }
        s
    }
}
