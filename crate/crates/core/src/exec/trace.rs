use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskKind {
    /// Block update.
    A,
    /// Boundary/ghost refresh of a block.
    B,
    /// Halo send of a frontier block group.
    CSend,
    /// Halo receive of a frontier block group.
    CRecv,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::A => "A",
            TaskKind::B => "B",
            TaskKind::CSend => "Csend",
            TaskKind::CRecv => "Crecv",
        }
    }
}

/// One executed task in a schedule trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub kind: TaskKind,
    pub rank: usize,
    pub block: [usize; 3],
    /// Frontier group for communication tasks, 0 otherwise.
    pub group: usize,
    pub step: usize,
    pub lane: usize,
    pub start_ns: u64,
    pub end_ns: u64,
    /// Global order of task starts and completions on the rank.
    pub start_seq: u64,
    pub end_seq: u64,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "kind={} rank={} block={},{},{} group={} step={} lane={} start_ns={} end_ns={} start_seq={} end_seq={}",
            self.kind.name(),
            self.rank,
            self.block[0],
            self.block[1],
            self.block[2],
            self.group,
            self.step,
            self.lane,
            self.start_ns,
            self.end_ns,
            self.start_seq,
            self.end_seq
        )
    }
}

impl FromStr for TraceRecord {
    type Err = String;

    fn from_str(s: &str) -> Result<TraceRecord, String> {
        let mut rec = TraceRecord {
            kind: TaskKind::A,
            rank: 0,
            block: [0; 3],
            group: 0,
            step: 0,
            lane: 0,
            start_ns: 0,
            end_ns: 0,
            start_seq: 0,
            end_seq: 0,
        };
        let num = |v: &str| v.parse::<u64>().map_err(|e| format!("`{v}`: {e}"));
        for part in s.split_whitespace() {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("malformed trace entry `{part}`"))?;
            match k {
                "kind" => {
                    rec.kind = match v {
                        "A" => TaskKind::A,
                        "B" => TaskKind::B,
                        "Csend" => TaskKind::CSend,
                        "Crecv" => TaskKind::CRecv,
                        _ => return Err(format!("unknown task kind `{v}`")),
                    }
                }
                "rank" => rec.rank = num(v)? as usize,
                "block" => {
                    let parts: Vec<&str> = v.split(',').collect();
                    if parts.len() != 3 {
                        return Err(format!("malformed block `{v}`"));
                    }
                    for (a, p) in parts.iter().enumerate() {
                        rec.block[a] = num(p)? as usize;
                    }
                }
                "group" => rec.group = num(v)? as usize,
                "step" => rec.step = num(v)? as usize,
                "lane" => rec.lane = num(v)? as usize,
                "start_ns" => rec.start_ns = num(v)?,
                "end_ns" => rec.end_ns = num(v)?,
                "start_seq" => rec.start_seq = num(v)?,
                "end_seq" => rec.end_seq = num(v)?,
                _ => return Err(format!("unknown trace key `{k}`")),
            }
        }
        Ok(rec)
    }
}

pub fn write_trace(records: &[TraceRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.to_string());
        s.push('\n');
    }
    s
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::parse)
        .collect()
}
