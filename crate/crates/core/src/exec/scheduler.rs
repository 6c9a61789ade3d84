use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::tasks::{Graph, TaskNode};
use super::trace::TraceRecord;

/// Result of running one task body.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// The task is waiting on an external event (a message); it is parked and
    /// retried later without holding the lane.
    Pending,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SchedError<E> {
    #[error("task graph deadlock with {0} tasks outstanding")]
    Deadlock(usize),
    #[error("{0}")]
    Task(E),
}

#[derive(Clone, Debug, Default)]
pub struct SchedStats {
    pub busy_ns: Vec<u64>,
    pub wall_ns: u64,
    pub executed: usize,
    pub trace: Vec<TraceRecord>,
}

struct State<E> {
    preds: Vec<u32>,
    ready: VecDeque<u32>,
    deferred: Vec<u32>,
    parked: VecDeque<u32>,
    remaining: usize,
    step_left: Vec<usize>,
    low: usize,
    waiting: usize,
    running: usize,
    error: Option<SchedError<E>>,
}

impl<E> State<E> {
    fn admit(&mut self, id: u32, nodes: &[TaskNode], window: usize) {
        if nodes[id as usize].step >= self.low.saturating_add(window) {
            self.deferred.push(id);
        } else {
            self.ready.push_back(id);
        }
    }

    fn complete(&mut self, id: u32, nodes: &[TaskNode], window: usize) {
        let node = &nodes[id as usize];
        self.remaining -= 1;
        self.step_left[node.step] -= 1;
        for &s in &node.succ {
            self.preds[s as usize] -= 1;
            if self.preds[s as usize] == 0 {
                self.admit(s, nodes, window);
            }
        }
        let before = self.low;
        while self.low < self.step_left.len() && self.step_left[self.low] == 0 {
            self.low += 1;
        }
        if self.low != before {
            let deferred = std::mem::take(&mut self.deferred);
            for d in deferred {
                self.admit(d, nodes, window);
            }
        }
    }
}

/// Runs a task graph on `lanes` threads without global barriers.
///
/// A task becomes ready when all its predecessors completed. Tasks more than
/// `window` steps ahead of the oldest unfinished step wait. `make_lane`
/// builds per-lane state; `body` runs one task and may return
/// [`Outcome::Pending`] to park it.
pub fn execute<L, E, M, F>(
    graph: &Graph,
    lanes: usize,
    window: usize,
    rank: usize,
    trace: bool,
    make_lane: M,
    body: F,
) -> Result<SchedStats, SchedError<E>>
where
    L: Send,
    E: Send,
    M: Fn(usize) -> L + Sync,
    F: Fn(&mut L, &TaskNode) -> Result<Outcome, E> + Sync,
{
    let nodes = &graph.nodes;
    let lanes = lanes.max(1);
    let window = window.max(1);
    let steps = nodes.iter().map(|n| n.step + 1).max().unwrap_or(0);
    let mut step_left = vec![0; steps];
    for n in nodes {
        step_left[n.step] += 1;
    }
    let mut state = State {
        preds: nodes.iter().map(|n| n.preds).collect(),
        ready: VecDeque::new(),
        deferred: Vec::new(),
        parked: VecDeque::new(),
        remaining: nodes.len(),
        step_left,
        low: 0,
        waiting: 0,
        running: 0,
        error: None,
    };
    for (i, n) in nodes.iter().enumerate() {
        if n.preds == 0 {
            state.admit(i as u32, nodes, window);
        }
    }
    let shared = Mutex::new(state);
    let cv = Condvar::new();
    let seq = AtomicU64::new(0);
    let epoch = Instant::now();

    let results: Vec<(u64, Vec<TraceRecord>, usize)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..lanes)
            .map(|lane_id| {
                let (shared, cv, seq, make_lane, body) = (&shared, &cv, &seq, &make_lane, &body);
                s.spawn(move || {
                    let mut lane = make_lane(lane_id);
                    let mut busy = 0u64;
                    let mut records = Vec::new();
                    let mut executed = 0usize;
                    let mut guard = shared.lock().expect("scheduler lock");
                    loop {
                        if guard.error.is_some() || guard.remaining == 0 {
                            cv.notify_all();
                            break;
                        }
                        let (id, retry) = if let Some(id) = guard.ready.pop_front() {
                            (id, false)
                        } else if let Some(id) = guard.parked.pop_front() {
                            (id, true)
                        } else {
                            if guard.running == 0 && guard.waiting + 1 == lanes {
                                let left = guard.remaining;
                                guard.error = Some(SchedError::Deadlock(left));
                                cv.notify_all();
                                break;
                            }
                            guard.waiting += 1;
                            guard = cv.wait(guard).expect("scheduler lock");
                            guard.waiting -= 1;
                            continue;
                        };
                        guard.running += 1;
                        drop(guard);
                        let node = &nodes[id as usize];
                        let start_seq = seq.fetch_add(1, Ordering::SeqCst);
                        let t0 = Instant::now();
                        let out = body(&mut lane, node);
                        let t1 = Instant::now();
                        let end_seq = seq.fetch_add(1, Ordering::SeqCst);
                        guard = shared.lock().expect("scheduler lock");
                        guard.running -= 1;
                        match out {
                            Ok(Outcome::Done) => {
                                busy += (t1 - t0).as_nanos() as u64;
                                executed += 1;
                                if trace {
                                    records.push(TraceRecord {
                                        kind: node.kind,
                                        rank,
                                        block: node.block,
                                        group: node.group,
                                        step: node.step,
                                        lane: lane_id,
                                        start_ns: (t0 - epoch).as_nanos() as u64,
                                        end_ns: (t1 - epoch).as_nanos() as u64,
                                        start_seq,
                                        end_seq,
                                    });
                                }
                                guard.complete(id, nodes, window);
                                cv.notify_all();
                            }
                            Ok(Outcome::Pending) => {
                                guard.parked.push_back(id);
                                if retry && guard.ready.is_empty() {
                                    // Only parked work is left: back off briefly
                                    // instead of spinning on the message queue.
                                    let (g, _) = cv
                                        .wait_timeout(guard, Duration::from_micros(50))
                                        .expect("scheduler lock");
                                    guard = g;
                                }
                            }
                            Err(e) => {
                                if guard.error.is_none() {
                                    guard.error = Some(SchedError::Task(e));
                                }
                                cv.notify_all();
                                break;
                            }
                        }
                    }
                    drop(guard);
                    (busy, records, executed)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scheduler lane panicked"))
            .collect()
    });

    let wall_ns = epoch.elapsed().as_nanos() as u64;
    let state = shared.into_inner().expect("scheduler lock");
    if let Some(e) = state.error {
        return Err(e);
    }
    let mut stats = SchedStats {
        wall_ns,
        ..SchedStats::default()
    };
    for (busy, records, executed) in results {
        stats.busy_ns.push(busy);
        stats.trace.extend(records);
        stats.executed += executed;
    }
    stats.trace.sort_by_key(|r| r.start_seq);
    Ok(stats)
}
