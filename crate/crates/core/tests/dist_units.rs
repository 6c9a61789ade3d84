mod common;

use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use fdflow::dist::{
    channel_endpoints, decompose, plan_for, run_inprocess, socket_pairs, DecompositionPlan, DistConfig,
    DistError, DistMode, Frame, FrameError, Transport, TransportKind, HEADER_BYTES,
};
use fdflow::dist::payload_len;
use fdflow::exec::{ExecConfig, RunOptions, Simulation, TaskKind};
use fdflow::grid::{GridStore, Layout};
use fdflow::parse_problem;
use fdflow::snapshot::compare_snapshots;
use fdflow::{Face, Problem, Snapshot};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn decomposition_examples() {
    assert_eq!(decompose(8, 3).unwrap(), [2, 2, 2]);
    assert_eq!(decompose(2, 3).unwrap(), [1, 1, 2]);
    assert_eq!(decompose(12, 3).unwrap(), [2, 2, 3]);
    assert_eq!(decompose(4, 2).unwrap(), [2, 2, 1]);
    assert_eq!(decompose(6, 1).unwrap(), [6, 1, 1]);
    assert!(decompose(0, 3).is_err());
}

/// Factorisations with the smallest spread, found by brute force.
fn best_spread(ranks: usize, dims: usize) -> usize {
    let mut best = usize::MAX;
    for a in 1..=ranks {
        for b in 1..=ranks {
            for c in 1..=ranks {
                let f = [a, b, c];
                if a * b * c != ranks || f[dims..].iter().any(|&x| x != 1) {
                    continue;
                }
                let used = &f[..dims];
                best = best.min(used.iter().max().unwrap() - used.iter().min().unwrap());
            }
        }
    }
    best
}

#[test]
fn decomposition_is_balanced_exhaustively() {
    for dims in 1..=3 {
        for ranks in 1..=64 {
            let f = decompose(ranks, dims).unwrap();
            assert_eq!(f.iter().product::<usize>(), ranks);
            assert!(f[dims..].iter().all(|&x| x == 1));
            let used = &f[..dims];
            assert!(used.windows(2).all(|w| w[0] <= w[1]), "{f:?}");
            let spread = used.iter().max().unwrap() - used.iter().min().unwrap();
            assert_eq!(spread, best_spread(ranks, dims), "{ranks} ranks in {dims}D: {f:?}");
        }
    }
}

#[test]
fn slabs_tile_the_mesh_evenly() {
    let plan = DecompositionPlan::new([3, 2, 2], [50, 31, 17], 3, [true; 3], 2).unwrap();
    let mut cells = 0;
    for r in 0..plan.ranks() {
        assert_eq!(plan.rank_at(plan.coords(r)), r);
        let e = plan.extents(r);
        cells += e.iter().product::<usize>();
        for a in 0..3 {
            let ideal = plan.points[a] / plan.nbg[a];
            assert!(e[a] == ideal || e[a] == ideal + 1);
        }
    }
    assert_eq!(cells, 50 * 31 * 17);
    assert_eq!(plan.neighbor(0, Face::XMin), Some(2));
    assert_eq!(plan.neighbor(0, Face::XMax), Some(1));
    assert_eq!(plan.local_wrap(), [false; 3]);
}

#[test]
fn decomposition_rejects_thin_slabs() {
    assert!(matches!(
        DecompositionPlan::new([8, 1, 1], [12, 1, 1], 1, [true; 3], 2),
        Err(DistError::Mesh(_))
    ));
    assert!(DecompositionPlan::new([1, 1, 2], [12, 12, 1], 2, [true; 3], 1).is_err());
    let p = parse_problem(include_str!("../specs/advection2d.fd")).unwrap();
    let cfg = DistConfig {
        ranks: 4,
        nbg: Some([4, 2, 1]),
        ..DistConfig::default()
    };
    assert!(matches!(plan_for(&p, &cfg), Err(DistError::Decompose(_))));
}

#[test]
fn face_payload_size() {
    let layout = Layout::new(3, [16, 16, 16], 4, 64, 8).unwrap();
    let mut store = GridStore::new(layout, &[("T".to_string(), 1)]).unwrap();
    let raw = store.raw();
    assert_eq!(payload_len(&raw, &[0..16, 0..16]), 16 * 16 * 4);
}

fn sample_frame() -> Frame {
    Frame {
        step: 42,
        field: 3,
        face: Face::YMax.index() as u32,
        range: [0, 4, 2, 6],
        payload: vec![1.5, -0.0, f64::MAX, 1e-300],
    }
}

#[test]
fn frame_round_trip() {
    let f = sample_frame();
    let bytes = f.encode();
    assert_eq!(bytes.len(), 8 + HEADER_BYTES + 4 * 8);
    let back = Frame::decode(&bytes).unwrap();
    assert_eq!(back, f);
    assert_eq!(back.payload[1].to_bits(), (-0.0f64).to_bits());
    let mut stream: &[u8] = &[bytes.clone(), bytes].concat();
    assert_eq!(Frame::read_from(&mut stream).unwrap(), Some(f.clone()));
    assert_eq!(Frame::read_from(&mut stream).unwrap(), Some(f));
    assert!(Frame::read_from(&mut stream).unwrap().is_none());
}

#[test]
fn corrupt_frames_are_rejected() {
    let bytes = sample_frame().encode();
    assert!(Frame::decode(&bytes[..bytes.len() - 3]).is_err());
    assert!(Frame::decode(&bytes[..5]).is_err());
    let mut bad = bytes.clone();
    bad[..8].copy_from_slice(&u64::MAX.to_le_bytes());
    assert!(matches!(Frame::read_from(&mut &bad[..]), Err(FrameError::Length(_))));
    let mut odd = bytes.clone();
    odd[..8].copy_from_slice(&((HEADER_BYTES + 5) as u64).to_le_bytes());
    assert!(Frame::read_from(&mut &odd[..]).is_err());
    let truncated = &bytes[..bytes.len() - 8];
    assert!(Frame::read_from(&mut &truncated[..]).is_err());
}

fn transports() -> Vec<(&'static str, Vec<Box<dyn Transport>>)> {
    let inproc = channel_endpoints(2)
        .into_iter()
        .map(|e| Box::new(e) as Box<dyn Transport>)
        .collect();
    let socket = socket_pairs(2)
        .unwrap()
        .into_iter()
        .map(|e| Box::new(e) as Box<dyn Transport>)
        .collect();
    vec![("inproc", inproc), ("socket", socket)]
}

#[test]
fn transports_deliver_in_order() {
    for (name, eps) in transports() {
        assert_eq!(eps[0].size(), 2);
        for i in 0..100u64 {
            let f = Frame {
                step: i,
                payload: vec![i as f64],
                ..sample_frame()
            };
            eps[0].send(1, &f).unwrap();
        }
        for i in 0..100u64 {
            let (from, f) = eps[1].recv_timeout(Duration::from_secs(5)).unwrap().expect(name);
            assert_eq!(from, 0);
            assert_eq!(f.step, i, "{name}");
            assert_eq!(f.payload, vec![i as f64]);
        }
        assert!(eps[1].try_recv().unwrap().is_none());
        assert!(eps[1].recv_timeout(Duration::from_millis(20)).unwrap().is_none());
    }
}

#[test]
fn transports_echo_payloads() {
    for (name, eps) in transports() {
        let payload: Vec<f64> = (0..1024).map(|i| (i as f64).sqrt() - 7.25).collect();
        let f = Frame {
            payload: payload.clone(),
            ..sample_frame()
        };
        thread::scope(|s| {
            let peer = &eps[1];
            s.spawn(move || {
                let (from, got) = peer.recv_timeout(Duration::from_secs(5)).unwrap().unwrap();
                peer.send(from, &got).unwrap();
            });
            eps[0].send(1, &f).unwrap();
            let (from, back) = eps[0].recv_timeout(Duration::from_secs(5)).unwrap().unwrap();
            assert_eq!(from, 1);
            assert_eq!(back, f, "{name}");
        });
        assert!(eps[0].send(7, &f).is_err());
    }
}

fn sequential(p: &Problem, steps: usize) -> Snapshot {
    let mut s = Simulation::new(p, ExecConfig::default()).unwrap();
    s.run_sequential(steps, RunOptions::default()).unwrap();
    s.snapshot()
}

#[test]
fn hybrid_task_ranks_overlap_communication_with_updates() {
    let p = parse_problem(include_str!("../specs/advection2d.fd")).unwrap();
    let cfg = DistConfig {
        ranks: 4,
        mode: DistMode::Task,
        threads: 4,
        comm_blocks: 1,
        trace: true,
        exec: ExecConfig {
            l3_size: 64 << 10,
            ..ExecConfig::default()
        },
        timeout: Duration::from_secs(30),
        ..DistConfig::default()
    };
    let steps = 20;
    let (snap, stats) = run_inprocess(&p, &cfg, steps, TransportKind::InProc).unwrap();
    assert!(compare_snapshots(&sequential(&p, steps), &snap, 0.0).unwrap().pass);
    let mut overlapped = 0;
    for r in &stats.ranks {
        let trace = &r.run.trace;
        let comm: Vec<_> = trace
            .iter()
            .filter(|t| matches!(t.kind, TaskKind::CSend | TaskKind::CRecv))
            .collect();
        assert_eq!(comm.len(), r.c_tasks);
        assert!(!comm.is_empty());
        assert_eq!(
            trace.iter().filter(|t| t.kind == TaskKind::A).count(),
            r.run.a_tasks
        );
        assert!(trace.iter().all(|t| t.rank == r.rank));
        // A communication task that is in flight while an update runs, or
        // an update of a later step finishing before an earlier exchange.
        for c in &comm {
            if trace.iter().any(|a| {
                a.kind == TaskKind::A
                    && ((a.start_seq < c.end_seq && c.start_seq < a.end_seq)
                        || (a.step > c.step && a.end_seq < c.end_seq))
            }) {
                overlapped += 1;
            }
        }
    }
    assert!(overlapped > 0, "no communication overlapped with computation");
}

/// Random distributed runs finish within a watchdog and match one rank.
#[test]
fn random_distributed_runs_terminate_and_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd157);
    let mut done = 0;
    while done < 40 {
        let case = common::random_dist_case(&mut rng);
        let p = parse_problem(&case.spec).unwrap();
        let cfg = DistConfig {
            ranks: case.ranks,
            mode: [DistMode::Pure, DistMode::ForkJoin, DistMode::Task][case.mode],
            threads: case.threads,
            comm_blocks: case.comm_blocks,
            timeout: Duration::from_secs(20),
            ..DistConfig::default()
        };
        if plan_for(&p, &cfg).is_err() {
            continue;
        }
        let kind = if case.sockets {
            TransportKind::Socket
        } else {
            TransportKind::InProc
        };
        let (tx, rx) = mpsc::channel();
        let (p2, cfg2, steps) = (p.clone(), cfg.clone(), case.steps);
        thread::spawn(move || {
            let _ = tx.send(run_inprocess(&p2, &cfg2, steps, kind));
        });
        let result = rx
            .recv_timeout(Duration::from_secs(60))
            .unwrap_or_else(|_| panic!("watchdog expired\n{cfg:?}\n{}", case.spec));
        let (snap, _) = result.unwrap();
        let cmp = compare_snapshots(&sequential(&p, case.steps), &snap, 0.0).unwrap();
        assert!(cmp.pass, "{cfg:?} {kind:?}\n{}", case.spec);
        done += 1;
    }
}
