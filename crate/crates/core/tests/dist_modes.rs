use std::time::Duration;

use fdflow::dist::{run_inprocess, DistConfig, DistMode, TransportKind};
use fdflow::exec::{ExecConfig, RunOptions, Simulation};
use fdflow::parse_problem;
use fdflow::snapshot::compare_snapshots;
use fdflow::Problem;

const ADV: &str = include_str!("../specs/advection2d.fd");
const HEAT: &str = include_str!("../specs/heat3d.fd");
const COUPLED: &str = include_str!("../specs/coupled2d.fd");

fn sequential(p: &Problem, steps: usize) -> fdflow::Snapshot {
    let mut s = Simulation::new(p, ExecConfig::default()).unwrap();
    s.run_sequential(steps, RunOptions::default()).unwrap();
    s.snapshot()
}

fn cfg(ranks: usize, mode: DistMode, threads: usize) -> DistConfig {
    DistConfig {
        ranks,
        mode,
        threads,
        comm_blocks: 2,
        trace: true,
        timeout: Duration::from_secs(30),
        ..DistConfig::default()
    }
}

fn check(src: &str, steps: usize, runs: &[(usize, DistMode, usize)]) {
    let p = parse_problem(src).unwrap();
    let reference = sequential(&p, steps);
    for &(ranks, mode, threads) in runs {
        for kind in [TransportKind::InProc, TransportKind::Socket] {
            let (snap, stats) = run_inprocess(&p, &cfg(ranks, mode, threads), steps, kind).unwrap();
            let rep = compare_snapshots(&reference, &snap, 0.0).unwrap();
            assert!(rep.pass, "{ranks} ranks {mode:?} x{threads} {kind:?}: {rep:?}");
            assert_eq!(stats.ranks.len(), ranks);
        }
    }
}

#[test]
fn advection_2x2_matches_single_rank() {
    check(
        ADV,
        10,
        &[
            (1, DistMode::Pure, 1),
            (2, DistMode::Pure, 1),
            (4, DistMode::Pure, 1),
            (4, DistMode::ForkJoin, 2),
            (4, DistMode::Task, 3),
        ],
    );
}

#[test]
fn heat_ranks_match_single_rank() {
    let src = HEAT.replace("nx=64 ny=64 nz=64", "nx=16 ny=16 nz=16");
    check(&src, 5, &[(2, DistMode::Pure, 1), (8, DistMode::Pure, 1), (2, DistMode::Task, 4)]);
}

#[test]
fn coupled_ranks_match_single_rank() {
    check(COUPLED, 6, &[(4, DistMode::Pure, 1), (2, DistMode::Task, 4), (6, DistMode::ForkJoin, 2)]);
}
