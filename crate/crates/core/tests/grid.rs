mod common;

use common::checks::check_plan;
use fdflow::exec::{ExecConfig, Simulation};
use fdflow::grid::{
    block_ranges, bytes_per_point, create_grid, derive_blocking_extents, padded_row,
    partition, BlockingPlan, Layout,
};
use fdflow::parse_problem;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn rows_are_padded_to_whole_vectors() {
    assert_eq!(padded_row(99_999, 1, 64, 8), 100_008);
    assert_eq!(padded_row(299, 1, 64, 8), 304);
    assert_eq!(padded_row(301, 1, 64, 8), 304);
    assert_eq!(padded_row(6, 1, 64, 8), 8);
    // 32-byte alignment with 8-wide vectors still rounds to 8 points.
    assert_eq!(padded_row(10, 1, 32, 8), 16);
    // 128-byte alignment needs 16-point rows.
    assert_eq!(padded_row(10, 1, 128, 4), 16);
}

#[test]
fn layout_rejects_bad_parameters() {
    assert!(Layout::new(4, [8, 8, 8], 1, 64, 8).is_err());
    assert!(Layout::new(3, [8, 0, 8], 1, 64, 8).is_err());
    assert!(Layout::new(3, [8, 8, 8], 1, 48, 8).is_err());
    assert!(Layout::new(3, [8, 8, 8], 1, 64, 3).is_err());
}

#[test]
fn linear_index_strides() {
    let l = Layout::new(3, [20, 12, 9], 2, 64, 8).unwrap();
    assert_eq!(l.px, 24);
    assert_eq!(l.alloc, [24, 16, 13]);
    let base = l.linear_index(3, 4, 5);
    assert_eq!(l.linear_index(4, 4, 5) - base, 1);
    assert_eq!(l.linear_index(3, 5, 5) - base, l.px);
    assert_eq!(l.linear_index(3, 4, 6) - base, l.px * l.alloc[1]);
    assert_eq!(l.stride(1), l.px);
    assert_eq!(l.linear_index(-2, -2, -2), 0);
    assert_eq!(l.try_index([0, -3, 0]), None);
    assert_eq!(l.try_index([0, 12 + 2, 0]), None);
    assert!(l.try_index([0, 12 + 1, 0]).is_some());
}

#[test]
fn unused_axes_have_no_ghosts() {
    let l = Layout::new(1, [100, 7, 7], 3, 64, 8).unwrap();
    assert_eq!(l.n, [100, 1, 1]);
    assert_eq!(l.ghost, [3, 0, 0]);
    assert_eq!(l.alloc[1..], [1, 1]);
}

/// Every allocated row of every field in both buffers of a 32³ grid starts
/// on an alignment boundary.
#[test]
fn every_row_is_aligned() {
    for acc in [2, 4, 8] {
        let p = parse_problem(&format!(
            "mesh 3d nx=32 ny=32 nz=32 lx=1 ly=1 lz=1\nfield u vector<3>\nfield T scalar\n\
eq dt(T) = lapla(T)\neq dt(u) = lapla(u)\ntime dt=0.00001 steps=1\nnumerics acc={acc}\n"
        ))
        .unwrap();
        let store = create_grid(&p, 64, 8).unwrap();
        let l = &store.layout;
        for f in 0..store.fields.len() {
            let comps = store.fields[f].comps;
            for which in 0..2 {
                let base = store.buffer(f, which).as_ptr() as usize;
                let r = l.radius as isize;
                for k in -r..32 + r {
                    for j in -r..32 + r {
                        let addr = base + l.row_start(j, k) * comps * 8;
                        assert_eq!(addr % 64, 0, "acc {acc} field {f} row {j},{k}");
                    }
                }
            }
        }
    }
}

#[test]
fn snapshot_excludes_ghosts_and_padding() {
    let p = parse_problem(
        "mesh 2d nx=13 ny=7 lx=1 ly=1\nfield u vector<2>\neq dt(u) = lapla(u)\ninit u = (x, y)\n\
time dt=0.00001 steps=1\nnumerics acc=4\n",
    )
    .unwrap();
    let sim = Simulation::new(&p, ExecConfig::default()).unwrap();
    let snap = sim.snapshot();
    let f = &snap.fields[0];
    assert_eq!(f.extents, [13, 7, 1]);
    assert_eq!(f.data.len(), 13 * 7 * 2);
    let h = 1.0 / 13.0;
    assert_eq!(f.data[2 * 5], 5.0 * h);
    assert_eq!(f.data[2 * 13 + 1], 1.0 / 7.0);
}

#[test]
fn partition_examples() {
    assert_eq!(partition(7, 2, 0), 0..4);
    assert_eq!(partition(7, 2, 1), 4..7);
    assert_eq!(partition(10, 3, 2), 7..10);
}

proptest! {
    #[test]
    fn partition_covers_without_overlap(n in 1usize..500, parts in 1usize..40) {
        let parts = parts.min(n);
        let mut next = 0;
        let mut sizes = Vec::new();
        for i in 0..parts {
            let r = partition(n, parts, i);
            prop_assert_eq!(r.start, next);
            next = r.end;
            sizes.push(r.len());
        }
        prop_assert_eq!(next, n);
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }
}

#[test]
fn block_ranges_examples() {
    let plan = BlockingPlan::with_nbl([301, 201, 201], [1, 4, 3], 1, 304, 16);
    assert_eq!(block_ranges(&plan, [0, 0, 0]).unwrap(), [0..301, 0..51, 0..67]);
    assert_eq!(block_ranges(&plan, [0, 3, 2]).unwrap(), [0..301, 151..201, 134..201]);
    assert!(block_ranges(&plan, [0, 4, 0]).is_err());
    assert!(block_ranges(&plan, [1, 0, 0]).is_err());
    assert_eq!(plan.count(), 12);
    for b in 0..plan.count() {
        assert_eq!(plan.linear(plan.block_id(b)), b);
    }
}

#[test]
fn one_dimensional_grid_is_one_block() {
    let plan = derive_blocking_extents(1, [1000, 1, 1], 1, 1008, 1, 64, 16);
    assert_eq!(plan.nbl, [1, 1, 1]);
}

/// Reference planner: same rule, written against plain tuples.
fn reference_plan(
    n: [usize; 3],
    r: usize,
    px: usize,
    l3: usize,
    threads: usize,
    bpp: usize,
) -> ((usize, usize), bool) {
    let (my, mz) = ((n[1] / r).max(1), (n[2] / r).max(1));
    let (mut y, mut z) = (1usize, 1usize);
    loop {
        let by = n[1].div_ceil(y);
        let bz = n[2].div_ceil(z);
        let ws = (bpp * px * by * bz) as u128;
        let ok_threads = threads == 1 || y * z >= threads;
        if ok_threads && threads as u128 * ws <= l3 as u128 {
            return ((y, z), false);
        }
        let z_first = bz >= by;
        if z_first && z < mz {
            z = (z * 2).min(mz);
        } else if !z_first && y < my {
            y = (y * 2).min(my);
        } else if z < mz {
            z = (z * 2).min(mz);
        } else if y < my {
            y = (y * 2).min(my);
        } else {
            return ((y, z), true);
        }
    }
}

#[test]
fn large_heat_grid_plan() {
    let n = [301, 201, 201];
    let px = padded_row(301, 1, 64, 8);
    let bpp = bytes_per_point(&[1]);
    for threads in [1, 2, 4, 8, 16, 64] {
        let plan = derive_blocking_extents(3, n, 1, px, 33 << 20, threads, bpp);
        let ((y, z), fallback) = reference_plan(n, 1, px, 33 << 20, threads, bpp);
        assert_eq!(plan.nbl, [1, y, z], "threads {threads}");
        assert_eq!(plan.fallback, fallback);
        assert!(threads * plan.working_set <= 33 << 20);
        assert!(plan.count() >= threads);
    }
    let plan = derive_blocking_extents(3, n, 1, px, 33 << 20, 1, bpp);
    // A single block needs 16 B × 304 × 201 × 201 ≈ 196 MB > 33 MB.
    assert!(plan.count() > 1);
}

#[test]
fn blocking_satisfies_constraints_when_possible() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb10c);
    let (mut sat, mut unsat) = (0, 0);
    while sat < 1000 {
        let dims = rng.gen_range(1..=3);
        let n = [
            rng.gen_range(4..400),
            if dims > 1 { rng.gen_range(1..300) } else { 1 },
            if dims > 2 { rng.gen_range(1..300) } else { 1 },
        ];
        let r = rng.gen_range(1..=4);
        let px = padded_row(n[0], r, 64, 8);
        let threads = rng.gen_range(1..=64);
        let bpp = 16 * rng.gen_range(1..=6);
        let l3 = rng.gen_range(1usize << 16..64 << 20);
        if check_plan(dims, n, r, px, l3, threads, bpp) {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    assert!(unsat > 0, "sample never exercised the fallback");
}
