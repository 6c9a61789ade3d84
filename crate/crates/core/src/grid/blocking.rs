use std::ops::Range;

use super::{GridError, Layout};

/// 2.5D blocking of the interior: X is streamed (`nbl[0] == 1`), Y and Z are cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockingPlan {
    pub n: [usize; 3],
    pub nbl: [usize; 3],
    /// Largest block extent per axis.
    pub bs: [usize; 3],
    pub working_set: usize,
    /// True when no cut could satisfy the thread/cache targets.
    pub fallback: bool,
}

/// Most blocks an axis of `n` points may be cut into so that every block
/// spans at least `radius` points (stencils then reach face neighbours only).
pub fn max_blocks(n: usize, radius: usize) -> usize {
    (n / radius.max(1)).max(1)
}

/// Near-equal split of `n` points into `parts`; the first `n % parts` parts
/// get one extra point.
pub fn partition(n: usize, parts: usize, idx: usize) -> Range<usize> {
    let base = n / parts;
    let rem = n % parts;
    let start = idx * base + idx.min(rem);
    let len = base + usize::from(idx < rem);
    start..start + len
}

fn working_set(bpp: usize, px: usize, bs: [usize; 3]) -> usize {
    bpp.saturating_mul(px)
        .saturating_mul(bs[1])
        .saturating_mul(bs[2])
}

impl BlockingPlan {
    /// Plan with a fixed block count, clamped to `1..=max_blocks` per axis.
    pub fn with_nbl(
        n: [usize; 3],
        nbl: [usize; 3],
        radius: usize,
        px: usize,
        bpp: usize,
    ) -> BlockingPlan {
        let nbl = [
            1,
            nbl[1].clamp(1, max_blocks(n[1], radius)),
            nbl[2].clamp(1, max_blocks(n[2], radius)),
        ];
        let bs = [n[0], n[1].div_ceil(nbl[1]), n[2].div_ceil(nbl[2])];
        BlockingPlan {
            n,
            nbl,
            bs,
            working_set: working_set(bpp, px, bs),
            fallback: false,
        }
    }

    pub fn count(&self) -> usize {
        self.nbl.iter().product()
    }

    /// Block ids in execution order (X fastest, then Y, then Z).
    pub fn blocks(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        (0..self.count()).map(|b| self.block_id(b))
    }

    pub fn block_id(&self, linear: usize) -> [usize; 3] {
        let x = linear % self.nbl[0];
        let y = (linear / self.nbl[0]) % self.nbl[1];
        let z = linear / (self.nbl[0] * self.nbl[1]);
        [x, y, z]
    }

    pub fn linear(&self, id: [usize; 3]) -> usize {
        (id[2] * self.nbl[1] + id[1]) * self.nbl[0] + id[0]
    }

    pub fn ranges(&self, id: [usize; 3]) -> [Range<usize>; 3] {
        [0, 1, 2].map(|a| partition(self.n[a], self.nbl[a], id[a]))
    }
}

/// Derives the block counts for a grid.
///
/// Starting from one block, the axis (Y or Z) with the larger current block
/// extent is cut in two (ties go to Z) until there are at least `threads`
/// blocks (when `threads > 1`) and `threads` working sets fit in `l3`. An
/// axis is not cut below `radius` points per block. If no axis can be cut any
/// further the finest plan is kept and flagged as a fallback.
pub fn derive_blocking(layout: &Layout, l3: usize, threads: usize, bpp: usize) -> BlockingPlan {
    derive_blocking_extents(layout.dims, layout.n, layout.radius, layout.px, l3, threads, bpp)
}

pub fn derive_blocking_extents(
    dims: usize,
    n: [usize; 3],
    radius: usize,
    px: usize,
    l3: usize,
    threads: usize,
    bpp: usize,
) -> BlockingPlan {
    let threads = threads.max(1);
    let mut plan = BlockingPlan::with_nbl(n, [1, 1, 1], radius, px, bpp);
    if dims == 1 {
        return plan;
    }
    let cuttable =
        |axis: usize, nbl: [usize; 3]| axis < dims && nbl[axis] < max_blocks(n[axis], radius);
    loop {
        let enough = threads == 1 || plan.nbl[1] * plan.nbl[2] >= threads;
        let fits = threads.saturating_mul(plan.working_set) <= l3;
        if enough && fits {
            return plan;
        }
        let prefer = if plan.bs[1] > plan.bs[2] { 1 } else { 2 };
        let other = 3 - prefer;
        let axis = if cuttable(prefer, plan.nbl) {
            prefer
        } else if cuttable(other, plan.nbl) {
            other
        } else {
            plan.fallback = true;
            return plan;
        };
        let mut nbl = plan.nbl;
        nbl[axis] *= 2;
        plan = BlockingPlan::with_nbl(n, nbl, radius, px, bpp);
    }
}

pub fn block_ranges(plan: &BlockingPlan, id: [usize; 3]) -> Result<[Range<usize>; 3], GridError> {
    if (0..3).any(|a| id[a] >= plan.nbl[a]) {
        return Err(GridError::Block(id));
    }
    Ok(plan.ranges(id))
}
