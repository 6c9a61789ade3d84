//! Padded, aligned, haloed field storage and the blocking planner.

mod blocking;
mod buffer;
mod layout;
mod store;

pub use blocking::{
    block_ranges, derive_blocking, derive_blocking_extents, max_blocks, partition, BlockingPlan,
};
pub use buffer::AlignedBuf;
pub use layout::{padded_row, Layout};
pub use store::{create_grid, field_list, init_fields, layout_for, FieldStore, GridStore, RawGrid};

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("mesh dimensionality must be 1, 2 or 3, got {0}")]
    Dims(usize),
    #[error("alignment must be a power of two of at least 8 bytes, got {0}")]
    Alignment(usize),
    #[error("vector size must be a power of two, got {0}")]
    VectorSize(usize),
    #[error("axis {0} has invalid extent {1}")]
    Extent(usize, usize),
    #[error("grid extents overflow")]
    Overflow,
    #[error("allocation of {0} bytes failed")]
    Alloc(usize),
    #[error("block {0:?} is outside the plan")]
    Block([usize; 3]),
}

/// Bytes touched per point by the fused programs: both buffers of every field.
pub fn bytes_per_point(components: &[usize]) -> usize {
    components.iter().sum::<usize>() * 2 * 8
}
