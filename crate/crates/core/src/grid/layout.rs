use super::GridError;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Index arithmetic shared by every field of a grid.
///
/// Unused axes of 1D/2D meshes have extent 1 and no ghosts. Rows along X are
/// padded to `px` points so that every row starts on an `alignment` boundary
/// and holds a whole number of vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub dims: usize,
    /// Interior points per axis.
    pub n: [usize; 3],
    pub radius: usize,
    /// Ghost layers per axis (`radius` on used axes, 0 otherwise).
    pub ghost: [usize; 3],
    /// Padded row length in points.
    pub px: usize,
    /// Allocated extent per axis (`px`, then interior plus ghosts).
    pub alloc: [usize; 3],
    pub alignment: usize,
    pub vector_size: usize,
}

pub fn padded_row(nx: usize, radius: usize, alignment: usize, vector_size: usize) -> usize {
    let a = alignment / 8;
    let unit = a / gcd(a, vector_size) * vector_size;
    (nx + 2 * radius).div_ceil(unit) * unit
}

impl Layout {
    pub fn new(
        dims: usize,
        n: [usize; 3],
        radius: usize,
        alignment: usize,
        vector_size: usize,
    ) -> Result<Layout, GridError> {
        if !(1..=3).contains(&dims) {
            return Err(GridError::Dims(dims));
        }
        if alignment < 8 || !alignment.is_power_of_two() {
            return Err(GridError::Alignment(alignment));
        }
        if vector_size == 0 || !vector_size.is_power_of_two() {
            return Err(GridError::VectorSize(vector_size));
        }
        let mut n = n;
        let mut ghost = [0; 3];
        for a in 0..3 {
            if a < dims {
                if n[a] == 0 {
                    return Err(GridError::Extent(a, 0));
                }
                ghost[a] = radius;
            } else {
                n[a] = 1;
            }
        }
        let px = padded_row(n[0], radius, alignment, vector_size);
        let alloc = [px, n[1] + 2 * ghost[1], n[2] + 2 * ghost[2]];
        alloc
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .and_then(|p| p.checked_mul(8 * 16))
            .ok_or(GridError::Overflow)?;
        Ok(Layout {
            dims,
            n,
            radius,
            ghost,
            px,
            alloc,
            alignment,
            vector_size,
        })
    }

    /// Allocated points per buffer (components not included).
    pub fn points(&self) -> usize {
        self.alloc[0] * self.alloc[1] * self.alloc[2]
    }

    pub fn interior_points(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// Point stride of an axis.
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.px,
            _ => self.px * self.alloc[1],
        }
    }

    /// Point index of interior coordinates; negative values address ghosts.
    #[inline]
    pub fn linear_index(&self, i: isize, j: isize, k: isize) -> usize {
        let (gx, gy, gz) = (
            self.ghost[0] as isize,
            self.ghost[1] as isize,
            self.ghost[2] as isize,
        );
        debug_assert!(i + gx >= 0 && ((i + gx) as usize) < self.px);
        debug_assert!(j + gy >= 0 && ((j + gy) as usize) < self.alloc[1]);
        debug_assert!(k + gz >= 0 && ((k + gz) as usize) < self.alloc[2]);
        (((k + gz) as usize * self.alloc[1] + (j + gy) as usize) * self.px) + (i + gx) as usize
    }

    /// Checked variant for callers that cannot guarantee the range.
    pub fn try_index(&self, p: [isize; 3]) -> Option<usize> {
        for a in 0..3 {
            let lo = -(self.ghost[a] as isize);
            let hi = if a == 0 {
                (self.px - self.ghost[0]) as isize
            } else {
                (self.n[a] + self.ghost[a]) as isize
            };
            if p[a] < lo || p[a] >= hi {
                return None;
            }
        }
        Some(self.linear_index(p[0], p[1], p[2]))
    }

    /// Point index of the first allocated cell of a row (padding offset 0).
    pub fn row_start(&self, j: isize, k: isize) -> usize {
        self.linear_index(-(self.ghost[0] as isize), j, k)
    }

    /// Whether point indices along `axis` are interior.
    pub fn axis_used(&self, axis: usize) -> bool {
        axis < self.dims
    }
}
