/// Components of point `idx` in an interleaved buffer.
#[inline]
pub fn var(buf: &[f64], idx: usize, dims: usize) -> &[f64] {
    &buf[idx * dims..idx * dims + dims]
}

/// `Σ_k w[k] · v(idx + (k - r) · stride)` for component `comp`, summed from
/// the lowest offset upwards. `stride` is in points.
#[inline]
pub fn apply_stencil(
    buf: &[f64],
    idx: usize,
    stride: usize,
    comps: usize,
    comp: usize,
    weights: &[f64],
) -> f64 {
    let r = weights.len() / 2;
    let at = |k: usize| buf[(idx + k * stride - r * stride) * comps + comp];
    let mut s = weights[0] * at(0);
    for (k, w) in weights.iter().enumerate().skip(1) {
        s += w * at(k);
    }
    s
}

#[inline]
pub fn euler_update(u: f64, dt: f64, rhs: f64) -> f64 {
    u + dt * rhs
}

#[inline(always)]
unsafe fn row<const K: usize, const ACC: bool>(
    p: *const f64,
    step: usize,
    stride: isize,
    w: &[f64],
    out: *mut f64,
    ostep: usize,
    n: usize,
) {
    let w: &[f64; K] = w.try_into().expect("stencil width matches K");
    let back = (K / 2) as isize * stride;
    for i in 0..n {
        let q = p.add(i * step).offset(-back);
        let mut s = w[0] * *q;
        for (k, wk) in w.iter().enumerate().skip(1) {
            s += wk * *q.offset(k as isize * stride);
        }
        let o = out.add(i * ostep);
        if ACC {
            *o += s;
        } else {
            *o = s;
        }
    }
}

/// Applies a stencil along a row of `n` points.
///
/// `p` addresses the wanted component of the first point, consecutive points
/// are `step` elements apart, and neighbours along the stencil axis are
/// `stride` elements apart. Results go to `out[i * ostep]`, overwritten or
/// (with `accumulate`) added to the value already there.
///
/// # Safety
/// Every element `p + i*step + o*stride` for `|o| <= r` and every
/// `out + i*ostep` for `i < n` must be valid; `out` must not overlap the
/// inputs.
pub unsafe fn stencil_row(
    p: *const f64,
    step: usize,
    stride: isize,
    w: &[f64],
    out: *mut f64,
    ostep: usize,
    n: usize,
    accumulate: bool,
) {
    macro_rules! go {
        ($k:literal) => {
            if accumulate {
                row::<$k, true>(p, step, stride, w, out, ostep, n)
            } else {
                row::<$k, false>(p, step, stride, w, out, ostep, n)
            }
        };
    }
    match w.len() {
        3 => go!(3),
        5 => go!(5),
        7 => go!(7),
        9 => go!(9),
        k => panic!("unsupported stencil width {k}"),
    }
}
