use std::ops::Range;

use crate::frontend::{BcRule, Problem};
use crate::grid::{GridStore, RawGrid};
use crate::Face;

/// Fills the ghost layers of `face` for the points whose tangential
/// coordinates lie in `ranges` (the range of the face's own axis is ignored).
///
/// Dirichlet writes the constant, Neumann mirrors the interior
/// (`ghost[-k] = interior[k-1]`), periodic wraps from the opposite side
/// (`ghost[-k] = interior[n-k]`).
///
/// # Safety
/// No other lane may access the written ghost cells or, for copying rules,
/// write the interior cells they read, while this runs.
pub unsafe fn apply_face_raw(
    raw: &RawGrid,
    field: usize,
    which: usize,
    face: Face,
    rule: BcRule,
    ranges: &[Range<usize>; 3],
) {
    let l = &raw.layout;
    let a = face.axis();
    if a >= l.dims {
        return;
    }
    let n = l.n[a] as isize;
    let comps = raw.comps[field];
    let base = raw.ptr(field, which);
    let (t1, t2) = match a {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for layer in 1..=l.radius as isize {
        let (g, s) = match (face.is_max(), rule) {
            (false, BcRule::Neumann) => (-layer, layer - 1),
            (false, _) => (-layer, n - layer),
            (true, BcRule::Neumann) => (n - 1 + layer, n - layer),
            (true, _) => (n - 1 + layer, layer - 1),
        };
        for v in ranges[t2].clone() {
            for u in ranges[t1].clone() {
                let mut p = [0isize; 3];
                p[t1] = u as isize;
                p[t2] = v as isize;
                p[a] = g;
                let dst = l.linear_index(p[0], p[1], p[2]) * comps;
                match rule {
                    BcRule::Dirichlet(value) => {
                        for c in 0..comps {
                            *base.add(dst + c) = value;
                        }
                    }
                    BcRule::Neumann | BcRule::Periodic => {
                        p[a] = s;
                        let src = l.linear_index(p[0], p[1], p[2]) * comps;
                        for c in 0..comps {
                            *base.add(dst + c) = *base.add(src + c);
                        }
                    }
                }
            }
        }
    }
}

pub fn full_ranges(store: &GridStore) -> [Range<usize>; 3] {
    [0, 1, 2].map(|a| 0..store.layout.n[a])
}

/// Applies one face rule over the whole face.
pub fn apply_face(store: &mut GridStore, field: usize, which: usize, face: Face, rule: BcRule) {
    let ranges = full_ranges(store);
    let raw = store.raw();
    // SAFETY: `store` is borrowed mutably for the whole call.
    unsafe { apply_face_raw(&raw, field, which, face, rule, &ranges) }
}

/// Applies the problem's boundary rules on every face accepted by `filter`.
pub fn apply_faces(
    store: &mut GridStore,
    which: usize,
    problem: &Problem,
    mut filter: impl FnMut(Face) -> bool,
) {
    for fi in 0..store.fields.len() {
        let name = store.fields[fi].name.clone();
        for face in Face::ALL {
            if face.axis() < store.layout.dims && filter(face) {
                apply_face(store, fi, which, face, problem.bc(&name, face));
            }
        }
    }
}

pub fn apply_all(store: &mut GridStore, which: usize, problem: &Problem) {
    apply_faces(store, which, problem, |_| true);
}
