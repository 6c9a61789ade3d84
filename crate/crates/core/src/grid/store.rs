use super::{AlignedBuf, GridError, Layout};
use crate::frontend::{MeshSpec, Problem};
use crate::numerics::bc;

#[derive(Clone, Debug)]
pub struct FieldStore {
    pub name: String,
    pub comps: usize,
    pub bufs: [AlignedBuf; 2],
}

/// Double-buffered storage for every field of a problem.
///
/// Components are interleaved: element `idx * comps + c` holds component `c`
/// of point `idx`.
#[derive(Clone, Debug)]
pub struct GridStore {
    pub layout: Layout,
    pub fields: Vec<FieldStore>,
    /// Global index of local interior point (0, 0, 0).
    pub offset: [usize; 3],
}

impl GridStore {
    pub fn new(layout: Layout, fields: &[(String, usize)]) -> Result<GridStore, GridError> {
        let points = layout.points();
        let mut out = Vec::with_capacity(fields.len());
        for (name, comps) in fields {
            let len = points.checked_mul(*comps).ok_or(GridError::Overflow)?;
            out.push(FieldStore {
                name: name.clone(),
                comps: *comps,
                bufs: [
                    AlignedBuf::zeroed(len, layout.alignment)?,
                    AlignedBuf::zeroed(len, layout.alignment)?,
                ],
            });
        }
        Ok(GridStore {
            layout,
            fields: out,
            offset: [0; 3],
        })
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn buffer(&self, field: usize, which: usize) -> &[f64] {
        &self.fields[field].bufs[which]
    }

    pub fn buffer_mut(&mut self, field: usize, which: usize) -> &mut [f64] {
        &mut self.fields[field].bufs[which]
    }

    /// Interior values of one buffer, X fastest, components interleaved.
    pub fn interior(&self, field: usize, which: usize) -> Vec<f64> {
        let l = &self.layout;
        let f = &self.fields[field];
        let buf = &f.bufs[which];
        let mut out = Vec::with_capacity(l.interior_points() * f.comps);
        for k in 0..l.n[2] as isize {
            for j in 0..l.n[1] as isize {
                let s = l.linear_index(0, j, k) * f.comps;
                out.extend_from_slice(&buf[s..s + l.n[0] * f.comps]);
            }
        }
        out
    }

    /// Writes interior values laid out as returned by [`GridStore::interior`].
    pub fn set_interior(&mut self, field: usize, which: usize, values: &[f64]) {
        let l = self.layout.clone();
        let comps = self.fields[field].comps;
        assert_eq!(values.len(), l.interior_points() * comps);
        let buf = &mut self.fields[field].bufs[which];
        let row = l.n[0] * comps;
        let mut src = values.chunks_exact(row);
        for k in 0..l.n[2] as isize {
            for j in 0..l.n[1] as isize {
                let s = l.linear_index(0, j, k) * comps;
                buf[s..s + row].copy_from_slice(src.next().expect("row count checked"));
            }
        }
    }

    pub fn raw(&mut self) -> RawGrid {
        RawGrid {
            layout: self.layout.clone(),
            ptrs: self
                .fields
                .iter_mut()
                .map(|f| {
                    let [a, b] = &mut f.bufs;
                    [a.as_mut_ptr(), b.as_mut_ptr()]
                })
                .collect(),
            comps: self.fields.iter().map(|f| f.comps).collect(),
        }
    }
}

/// Unchecked shared view of a [`GridStore`] for concurrent writers.
///
/// Every user must guarantee that concurrent writes touch disjoint cells and
/// that no cell is read while another lane writes it.
#[derive(Clone, Debug)]
pub struct RawGrid {
    pub layout: Layout,
    pub ptrs: Vec<[*mut f64; 2]>,
    pub comps: Vec<usize>,
}

// SAFETY: access discipline is delegated to the schedulers (disjoint blocks,
// dependency-ordered tasks); the pointers outlive every RawGrid by borrowing
// rules at the call sites.
unsafe impl Send for RawGrid {}
unsafe impl Sync for RawGrid {}

impl RawGrid {
    #[inline]
    pub fn ptr(&self, field: usize, which: usize) -> *mut f64 {
        self.ptrs[field][which]
    }
}

/// Layout for a problem's mesh (or a local part of it).
pub fn layout_for(
    mesh: &MeshSpec,
    extents: [usize; 3],
    acc: usize,
    alignment: usize,
    vector_size: usize,
) -> Result<Layout, GridError> {
    Layout::new(mesh.dims, extents, acc / 2, alignment, vector_size)
}

pub fn field_list(problem: &Problem) -> Vec<(String, usize)> {
    problem
        .fields
        .iter()
        .map(|f| (f.name.clone(), f.components()))
        .collect()
}

/// Evaluates initial conditions into buffer 0. Fields without an init stay 0.
pub fn init_fields(store: &mut GridStore, problem: &Problem) {
    let l = store.layout.clone();
    let off = store.offset;
    let h = [
        problem.mesh.spacing(0),
        problem.mesh.spacing(1),
        problem.mesh.spacing(2),
    ];
    for (fi, decl) in problem.fields.iter().enumerate() {
        let Some(init) = problem.init(&decl.name) else {
            continue;
        };
        let comps = decl.components();
        let buf = &mut store.fields[fi].bufs[0];
        for k in 0..l.n[2] {
            for j in 0..l.n[1] {
                for i in 0..l.n[0] {
                    let coords = [
                        (off[0] + i) as f64 * h[0],
                        if l.dims > 1 { (off[1] + j) as f64 * h[1] } else { 0.0 },
                        if l.dims > 2 { (off[2] + k) as f64 * h[2] } else { 0.0 },
                    ];
                    let idx = l.linear_index(i as isize, j as isize, k as isize);
                    for c in 0..comps {
                        let e = if init.exprs.len() == 1 {
                            &init.exprs[0]
                        } else {
                            &init.exprs[c]
                        };
                        buf[idx * comps + c] = e.eval(coords);
                    }
                }
            }
        }
    }
}

/// Allocates the whole-mesh grid, evaluates initial conditions into buffer 0
/// and fills its ghost layers.
pub fn create_grid(
    problem: &Problem,
    alignment: usize,
    vector_size: usize,
) -> Result<GridStore, GridError> {
    let layout = layout_for(
        &problem.mesh,
        problem.mesh.points,
        problem.numerics.acc,
        alignment,
        vector_size,
    )?;
    let mut store = GridStore::new(layout, &field_list(problem))?;
    init_fields(&mut store, problem);
    bc::apply_all(&mut store, 0, problem);
    Ok(store)
}
