use std::ops::Range;

use crate::frontend::{BcRule, Problem};
use crate::grid::{BlockingPlan, RawGrid};
use crate::lowering::{Compiled, KernelProgram, Opcode, Operand};
use crate::numerics::{apply_face_raw, stencil_row};
use crate::Face;

/// Location of the first non-finite value found by a checked update.
#[derive(Clone, Debug, PartialEq)]
pub struct NonFinite {
    pub step: usize,
    pub field: String,
    pub point: [usize; 3],
    pub component: usize,
    pub value: f64,
}

impl std::fmt::Display for NonFinite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "non-finite value {} in field `{}` component {} at point ({}, {}, {}) after step {}",
            self.value,
            self.field,
            self.component,
            self.point[0],
            self.point[1],
            self.point[2],
            self.step + 1
        )
    }
}

/// Boundary rule of every field on every face.
#[derive(Clone, Debug)]
pub struct BcTable {
    pub rules: Vec<[BcRule; 6]>,
    pub names: Vec<String>,
}

impl BcTable {
    pub fn new(problem: &Problem) -> BcTable {
        BcTable {
            rules: problem
                .fields
                .iter()
                .map(|f| Face::ALL.map(|face| problem.bc(&f.name, face)))
                .collect(),
            names: problem.fields.iter().map(|f| f.name.clone()).collect(),
        }
    }
}

/// Per-lane register file holding one row of every computed register.
pub struct Lane {
    scratch: Vec<f64>,
    /// Start of each register's row in `scratch` (unused for `VAR`).
    offsets: [Vec<usize>; 2],
    ptrs: Vec<*const f64>,
    /// Field loaded by each `VAR` register.
    var_field: Vec<usize>,
    row: usize,
}

// SAFETY: the cached pointers are rebuilt for every row and never shared.
unsafe impl Send for Lane {}

fn offsets(p: &KernelProgram, row: usize) -> (Vec<usize>, usize) {
    let mut offs = Vec::with_capacity(p.regs.len());
    let mut total = 0;
    for (r, &d) in p.regs.iter().enumerate() {
        offs.push(total);
        let is_var = p
            .ops
            .iter()
            .any(|o| o.out == Some(r) && matches!(o.opcode, Opcode::Var { .. }));
        if !is_var {
            total += d * row;
        }
    }
    (offs, total)
}

impl Lane {
    pub fn new(c: &Compiled, row: usize) -> Lane {
        let (t, nt) = offsets(&c.time, row);
        let (a, na) = offsets(&c.alg, row);
        Lane {
            scratch: vec![0.0; nt.max(na)],
            offsets: [t, a],
            ptrs: vec![std::ptr::null(); c.time.regs.len().max(c.alg.regs.len())],
            var_field: vec![usize::MAX; c.time.regs.len().max(c.alg.regs.len())],
            row,
        }
    }
}

#[derive(Clone, Copy)]
enum Src {
    Imm(f64),
    Reg(*const f64, usize),
}

#[inline(always)]
unsafe fn binop(n: usize, d: usize, a: Src, b: Src, out: *mut f64, f: impl Fn(f64, f64) -> f64) {
    match (a, b) {
        (Src::Reg(pa, da), Src::Reg(pb, db)) if da == d && db == d => {
            for i in 0..n * d {
                *out.add(i) = f(*pa.add(i), *pb.add(i));
            }
        }
        (Src::Imm(x), Src::Reg(pb, db)) if db == d => {
            for i in 0..n * d {
                *out.add(i) = f(x, *pb.add(i));
            }
        }
        (Src::Reg(pa, da), Src::Imm(y)) if da == d => {
            for i in 0..n * d {
                *out.add(i) = f(*pa.add(i), y);
            }
        }
        _ => {
            let get = |s: Src, i: usize, c: usize| match s {
                Src::Imm(v) => v,
                Src::Reg(p, 1) => *p.add(i),
                Src::Reg(p, dd) => *p.add(i * dd + c),
            };
            for i in 0..n {
                for c in 0..d {
                    *out.add(i * d + c) = f(get(a, i, c), get(b, i, c));
                }
            }
        }
    }
}

/// Executes one program over the interior X range of row `(j, k)`.
///
/// `VAR` reads buffer `read`; closing ops write buffer `write`.
///
/// # Safety
/// The caller guarantees exclusive access to the written row cells and that
/// no lane writes the cells read here.
#[allow(clippy::too_many_arguments)]
unsafe fn run_row(
    p: &KernelProgram,
    group: usize,
    c: &Compiled,
    raw: &RawGrid,
    lane: &mut Lane,
    j: isize,
    k: isize,
    read: usize,
    write: usize,
) {
    let l = &raw.layout;
    let n = l.n[0];
    let base_pt = l.linear_index(0, j, k);
    let scratch = lane.scratch.as_mut_ptr();
    for op in &p.ops {
        let out = op.out.map(|r| scratch.add(lane.offsets[group][r]));
        let src = |o: &Operand, lane: &Lane| match *o {
            Operand::Imm(v) => Src::Imm(v),
            Operand::Reg(r) => Src::Reg(lane.ptrs[r], p.regs[r]),
        };
        match op.opcode {
            Opcode::Var { field } => {
                let r = op.out.expect("VAR has an output");
                lane.ptrs[r] = raw.ptr(field, read).add(base_pt * c.comps[field]);
                lane.var_field[r] = field;
            }
            Opcode::Const { value } => {
                let o = out.expect("CONST has an output");
                for i in 0..n {
                    *o.add(i) = value;
                }
                lane.ptrs[op.out.unwrap()] = o;
            }
            Opcode::Add | Opcode::Sub | Opcode::Times => {
                let o = out.expect("arithmetic has an output");
                let (a, b) = (src(&op.inputs[0], lane), src(&op.inputs[1], lane));
                match op.opcode {
                    Opcode::Add => binop(n, op.dims, a, b, o, |x, y| x + y),
                    Opcode::Sub => binop(n, op.dims, a, b, o, |x, y| x - y),
                    _ => binop(n, op.dims, a, b, o, |x, y| x * y),
                }
                lane.ptrs[op.out.unwrap()] = o;
            }
            Opcode::Der { .. } | Opcode::Lapla | Opcode::Grad | Opcode::Div => {
                let o = out.expect("stencil has an output");
                let f = lane.var_field[op.inputs[0].reg().expect("stencil input is a register")];
                let comps = c.comps[f];
                let fp = raw.ptr(f, read).add(base_pt * comps) as *const f64;
                let stride = |a: usize| (l.stride(a) * comps) as isize;
                match op.opcode {
                    Opcode::Der { axis, order } => {
                        let a = axis.index();
                        let w = &c.weights[order - 1][a];
                        for comp in 0..op.dims {
                            stencil_row(fp.add(comp), comps, stride(a), w, o.add(comp), op.dims, n, false);
                        }
                    }
                    Opcode::Lapla => {
                        for comp in 0..op.dims {
                            for a in 0..c.dims {
                                let w = &c.weights[1][a];
                                stencil_row(fp.add(comp), comps, stride(a), w, o.add(comp), op.dims, n, a > 0);
                            }
                        }
                    }
                    Opcode::Grad => {
                        for a in 0..c.dims {
                            let w = &c.weights[0][a];
                            stencil_row(fp, comps, stride(a), w, o.add(a), op.dims, n, false);
                        }
                    }
                    _ => {
                        for a in 0..c.dims {
                            let w = &c.weights[0][a];
                            stencil_row(fp.add(a), comps, stride(a), w, o, 1, n, a > 0);
                        }
                    }
                }
                lane.ptrs[op.out.unwrap()] = o;
            }
            Opcode::EulerUpdate { field } => {
                let comps = c.comps[field];
                let dst = raw.ptr(field, write).add(base_pt * comps);
                let u = lane.ptrs[op.inputs[0].reg().expect("u is a register")];
                let rhs = src(&op.inputs[1], lane);
                let dt = c.dt;
                match rhs {
                    Src::Reg(r, _) => {
                        for i in 0..n * comps {
                            *dst.add(i) = *u.add(i) + dt * *r.add(i);
                        }
                    }
                    Src::Imm(v) => {
                        for i in 0..n * comps {
                            *dst.add(i) = *u.add(i) + dt * v;
                        }
                    }
                }
            }
            Opcode::Store { field } => {
                let comps = c.comps[field];
                let dst = raw.ptr(field, write).add(base_pt * comps);
                match src(&op.inputs[0], lane) {
                    Src::Reg(r, _) => std::ptr::copy_nonoverlapping(r, dst, n * comps),
                    Src::Imm(v) => {
                        for i in 0..n * comps {
                            *dst.add(i) = v;
                        }
                    }
                }
            }
        }
    }
}

/// Scans the interior of a block in buffer `which` for non-finite values.
fn scan_block(
    c: &Compiled,
    raw: &RawGrid,
    names: &[String],
    fields: &[usize],
    ranges: &[Range<usize>; 3],
    which: usize,
    step: usize,
) -> Option<NonFinite> {
    let l = &raw.layout;
    for &f in fields {
        let comps = c.comps[f];
        for k in ranges[2].clone() {
            for j in ranges[1].clone() {
                let base = l.linear_index(0, j as isize, k as isize) * comps;
                for i in ranges[0].clone() {
                    for comp in 0..comps {
                        // SAFETY: interior cell of an allocated buffer.
                        let v = unsafe { *raw.ptr(f, which).add(base + i * comps + comp) };
                        if !v.is_finite() {
                            return Some(NonFinite {
                                step,
                                field: names[f].clone(),
                                point: [i, j, k],
                                component: comp,
                                value: v,
                            });
                        }
                    }
                }
            }
        }
    }
    None
}

/// Computes state `step + 1` of one block: the time program then the
/// algebraic program on each row.
///
/// # Safety
/// The block's interior in buffer `(step + 1) % 2` must not be accessed by
/// any other lane, and no lane may write what this block reads.
pub unsafe fn update_block(
    c: &Compiled,
    raw: &RawGrid,
    lane: &mut Lane,
    ranges: &[Range<usize>; 3],
    step: usize,
) {
    debug_assert!(lane.row >= raw.layout.n[0]);
    let (src, dst) = (step % 2, (step + 1) % 2);
    for k in ranges[2].clone() {
        for j in ranges[1].clone() {
            if !c.time.is_empty() {
                run_row(&c.time, 0, c, raw, lane, j as isize, k as isize, src, dst);
            }
            if !c.alg.is_empty() {
                run_row(&c.alg, 1, c, raw, lane, j as isize, k as isize, dst, dst);
            }
        }
    }
}

/// Evaluates the algebraic program in place on buffer `which`.
///
/// # Safety
/// As for [`update_block`], restricted to buffer `which`.
pub unsafe fn algebraic_block(
    c: &Compiled,
    raw: &RawGrid,
    lane: &mut Lane,
    ranges: &[Range<usize>; 3],
    which: usize,
) {
    if c.alg.is_empty() {
        return;
    }
    for k in ranges[2].clone() {
        for j in ranges[1].clone() {
            run_row(&c.alg, 1, c, raw, lane, j as isize, k as isize, which, which);
        }
    }
}

/// Non-finite check of the values a block update just wrote.
pub fn check_block(
    c: &Compiled,
    raw: &RawGrid,
    names: &[String],
    ranges: &[Range<usize>; 3],
    step: usize,
) -> Option<NonFinite> {
    let mut fields = c.time.fields_written();
    fields.extend(c.alg.fields_written());
    scan_block(c, raw, names, &fields, ranges, (step + 1) % 2, step)
}

/// Fills the ghost cells next to one block on the faces accepted by
/// `physical`.
///
/// # Safety
/// The ghost cells of this block must not be accessed concurrently, and the
/// interior cells copied from (own block, or the wrap-around block for
/// periodic faces) must be complete and not written concurrently.
pub unsafe fn boundary_block(
    bcs: &BcTable,
    raw: &RawGrid,
    plan: &BlockingPlan,
    id: [usize; 3],
    which: usize,
    physical: &dyn Fn(Face) -> bool,
) {
    let ranges = plan.ranges(id);
    for face in Face::ALL {
        let a = face.axis();
        if a >= raw.layout.dims || !physical(face) {
            continue;
        }
        let at_face = if face.is_max() {
            id[a] + 1 == plan.nbl[a]
        } else {
            id[a] == 0
        };
        if !at_face {
            continue;
        }
        for (f, rules) in bcs.rules.iter().enumerate() {
            apply_face_raw(raw, f, which, face, rules[face.index()], &ranges);
        }
    }
}
