//! Interior field values detached from the padded grid, with the binary dump
//! format and tolerance-based comparison.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::grid::GridStore;

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSnapshot {
    pub name: String,
    pub comps: usize,
    pub extents: [usize; 3],
    /// Interior values, X fastest, components interleaved per point.
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub dt: f64,
    pub fields: Vec<FieldSnapshot>,
}

#[derive(Debug, Error)]
pub enum DumpError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed dump header: {0}")]
    Header(String),
}

impl Snapshot {
    pub fn from_store(store: &GridStore, which: usize, step: usize, dt: f64) -> Snapshot {
        Snapshot {
            step,
            dt,
            fields: (0..store.fields.len())
                .map(|f| FieldSnapshot {
                    name: store.fields[f].name.clone(),
                    comps: store.fields[f].comps,
                    extents: store.layout.n,
                    data: store.interior(f, which),
                })
                .collect(),
        }
    }

    pub fn field(&self, name: &str) -> Option<&FieldSnapshot> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Writes one header line per field followed by its raw little-endian
    /// `f64` values.
    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        for f in &self.fields {
            writeln!(
                w,
                "field {} dims={} extents={}x{}x{} step={} dt={:?}",
                f.name, f.comps, f.extents[0], f.extents[1], f.extents[2], self.step, self.dt
            )?;
            let mut bytes = Vec::with_capacity(f.data.len() * 8);
            for v in &f.data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&bytes)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        out
    }

    pub fn read_from(r: &mut impl BufRead) -> Result<Snapshot, DumpError> {
        let mut snap = Snapshot {
            step: 0,
            dt: 0.0,
            fields: Vec::new(),
        };
        loop {
            let mut line = String::new();
            if r.read_line(&mut line)? == 0 {
                break;
            }
            let line = line.trim_end_matches('\n');
            let bad = || DumpError::Header(line.to_string());
            let mut parts = line.split(' ');
            if parts.next() != Some("field") {
                return Err(bad());
            }
            let name = parts.next().ok_or_else(bad)?.to_string();
            let mut comps = None;
            let mut extents = None;
            for p in parts {
                let (k, v) = p.split_once('=').ok_or_else(bad)?;
                match k {
                    "dims" => comps = Some(v.parse::<usize>().map_err(|_| bad())?),
                    "extents" => {
                        let e: Vec<usize> = v
                            .split('x')
                            .map(|s| s.parse::<usize>())
                            .collect::<Result<_, _>>()
                            .map_err(|_| bad())?;
                        if e.len() != 3 {
                            return Err(bad());
                        }
                        extents = Some([e[0], e[1], e[2]]);
                    }
                    "step" => snap.step = v.parse().map_err(|_| bad())?,
                    "dt" => snap.dt = v.parse().map_err(|_| bad())?,
                    _ => return Err(bad()),
                }
            }
            let comps = comps.ok_or_else(bad)?;
            let extents = extents.ok_or_else(bad)?;
            let count = extents.iter().product::<usize>() * comps;
            let mut bytes = vec![0u8; count * 8];
            r.read_exact(&mut bytes)?;
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            snap.fields.push(FieldSnapshot {
                name,
                comps,
                extents,
                data,
            });
        }
        Ok(snap)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Snapshot, DumpError> {
        Snapshot::read_from(&mut io::Cursor::new(bytes))
    }
}

/// Outcome of comparing two snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub pass: bool,
    pub tol: f64,
    pub max_abs: f64,
    pub max_rel: f64,
    /// First value exceeding the tolerance: field, point, component.
    pub first_mismatch: Option<(String, [usize; 3], usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("field sets differ: {0}")]
    Fields(String),
    #[error("field `{0}` has different extents or components")]
    Extent(String),
}

/// Compares field by field. With `tol == 0` values must be bitwise equal;
/// otherwise each absolute difference must be at most `tol`.
pub fn compare_snapshots(a: &Snapshot, b: &Snapshot, tol: f64) -> Result<CompareReport, CompareError> {
    let names = |s: &Snapshot| s.fields.iter().map(|f| f.name.clone()).collect::<Vec<_>>();
    if names(a) != names(b) {
        return Err(CompareError::Fields(format!("{:?} vs {:?}", names(a), names(b))));
    }
    let mut rep = CompareReport {
        pass: true,
        tol,
        max_abs: 0.0,
        max_rel: 0.0,
        first_mismatch: None,
    };
    for (fa, fb) in a.fields.iter().zip(&b.fields) {
        if fa.extents != fb.extents || fa.comps != fb.comps {
            return Err(CompareError::Extent(fa.name.clone()));
        }
        for (i, (x, y)) in fa.data.iter().zip(&fb.data).enumerate() {
            let abs = (x - y).abs();
            let rel = if y.abs() > 0.0 { abs / y.abs() } else { abs };
            let abs_m = if abs.is_nan() { f64::INFINITY } else { abs };
            rep.max_abs = rep.max_abs.max(abs_m);
            rep.max_rel = rep.max_rel.max(if rel.is_nan() { f64::INFINITY } else { rel });
            let bad = if tol == 0.0 {
                x.to_bits() != y.to_bits()
            } else {
                !(abs <= tol)
            };
            if bad {
                rep.pass = false;
                if rep.first_mismatch.is_none() {
                    let p = i / fa.comps;
                    let e = fa.extents;
                    rep.first_mismatch = Some((
                        fa.name.clone(),
                        [p % e[0], (p / e[0]) % e[1], p / (e[0] * e[1])],
                        i % fa.comps,
                    ));
                }
            }
        }
    }
    Ok(rep)
}
