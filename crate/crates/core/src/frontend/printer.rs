use std::fmt::Write as _;

use super::{BcRule, EquationKind, FaceSel, FieldKind, Problem};

/// Canonical text form of a problem; `parse_problem` reads it back unchanged.
pub fn print_problem(p: &Problem) -> String {
    let mut s = String::new();
    let m = &p.mesh;
    let _ = write!(s, "mesh {}d", m.dims);
    for (a, name) in ['x', 'y', 'z'].iter().enumerate().take(m.dims) {
        let _ = write!(s, " n{name}={}", m.points[a]);
    }
    for (a, name) in ['x', 'y', 'z'].iter().enumerate().take(m.dims) {
        let _ = write!(s, " l{name}={:?}", m.lengths[a]);
    }
    s.push('\n');
    for f in &p.fields {
        match f.kind {
            FieldKind::Scalar => {
                let _ = writeln!(s, "field {} scalar", f.name);
            }
            FieldKind::Vector(k) => {
                let _ = writeln!(s, "field {} vector<{k}>", f.name);
            }
        }
    }
    for (name, v) in &p.constants {
        let _ = writeln!(s, "const {name} = {v:?}");
    }
    for e in &p.equations {
        match e.kind {
            EquationKind::TimeDerivative => {
                let _ = writeln!(s, "eq dt({}) = {}", e.lhs, e.rhs);
            }
            EquationKind::Algebraic => {
                let _ = writeln!(s, "eq {} = {}", e.lhs, e.rhs);
            }
        }
    }
    for i in &p.inits {
        let body = if i.exprs.len() == 1 {
            i.exprs[0].to_string()
        } else {
            let parts: Vec<String> = i.exprs.iter().map(|e| e.to_string()).collect();
            format!("({})", parts.join(", "))
        };
        let _ = writeln!(s, "init {} = {body}", i.field);
    }
    for b in &p.bcs {
        let rule = match b.rule {
            BcRule::Dirichlet(v) => format!("dirichlet value={v:?}"),
            BcRule::Neumann => "neumann".into(),
            BcRule::Periodic => "periodic".into(),
        };
        let face = match b.faces {
            FaceSel::All => "all",
            FaceSel::One(f) => f.name(),
        };
        let _ = writeln!(s, "bc {} {rule} on {face}", b.field);
    }
    let _ = writeln!(s, "time dt={:?} steps={}", p.time.dt, p.time.steps);
    let _ = writeln!(s, "numerics acc={}", p.numerics.acc);
    s
}
