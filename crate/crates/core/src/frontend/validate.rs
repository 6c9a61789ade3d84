use std::fmt;

use super::init::InitExpr;
use super::{BcRule, EquationKind, FaceSel, Problem};
use crate::eqtree::{derivative_shape, field_dims, infer_dims, Op, TreeNode};
use crate::numerics::exact_weights;
use crate::Face;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Short machine-readable category such as `stability` or `bc`.
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{level}[{}]: {}", self.code, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_warning(&self, code: &str) -> bool {
        self.warnings.iter().any(|d| d.code == code)
    }

    fn error(&mut self, code: &'static str, message: impl Into<String>) {
        self.errors.push(Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
        });
    }

    fn warn(&mut self, code: &'static str, message: impl Into<String>) {
        self.warnings.push(Diagnostic {
            severity: Severity::Warning,
            code,
            message: message.into(),
        });
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Constant factors scaling the stencil vertices of a right-hand side.
#[derive(Default)]
struct Coefficients {
    diffusion: f64,
    velocity: f64,
}

fn scan(node: &TreeNode, factor: Option<f64>, out: &mut Coefficients) {
    match &node.op {
        Op::Times => {
            let (a, b) = (&node.children[0], &node.children[1]);
            if let Some(c) = a.const_value() {
                scan(b, factor.map(|f| f * c), out);
            } else if let Some(c) = b.const_value() {
                scan(a, factor.map(|f| f * c), out);
            } else {
                scan(a, None, out);
                scan(b, None, out);
            }
        }
        Op::Add | Op::Sub => {
            scan(&node.children[0], factor, out);
            scan(&node.children[1], factor, out);
        }
        Op::Lapla => {
            if let Some(f) = factor {
                out.diffusion = out.diffusion.max(f.abs());
            }
        }
        Op::Derivative(_) | Op::Grad | Op::Div => {
            let second = matches!(derivative_shape(node), Some((_, 2, _)));
            if let Some(f) = factor {
                if second {
                    out.diffusion = out.diffusion.max(f.abs());
                } else {
                    out.velocity = out.velocity.max(f.abs());
                }
            }
        }
        Op::Field(_) | Op::Const { .. } => {}
    }
}

fn check_consts(node: &TreeNode, p: &Problem, report: &mut ValidationReport) {
    node.visit(&mut |n| {
        if let Op::Const { name: Some(name), value } = &n.op {
            let expected = p
                .constant(name)
                .or_else(|| (name == "pi").then_some(std::f64::consts::PI));
            match expected {
                Some(v) if v.to_bits() == value.to_bits() => {}
                Some(_) => report.error(
                    "const",
                    format!("constant `{name}` used with a value differing from its declaration"),
                ),
                None => report.error("const", format!("undeclared constant `{name}`")),
            }
        }
        if let Op::Const { value, .. } = &n.op {
            if !value.is_finite() {
                report.error("const", "non-finite constant in an equation");
            }
        }
    });
}

fn check_init(e: &InitExpr, p: &Problem, report: &mut ValidationReport) {
    match e {
        InitExpr::Num(v) => {
            if !v.is_finite() {
                report.error("init", "non-finite literal in an initial condition");
            }
        }
        InitExpr::Named(name, v) => {
            let expected = p
                .constant(name)
                .or_else(|| (name == "pi").then_some(std::f64::consts::PI));
            if expected.map(f64::to_bits) != Some(v.to_bits()) {
                report.error("init", format!("constant `{name}` does not match its declaration"));
            }
        }
        InitExpr::Coord(a) => {
            if *a > 2 {
                report.error("init", format!("coordinate index {a} out of range"));
            }
        }
        InitExpr::Neg(x) | InitExpr::Call(_, x) => check_init(x, p, report),
        InitExpr::Bin(_, a, b) => {
            check_init(a, p, report);
            check_init(b, p, report);
        }
    }
}

/// Checks a problem for executability and numerical stability.
pub fn validate_problem(p: &Problem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let m = &p.mesh;
    let acc = p.numerics.acc;

    if !matches!(acc, 2 | 4 | 6 | 8) {
        report.error("acc", format!("acc must be 2, 4, 6 or 8, got {acc}"));
    }
    if !(1..=3).contains(&m.dims) {
        report.error("mesh", format!("mesh must be 1d, 2d or 3d, got {}d", m.dims));
        return report;
    }
    for a in 0..m.dims {
        let n = m.points[a];
        if n < 3 || n <= acc {
            report.error(
                "mesh",
                format!("axis {a} has {n} points; at least 3 and more than acc={acc} are needed"),
            );
        }
        let l = m.lengths[a];
        if !(l.is_finite() && l > 0.0) {
            report.error("mesh", format!("axis {a} length must be positive, got {l}"));
        }
    }
    for a in m.dims..3 {
        if m.points[a] != 1 || m.lengths[a] != 1.0 {
            report.error("mesh", format!("unused axis {a} must keep extent 1"));
        }
    }
    if !(p.time.dt.is_finite() && p.time.dt > 0.0) {
        report.error("time", format!("dt must be positive, got {}", p.time.dt));
    }
    if p.time.steps == 0 {
        report.error("time", "steps must be at least 1");
    }

    for (i, f) in p.fields.iter().enumerate() {
        if !is_ident(&f.name) {
            report.error("field", format!("invalid field name `{}`", f.name));
        }
        if f.components() == 0 {
            report.error("field", format!("field `{}` has no components", f.name));
        }
        if p.fields[..i].iter().any(|g| g.name == f.name) {
            report.error("field", format!("duplicate field `{}`", f.name));
        }
        if p.constants.iter().any(|(c, _)| *c == f.name) {
            report.error("field", format!("`{}` is both a field and a constant", f.name));
        }
    }
    for (i, (name, v)) in p.constants.iter().enumerate() {
        if !is_ident(name) {
            report.error("const", format!("invalid constant name `{name}`"));
        }
        if !v.is_finite() {
            report.error("const", format!("constant `{name}` is not finite"));
        }
        if p.constants[..i].iter().any(|(c, _)| c == name) {
            report.error("const", format!("duplicate constant `{name}`"));
        }
    }

    if p.equations.is_empty() {
        report.error("equation", "no equations");
    }
    for f in &p.fields {
        match p.equations.iter().filter(|e| e.lhs == f.name).count() {
            0 => report.error("equation", format!("field `{}` has no equation", f.name)),
            1 => {}
            _ => report.error("equation", format!("field `{}` has several equations", f.name)),
        }
    }

    let dims = field_dims(p);
    let algebraic: Vec<&str> = p
        .equations
        .iter()
        .filter(|e| e.kind == EquationKind::Algebraic)
        .map(|e| e.lhs.as_str())
        .collect();
    let mut coeffs = Coefficients::default();
    for e in &p.equations {
        let Some(target) = p.field(&e.lhs) else {
            report.error("equation", format!("equation for undeclared field `{}`", e.lhs));
            continue;
        };
        check_consts(&e.rhs, p, &mut report);
        match infer_dims(&e.rhs, m.dims, &dims) {
            Ok(t) => {
                if t.dims != target.components() {
                    report.error(
                        "dims",
                        format!(
                            "equation for `{}` yields {} components, the field has {}",
                            e.lhs,
                            t.dims,
                            target.components()
                        ),
                    );
                }
            }
            Err(err) => report.error("dims", format!("equation for `{}`: {err}", e.lhs)),
        }
        if e.kind == EquationKind::Algebraic {
            if e.rhs.contains_stencil() {
                report.error(
                    "algebraic",
                    format!("algebraic equation for `{}` must be pointwise", e.lhs),
                );
            }
            for used in e.rhs.fields() {
                if algebraic.contains(&used.as_str()) {
                    report.error(
                        "algebraic",
                        format!("algebraic equation for `{}` reads algebraic field `{used}`", e.lhs),
                    );
                }
            }
        } else {
            scan(&e.rhs, Some(1.0), &mut coeffs);
        }
    }

    for i in &p.inits {
        let Some(f) = p.field(&i.field) else {
            report.error("init", format!("initial condition for undeclared field `{}`", i.field));
            continue;
        };
        if i.exprs.len() != 1 && i.exprs.len() != f.components() {
            report.error(
                "init",
                format!(
                    "initial condition for `{}` has {} expressions, expected 1 or {}",
                    i.field,
                    i.exprs.len(),
                    f.components()
                ),
            );
        }
        for e in &i.exprs {
            check_init(e, p, &mut report);
        }
    }
    for e in &p.equations {
        if e.kind == EquationKind::TimeDerivative && p.init(&e.lhs).is_none() {
            report.warn("init", format!("field `{}` has no initial condition; using 0", e.lhs));
        }
    }

    for b in &p.bcs {
        if p.field(&b.field).is_none() {
            report.error("bc", format!("boundary condition for undeclared field `{}`", b.field));
        }
        if let FaceSel::One(face) = b.faces {
            if face.axis() >= m.dims {
                report.error("bc", format!("face {face} does not exist on a {}d mesh", m.dims));
            }
        }
        if let BcRule::Dirichlet(v) = b.rule {
            if !v.is_finite() {
                report.error("bc", "non-finite dirichlet value");
            }
        }
    }
    for a in 0..m.dims {
        let mut periodic = None;
        for f in &p.fields {
            let lo = p.bc(&f.name, Face::new(a, false)) == BcRule::Periodic;
            let hi = p.bc(&f.name, Face::new(a, true)) == BcRule::Periodic;
            if lo != hi {
                report.error(
                    "periodic",
                    format!("field `{}` is periodic on only one face of axis {a}", f.name),
                );
            }
            match periodic {
                None => periodic = Some(lo),
                Some(q) if q != lo => report.error(
                    "periodic",
                    format!("fields disagree on whether axis {a} is periodic"),
                ),
                _ => {}
            }
        }
    }

    if report.is_ok() {
        let h_min = (0..m.dims)
            .map(|a| m.spacing(a))
            .fold(f64::INFINITY, f64::min);
        let dt = p.time.dt;
        if coeffs.diffusion > 0.0 {
            let center = exact_weights(2, acc).expect("acc checked")[acc / 2].to_f64();
            let maxcoef = center.abs() / 2.0;
            let bound = h_min * h_min / (2.0 * coeffs.diffusion * m.dims as f64 * maxcoef);
            if dt > bound {
                report.warn(
                    "stability",
                    format!("dt={dt:e} exceeds the diffusive stability estimate {bound:e}"),
                );
            }
        }
        if coeffs.velocity > 0.0 {
            let bound = h_min / coeffs.velocity;
            if dt > bound {
                report.warn(
                    "stability",
                    format!("dt={dt:e} exceeds the advective stability estimate {bound:e}"),
                );
            }
        }
    }
    report
}
