use std::fmt::Write as _;

use super::program::{KernelProgram, Opcode, Operand};
use crate::frontend::EquationKind;

fn operand(o: &Operand) -> String {
    match o {
        Operand::Reg(r) => format!("r{r}"),
        Operand::Imm(v) => format!("#{v:?}"),
    }
}

/// Line-per-op text form of a program; `<empty>` for a program without ops.
pub fn emit_listing(p: &KernelProgram) -> String {
    if p.is_empty() {
        return "<empty>\n".into();
    }
    let group = match p.group {
        EquationKind::TimeDerivative => "time",
        EquationKind::Algebraic => "algebraic",
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "program {group} ops={} regs={} footprint={}B mesh={}d acc={}",
        p.ops.len(),
        p.regs.len(),
        p.footprint_bytes(),
        p.mesh_dims,
        p.acc
    );
    let name = |f: usize| p.field_names.get(f).cloned().unwrap_or_else(|| format!("f{f}"));
    for (i, op) in p.ops.iter().enumerate() {
        let ins: Vec<String> = op.inputs.iter().map(operand).collect();
        let ins = ins.join(", ");
        let dest = op.out.map(|r| format!("r{r} = ")).unwrap_or_default();
        let body = match op.opcode {
            Opcode::Var { field } => format!("VAR {}", name(field)),
            Opcode::Const { value } => format!("CONST #{value:?}"),
            Opcode::Der { axis, order } => {
                format!("DER {ins} axis={} order={order}", axis.letter())
            }
            Opcode::EulerUpdate { field } => format!("EULER_UPDATE {} <- {ins}", name(field)),
            Opcode::Store { field } => format!("STORE {} <- {ins}", name(field)),
            other => format!("{} {ins}", other.name()),
        };
        let acc = if op.opcode.is_stencil() {
            format!(" acc={}", p.acc)
        } else {
            String::new()
        };
        let _ = writeln!(s, "{i:4}: {dest}{body} dims={}{acc}", op.dims);
    }
    s
}
