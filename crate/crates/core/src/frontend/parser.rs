use super::init::{InitBinOp, InitExpr, InitFn};
use super::{
    BcRule, BcSpec, Equation, EquationKind, FaceSel, FieldDecl, FieldKind, InitSpec, MeshSpec,
    Numerics, Problem, TimeSpec,
};
use crate::eqtree::{Axis, TreeNode};
use crate::Face;
use std::fmt;
use thiserror::Error;

/// A diagnostic with its 1-based line/column and byte offset into the source.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub offset: usize,
    pub message: String,
}

#[derive(Clone, Copy)]
struct Loc {
    line: usize,
    line_start: usize,
}

impl Loc {
    fn err(&self, col0: usize, message: impl fmt::Display) -> ParseError {
        ParseError {
            line: self.line,
            col: col0 + 1,
            offset: self.line_start + col0,
            message: message.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex(text: &str, base_col: usize, loc: Loc) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        // A '-' glued to a digit in operand position is part of the literal.
        let signed = c == '-'
            && bytes
                .get(i + 1)
                .is_some_and(|b| b.is_ascii_digit() || *b == b'.')
            && !matches!(
                out.last(),
                Some(Token {
                    tok: Tok::Ident(_) | Tok::Num(_) | Tok::Sym(')'),
                    ..
                })
            );
        if c.is_ascii_digit() || c == '.' || signed {
            i += 1;
            while i < bytes.len() {
                let b = bytes[i] as char;
                let exp_sign = (b == '+' || b == '-') && matches!(bytes[i - 1], b'e' | b'E');
                if b.is_ascii_digit() || b == '.' || b == 'e' || b == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let s = &text[start..i];
            let v: f64 = s
                .parse()
                .map_err(|_| loc.err(base_col + start, format!("invalid number `{s}`")))?;
            out.push(Token {
                tok: Tok::Num(v),
                col: base_col + start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                col: base_col + start,
            });
        } else if "+-*/(),".contains(c) {
            i += 1;
            out.push(Token {
                tok: Tok::Sym(c),
                col: base_col + start,
            });
        } else {
            return Err(loc.err(base_col + start, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    end_col: usize,
    loc: Loc,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.loc.err(self.col(), format!("expected `{c}`")))
        }
    }

    fn done(&self) -> Result<(), ParseError> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some(t) => Err(self.loc.err(t.col, "unexpected trailing input")),
        }
    }
}

struct Decls<'a> {
    fields: &'a [FieldDecl],
    constants: &'a [(String, f64)],
}

impl Decls<'_> {
    fn constant(&self, name: &str) -> Option<f64> {
        self.constants
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .or_else(|| (name == "pi").then_some(std::f64::consts::PI))
    }

    fn has_field(&self, name: &str) -> bool {
        self.fields.iter().any(|f| f.name == name)
    }
}

fn parse_rhs(c: &mut Cursor, d: &Decls) -> Result<TreeNode, ParseError> {
    let mut lhs = parse_term(c, d)?;
    loop {
        if c.eat_sym('+') {
            lhs = TreeNode::add(lhs, parse_term(c, d)?);
        } else if c.eat_sym('-') {
            lhs = TreeNode::sub(lhs, parse_term(c, d)?);
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_term(c: &mut Cursor, d: &Decls) -> Result<TreeNode, ParseError> {
    let mut lhs = parse_unary(c, d)?;
    while c.eat_sym('*') {
        lhs = TreeNode::times(lhs, parse_unary(c, d)?);
    }
    if c.peek() == Some(&Tok::Sym('/')) {
        return Err(c.loc.err(c.col(), "division is not supported in equations"));
    }
    Ok(lhs)
}

fn parse_unary(c: &mut Cursor, d: &Decls) -> Result<TreeNode, ParseError> {
    if c.eat_sym('-') {
        return Ok(TreeNode::neg(parse_unary(c, d)?));
    }
    parse_primary(c, d)
}

fn parse_primary(c: &mut Cursor, d: &Decls) -> Result<TreeNode, ParseError> {
    let col = c.col();
    match c.bump().map(|t| &t.tok) {
        Some(Tok::Num(v)) => Ok(TreeNode::constant(*v)),
        Some(Tok::Sym('(')) => {
            let e = parse_rhs(c, d)?;
            c.expect_sym(')')?;
            Ok(e)
        }
        Some(Tok::Ident(name)) => {
            if c.peek() == Some(&Tok::Sym('(')) {
                let build: fn(TreeNode) -> TreeNode = match name.as_str() {
                    "grad" => TreeNode::grad,
                    "div" => TreeNode::div,
                    "lapla" => TreeNode::lapla,
                    "derx" => |a| TreeNode::der(Axis::X, a),
                    "dery" => |a| TreeNode::der(Axis::Y, a),
                    "derz" => |a| TreeNode::der(Axis::Z, a),
                    "dt" => {
                        return Err(c
                            .loc
                            .err(col, "time derivatives are only allowed on the left-hand side"))
                    }
                    _ => return Err(c.loc.err(col, format!("unknown operator `{name}`"))),
                };
                c.bump();
                let arg = parse_rhs(c, d)?;
                c.expect_sym(')')?;
                Ok(build(arg))
            } else if d.has_field(name) {
                Ok(TreeNode::field(name.clone()))
            } else if let Some(v) = d.constant(name) {
                Ok(TreeNode::named_const(name.clone(), v))
            } else {
                Err(c.loc.err(col, format!("unknown identifier `{name}`")))
            }
        }
        _ => Err(c.loc.err(col, "expected an expression")),
    }
}

fn parse_init(c: &mut Cursor, d: &Decls) -> Result<InitExpr, ParseError> {
    let mut lhs = parse_init_term(c, d)?;
    loop {
        let op = if c.eat_sym('+') {
            InitBinOp::Add
        } else if c.eat_sym('-') {
            InitBinOp::Sub
        } else {
            return Ok(lhs);
        };
        lhs = InitExpr::bin(op, lhs, parse_init_term(c, d)?);
    }
}

fn parse_init_term(c: &mut Cursor, d: &Decls) -> Result<InitExpr, ParseError> {
    let mut lhs = parse_init_unary(c, d)?;
    loop {
        let op = if c.eat_sym('*') {
            InitBinOp::Mul
        } else if c.eat_sym('/') {
            InitBinOp::Div
        } else {
            return Ok(lhs);
        };
        lhs = InitExpr::bin(op, lhs, parse_init_unary(c, d)?);
    }
}

fn parse_init_unary(c: &mut Cursor, d: &Decls) -> Result<InitExpr, ParseError> {
    if c.eat_sym('-') {
        return Ok(InitExpr::Neg(Box::new(parse_init_unary(c, d)?)));
    }
    let col = c.col();
    match c.bump().map(|t| &t.tok) {
        Some(Tok::Num(v)) => Ok(InitExpr::Num(*v)),
        Some(Tok::Sym('(')) => {
            let e = parse_init(c, d)?;
            c.expect_sym(')')?;
            Ok(e)
        }
        Some(Tok::Ident(name)) => {
            if c.peek() == Some(&Tok::Sym('(')) {
                let f = match name.as_str() {
                    "sin" => InitFn::Sin,
                    "cos" => InitFn::Cos,
                    "exp" => InitFn::Exp,
                    _ => return Err(c.loc.err(col, format!("unknown function `{name}`"))),
                };
                c.bump();
                let arg = parse_init(c, d)?;
                c.expect_sym(')')?;
                return Ok(InitExpr::call(f, arg));
            }
            match name.as_str() {
                "x" => Ok(InitExpr::Coord(0)),
                "y" => Ok(InitExpr::Coord(1)),
                "z" => Ok(InitExpr::Coord(2)),
                _ => match d.constant(name) {
                    Some(v) => Ok(InitExpr::Named(name.clone(), v)),
                    None => Err(c.loc.err(col, format!("unknown identifier `{name}`"))),
                },
            }
        }
        _ => Err(c.loc.err(col, "expected an expression")),
    }
}

/// Splits a line into whitespace-separated words with their columns.
fn words(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn key_value<'l>(loc: Loc, col: usize, word: &'l str) -> Result<(&'l str, &'l str), ParseError> {
    word.split_once('=')
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .ok_or_else(|| loc.err(col, format!("expected key=value, found `{word}`")))
}

fn real(loc: Loc, col: usize, s: &str) -> Result<f64, ParseError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| loc.err(col, format!("expected a real number, found `{s}`")))
}

fn int(loc: Loc, col: usize, s: &str) -> Result<usize, ParseError> {
    s.parse::<usize>()
        .map_err(|_| loc.err(col, format!("expected a non-negative integer, found `{s}`")))
}

/// Splits `name = rest` after a keyword; returns (name, name col, rest, rest col).
fn assignment<'l>(
    loc: Loc,
    line: &'l str,
    after_kw: usize,
) -> Result<(&'l str, usize, &'l str, usize), ParseError> {
    let tail = &line[after_kw..];
    let eq = tail
        .find('=')
        .ok_or_else(|| loc.err(line.len(), "expected `=`"))?;
    let lhs_raw = &tail[..eq];
    let lhs = lhs_raw.trim();
    let lhs_col = after_kw + lhs_raw.find(|c: char| !c.is_whitespace()).unwrap_or(0);
    let rhs_col = after_kw + eq + 1;
    Ok((lhs, lhs_col, &line[rhs_col..], rhs_col))
}

struct Line<'a> {
    text: &'a str,
    loc: Loc,
}

/// Parses a problem specification, resolving every identifier.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let mut lines = Vec::new();
    let mut offset = 0;
    for (n, raw) in text.split('\n').enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim_end_matches('\r');
        lines.push(Line {
            text: content,
            loc: Loc {
                line: n + 1,
                line_start: offset,
            },
        });
        offset += raw.len() + 1;
    }
    let eof = {
        let last = lines.last().expect("split yields at least one line");
        last.loc.err(last.text.len(), "")
    };

    let mut mesh: Option<MeshSpec> = None;
    let mut fields: Vec<FieldDecl> = Vec::new();
    let mut constants: Vec<(String, f64)> = Vec::new();
    let mut time: Option<TimeSpec> = None;
    let mut numerics: Option<Numerics> = None;

    // Declarations first so statements may appear in any order.
    for l in &lines {
        let w = words(l.text);
        let Some(&(kw_col, kw)) = w.first() else {
            continue;
        };
        let loc = l.loc;
        match kw {
            "mesh" => {
                if mesh.is_some() {
                    return Err(loc.err(kw_col, "duplicate mesh statement"));
                }
                let (dcol, dstr) = *w.get(1).ok_or_else(|| loc.err(l.text.len(), "expected 1d, 2d or 3d"))?;
                let dims = match dstr {
                    "1d" => 1,
                    "2d" => 2,
                    "3d" => 3,
                    _ => return Err(loc.err(dcol, format!("expected 1d, 2d or 3d, found `{dstr}`"))),
                };
                let mut points = [None; 3];
                let mut lengths = [None; 3];
                for &(col, word) in &w[2..] {
                    let (k, v) = key_value(loc, col, word)?;
                    let vcol = col + k.len() + 1;
                    let (slot, axis) = match k {
                        "nx" => (0, 0),
                        "ny" => (0, 1),
                        "nz" => (0, 2),
                        "lx" => (1, 0),
                        "ly" => (1, 1),
                        "lz" => (1, 2),
                        _ => return Err(loc.err(col, format!("unknown mesh attribute `{k}`"))),
                    };
                    if axis >= dims {
                        return Err(loc.err(col, format!("`{k}` given for a {dims}d mesh")));
                    }
                    if slot == 0 {
                        points[axis] = Some(int(loc, vcol, v)?);
                    } else {
                        lengths[axis] = Some(real(loc, vcol, v)?);
                    }
                }
                let mut m = MeshSpec::new(&[], &[]);
                m.dims = dims;
                for a in 0..dims {
                    let name = ['x', 'y', 'z'][a];
                    m.points[a] = points[a]
                        .ok_or_else(|| loc.err(kw_col, format!("missing n{name}")))?;
                    m.lengths[a] = lengths[a]
                        .ok_or_else(|| loc.err(kw_col, format!("missing l{name}")))?;
                }
                mesh = Some(m);
            }
            "field" => {
                let (ncol, name) = *w.get(1).ok_or_else(|| loc.err(l.text.len(), "expected field name"))?;
                if !is_ident(name) {
                    return Err(loc.err(ncol, format!("invalid field name `{name}`")));
                }
                let (kcol, kind) = *w.get(2).ok_or_else(|| loc.err(l.text.len(), "expected scalar or vector<k>"))?;
                let kind = if kind == "scalar" {
                    FieldKind::Scalar
                } else if let Some(k) = kind.strip_prefix("vector<").and_then(|s| s.strip_suffix('>')) {
                    let k = int(loc, kcol + 7, k)?;
                    if k == 0 {
                        return Err(loc.err(kcol, "vector fields need at least one component"));
                    }
                    FieldKind::Vector(k)
                } else {
                    return Err(loc.err(kcol, format!("expected scalar or vector<k>, found `{kind}`")));
                };
                if let Some(&(col, _)) = w.get(3) {
                    return Err(loc.err(col, "unexpected trailing input"));
                }
                if fields.iter().any(|f| f.name == name) || constants.iter().any(|(c, _)| c == name) {
                    return Err(loc.err(ncol, format!("duplicate field `{name}`")));
                }
                fields.push(FieldDecl {
                    name: name.to_string(),
                    kind,
                });
            }
            "const" => {
                let (name, ncol, rest, rcol) = assignment(loc, l.text, kw_col + kw.len())?;
                if !is_ident(name) {
                    return Err(loc.err(ncol, format!("invalid constant name `{name}`")));
                }
                if constants.iter().any(|(c, _)| c == name) || fields.iter().any(|f| f.name == name) {
                    return Err(loc.err(ncol, format!("duplicate constant `{name}`")));
                }
                let vcol = rcol + rest.find(|c: char| !c.is_whitespace()).unwrap_or(0);
                constants.push((name.to_string(), real(loc, vcol, rest.trim())?));
            }
            "time" => {
                if time.is_some() {
                    return Err(loc.err(kw_col, "duplicate time statement"));
                }
                let (mut dt, mut steps) = (None, None);
                for &(col, word) in &w[1..] {
                    let (k, v) = key_value(loc, col, word)?;
                    let vcol = col + k.len() + 1;
                    match k {
                        "dt" => dt = Some(real(loc, vcol, v)?),
                        "steps" => steps = Some(int(loc, vcol, v)?),
                        _ => return Err(loc.err(col, format!("unknown time attribute `{k}`"))),
                    }
                }
                time = Some(TimeSpec {
                    dt: dt.ok_or_else(|| loc.err(kw_col, "missing dt"))?,
                    steps: steps.ok_or_else(|| loc.err(kw_col, "missing steps"))?,
                });
            }
            "numerics" => {
                if numerics.is_some() {
                    return Err(loc.err(kw_col, "duplicate numerics statement"));
                }
                let mut acc = None;
                for &(col, word) in &w[1..] {
                    let (k, v) = key_value(loc, col, word)?;
                    let vcol = col + k.len() + 1;
                    match k {
                        "acc" => {
                            let a = int(loc, vcol, v)?;
                            if a % 2 != 0 {
                                return Err(loc.err(vcol, format!("acc must be even, found {a}")));
                            }
                            if !(2..=8).contains(&a) {
                                return Err(loc.err(vcol, format!("acc must be 2, 4, 6 or 8, found {a}")));
                            }
                            acc = Some(a);
                        }
                        _ => return Err(loc.err(col, format!("unknown numerics attribute `{k}`"))),
                    }
                }
                numerics = Some(Numerics {
                    acc: acc.ok_or_else(|| loc.err(kw_col, "missing acc"))?,
                });
            }
            "eq" | "init" | "bc" => {}
            _ => return Err(loc.err(kw_col, format!("unknown statement `{kw}`"))),
        }
    }

    let mesh = mesh.ok_or_else(|| ParseError {
        message: "missing mesh statement".into(),
        ..eof.clone()
    })?;
    let time = time.ok_or_else(|| ParseError {
        message: "missing time statement".into(),
        ..eof.clone()
    })?;
    let numerics = numerics.unwrap_or(Numerics { acc: 2 });

    let decls = Decls {
        fields: &fields,
        constants: &constants,
    };
    let mut equations: Vec<Equation> = Vec::new();
    let mut inits = Vec::new();
    let mut bcs = Vec::new();

    for l in &lines {
        let w = words(l.text);
        let Some(&(kw_col, kw)) = w.first() else {
            continue;
        };
        let loc = l.loc;
        match kw {
            "eq" => {
                let (lhs, lcol, rhs, rcol) = assignment(loc, l.text, kw_col + kw.len())?;
                let (kind, target) = match lhs.strip_prefix("dt(").and_then(|s| s.strip_suffix(')')) {
                    Some(inner) => {
                        let inner = inner.trim();
                        if inner.starts_with("dt(") {
                            return Err(loc.err(lcol, "second time derivatives are not supported"));
                        }
                        (EquationKind::TimeDerivative, inner)
                    }
                    None => (EquationKind::Algebraic, lhs),
                };
                if !decls.has_field(target) {
                    return Err(loc.err(lcol, format!("unknown identifier `{target}`")));
                }
                if equations.iter().any(|e| e.lhs == target) {
                    return Err(loc.err(lcol, format!("duplicate left-hand side `{target}`")));
                }
                let toks = lex(rhs, rcol, loc)?;
                let mut cur = Cursor {
                    toks: &toks,
                    pos: 0,
                    end_col: l.text.len(),
                    loc,
                };
                let tree = parse_rhs(&mut cur, &decls)?;
                cur.done()?;
                equations.push(Equation {
                    kind,
                    lhs: target.to_string(),
                    rhs: tree,
                });
            }
            "init" => {
                let (name, ncol, rhs, rcol) = assignment(loc, l.text, kw_col + kw.len())?;
                if !decls.has_field(name) {
                    return Err(loc.err(ncol, format!("unknown identifier `{name}`")));
                }
                let toks = lex(rhs, rcol, loc)?;
                let mut cur = Cursor {
                    toks: &toks,
                    pos: 0,
                    end_col: l.text.len(),
                    loc,
                };
                let mut exprs = Vec::new();
                let tuple = toks.iter().any(|t| t.tok == Tok::Sym(','));
                if tuple {
                    cur.expect_sym('(')?;
                    loop {
                        exprs.push(parse_init(&mut cur, &decls)?);
                        if !cur.eat_sym(',') {
                            break;
                        }
                    }
                    cur.expect_sym(')')?;
                } else {
                    exprs.push(parse_init(&mut cur, &decls)?);
                }
                cur.done()?;
                inits.push(InitSpec {
                    field: name.to_string(),
                    exprs,
                });
            }
            "bc" => {
                let (ncol, name) = *w.get(1).ok_or_else(|| loc.err(l.text.len(), "expected field name"))?;
                if !decls.has_field(name) {
                    return Err(loc.err(ncol, format!("unknown identifier `{name}`")));
                }
                let mut i = 2;
                let (rcol, rule_word) = *w.get(i).ok_or_else(|| loc.err(l.text.len(), "expected a boundary rule"))?;
                let rule = match rule_word {
                    "dirichlet" => {
                        i += 1;
                        let (vcol, vw) = *w.get(i).ok_or_else(|| loc.err(l.text.len(), "expected value=<real>"))?;
                        let (k, v) = key_value(loc, vcol, vw)?;
                        if k != "value" {
                            return Err(loc.err(vcol, "expected value=<real>"));
                        }
                        BcRule::Dirichlet(real(loc, vcol + 6, v)?)
                    }
                    "neumann" => BcRule::Neumann,
                    "periodic" => BcRule::Periodic,
                    _ => return Err(loc.err(rcol, format!("unknown boundary rule `{rule_word}`"))),
                };
                i += 1;
                match w.get(i) {
                    Some(&(_, "on")) => {}
                    Some(&(col, _)) => return Err(loc.err(col, "expected `on`")),
                    None => return Err(loc.err(l.text.len(), "expected `on`")),
                }
                i += 1;
                let (fcol, fw) = *w.get(i).ok_or_else(|| loc.err(l.text.len(), "expected a face"))?;
                let faces = if fw == "all" {
                    FaceSel::All
                } else {
                    FaceSel::One(
                        Face::parse(fw).ok_or_else(|| loc.err(fcol, format!("unknown face `{fw}`")))?,
                    )
                };
                if let Some(&(col, _)) = w.get(i + 1) {
                    return Err(loc.err(col, "unexpected trailing input"));
                }
                bcs.push(BcSpec {
                    field: name.to_string(),
                    rule,
                    faces,
                });
            }
            _ => {}
        }
    }

    if equations.is_empty() {
        return Err(ParseError {
            message: "no equations".into(),
            ..eof
        });
    }

    Ok(Problem {
        mesh,
        fields,
        constants,
        equations,
        inits,
        bcs,
        time,
        numerics,
    })
}
