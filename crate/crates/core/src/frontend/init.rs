use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitBinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitFn {
    Sin,
    Cos,
    Exp,
}

impl InitFn {
    pub fn name(self) -> &'static str {
        match self {
            InitFn::Sin => "sin",
            InitFn::Cos => "cos",
            InitFn::Exp => "exp",
        }
    }
}

/// Initial-condition expression over the point coordinates `x, y, z`.
#[derive(Clone, Debug, PartialEq)]
pub enum InitExpr {
    Num(f64),
    /// A named constant (user constant or `pi`), resolved at parse time.
    Named(String, f64),
    Coord(usize),
    Neg(Box<InitExpr>),
    Bin(InitBinOp, Box<InitExpr>, Box<InitExpr>),
    Call(InitFn, Box<InitExpr>),
}

impl InitExpr {
    pub fn eval(&self, coords: [f64; 3]) -> f64 {
        match self {
            InitExpr::Num(v) | InitExpr::Named(_, v) => *v,
            InitExpr::Coord(a) => coords[*a],
            InitExpr::Neg(e) => -e.eval(coords),
            InitExpr::Bin(op, a, b) => {
                let (a, b) = (a.eval(coords), b.eval(coords));
                match op {
                    InitBinOp::Add => a + b,
                    InitBinOp::Sub => a - b,
                    InitBinOp::Mul => a * b,
                    InitBinOp::Div => a / b,
                }
            }
            InitExpr::Call(f, e) => {
                let v = e.eval(coords);
                match f {
                    InitFn::Sin => v.sin(),
                    InitFn::Cos => v.cos(),
                    InitFn::Exp => v.exp(),
                }
            }
        }
    }

    pub fn num(v: f64) -> InitExpr {
        InitExpr::Num(v)
    }

    pub fn coord(axis: usize) -> InitExpr {
        InitExpr::Coord(axis)
    }

    pub fn bin(op: InitBinOp, a: InitExpr, b: InitExpr) -> InitExpr {
        InitExpr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: InitFn, a: InitExpr) -> InitExpr {
        InitExpr::Call(f, Box::new(a))
    }
}

impl fmt::Display for InitExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitExpr::Num(v) => write!(f, "{v:?}"),
            InitExpr::Named(n, _) => f.write_str(n),
            InitExpr::Coord(a) => write!(f, "{}", ['x', 'y', 'z'][*a]),
            // The space keeps `(- 1.0)` distinct from the literal `-1.0`.
            InitExpr::Neg(e) => write!(f, "(- {e})"),
            InitExpr::Bin(op, a, b) => {
                let sym = match op {
                    InitBinOp::Add => '+',
                    InitBinOp::Sub => '-',
                    InitBinOp::Mul => '*',
                    InitBinOp::Div => '/',
                };
                write!(f, "({a} {sym} {b})")
            }
            InitExpr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}
