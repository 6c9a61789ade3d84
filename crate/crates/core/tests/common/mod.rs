//! Random specification generator shared by property tests.

#![allow(dead_code)]

pub mod checks;

use rand::seq::SliceRandom;
use rand::Rng;

const AXES: [&str; 3] = ["x", "y", "z"];
const FACES: [[&str; 2]; 3] = [["xmin", "xmax"], ["ymin", "ymax"], ["zmin", "zmax"]];

struct Ctx {
    dims: usize,
    scalars: Vec<String>,
    /// Vector field name and component count.
    vector: Option<(String, usize)>,
    consts: Vec<String>,
}

fn literal(rng: &mut impl Rng) -> String {
    let v: f64 = rng.gen_range(-2.0..2.0);
    format!("{:?}", (v * 1000.0).round() / 1000.0)
}

fn scalar(rng: &mut impl Rng, c: &Ctx) -> String {
    c.scalars.choose(rng).expect("at least one scalar").clone()
}

fn leaf(rng: &mut impl Rng, c: &Ctx, k: usize) -> String {
    let mut opts: Vec<String> = Vec::new();
    if k == 1 {
        opts.push(scalar(rng, c));
        opts.push(c.consts.choose(rng).expect("constants").clone());
        opts.push(literal(rng));
    }
    if let Some((v, n)) = &c.vector {
        if *n == k {
            opts.push(v.clone());
        }
    }
    if k == c.dims {
        opts.push(format!("grad({})", scalar(rng, c)));
    }
    opts.choose(rng).expect("some leaf fits").clone()
}

/// Random expression with `k` components.
fn expr(rng: &mut impl Rng, c: &Ctx, k: usize, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng, c, k);
    }
    let axis = AXES[rng.gen_range(0..c.dims)];
    let mut opts: Vec<u8> = vec![0, 1, 2];
    if k == 1 {
        opts.extend([3, 4, 5, 6, 7]);
        if c.vector.as_ref().is_some_and(|(_, n)| *n == c.dims) {
            opts.push(8);
        }
    }
    if c.vector.as_ref().is_some_and(|(_, n)| *n == k) {
        opts.extend([9, 10]);
    }
    if k == c.dims {
        opts.push(11);
    }
    let d = depth - 1;
    match *opts.choose(rng).expect("options") {
        0 => format!("({} + {})", expr(rng, c, k, d), expr(rng, c, k, d)),
        1 => format!("({} - {})", expr(rng, c, k, d), expr(rng, c, k, d)),
        2 => format!("({} * {})", expr(rng, c, 1, d), expr(rng, c, k, d)),
        3 => format!("lapla({})", scalar(rng, c)),
        4 => format!("der{axis}({})", scalar(rng, c)),
        5 => format!("der{axis}(der{axis}({}))", scalar(rng, c)),
        6 => format!("-{}", expr(rng, c, 1, d)),
        7 => format!("({} * {})", c.consts.choose(rng).expect("constants"), expr(rng, c, 1, d)),
        8 => format!("div({})", c.vector.as_ref().expect("vector").0),
        9 => format!("lapla({})", c.vector.as_ref().expect("vector").0),
        10 => format!("der{axis}({})", c.vector.as_ref().expect("vector").0),
        _ => format!("grad({})", scalar(rng, c)),
    }
}

/// Pointwise scalar expression over time-integrated scalars and constants.
fn pointwise(rng: &mut impl Rng, c: &Ctx, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        return if rng.gen_bool(0.6) {
            scalar(rng, c)
        } else {
            c.consts.choose(rng).expect("constants").clone()
        };
    }
    let op = ["+", "-", "*"].choose(rng).expect("ops");
    format!("({} {op} {})", pointwise(rng, c, depth - 1), pointwise(rng, c, depth - 1))
}

fn init_expr(rng: &mut impl Rng, dims: usize) -> String {
    let mut terms = Vec::new();
    for a in 0..dims {
        let f = ["sin", "cos"].choose(rng).expect("fns");
        let amp = rng.gen_range(0.1..1.0);
        let m = rng.gen_range(1..3);
        terms.push(format!("{amp:.3} * {f}({m} * 2 * pi * {})", AXES[a]));
    }
    terms.push(format!("{:.3}", rng.gen_range(-0.5..0.5)));
    terms.join(" + ")
}

/// A random valid specification: 1 to 3 dimensions, one or two scalars, an
/// optional vector field, an optional algebraic field and random boundaries.
pub fn random_spec(rng: &mut impl Rng, max_depth: usize, steps: usize) -> String {
    let dims = rng.gen_range(1..=3);
    let acc = *[2usize, 4, 6, 8].choose(rng).expect("acc");
    let points: Vec<usize> = (0..dims).map(|_| rng.gen_range(acc + 1..=acc + 6)).collect();
    let nscalars = rng.gen_range(1..=2);
    let c = Ctx {
        dims,
        scalars: (0..nscalars).map(|i| format!("s{i}")).collect(),
        vector: (dims > 1 && rng.gen_bool(0.5)).then(|| ("v".to_string(), dims)),
        consts: (0..3).map(|i| format!("c{i}")).collect(),
    };
    let algebraic = rng.gen_bool(0.4);
    let mut s = format!("mesh {dims}d");
    for (a, n) in points.iter().enumerate() {
        s += &format!(" n{}={n}", AXES[a]);
    }
    for a in 0..dims {
        s += &format!(" l{}={:.2}", AXES[a], rng.gen_range(0.5..2.0));
    }
    s.push('\n');
    for f in &c.scalars {
        s += &format!("field {f} scalar\n");
    }
    if let Some((v, n)) = &c.vector {
        s += &format!("field {v} vector<{n}>\n");
    }
    if algebraic {
        s += "field p scalar\n";
    }
    for k in &c.consts {
        s += &format!("const {k} = {}\n", literal(rng));
    }
    for f in &c.scalars {
        s += &format!("eq dt({f}) = {}\n", expr(rng, &c, 1, max_depth));
    }
    if let Some((v, n)) = &c.vector {
        s += &format!("eq dt({v}) = {}\n", expr(rng, &c, *n, max_depth));
    }
    if algebraic {
        s += &format!("eq p = {}\n", pointwise(rng, &c, 3));
    }
    for f in &c.scalars {
        s += &format!("init {f} = {}\n", init_expr(rng, dims));
    }
    if let Some((v, n)) = &c.vector {
        let parts: Vec<String> = (0..*n).map(|_| init_expr(rng, dims)).collect();
        s += &format!("init {v} = ({})\n", parts.join(", "));
    }
    let mut fields: Vec<String> = c.scalars.clone();
    fields.extend(c.vector.iter().map(|(v, _)| v.clone()));
    fields.extend(algebraic.then(|| "p".to_string()));
    for faces in FACES.iter().take(dims) {
        if rng.gen_bool(0.5) {
            continue;
        }
        for f in &fields {
            for face in faces {
                if rng.gen_bool(0.5) {
                    s += &format!("bc {f} dirichlet value={} on {face}\n", literal(rng));
                } else {
                    s += &format!("bc {f} neumann on {face}\n");
                }
            }
        }
    }
    s += &format!("time dt=0.0001 steps={steps}\nnumerics acc={acc}\n");
    s
}

/// A random distributed run: specification text with 10 to 32 points per
/// axis, rank count, mode index (0 pure, 1 fork-join, 2 task), lanes per
/// rank, frontier blocks per message, steps and transport (true: sockets).
pub struct DistCase {
    pub spec: String,
    pub ranks: usize,
    pub mode: usize,
    pub threads: usize,
    pub comm_blocks: usize,
    pub steps: usize,
    pub sockets: bool,
}

pub fn random_dist_case(rng: &mut impl Rng) -> DistCase {
    let spec = random_spec(rng, 3, 1);
    let mut lines: Vec<String> = spec.lines().map(str::to_string).collect();
    let dims: usize = lines[0][5..6].parse().expect("mesh line");
    let mut mesh = format!("mesh {dims}d");
    for a in AXES.iter().take(dims) {
        mesh += &format!(" n{a}={}", rng.gen_range(10..=32));
    }
    for a in AXES.iter().take(dims) {
        mesh += &format!(" l{a}=1.0");
    }
    lines[0] = mesh;
    let mode = rng.gen_range(0..3);
    DistCase {
        spec: lines.join("\n") + "\n",
        ranks: rng.gen_range(1..=8),
        mode,
        threads: if mode == 0 { 1 } else { rng.gen_range(1..=3) },
        comm_blocks: rng.gen_range(1..=4),
        steps: rng.gen_range(1..=4),
        sockets: rng.gen_bool(0.5),
    }
}
