mod common;

use fdflow::analytic::{analytic_solution, AnalyticKind};
use fdflow::exec::{ExecConfig, RunOptions, Simulation};
use fdflow::frontend::BcRule;
use fdflow::grid::create_grid;
use fdflow::numerics::{
    apply_face, apply_stencil, euler_update, exact_weights, stencil_coeffs, stencil_row, var,
    StencilError,
};
use fdflow::parse_problem;
use fdflow::Face;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

#[test]
fn second_order_weights() {
    assert_eq!(stencil_coeffs(2, 2, 1.0).unwrap().weights, vec![1.0, -2.0, 1.0]);
    assert_eq!(stencil_coeffs(1, 2, 1.0).unwrap().weights, vec![-0.5, 0.0, 0.5]);
}

#[test]
fn weights_are_divided_by_h_to_the_order() {
    let c = stencil_coeffs(2, 2, 0.5).unwrap();
    assert_eq!(c.weights, vec![4.0, -8.0, 4.0]);
    assert_eq!(c.radius, 1);
    let c = stencil_coeffs(1, 4, 0.5).unwrap();
    assert_eq!(c.len(), 5);
    assert_eq!(c.weights[3], 2.0 / 3.0 / 0.5);
}

#[test]
fn unsupported_orders_and_accuracies() {
    assert_eq!(exact_weights(3, 2), Err(StencilError::Order(3)));
    assert_eq!(exact_weights(1, 3), Err(StencilError::Accuracy(3)));
    assert_eq!(exact_weights(1, 10), Err(StencilError::Accuracy(10)));
    assert!(stencil_coeffs(1, 2, 0.0).is_err());
    assert!(stencil_coeffs(1, 2, f64::NAN).is_err());
}

#[test]
fn fourth_order_first_derivative_fractions() {
    let w: Vec<String> = exact_weights(1, 4).unwrap().iter().map(|r| r.to_string()).collect();
    assert_eq!(w, ["1/12", "-2/3", "0", "2/3", "-1/12"]);
}

/// Solves `Σ_j w_j j^m / m! = δ(m, order)` for `m = 0..=2r` exactly.
fn vandermonde_weights(order: usize, acc: usize) -> Vec<BigRational> {
    let r = (acc / 2) as i64;
    let n = (2 * r + 1) as usize;
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|m| {
            let mut fact = BigRational::one();
            for q in 1..=m as i64 {
                fact *= int(q);
            }
            let mut row: Vec<BigRational> = (-r..=r)
                .map(|j| {
                    let mut p = BigRational::one();
                    for _ in 0..m {
                        p *= int(j);
                    }
                    p / fact.clone()
                })
                .collect();
            row.push(if m == order { BigRational::one() } else { BigRational::zero() });
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&i| !a[i][col].is_zero()).expect("nonsingular");
        a.swap(col, piv);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v /= p.clone();
        }
        for i in 0..n {
            if i != col && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for k in col..=n {
                    let d = f.clone() * a[col][k].clone();
                    a[i][k] -= d;
                }
            }
        }
    }
    a.into_iter().map(|row| row[n].clone()).collect()
}

#[test]
fn weights_match_exact_vandermonde_solution() {
    for order in [1, 2] {
        for acc in [2, 4, 6, 8] {
            let ours = exact_weights(order, acc).unwrap();
            let oracle = vandermonde_weights(order, acc);
            assert_eq!(ours.len(), oracle.len());
            for (o, e) in ours.iter().zip(&oracle) {
                let got = BigRational::new(BigInt::from(o.num), BigInt::from(o.den));
                assert_eq!(&got, e, "order {order} acc {acc}");
            }
            let f = stencil_coeffs(order, acc, 1.0).unwrap();
            for (w, e) in f.weights.iter().zip(&oracle) {
                let (num, den) = (e.numer().to_string(), e.denom().to_string());
                let expected = num.parse::<f64>().unwrap() / den.parse::<f64>().unwrap();
                assert_eq!(*w, expected);
            }
        }
    }
}

#[test]
fn weights_are_symmetric_or_antisymmetric() {
    for acc in [2, 4, 6, 8] {
        let d1 = stencil_coeffs(1, acc, 1.0).unwrap().weights;
        let d2 = stencil_coeffs(2, acc, 1.0).unwrap().weights;
        let n = d1.len();
        for k in 0..n {
            assert_eq!(d1[k], -d1[n - 1 - k]);
            assert_eq!(d2[k], d2[n - 1 - k]);
        }
        assert!(d1.iter().sum::<f64>().abs() < 1e-15);
    }
}

#[test]
fn point_kernels() {
    let buf = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    assert_eq!(var(&buf, 2, 2), &[5.0, 6.0]);
    assert_eq!(euler_update(1.0, 0.1, 2.0), 1.0 + 0.1 * 2.0);
    assert_eq!(euler_update(1.25, 0.0, 7.0), 1.25);
}

#[test]
fn stencil_row_matches_point_kernel() {
    let buf: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
    let w = stencil_coeffs(2, 6, 0.1).unwrap().weights;
    let mut out = vec![0.0; 10];
    // SAFETY: points 10..20 with radius 3 stay inside the 64-element buffer.
    unsafe { stencil_row(buf.as_ptr().add(10), 1, 3, &w, out.as_mut_ptr(), 1, 10, false) };
    for (i, o) in out.iter().enumerate() {
        assert_eq!(*o, apply_stencil(&buf, 10 + i, 3, 1, 0, &w));
    }
}

#[test]
fn first_derivative_exact_on_linear_and_constant() {
    for acc in [2, 4, 6, 8] {
        let w = stencil_coeffs(1, acc, 0.1).unwrap().weights;
        let lin: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let d = apply_stencil(&lin, 20, 1, 1, 0, &w);
        assert!((d - 1.0).abs() < 1e-12, "acc {acc}: {d}");
        let flat = vec![3.5; 40];
        assert!(apply_stencil(&flat, 20, 1, 1, 0, &w).abs() < 1e-12);
    }
}

#[test]
fn taylor_truncation_on_sine() {
    // Leading errors of the acc-2 stencils: h²/6 f''' and h²/12 f''''.
    let h = 0.01;
    let x0: f64 = 0.3;
    let samples: Vec<f64> = (-4..=4).map(|k| (x0 + k as f64 * h).sin()).collect();
    let w = stencil_coeffs(1, 2, h).unwrap().weights;
    let d = apply_stencil(&samples, 4, 1, 1, 0, &w);
    let err = d - x0.cos();
    let leading = -h * h / 6.0 * x0.cos();
    assert!(((err - leading) / leading).abs() < 1e-2, "{err} vs {leading}");
    let w2 = stencil_coeffs(2, 2, h).unwrap().weights;
    let d2 = apply_stencil(&samples, 4, 1, 1, 0, &w2);
    let err2 = d2 + x0.sin();
    let leading2 = h * h / 12.0 * x0.sin();
    assert!(((err2 - leading2) / leading2).abs() < 1e-2, "{err2} vs {leading2}");
}

fn line(n: usize, acc: usize, extra: &str) -> fdflow::Problem {
    parse_problem(&format!(
        "mesh 1d nx={n} lx=1\nfield u scalar\neq dt(u) = lapla(u)\ninit u = 1 + x\n{extra}\
time dt=0.00001 steps=1\nnumerics acc={acc}\n"
    ))
    .unwrap()
}

#[test]
fn periodic_ghosts_wrap() {
    let p = line(8, 4, "");
    let mut store = create_grid(&p, 64, 8).unwrap();
    apply_face(&mut store, 0, 0, Face::XMin, BcRule::Periodic);
    apply_face(&mut store, 0, 0, Face::XMax, BcRule::Periodic);
    let l = store.layout.clone();
    let b = store.buffer(0, 0);
    let at = |i: isize| b[l.linear_index(i, 0, 0)];
    assert_eq!(at(-1), at(7));
    assert_eq!(at(-2), at(6));
    assert_eq!(at(8), at(0));
    assert_eq!(at(9), at(1));
}

#[test]
fn dirichlet_and_neumann_ghosts() {
    let p = line(8, 4, "bc u dirichlet value=2.5 on xmin\nbc u neumann on xmax\n");
    let mut store = create_grid(&p, 64, 8).unwrap();
    apply_face(&mut store, 0, 0, Face::XMin, BcRule::Dirichlet(2.5));
    apply_face(&mut store, 0, 0, Face::XMax, BcRule::Neumann);
    let l = store.layout.clone();
    let b = store.buffer(0, 0);
    let at = |i: isize| b[l.linear_index(i, 0, 0)];
    assert_eq!(at(-1), 2.5);
    assert_eq!(at(-2), 2.5);
    // ghost[n - 1 + k] mirrors interior[n - k].
    assert_eq!(at(8), at(7));
    assert_eq!(at(9), at(6));
}

#[test]
fn observed_convergence_order_matches_accuracy() {
    for order in [1, 2] {
        for acc in [2, 4, 6, 8] {
            for observed in common::checks::observed_orders(order, acc) {
                assert!(
                    (observed - acc as f64).abs() <= 0.3,
                    "order {order} acc {acc}: {observed}"
                );
            }
        }
    }
}

#[test]
fn periodic_advection_conserves_the_sum() {
    let src = include_str!("../specs/sine1d.fd").replace("init u = sin(2 * pi * x)", "init u = 1 + sin(2 * pi * x) * cos(4 * pi * x)");
    let p = parse_problem(&src).unwrap();
    let mut sim = Simulation::new(&p, ExecConfig::default()).unwrap();
    let before: f64 = sim.snapshot().fields[0].data.iter().sum();
    sim.run_sequential(200, RunOptions::default()).unwrap();
    let after: f64 = sim.snapshot().fields[0].data.iter().sum();
    assert!((after - before).abs() < 1e-10 * before.abs(), "{before} -> {after}");
}

#[test]
fn heat_line_tracks_the_exact_solution() {
    let p = parse_problem(include_str!("../specs/heat1d.fd")).unwrap();
    let steps = 100;
    let mut sim = Simulation::new(&p, ExecConfig::default()).unwrap();
    sim.run_sequential(steps, RunOptions::default()).unwrap();
    let exact = analytic_solution(&p, "T", AnalyticKind::Heat { diffusivity: 0.1 }, steps).unwrap();
    let got = &sim.snapshot().fields[0].data;
    let err = got
        .iter()
        .zip(&exact.snapshot.fields[0].data)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1.5 * exact.estimate + 1e-14, "{err} vs estimate {}", exact.estimate);
    assert!(err < 1e-6);
}
