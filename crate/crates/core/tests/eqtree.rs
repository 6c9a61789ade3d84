use std::collections::HashMap;

use fdflow::eqtree::{
    classify, infer_dims, tree_eval_reference, Axis, InferError, Op, TreeEvaluator, TreeNode,
};
use fdflow::frontend::{Equation, EquationKind};
use fdflow::grid::create_grid;
use fdflow::parse_problem;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dims_of(fields: &[(&str, usize)]) -> HashMap<String, usize> {
    fields.iter().map(|(n, d)| (n.to_string(), *d)).collect()
}

fn all_dims(t: &TreeNode, out: &mut Vec<usize>) {
    out.push(t.dims);
    for c in &t.children {
        all_dims(c, out);
    }
}

#[test]
fn heat_tree_is_scalar_everywhere() {
    let t = TreeNode::times(TreeNode::named_const("D", 0.1), TreeNode::lapla(TreeNode::field("T")));
    let a = infer_dims(&t, 3, &dims_of(&[("T", 1)])).unwrap();
    let mut d = Vec::new();
    all_dims(&a, &mut d);
    assert_eq!(d, vec![1, 1, 1, 1]);
}

#[test]
fn gradient_of_scalar_has_mesh_dims() {
    let a = infer_dims(&TreeNode::grad(TreeNode::field("T")), 3, &dims_of(&[("T", 1)])).unwrap();
    assert_eq!(a.dims, 3);
    let a = infer_dims(&TreeNode::grad(TreeNode::field("T")), 2, &dims_of(&[("T", 1)])).unwrap();
    assert_eq!(a.dims, 2);
}

#[test]
fn vector_plus_scalar_is_a_mismatch() {
    let t = TreeNode::add(TreeNode::grad(TreeNode::field("T")), TreeNode::field("T"));
    let err = infer_dims(&t, 3, &dims_of(&[("T", 1)])).unwrap_err();
    assert!(matches!(err, InferError::Mismatch { left: 3, right: 1, .. }), "{err:?}");
}

#[test]
fn divergence_rules() {
    let f = dims_of(&[("T", 1), ("u", 3), ("w", 2)]);
    assert_eq!(infer_dims(&TreeNode::div(TreeNode::field("u")), 3, &f).unwrap().dims, 1);
    assert_eq!(
        infer_dims(&TreeNode::div(TreeNode::field("T")), 3, &f).unwrap_err(),
        InferError::DivOfScalar
    );
    assert!(infer_dims(&TreeNode::div(TreeNode::field("w")), 3, &f).is_err());
}

#[test]
fn scalar_times_vector_keeps_vector_dims() {
    let f = dims_of(&[("T", 1), ("u", 3)]);
    let t = TreeNode::times(TreeNode::field("T"), TreeNode::field("u"));
    assert_eq!(infer_dims(&t, 3, &f).unwrap().dims, 3);
}

#[test]
fn unknown_field_and_bad_axis() {
    let f = dims_of(&[("T", 1)]);
    assert_eq!(
        infer_dims(&TreeNode::field("Q"), 1, &f).unwrap_err(),
        InferError::UnknownField("Q".into())
    );
    assert!(infer_dims(&TreeNode::der(Axis::Z, TreeNode::field("T")), 2, &f).is_err());
}

#[test]
fn inference_is_idempotent_and_deterministic() {
    let f = dims_of(&[("T", 1), ("u", 2)]);
    let t = TreeNode::sub(
        TreeNode::times(TreeNode::constant(0.5), TreeNode::lapla(TreeNode::field("u"))),
        TreeNode::grad(TreeNode::field("T")),
    );
    let a = infer_dims(&t, 2, &f).unwrap();
    assert_eq!(infer_dims(&a, 2, &f).unwrap(), a);
    assert_eq!(infer_dims(&t, 2, &f).unwrap(), a);
}

#[test]
fn classification_follows_the_left_hand_side() {
    let p = parse_problem(include_str!("../specs/coupled2d.fd")).unwrap();
    for e in &p.equations {
        let expected = if e.lhs == "P" {
            EquationKind::Algebraic
        } else {
            EquationKind::TimeDerivative
        };
        assert_eq!(classify(e), expected);
    }
    let eq = Equation {
        kind: EquationKind::Algebraic,
        lhs: "P".into(),
        rhs: TreeNode::field("rho"),
    };
    assert_eq!(classify(&eq), EquationKind::Algebraic);
}

#[test]
fn times_of_constants_folds() {
    let t = TreeNode::times(TreeNode::named_const("a", 2.0), TreeNode::constant(3.5));
    assert_eq!(t.const_value(), Some(7.0));
    assert_eq!(t.node_count(), 1);
}

#[test]
fn structural_equality_ignores_const_names() {
    let a = TreeNode::times(TreeNode::named_const("D", 0.5), TreeNode::field("T"));
    let b = TreeNode::times(TreeNode::constant(0.5), TreeNode::field("T"));
    assert!(a.same_structure(&b));
    assert_eq!(a.hash, b.hash);
    let c = TreeNode::times(TreeNode::constant(0.25), TreeNode::field("T"));
    assert!(!a.same_structure(&c));
}

#[test]
fn operand_order_matters() {
    let a = TreeNode::sub(TreeNode::field("a"), TreeNode::field("b"));
    let b = TreeNode::sub(TreeNode::field("b"), TreeNode::field("a"));
    assert_ne!(a.hash, b.hash);
}

#[test]
fn display_is_fully_parenthesised() {
    let t = TreeNode::times(TreeNode::named_const("D", 0.1), TreeNode::lapla(TreeNode::field("T")));
    assert_eq!(t.to_string(), "(D * lapla(T))");
}

#[test]
fn dump_lists_one_vertex_per_line() {
    let t = TreeNode::times(TreeNode::named_const("D", 0.1), TreeNode::lapla(TreeNode::field("T")));
    let a = infer_dims(&t, 3, &dims_of(&[("T", 1)])).unwrap();
    let d = a.dump();
    let lines: Vec<&str> = d.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("times dims=1 hash="));
    assert!(lines[2].starts_with("  lapla dims=1"));
    assert!(lines[3].starts_with("    var T dims=1"));
}

fn random_tree(rng: &mut ChaCha8Rng, depth: usize) -> TreeNode {
    const FIELDS: [&str; 4] = ["a", "b", "c", "d"];
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.6) {
            TreeNode::field(*FIELDS.choose(rng).unwrap())
        } else {
            TreeNode::constant(f64::from(rng.gen_range(-8i32..8)) * 0.25)
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 => TreeNode::new(Op::Add, vec![random_tree(rng, d), random_tree(rng, d)]),
        1 => TreeNode::new(Op::Sub, vec![random_tree(rng, d), random_tree(rng, d)]),
        2 => TreeNode::new(Op::Times, vec![random_tree(rng, d), random_tree(rng, d)]),
        3 => TreeNode::new(
            Op::Derivative(Axis::ALL[rng.gen_range(0..3)]),
            vec![random_tree(rng, d)],
        ),
        4 => TreeNode::new(Op::Grad, vec![random_tree(rng, d)]),
        5 => TreeNode::new(Op::Div, vec![random_tree(rng, d)]),
        _ => TreeNode::new(Op::Lapla, vec![random_tree(rng, d)]),
    }
}

/// 10⁵ random trees of depth ≤ 6 over 4 fields: equal hashes only for
/// structurally equal trees.
#[test]
fn structural_hash_has_no_collisions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut seen: HashMap<u64, TreeNode> = HashMap::new();
    let mut distinct = 0usize;
    for _ in 0..100_000 {
        let t = random_tree(&mut rng, 6);
        match seen.get(&t.hash) {
            Some(prev) => assert!(prev.same_structure(&t), "collision:\n{prev}\n{t}"),
            None => {
                distinct += 1;
                seen.insert(t.hash, t);
            }
        }
    }
    assert!(distinct > 20_000, "generator too repetitive: {distinct}");
}

fn problem(src: &str) -> (fdflow::Problem, fdflow::grid::GridStore) {
    let p = parse_problem(src).unwrap();
    let store = create_grid(&p, 64, 8).unwrap();
    (p, store)
}

#[test]
fn laplacian_of_constant_is_zero() {
    let (p, store) = problem(
        "mesh 2d nx=10 ny=9 lx=1 ly=1\nfield T scalar\nconst D = 0.3\neq dt(T) = D * lapla(T)\n\
init T = 4.5\ntime dt=0.001 steps=1\nnumerics acc=4\n",
    );
    // Rounding in the weight sum scales with value / h².
    let h = p.mesh.spacing(0).min(p.mesh.spacing(1));
    let tol = 1e-12 * 4.5 / (h * h);
    for j in 0..9 {
        for i in 0..10 {
            let r = tree_eval_reference(&p, &store, 0, [i, j, 0]).unwrap();
            assert!(r[0][0].abs() < tol, "{r:?} at {i},{j}");
        }
    }
}

#[test]
fn laplacian_of_quadratic_is_exact() {
    // T = x² + y² + z² has lapla T = 2·3; the three-point stencil is exact on quadratics.
    let d = 0.1;
    let (p, store) = problem(&format!(
        "mesh 3d nx=10 ny=11 nz=12 lx=1 ly=1.1 lz=1.2\nfield T scalar\nconst D = {d}\n\
eq dt(T) = D * lapla(T)\ninit T = x*x + y*y + z*z\nbc T dirichlet value=0 on all\n\
time dt=0.0001 steps=1\nnumerics acc=2\n"
    ));
    let expected = d * 2.0 * 3.0;
    for k in 1..11 {
        for j in 1..10 {
            for i in 1..9 {
                let r = tree_eval_reference(&p, &store, 0, [i, j, k]).unwrap()[0][0];
                assert!(((r - expected) / expected).abs() < 1e-12, "{r} at {i},{j},{k}");
            }
        }
    }
}

#[test]
fn evaluation_is_pure() {
    let (p, store) = problem(include_str!("../specs/coupled2d.fd"));
    let ev = TreeEvaluator::new(&p, &store).unwrap();
    for e in 0..ev.trees.len() {
        let a = ev.eval_equation(&store, 0, e, [5, 7, 0]).unwrap();
        let b = ev.eval_equation(&store, 0, e, [5, 7, 0]).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn out_of_range_points_are_rejected() {
    let (p, store) = problem(include_str!("../specs/heat1d.fd"));
    assert!(tree_eval_reference(&p, &store, 0, [-5, 0, 0]).is_err());
    assert!(tree_eval_reference(&p, &store, 0, [300, 0, 0]).is_err());
}
