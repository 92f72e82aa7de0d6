mod common;

use ckvlab::metrics::{builtin_metric, DiagPoly, METRIC_LABELS};
use ckvlab::poly::graded_multi_indices;
use ckvlab::tensor::{
    christoffel, covariant_derivative, deformation_tensor, divergence, lie_derivative_metric,
    PointFrame,
};
use ckvlab::{MetricProvider, Patch, Polynomial, VectorFieldPoly};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(n: usize, degree: u32, rng: &mut ChaCha8Rng) -> VectorFieldPoly {
    let alphas = graded_multi_indices(n, degree);
    VectorFieldPoly::new(
        (0..n)
            .map(|_| {
                Polynomial::from_terms(
                    n,
                    alphas
                        .iter()
                        .map(|a| (a.clone(), rng.random_range(-1.0..1.0))),
                )
            })
            .collect(),
    )
}

/// Γ^k_ij = δ^k_i ∂_jφ + δ^k_j ∂_iφ − δ_ij ∂_kφ for g = e^{2φ} δ.
fn inside(g: &dyn MetricProvider, unit: &[f64]) -> Vec<f64> {
    let p = g.patch();
    unit.iter()
        .enumerate()
        .map(|(i, u)| p.lower()[i] + (u + 1.0) / 2.0 * p.edge(i))
        .collect()
}

fn conformal_christoffel_oracle(grad_phi: &[f64], k: usize, i: usize, j: usize) -> f64 {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    d(k, i) * grad_phi[j] + d(k, j) * grad_phi[i] - d(i, j) * grad_phi[k]
}

#[test]
fn flat_christoffel_vanishes() {
    let g = builtin_metric("flat", 3).unwrap();
    let gamma = christoffel(g.as_ref(), &[0.1, 0.2, -0.3]).unwrap();
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(gamma.get(k, i, j), 0.0);
            }
        }
    }
}

#[test]
fn conf_exp_christoffel_matches_symbolic_formula() {
    // e^{2x₁} δ, so ∇φ = e₁ everywhere
    let g = builtin_metric("conf-exp", 3).unwrap();
    for x in [[0.0, 0.0, 0.0], [0.3, -0.1, 0.2]] {
        let gamma = christoffel(g.as_ref(), &x).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let expected = conformal_christoffel_oracle(&[1.0, 0.0, 0.0], k, i, j);
                    assert!((gamma.get(k, i, j) - expected).abs() < 1e-14);
                }
            }
        }
    }
    let gamma = christoffel(g.as_ref(), &[0.0; 3]).unwrap();
    assert!((gamma.get(0, 0, 0) - 1.0).abs() < 1e-15);
    assert!((gamma.get(0, 1, 1) + 1.0).abs() < 1e-15);
    assert!((gamma.get(1, 0, 1) - 1.0).abs() < 1e-15);
}

#[test]
fn polar_type_christoffel() {
    // g = diag(1, x₁²) at x = (2, 1)
    let patch = Patch::new(vec![1.0, 0.0], vec![3.0, 2.0]).unwrap();
    let g = DiagPoly::new(
        patch,
        vec![
            Polynomial::constant(2, 1.0),
            Polynomial::monomial(vec![2, 0], 1.0),
        ],
        "polar",
    );
    let x = [2.0, 1.0];
    let gamma = christoffel(&g, &x).unwrap();
    assert!((gamma.get(1, 0, 1) - 0.5).abs() < 1e-15);
    assert!((gamma.get(1, 1, 0) - 0.5).abs() < 1e-15);
    assert!((gamma.get(0, 1, 1) + 2.0).abs() < 1e-15);

    // independent check: first kind from central differences of eval only
    let h = 1e-5;
    let dg = |l: usize| {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[l] += h;
        xm[l] -= h;
        (g.eval(&xp) - g.eval(&xm)) / (2.0 * h)
    };
    let d = [dg(0), dg(1)];
    let inv = g.eval(&x).try_inverse().unwrap();
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let fd: f64 = (0..2)
                    .map(|l| 0.5 * inv[(k, l)] * (d[i][(j, l)] + d[j][(i, l)] - d[l][(i, j)]))
                    .sum();
                assert!((fd - gamma.get(k, i, j)).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn christoffel_is_symmetric_in_lower_indices() {
    for label in METRIC_LABELS {
        let g = builtin_metric(label, 3).unwrap();
        let gamma = christoffel(g.as_ref(), &[0.11, -0.23, 0.31]).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(gamma.get(k, i, j), gamma.get(k, j, i));
                }
            }
        }
    }
}

#[test]
fn flat_covariant_derivative_examples() {
    let g = builtin_metric("flat", 3).unwrap();
    let shear = VectorFieldPoly::monomial(0, vec![0, 1, 0], 1.0);
    let c = covariant_derivative(g.as_ref(), &shear, &[0.2, 0.1, -0.4]).unwrap();
    let mut expected = DMatrix::zeros(3, 3);
    expected[(0, 1)] = 1.0;
    assert_eq!(c, expected);
    let c =
        covariant_derivative(g.as_ref(), &VectorFieldPoly::dilation(3), &[0.2, 0.1, -0.4]).unwrap();
    assert_eq!(c, DMatrix::identity(3, 3));
}

#[test]
fn conf_exp_covariant_derivative_of_translation() {
    let g = builtin_metric("conf-exp", 3).unwrap();
    let e1 = VectorFieldPoly::constant(&[1.0, 0.0, 0.0]);
    let c = covariant_derivative(g.as_ref(), &e1, &[0.0; 3]).unwrap();
    for k in 0..3 {
        for i in 0..3 {
            let expected = conformal_christoffel_oracle(&[1.0, 0.0, 0.0], k, i, 0);
            assert!((c[(k, i)] - expected).abs() < 1e-15, "({k},{i})");
        }
    }
    assert!((c.trace() - 3.0).abs() < 1e-15);
    assert!((divergence(g.as_ref(), &e1, &[0.0; 3]).unwrap() - 3.0).abs() < 1e-15);
}

#[test]
fn flat_lie_derivative_examples() {
    let g = builtin_metric("flat", 3).unwrap();
    let x = [0.3, -0.2, 0.1];
    let rotation = VectorFieldPoly::new(vec![
        Polynomial::monomial(vec![0, 1, 0], -1.0),
        Polynomial::monomial(vec![1, 0, 0], 1.0),
        Polynomial::zero(3),
    ]);
    assert_eq!(
        lie_derivative_metric(g.as_ref(), &rotation, &x)
            .unwrap()
            .max_abs(),
        0.0
    );

    let shear = VectorFieldPoly::monomial(0, vec![0, 1, 0], 1.0);
    let l = lie_derivative_metric(g.as_ref(), &shear, &x).unwrap();
    let mut expected = DMatrix::zeros(3, 3);
    expected[(0, 1)] = 1.0;
    expected[(1, 0)] = 1.0;
    assert_eq!(l.to_matrix(), expected);
    assert_eq!(divergence(g.as_ref(), &shear, &x).unwrap(), 0.0);
    assert_eq!(
        deformation_tensor(g.as_ref(), &shear, &x)
            .unwrap()
            .to_matrix(),
        expected
    );

    let l = lie_derivative_metric(g.as_ref(), &VectorFieldPoly::dilation(3), &x).unwrap();
    assert_eq!(l.to_matrix(), DMatrix::identity(3, 3) * 2.0);
    assert_eq!(
        divergence(g.as_ref(), &VectorFieldPoly::dilation(3), &x).unwrap(),
        3.0
    );
}

#[test]
fn deformation_tensor_zero_cases() {
    let g = builtin_metric("flat", 3).unwrap();
    let x = [0.3, -0.2, 0.1];
    let t = deformation_tensor(g.as_ref(), &VectorFieldPoly::dilation(3), &x).unwrap();
    assert_eq!(t.max_abs(), 0.0);
    let t =
        deformation_tensor(g.as_ref(), &VectorFieldPoly::constant(&[1.0, 0.0, 0.0]), &x).unwrap();
    assert_eq!(t.max_abs(), 0.0);
}

#[test]
fn trace_free_and_trace_identity_on_every_builtin() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for label in METRIC_LABELS {
        for n in [2, 3] {
            let g = builtin_metric(label, n).unwrap();
            for _ in 0..10 {
                let field = random_field(n, rng.random_range(2..=4), &mut rng);
                for x in g.patch().lattice(5) {
                    let frame = PointFrame::new(g.as_ref(), &x).unwrap();
                    let t = frame.deformation_tensor(&field);
                    assert!(
                        frame.trace(&t).abs() <= 1e-10 * t.max_abs(),
                        "{label} trace {} vs {}",
                        frame.trace(&t),
                        t.max_abs()
                    );
                    let lie = frame.lie_derivative(&field);
                    let div = frame.divergence(&field);
                    assert!((frame.trace(&lie) - 2.0 * div).abs() <= 1e-10 * lie.max_abs());
                }
            }
        }
    }
}

#[test]
fn lie_derivative_matches_flow_difference_quotient() {
    let g = builtin_metric("flat", 3).unwrap();
    let x = [0.3, -0.2, 0.4];
    for case in common::flows::flat_cases() {
        let lie = lie_derivative_metric(g.as_ref(), &case.field, &x)
            .unwrap()
            .to_matrix();
        let errors: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&t| common::flows::pullback_error(&case, &lie, t, &x))
            .collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.8..=2.2).contains(&ratio), "{}: ratio {ratio}", case.name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deformation_tensor_is_linear(
        seed in any::<u64>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        unit in prop::collection::vec(-1.0f64..1.0, 3),
        label in prop::sample::select(METRIC_LABELS.to_vec()),
    ) {
        let g = builtin_metric(label, 3).unwrap();
        let x = inside(g.as_ref(), &unit);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f1 = random_field(3, 3, &mut rng);
        let f2 = random_field(3, 3, &mut rng);
        let combo = f1.scale(a).add(&f2.scale(b));
        let lhs = deformation_tensor(g.as_ref(), &combo, &x).unwrap();
        let t1 = deformation_tensor(g.as_ref(), &f1, &x).unwrap();
        let t2 = deformation_tensor(g.as_ref(), &f2, &x).unwrap();
        let rhs = t1.axpy(a - 1.0, &t1).axpy(b, &t2);
        let scale = 1.0 + t1.max_abs() * a.abs() + t2.max_abs() * b.abs();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((lhs.get(i, j) - rhs.get(i, j)).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn deformation_tensor_is_symmetric(
        seed in any::<u64>(),
        unit in prop::collection::vec(-1.0f64..1.0, 3),
        label in prop::sample::select(METRIC_LABELS.to_vec()),
    ) {
        let g = builtin_metric(label, 3).unwrap();
        let x = inside(g.as_ref(), &unit);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(3, 4, &mut rng);
        let t = deformation_tensor(g.as_ref(), &f, &x).unwrap().to_matrix();
        prop_assert_eq!(t.clone(), t.transpose());
    }
}
