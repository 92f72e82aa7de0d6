mod common;

use ckvlab::ckv::{assemble_operator, build_basis, CollocationGrid};
use ckvlab::metrics::{builtin_metric, FACTOR_LABELS, METRIC_LABELS};
use ckvlab::perturb::conformal_invariance_check;
use ckvlab::{count_ckv, Mode, SolverConfig, VectorFieldPoly};
use common::oracle::{exact_nullity, Equation};
use nalgebra::DVector;

fn cfg(mode: Mode, degree: u32) -> SolverConfig {
    SolverConfig::default().with_mode(mode).with_degree(degree)
}

fn nullity(label: &str, n: usize, mode: Mode, degree: u32) -> usize {
    let g = builtin_metric(label, n).unwrap();
    let r = count_ckv(g.as_ref(), &cfg(mode, degree)).unwrap();
    assert!(
        !r.ambiguous,
        "{label} n={n} {mode:?} d={degree}: {:?}",
        r.gap_ratio
    );
    r.nullity
}

#[test]
fn flat_matches_exact_oracle() {
    for n in [2, 3, 4] {
        for d in [2, 3] {
            assert_eq!(
                nullity("flat", n, Mode::ConformalKilling, d),
                exact_nullity(Equation::FlatConformal, n, d),
                "conformal n={n} d={d}"
            );
            assert_eq!(
                nullity("flat", n, Mode::Killing, d),
                exact_nullity(Equation::FlatKilling, n, d),
                "killing n={n} d={d}"
            );
        }
    }
}

#[test]
fn oracle_reproduces_classical_dimensions() {
    assert_eq!(exact_nullity(Equation::FlatConformal, 3, 2), 10);
    assert_eq!(exact_nullity(Equation::FlatKilling, 3, 3), 6);
    assert_eq!(exact_nullity(Equation::FlatConformal, 2, 4), 10);
    assert_eq!(exact_nullity(Equation::FlatConformal, 4, 3), 15);
    assert_eq!(
        exact_nullity(Equation::StereoConformal { sign: 1 }, 3, 2),
        10
    );
    assert_eq!(exact_nullity(Equation::StereoKilling { sign: -1 }, 3, 3), 6);
    assert_eq!(exact_nullity(Equation::ExpKilling, 3, 3), 3);
}

#[test]
fn stereographic_models_match_oracle() {
    for (label, sign) in [("sphere-stereo", 1), ("hyperbolic-ball", -1)] {
        for d in [2, 3] {
            assert_eq!(
                nullity(label, 3, Mode::ConformalKilling, d),
                exact_nullity(Equation::StereoConformal { sign }, 3, d),
                "{label} conformal d={d}"
            );
            assert_eq!(
                nullity(label, 3, Mode::Killing, d),
                exact_nullity(Equation::StereoKilling { sign }, 3, d),
                "{label} killing d={d}"
            );
        }
    }
    assert_eq!(nullity("sphere-stereo", 3, Mode::ConformalKilling, 2), 10);
    assert_eq!(nullity("hyperbolic-ball", 3, Mode::Killing, 2), 6);
}

#[test]
fn conf_exp_killing_matches_oracle() {
    for d in [2, 3] {
        assert_eq!(
            nullity("conf-exp", 3, Mode::Killing, d),
            exact_nullity(Equation::ExpKilling, 3, d)
        );
    }
}

#[test]
fn flat_conformal_count_is_degree_independent_in_three_dimensions() {
    for label in ["flat", "sphere-stereo"] {
        for d in [2, 3, 4] {
            assert_eq!(
                nullity(label, 3, Mode::ConformalKilling, d),
                10,
                "{label} d={d}"
            );
        }
    }
    for d in [2, 3, 4] {
        assert_eq!(nullity("flat", 3, Mode::Killing, d), 6);
    }
}

#[test]
fn flat_plane_count_grows_with_degree() {
    for d in [2u32, 3, 4] {
        assert_eq!(
            nullity("flat", 2, Mode::ConformalKilling, d),
            2 * (d as usize + 1)
        );
    }
}

#[test]
fn killing_never_exceeds_conformal() {
    for label in METRIC_LABELS {
        for n in [2, 3] {
            let g = builtin_metric(label, n).unwrap();
            let k = count_ckv(g.as_ref(), &cfg(Mode::Killing, 3)).unwrap();
            let c = count_ckv(g.as_ref(), &cfg(Mode::ConformalKilling, 3)).unwrap();
            assert!(k.nullity <= c.nullity, "{label} n={n}");
        }
    }
}

#[test]
fn conformal_class_invariance() {
    for base in ["flat", "sphere-stereo"] {
        for n in [2, 3] {
            for factor in FACTOR_LABELS {
                let g = builtin_metric(base, n).unwrap();
                let (a, b) =
                    conformal_invariance_check(g, factor, &SolverConfig::default()).unwrap();
                assert!(!a.ambiguous && !b.ambiguous);
                assert_eq!(a.nullity, b.nullity, "{base} n={n} {factor}");
            }
        }
    }
}

#[test]
fn invariance_examples() {
    let flat3 = builtin_metric("flat", 3).unwrap();
    for factor in ["const-2", "exp-x1"] {
        let (a, b) =
            conformal_invariance_check(flat3.clone(), factor, &SolverConfig::default()).unwrap();
        assert_eq!((a.nullity, b.nullity), (10, 10));
    }
    let flat2 = builtin_metric("flat", 2).unwrap();
    let (a, b) =
        conformal_invariance_check(flat2, "sphere", &cfg(Mode::ConformalKilling, 3)).unwrap();
    assert_eq!((a.nullity, b.nullity), (8, 8));
}

#[test]
fn grid_refinement_keeps_nullity() {
    for label in METRIC_LABELS {
        for mode in [Mode::ConformalKilling, Mode::Killing] {
            let g = builtin_metric(label, 3).unwrap();
            let coarse = count_ckv(g.as_ref(), &cfg(mode, 3).with_grid(6)).unwrap();
            let fine = count_ckv(g.as_ref(), &cfg(mode, 3).with_grid(12)).unwrap();
            if !coarse.ambiguous && !fine.ambiguous {
                assert_eq!(coarse.nullity, fine.nullity, "{label} {mode:?}");
            }
        }
    }
}

#[test]
fn flat_reports_have_wide_gaps() {
    for d in [2, 3, 4] {
        for mode in [Mode::ConformalKilling, Mode::Killing] {
            let g = builtin_metric("flat", 3).unwrap();
            let r = count_ckv(g.as_ref(), &cfg(mode, d)).unwrap();
            assert!(r.gap_ratio >= 1e6, "{mode:?} d={d}: {}", r.gap_ratio);
        }
    }
}

#[test]
fn reports_are_deterministic() {
    let g = builtin_metric("sphere-stereo", 3).unwrap();
    let a = count_ckv(g.as_ref(), &SolverConfig::default()).unwrap();
    let b = count_ckv(g.as_ref(), &SolverConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn operator_columns_for_known_fields() {
    let g = builtin_metric("flat", 3).unwrap();
    let basis = build_basis(3, 1).unwrap();
    let grid = CollocationGrid::midpoint(g.patch(), 3).unwrap();
    let dilation = DVector::from_vec(basis.coefficients(&VectorFieldPoly::dilation(3)).unwrap());

    let a = assemble_operator(g.as_ref(), &basis, &grid, Mode::ConformalKilling).unwrap();
    assert_eq!(a.nrows(), grid.len() * 6);
    assert_eq!(a.ncols(), 12);
    assert!((&a * &dilation).norm() < 1e-14);

    let a = assemble_operator(g.as_ref(), &basis, &grid, Mode::Killing).unwrap();
    assert!((&a * &dilation).norm() > 1.0);

    // X = (x₂, 0, 0): T₁₂ = 1 at every point, so each row block is √w·√2 in slot (0,1)
    let shear = VectorFieldPoly::monomial(0, vec![0, 1, 0], 1.0);
    let c = DVector::from_vec(basis.coefficients(&shear).unwrap());
    let a = assemble_operator(g.as_ref(), &basis, &grid, Mode::ConformalKilling).unwrap();
    let r = &a * &c;
    for (p, w) in grid.weights().iter().enumerate() {
        let block = r.rows(p * 6, 6);
        let expected = [0.0, (2.0 * w).sqrt(), 0.0, 0.0, 0.0, 0.0];
        for (got, want) in block.iter().zip(expected) {
            assert!((got - want).abs() < 1e-14);
        }
    }
}
