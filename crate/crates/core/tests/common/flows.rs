//! Polynomial fields on flat R³ whose flows are known in closed form, with
//! the Jacobian of the time-t flow map.

use ckvlab::VectorFieldPoly;
use nalgebra::DMatrix;

/// `(t, x) -> Dφ_t(x)`
pub type FlowJacobian = Box<dyn Fn(f64, &[f64]) -> DMatrix<f64>>;

pub struct FlowCase {
    pub name: &'static str,
    pub field: VectorFieldPoly,
    pub jacobian: FlowJacobian,
}

fn unit(i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(3, 3);
    m[(i, j)] = 1.0;
    m
}

pub fn flat_cases() -> Vec<FlowCase> {
    let b = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, -1.0, 1.0, 0.5, 0.0, 0.5]);
    let b_flow = b.clone();
    vec![
        FlowCase {
            // φ_t(x) = x + t x₂ e₁
            name: "shear",
            field: VectorFieldPoly::monomial(0, vec![0, 1, 0], 1.0),
            jacobian: Box::new(|t, _| DMatrix::identity(3, 3) + unit(0, 1) * t),
        },
        FlowCase {
            // φ_t(x) = e^t x
            name: "dilation",
            field: VectorFieldPoly::dilation(3),
            jacobian: Box::new(|t, _| DMatrix::identity(3, 3) * t.exp()),
        },
        FlowCase {
            // φ_t(x) = x + t x₂² e₁
            name: "quadratic-shear",
            field: VectorFieldPoly::monomial(0, vec![0, 2, 0], 1.0),
            jacobian: Box::new(|t, x| DMatrix::identity(3, 3) + unit(0, 1) * (2.0 * t * x[1])),
        },
        FlowCase {
            // φ_t(x) = x + t x₁x₂ e₃
            name: "bilinear-lift",
            field: VectorFieldPoly::monomial(2, vec![1, 1, 0], 1.0),
            jacobian: Box::new(|t, x| {
                DMatrix::identity(3, 3) + unit(2, 0) * (t * x[1]) + unit(2, 1) * (t * x[0])
            }),
        },
        FlowCase {
            // φ_t(x) = exp(tB) x
            name: "linear",
            field: VectorFieldPoly::linear(&b),
            jacobian: Box::new(move |t, _| (&b_flow * t).exp()),
        },
    ]
}

/// Max-abs error of the difference quotient `(φ_t^* δ − δ)/t` against `lie`.
pub fn pullback_error(case: &FlowCase, lie: &DMatrix<f64>, t: f64, x: &[f64]) -> f64 {
    let j = (case.jacobian)(t, x);
    let pullback = j.transpose() * &j;
    ((pullback - DMatrix::identity(3, 3)) / t - lie).abs().max()
}
