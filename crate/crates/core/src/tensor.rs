//! Pointwise tensor calculus on a coordinate patch.
//!
//! Index conventions are 0-based throughout. For a metric `g` and a vector
//! field `X`:
//!
//! * `Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`
//! * `X^k_;i = ∂_i X^k + Γ^k_il X^l`
//! * `(L_X g)_ij = g_jk X^k_;i + g_ik X^k_;j`
//! * `div X = X^k_;k`
//! * `T(X) = L_X g − (2/n) div(X) g`, whose kernel is the space of conformal Killing fields.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{CkvError, Result};
use crate::poly::VectorFieldPoly;

/// Condition number above which `g(x)` is treated as numerically singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Axis-aligned box in coordinate space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Patch {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(CkvError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.len() < 2 {
            return Err(CkvError::invalid(
                "dim",
                "patch dimension must be at least 2",
            ));
        }
        for (axis, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(CkvError::invalid(
                    "box",
                    format!("axis {axis} has interval [{lo}, {hi}] of non-positive length"),
                ));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[-half, half]^n`.
    pub fn centered_cube(n: usize, half: f64) -> Result<Self> {
        Self::new(vec![-half; n], vec![half; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn edge(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn min_edge(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.edge(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.edge(a)).product()
    }

    /// Closed-box membership, with a relative slack of 1e-12 of each edge.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().enumerate().all(|(a, &xi)| {
                let slack = 1e-12 * self.edge(a);
                xi >= self.lower[a] - slack && xi <= self.upper[a] + slack
            })
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(CkvError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.contains(x) {
            return Err(CkvError::OutOfPatch { point: x.to_vec() });
        }
        Ok(())
    }

    /// Largest Euclidean norm of a box corner.
    pub fn max_radius(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Tensor grid with `m` equispaced points per axis, endpoints included.
    pub fn lattice(&self, m: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|a| {
                if m == 1 {
                    return vec![0.5 * (self.lower[a] + self.upper[a])];
                }
                (0..m)
                    .map(|i| self.lower[a] + self.edge(a) * i as f64 / (m - 1) as f64)
                    .collect()
            })
            .collect();
        tensor_product(&axes)
    }
}

/// Cartesian product of per-axis coordinate lists, first axis slowest.
pub(crate) fn tensor_product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

/// A Riemannian metric on one coordinate patch, with analytic first derivatives.
///
/// Implementations must be safe to evaluate concurrently.
pub trait MetricProvider: Send + Sync {
    fn patch(&self) -> &Patch;

    fn label(&self) -> &str;

    /// `g(x)` as a symmetric `n x n` matrix.
    fn eval(&self, x: &[f64]) -> DMatrix<f64>;

    /// `∂_axis g(x)`.
    fn deriv(&self, x: &[f64], axis: usize) -> DMatrix<f64>;

    fn dim(&self) -> usize {
        self.patch().dim()
    }
}

/// Covariant symmetric 2-tensor at a point. Only the upper triangle is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor2 {
    n: usize,
    upper: Vec<f64>,
}

impl SymTensor2 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            upper: vec![0.0; n * (n + 1) / 2],
        }
    }

    /// Built from `f(i, j)` for `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(f(i, j));
            }
        }
        Self { n, upper }
    }

    /// Upper triangle of `m`; the lower triangle is ignored.
    pub fn from_matrix_upper(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.offset(i, j)]
    }

    /// Upper-triangle entries, row-major (`(0,0), (0,1), ..., (n-1,n-1)`).
    pub fn upper_entries(&self) -> &[f64] {
        &self.upper
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    /// `Σ h^ij T_ij` for a (symmetric) contravariant `h`.
    pub fn contract(&self, h: &DMatrix<f64>) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += h[(i, j)] * self.get(i, j);
            }
        }
        s
    }

    pub fn axpy(&self, a: f64, other: &SymTensor2) -> SymTensor2 {
        SymTensor2 {
            n: self.n,
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(x, y)| x + a * y)
                .collect(),
        }
    }
}

/// Christoffel symbols of the second kind at one point, `gamma[k][i][j] = Γ^k_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    gamma: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.n + i) * self.n + j]
    }
}

/// Metric data at one point: `g`, `g^{-1}` and `Γ`. All pointwise operators go through this.
#[derive(Debug, Clone)]
pub struct PointFrame {
    point: Vec<f64>,
    metric: DMatrix<f64>,
    inverse: DMatrix<f64>,
    christoffel: Christoffel,
}

/// Inverse of a symmetric positive definite matrix, with the condition guard.
pub fn guarded_inverse(g: &DMatrix<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(g.clone());
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if !(min > 0.0) {
        return Err(CkvError::NotPositiveDefinite {
            point: x.to_vec(),
            min_eigenvalue: min,
        });
    }
    let condition = max / min;
    if condition > CONDITION_LIMIT {
        return Err(CkvError::SingularMetric {
            point: x.to_vec(),
            condition,
        });
    }
    let chol = g.clone().cholesky().ok_or(CkvError::SingularMetric {
        point: x.to_vec(),
        condition,
    })?;
    let inv = chol.inverse();
    // symmetrize away rounding
    Ok((&inv + inv.transpose()) * 0.5)
}

impl PointFrame {
    pub fn new(g: &dyn MetricProvider, x: &[f64]) -> Result<Self> {
        g.patch().check(x)?;
        let n = g.dim();
        let metric = g.eval(x);
        let inverse = guarded_inverse(&metric, x)?;
        let derivs: Vec<DMatrix<f64>> = (0..n).map(|l| g.deriv(x, l)).collect();

        // first kind: first[l][i][j] = ½ (∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let mut first = vec![0.0; n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * (derivs[i][(j, l)] + derivs[j][(i, l)] - derivs[l][(i, j)]);
                    first[(l * n + i) * n + j] = v;
                    first[(l * n + j) * n + i] = v;
                }
            }
        }
        let mut gamma = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v: f64 = (0..n)
                        .map(|l| inverse[(k, l)] * first[(l * n + i) * n + j])
                        .sum();
                    gamma[(k * n + i) * n + j] = v;
                    gamma[(k * n + j) * n + i] = v;
                }
            }
        }
        Ok(Self {
            point: x.to_vec(),
            metric,
            inverse,
            christoffel: Christoffel { n, gamma },
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn christoffel(&self) -> &Christoffel {
        &self.christoffel
    }

    /// `X^k_;i` from the field value and its Jacobian (`jac[(k, i)] = ∂_i X^k`).
    pub fn covariant_from(&self, value: &DVector<f64>, jac: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = jac.clone();
        for k in 0..n {
            for i in 0..n {
                out[(k, i)] += (0..n)
                    .map(|l| self.christoffel.get(k, i, l) * value[l])
                    .sum::<f64>();
            }
        }
        out
    }

    pub fn covariant_derivative(&self, field: &VectorFieldPoly) -> DMatrix<f64> {
        self.covariant_from(&field.eval(&self.point), &field.jacobian(&self.point))
    }

    /// `L_X g` from a covariant derivative matrix.
    pub fn lie_from_covariant(&self, cov: &DMatrix<f64>) -> SymTensor2 {
        let gc = &self.metric * cov;
        SymTensor2::from_fn(self.dim(), |i, j| gc[(j, i)] + gc[(i, j)])
    }

    /// `T(X)` from a covariant derivative matrix.
    pub fn deformation_from_covariant(&self, cov: &DMatrix<f64>) -> SymTensor2 {
        let n = self.dim();
        let lie = self.lie_from_covariant(cov);
        let factor = 2.0 * cov.trace() / n as f64;
        SymTensor2::from_fn(n, |i, j| lie.get(i, j) - factor * self.metric[(i, j)])
    }

    pub fn lie_derivative(&self, field: &VectorFieldPoly) -> SymTensor2 {
        self.lie_from_covariant(&self.covariant_derivative(field))
    }

    pub fn divergence(&self, field: &VectorFieldPoly) -> f64 {
        self.covariant_derivative(field).trace()
    }

    pub fn deformation_tensor(&self, field: &VectorFieldPoly) -> SymTensor2 {
        self.deformation_from_covariant(&self.covariant_derivative(field))
    }

    /// Metric trace `g^ij t_ij`.
    pub fn trace(&self, t: &SymTensor2) -> f64 {
        t.contract(&self.inverse)
    }
}

fn check_field(g: &dyn MetricProvider, field: &VectorFieldPoly) -> Result<()> {
    if field.dim() != g.dim() {
        return Err(CkvError::DimensionMismatch {
            expected: g.dim(),
            got: field.dim(),
        });
    }
    Ok(())
}

pub fn christoffel(g: &dyn MetricProvider, x: &[f64]) -> Result<Christoffel> {
    Ok(PointFrame::new(g, x)?.christoffel)
}

/// Matrix with entry `(k, i)` equal to `X^k_;i`.
pub fn covariant_derivative(
    g: &dyn MetricProvider,
    field: &VectorFieldPoly,
    x: &[f64],
) -> Result<DMatrix<f64>> {
    check_field(g, field)?;
    Ok(PointFrame::new(g, x)?.covariant_derivative(field))
}

pub fn lie_derivative_metric(
    g: &dyn MetricProvider,
    field: &VectorFieldPoly,
    x: &[f64],
) -> Result<SymTensor2> {
    check_field(g, field)?;
    Ok(PointFrame::new(g, x)?.lie_derivative(field))
}

pub fn divergence(g: &dyn MetricProvider, field: &VectorFieldPoly, x: &[f64]) -> Result<f64> {
    check_field(g, field)?;
    Ok(PointFrame::new(g, x)?.divergence(field))
}

pub fn deformation_tensor(
    g: &dyn MetricProvider,
    field: &VectorFieldPoly,
    x: &[f64],
) -> Result<SymTensor2> {
    check_field(g, field)?;
    Ok(PointFrame::new(g, x)?.deformation_tensor(field))
}
