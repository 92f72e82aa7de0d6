//! Builtin metrics, conformal factors and metric adapters.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{CkvError, Result};
use crate::poly::Polynomial;
use crate::tensor::{MetricProvider, Patch};

pub const METRIC_LABELS: [&str; 5] = [
    "flat",
    "conf-exp",
    "sphere-stereo",
    "hyperbolic-ball",
    "diag-poly",
];

pub const FACTOR_LABELS: [&str; 3] = ["const-2", "exp-x1", "sphere"];

/// Coefficient of the off-axis quadratic in the default `diag-poly` metric.
pub const DIAG_POLY_DEFAULT_ALPHA: f64 = 0.5;

/// Default patch for a builtin metric: `[-0.5, 0.5]^n`, shrunk for the
/// hyperbolic ball so that every corner stays inside the unit ball.
pub fn default_patch(label: &str, n: usize) -> Result<Patch> {
    let half = if label == "hyperbolic-ball" {
        0.4f64.min(0.9 / (n as f64).sqrt())
    } else {
        0.5
    };
    Patch::centered_cube(n, half)
}

/// A positive scalar function `c(x)` with analytic gradient.
pub trait ConformalFactor: Send + Sync {
    fn label(&self) -> &str;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct ConstantFactor {
    value: f64,
    label: String,
}

impl ConstantFactor {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            label: format!("const-{value}"),
        }
    }
}

impl ConformalFactor for ConstantFactor {
    fn label(&self) -> &str {
        &self.label
    }
    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
}

/// `exp(rate * x_axis)`.
#[derive(Debug, Clone)]
pub struct ExpFactor {
    axis: usize,
    rate: f64,
    label: String,
}

impl ExpFactor {
    pub fn new(axis: usize, rate: f64, label: impl Into<String>) -> Self {
        Self {
            axis,
            rate,
            label: label.into(),
        }
    }
}

impl ConformalFactor for ExpFactor {
    fn label(&self) -> &str {
        &self.label
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.rate * x[self.axis]).exp()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[self.axis] = self.rate * self.value(x);
        g
    }
}

/// `4 / (1 + s|x|^2)^2`: the round sphere (`s = 1`) or the Poincaré ball (`s = -1`).
#[derive(Debug, Clone)]
pub struct StereographicFactor {
    sign: f64,
    label: String,
}

impl StereographicFactor {
    pub fn sphere() -> Self {
        Self {
            sign: 1.0,
            label: "sphere".into(),
        }
    }

    pub fn hyperbolic() -> Self {
        Self {
            sign: -1.0,
            label: "hyperbolic".into(),
        }
    }

    fn base(&self, x: &[f64]) -> f64 {
        1.0 + self.sign * x.iter().map(|v| v * v).sum::<f64>()
    }
}

impl ConformalFactor for StereographicFactor {
    fn label(&self) -> &str {
        &self.label
    }
    fn value(&self, x: &[f64]) -> f64 {
        4.0 / self.base(x).powi(2)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let u3 = self.base(x).powi(3);
        x.iter().map(|&xi| -16.0 * self.sign * xi / u3).collect()
    }
}

pub fn builtin_factor(label: &str) -> Result<Arc<dyn ConformalFactor>> {
    Ok(match label {
        "const-2" => Arc::new(ConstantFactor::new(2.0)),
        "exp-x1" => Arc::new(ExpFactor::new(0, 1.0, "exp-x1")),
        "sphere" => Arc::new(StereographicFactor::sphere()),
        _ => {
            return Err(CkvError::UnknownLabel {
                kind: "conformal factor",
                label: label.into(),
            })
        }
    })
}

/// The Euclidean metric `δ`.
#[derive(Debug, Clone)]
pub struct Flat {
    patch: Patch,
}

impl Flat {
    pub fn new(patch: Patch) -> Self {
        Self { patch }
    }
}

impl MetricProvider for Flat {
    fn patch(&self) -> &Patch {
        &self.patch
    }
    fn label(&self) -> &str {
        "flat"
    }
    fn eval(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim())
    }
    fn deriv(&self, _x: &[f64], _axis: usize) -> DMatrix<f64> {
        DMatrix::zeros(self.dim(), self.dim())
    }
}

/// `c(x) δ`.
pub struct ConformallyFlat {
    patch: Patch,
    factor: Arc<dyn ConformalFactor>,
    label: String,
}

impl ConformallyFlat {
    pub fn new(patch: Patch, factor: Arc<dyn ConformalFactor>, label: impl Into<String>) -> Self {
        Self {
            patch,
            factor,
            label: label.into(),
        }
    }
}

impl MetricProvider for ConformallyFlat {
    fn patch(&self) -> &Patch {
        &self.patch
    }
    fn label(&self) -> &str {
        &self.label
    }
    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) * self.factor.value(x)
    }
    fn deriv(&self, x: &[f64], axis: usize) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) * self.factor.gradient(x)[axis]
    }
}

/// Diagonal metric with polynomial entries.
#[derive(Debug, Clone)]
pub struct DiagPoly {
    patch: Patch,
    entries: Vec<Polynomial>,
    label: String,
}

impl DiagPoly {
    pub fn new(patch: Patch, entries: Vec<Polynomial>, label: impl Into<String>) -> Self {
        assert_eq!(entries.len(), patch.dim());
        Self {
            patch,
            entries,
            label: label.into(),
        }
    }

    /// `g_ii = 1 + alpha x_{i+1}^2` (indices cyclic). Not conformally flat for `alpha != 0`.
    pub fn cyclic(patch: Patch, alpha: f64, label: impl Into<String>) -> Self {
        let n = patch.dim();
        let entries = (0..n)
            .map(|i| {
                let mut a = vec![0; n];
                a[(i + 1) % n] = 2;
                Polynomial::constant(n, 1.0).add(&Polynomial::monomial(a, alpha))
            })
            .collect();
        Self::new(patch, entries, label)
    }
}

impl MetricProvider for DiagPoly {
    fn patch(&self) -> &Patch {
        &self.patch
    }
    fn label(&self) -> &str {
        &self.label
    }
    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.entries.iter().map(|p| p.eval(x)),
        ))
    }
    fn deriv(&self, x: &[f64], axis: usize) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.entries.iter().map(|p| p.gradient(x)[axis]),
        ))
    }
}

/// `c(x) g(x)` for an arbitrary base metric.
pub struct ConformallyScaled {
    base: Arc<dyn MetricProvider>,
    factor: Arc<dyn ConformalFactor>,
    label: String,
}

impl ConformallyScaled {
    pub fn new(base: Arc<dyn MetricProvider>, factor: Arc<dyn ConformalFactor>) -> Self {
        let label = format!("{}*{}", factor.label(), base.label());
        Self {
            base,
            factor,
            label,
        }
    }
}

impl MetricProvider for ConformallyScaled {
    fn patch(&self) -> &Patch {
        self.base.patch()
    }
    fn label(&self) -> &str {
        &self.label
    }
    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        self.base.eval(x) * self.factor.value(x)
    }
    fn deriv(&self, x: &[f64], axis: usize) -> DMatrix<f64> {
        self.base.eval(x) * self.factor.gradient(x)[axis]
            + self.base.deriv(x, axis) * self.factor.value(x)
    }
}

type MetricFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// Supplies derivatives for a metric known only through point evaluations,
/// by fourth-order central differences with step `1e-4` times the box edge.
pub struct FiniteDifferenceMetric {
    patch: Patch,
    label: String,
    eval: Box<MetricFn>,
}

impl FiniteDifferenceMetric {
    pub const RELATIVE_STEP: f64 = 1e-4;

    /// `eval` must be defined slightly beyond the box (two steps per axis).
    pub fn new(
        patch: Patch,
        label: impl Into<String>,
        eval: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            patch,
            label: label.into(),
            eval: Box::new(eval),
        }
    }
}

impl MetricProvider for FiniteDifferenceMetric {
    fn patch(&self) -> &Patch {
        &self.patch
    }
    fn label(&self) -> &str {
        &self.label
    }
    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        (self.eval)(x)
    }
    fn deriv(&self, x: &[f64], axis: usize) -> DMatrix<f64> {
        let h = Self::RELATIVE_STEP * self.patch.edge(axis);
        let at = |offset: f64| {
            let mut y = x.to_vec();
            y[axis] += offset;
            (self.eval)(&y)
        };
        (at(-2.0 * h) - at(2.0 * h) + (at(h) - at(-h)) * 8.0) / (12.0 * h)
    }
}

/// Builtin metric by label on its default patch.
pub fn builtin_metric(label: &str, n: usize) -> Result<Arc<dyn MetricProvider>> {
    if n < 2 {
        return Err(CkvError::invalid(
            "n",
            format!("dimension must be >= 2, got {n}"),
        ));
    }
    builtin_metric_on(label, default_patch(label, n)?)
}

/// Builtin metric by label on a caller-supplied patch.
///
/// `diag-poly` takes an optional coefficient, as in `diag-poly:0.25`.
pub fn builtin_metric_on(label: &str, patch: Patch) -> Result<Arc<dyn MetricProvider>> {
    let (name, param) = match label.split_once(':') {
        Some((name, p)) => (name, Some(p)),
        None => (label, None),
    };
    if param.is_some() && name != "diag-poly" {
        return Err(CkvError::UnknownLabel {
            kind: "metric",
            label: label.into(),
        });
    }
    Ok(match name {
        "flat" => Arc::new(Flat::new(patch)),
        "conf-exp" => Arc::new(ConformallyFlat::new(
            patch,
            Arc::new(ExpFactor::new(0, 2.0, "exp-2x1")),
            label,
        )),
        "sphere-stereo" => Arc::new(ConformallyFlat::new(
            patch,
            Arc::new(StereographicFactor::sphere()),
            label,
        )),
        "hyperbolic-ball" => {
            if patch.max_radius() >= 1.0 {
                return Err(CkvError::invalid(
                    "box",
                    "hyperbolic-ball patch must lie strictly inside the unit ball",
                ));
            }
            Arc::new(ConformallyFlat::new(
                patch,
                Arc::new(StereographicFactor::hyperbolic()),
                label,
            ))
        }
        "diag-poly" => {
            let alpha = match param {
                None => DIAG_POLY_DEFAULT_ALPHA,
                Some(p) => p
                    .parse::<f64>()
                    .ok()
                    .filter(|a| a.is_finite())
                    .ok_or_else(|| {
                        CkvError::invalid("metric", format!("bad diag-poly coefficient `{p}`"))
                    })?,
            };
            // every coordinate feeds one diagonal entry; the worst point is the
            // patch vertex farthest out on the axis of largest reach
            let (axis, edge) = (0..patch.dim())
                .flat_map(|a| [(a, patch.lower()[a]), (a, patch.upper()[a])])
                .fold(
                    (0, 0.0f64),
                    |best, c| if c.1.abs() > best.1.abs() { c } else { best },
                );
            let min_eigenvalue = 1.0 + alpha.min(0.0) * edge * edge;
            if min_eigenvalue <= 0.0 {
                let mut point = patch.center();
                point[axis] = edge;
                return Err(CkvError::NotPositiveDefinite {
                    point,
                    min_eigenvalue,
                });
            }
            let metric = DiagPoly::cyclic(patch, alpha, label);
            Arc::new(metric)
        }
        _ => {
            return Err(CkvError::UnknownLabel {
                kind: "metric",
                label: label.into(),
            })
        }
    })
}
