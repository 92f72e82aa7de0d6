//! Numerical dimension of the (conformal) Killing field space.
//!
//! The unknown field is expanded in monomial vector fields `e_k x^α`, `|α| <= d`.
//! Each basis field's deformation tensor is sampled on a midpoint tensor grid,
//! giving an overdetermined matrix `A` (one column per basis field). Columns are
//! whitened by the Cholesky factor `R` of the basis Gram matrix on the same grid,
//! and the nullity is read from the singular values of `A R⁻¹`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CkvError, Result};
use crate::poly::{graded_multi_indices, MultiIndex, VectorFieldPoly};
use crate::tensor::{tensor_product, MetricProvider, Patch, PointFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Kernel of the trace-free deformation tensor `T(X)`.
    #[serde(rename = "conformal-killing")]
    ConformalKilling,
    /// Kernel of `L_X g`.
    #[serde(rename = "killing")]
    Killing,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::ConformalKilling => "conformal-killing",
            Mode::Killing => "killing",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = CkvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conformal" | "conformal-killing" => Ok(Mode::ConformalKilling),
            "killing" => Ok(Mode::Killing),
            other => Err(CkvError::invalid(
                "mode",
                format!("`{other}` is not one of conformal, killing"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: Mode,
    /// Maximal total degree of the polynomial ansatz.
    pub degree: u32,
    /// Grid points per axis.
    pub grid: usize,
    /// Singular values below `rel_tol * sigma_max` count as null.
    pub rel_tol: f64,
    /// Minimum separation between the null and non-null singular values.
    pub gap_min: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: Mode::ConformalKilling,
            degree: 3,
            grid: 6,
            rel_tol: 1e-8,
            gap_min: 1e3,
        }
    }
}

impl SolverConfig {
    pub fn with_mode(self, mode: Mode) -> Self {
        Self { mode, ..self }
    }

    pub fn with_degree(self, degree: u32) -> Self {
        Self { degree, ..self }
    }

    pub fn with_grid(self, grid: usize) -> Self {
        Self { grid, ..self }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(CkvError::invalid(
                "n",
                format!("dimension must be >= 2, got {n}"),
            ));
        }
        if self.degree < 2 {
            return Err(CkvError::invalid(
                "degree",
                format!("must be >= 2, got {}", self.degree),
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(CkvError::invalid(
                "rel-tol",
                format!("must lie in (0, 1), got {}", self.rel_tol),
            ));
        }
        if !(self.gap_min > 1.0) || !self.gap_min.is_finite() {
            return Err(CkvError::invalid(
                "gap-min",
                format!("must be a finite number > 1, got {}", self.gap_min),
            ));
        }
        // a univariate polynomial of degree d is determined by d + 1 samples
        if self.grid <= self.degree as usize {
            return Err(CkvError::invalid(
                "grid",
                format!(
                    "need more than degree = {} points per axis, got {}",
                    self.degree, self.grid
                ),
            ));
        }
        let rows = (self.grid as f64).powi(n as i32) * (n * (n + 1) / 2) as f64;
        let cols = basis_size(n, self.degree) as f64;
        if rows < cols {
            return Err(CkvError::invalid(
                "grid",
                format!("{rows} rows cannot determine {cols} unknowns"),
            ));
        }
        Ok(())
    }
}

/// `n * C(n + d, d)`.
pub fn basis_size(n: usize, degree: u32) -> usize {
    let d = degree as usize;
    let c = (1..=d).fold(1usize, |acc, i| acc * (n + i) / i);
    n * c
}

/// Monomial vector fields `e_k x^α`, component-major then graded-lexicographic in `α`.
#[derive(Debug, Clone)]
pub struct PolyVectorBasis {
    n: usize,
    degree: u32,
    terms: Vec<(usize, MultiIndex)>,
    fields: Vec<VectorFieldPoly>,
}

impl PolyVectorBasis {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[VectorFieldPoly] {
        &self.fields
    }

    /// `(component, exponent)` of each basis field.
    pub fn terms(&self) -> &[(usize, MultiIndex)] {
        &self.terms
    }

    /// Coefficient vector of `field` in this basis, if it lies in the span.
    pub fn coefficients(&self, field: &VectorFieldPoly) -> Option<Vec<f64>> {
        if field.dim() != self.n || field.degree() > self.degree {
            return None;
        }
        let mut c = vec![0.0; self.len()];
        let mut matched = 0;
        for (slot, (k, alpha)) in c.iter_mut().zip(&self.terms) {
            if let Some((_, v)) = field.component(*k).terms().find(|(a, _)| *a == alpha) {
                *slot = v;
                matched += 1;
            }
        }
        let total: usize = (0..self.n)
            .map(|k| field.component(k).terms().count())
            .sum();
        (matched == total).then_some(c)
    }
}

pub fn build_basis(n: usize, degree: u32) -> Result<PolyVectorBasis> {
    if n < 2 {
        return Err(CkvError::invalid(
            "n",
            format!("dimension must be >= 2, got {n}"),
        ));
    }
    let alphas = graded_multi_indices(n, degree);
    let mut terms = Vec::with_capacity(n * alphas.len());
    for k in 0..n {
        for alpha in &alphas {
            terms.push((k, alpha.clone()));
        }
    }
    let fields = terms
        .iter()
        .map(|(k, a)| VectorFieldPoly::monomial(*k, a.clone(), 1.0))
        .collect();
    Ok(PolyVectorBasis {
        n,
        degree,
        terms,
        fields,
    })
}

/// Quadrature nodes and positive weights on a patch.
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl CollocationGrid {
    /// Tensor midpoint rule: `m` cells per axis, one node per cell center,
    /// weight = cell volume.
    pub fn midpoint(patch: &Patch, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(CkvError::invalid(
                "grid",
                "need at least one point per axis",
            ));
        }
        let axes: Vec<Vec<f64>> = (0..patch.dim())
            .map(|a| {
                let h = patch.edge(a) / m as f64;
                (0..m)
                    .map(|i| patch.lower()[a] + (i as f64 + 0.5) * h)
                    .collect()
            })
            .collect();
        let points = tensor_product(&axes);
        let w = patch.volume() / points.len() as f64;
        let weights = vec![w; points.len()];
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Upper-triangle components of a symmetric tensor with off-diagonals scaled by
/// `√2`, so that the Euclidean norm of the output equals the Frobenius norm.
fn push_scaled_upper(out: &mut [f64], n: usize, scale: f64, entries: &[f64]) {
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            let s = if i == j {
                scale
            } else {
                scale * std::f64::consts::SQRT_2
            };
            out[idx] = s * entries[idx];
            idx += 1;
        }
    }
}

/// Collocation matrix of `T(X_j)` (or `L_{X_j} g` in Killing mode).
///
/// Rows are grouped by grid point: `n(n+1)/2` rows per point, each scaled by
/// the square root of the quadrature weight.
pub fn assemble_operator(
    g: &dyn MetricProvider,
    basis: &PolyVectorBasis,
    grid: &CollocationGrid,
    mode: Mode,
) -> Result<DMatrix<f64>> {
    let n = g.dim();
    if basis.dim() != n {
        return Err(CkvError::DimensionMismatch {
            expected: n,
            got: basis.dim(),
        });
    }
    let block = n * (n + 1) / 2;
    let rows = grid.len() * block;
    let cols = basis.len();
    if rows < cols {
        return Err(CkvError::RowDeficient { rows, cols });
    }

    let blocks: Vec<Vec<f64>> = grid
        .points()
        .par_iter()
        .zip(grid.weights().par_iter())
        .map(|(p, &w)| {
            let frame = PointFrame::new(g, p)?;
            let sw = w.sqrt();
            // column-major block: block rows x cols
            let mut out = vec![0.0; block * cols];
            for (j, field) in basis.fields().iter().enumerate() {
                let cov = frame.covariant_derivative(field);
                let t = match mode {
                    Mode::ConformalKilling => frame.deformation_from_covariant(&cov),
                    Mode::Killing => frame.lie_from_covariant(&cov),
                };
                push_scaled_upper(
                    &mut out[j * block..(j + 1) * block],
                    n,
                    sw,
                    t.upper_entries(),
                );
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut a = DMatrix::zeros(rows, cols);
    for (pi, b) in blocks.iter().enumerate() {
        for j in 0..cols {
            for r in 0..block {
                a[(pi * block + r, j)] = b[j * block + r];
            }
        }
    }
    Ok(a)
}

/// Upper-triangular `R` with `RᵀR` equal to the weighted Gram matrix of the
/// basis fields on the grid (`Σ_p w_p X_i(p)·X_j(p)`).
pub fn whitening_factor(basis: &PolyVectorBasis, grid: &CollocationGrid) -> Result<DMatrix<f64>> {
    let n = basis.dim();
    let cols = basis.len();
    let rows = grid.len() * n;
    if rows < cols {
        return Err(CkvError::DegenerateBasis);
    }
    let mut b = DMatrix::zeros(rows, cols);
    for (pi, (p, &w)) in grid.points().iter().zip(grid.weights()).enumerate() {
        let sw = w.sqrt();
        for (j, field) in basis.fields().iter().enumerate() {
            let v = field.eval(p);
            for k in 0..n {
                b[(pi * n + k, j)] = sw * v[k];
            }
        }
    }
    let r = b.qr().r();
    let diag = r.diagonal().map(f64::abs);
    if !(diag.min() > 1e-13 * diag.max()) {
        return Err(CkvError::DegenerateBasis);
    }
    Ok(r)
}

/// Singular values in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    // SVD of the square triangular factor; same spectrum, much smaller matrix
    let reduced = if a.nrows() > a.ncols() {
        a.clone().qr().r()
    } else {
        a.clone()
    };
    let mut s: Vec<f64> = reduced.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Spectrum classification shared by [`nullity`] and the reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumVerdict {
    pub nullity: usize,
    pub gap_ratio: f64,
    pub ambiguous: bool,
}

/// Classify a descending spectrum.
///
/// `nullity` counts `σ < rel_tol·σ_max`; `gap_ratio` is the smallest non-null
/// value over the largest null one (`+∞` if either side is empty or the null
/// side is exactly zero). The verdict is ambiguous when the gap is below
/// `gap_min` or when any `σ` lies within a factor 10 of the threshold.
pub fn classify_spectrum(sigma: &[f64], rel_tol: f64, gap_min: f64) -> SpectrumVerdict {
    let Some(&sigma_max) = sigma.first() else {
        return SpectrumVerdict {
            nullity: 0,
            gap_ratio: f64::INFINITY,
            ambiguous: false,
        };
    };
    if sigma_max == 0.0 {
        // every candidate solves the equation exactly
        return SpectrumVerdict {
            nullity: sigma.len(),
            gap_ratio: f64::INFINITY,
            ambiguous: false,
        };
    }
    let threshold = rel_tol * sigma_max;
    let nullity = sigma.iter().filter(|&&s| s < threshold).count();
    let rank = sigma.len() - nullity;
    let gap_ratio = if nullity == 0 || rank == 0 || sigma[rank] == 0.0 {
        f64::INFINITY
    } else {
        sigma[rank - 1] / sigma[rank]
    };
    let knife_edge = sigma
        .iter()
        .any(|&s| s >= threshold / 10.0 && s <= threshold * 10.0);
    SpectrumVerdict {
        nullity,
        gap_ratio,
        ambiguous: gap_ratio < gap_min || knife_edge,
    }
}

/// Nullity diagnostics of a discretized (conformal) Killing operator.
#[derive(Debug, Clone, PartialEq)]
pub struct CkvReport {
    pub metric: String,
    pub n: usize,
    pub config: SolverConfig,
    pub nullity: usize,
    /// Descending, whitened.
    pub singular_values: Vec<f64>,
    pub gap_ratio: f64,
    pub ambiguous: bool,
}

impl CkvReport {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// The tail of the spectrum kept in serialized reports: the smallest
    /// `3 * max(nullity, 1)` values, still in descending order.
    pub fn reported_tail(&self) -> &[f64] {
        let keep = (3 * self.nullity.max(1)).min(self.singular_values.len());
        &self.singular_values[self.singular_values.len() - keep..]
    }
}

/// Whitened spectrum and nullity of an assembled operator.
pub fn nullity(
    a: &DMatrix<f64>,
    whitening: &DMatrix<f64>,
    config: &SolverConfig,
    metric: &str,
    n: usize,
) -> Result<CkvReport> {
    if whitening.nrows() != a.ncols() || whitening.ncols() != a.ncols() {
        return Err(CkvError::DimensionMismatch {
            expected: a.ncols(),
            got: whitening.ncols(),
        });
    }
    // A R⁻¹ = (R⁻ᵀ Aᵀ)ᵀ
    let whitened = whitening
        .transpose()
        .solve_lower_triangular(&a.transpose())
        .ok_or(CkvError::DegenerateBasis)?
        .transpose();
    let sigma = singular_values(&whitened);
    let verdict = classify_spectrum(&sigma, config.rel_tol, config.gap_min);
    Ok(CkvReport {
        metric: metric.to_string(),
        n,
        config: *config,
        nullity: verdict.nullity,
        singular_values: sigma,
        gap_ratio: verdict.gap_ratio,
        ambiguous: verdict.ambiguous,
    })
}

/// Basis, grid, assembly and nullity in one call.
pub fn count_ckv(g: &dyn MetricProvider, config: &SolverConfig) -> Result<CkvReport> {
    let n = g.dim();
    config.validate(n)?;
    let basis = build_basis(n, config.degree)?;
    let grid = CollocationGrid::midpoint(g.patch(), config.grid)?;
    let a = assemble_operator(g, &basis, &grid, config.mode)?;
    let r = whitening_factor(&basis, &grid)?;
    nullity(&a, &r, config, g.label(), n)
}
