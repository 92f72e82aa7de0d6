//! Multivariate polynomials with real coefficients and polynomial vector fields.
//!
//! Differentiation is exact: it acts on the coefficient/exponent pairs and never
//! samples the polynomial.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Exponent vector of a monomial `x^alpha`.
pub type MultiIndex = Vec<u32>;

/// All multi-indices in `nvars` variables with total degree `<= degree`,
/// ordered by total degree and then lexicographically with `x_1` first
/// (so degree one reads `x_1, x_2, ..., x_n`).
pub fn graded_multi_indices(nvars: usize, degree: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut current = vec![0u32; nvars];
        fill_fixed_degree(&mut current, 0, total, &mut out);
    }
    out
}

fn fill_fixed_degree(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.to_vec());
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill_fixed_degree(current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

fn monomial_value(alpha: &[u32], x: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(x)
        .map(|(&e, &xi)| xi.powi(e as i32))
        .product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn monomial(alpha: MultiIndex, coeff: f64) -> Self {
        let mut p = Self::zero(alpha.len());
        p.add_term(alpha, coeff);
        p
    }

    /// The coordinate function `x_axis`.
    pub fn coordinate(nvars: usize, axis: usize) -> Self {
        let mut alpha = vec![0; nvars];
        alpha[axis] = 1;
        Self::monomial(alpha, 1.0)
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Self {
        let mut p = Self::zero(nvars);
        for (alpha, c) in terms {
            p.add_term(alpha, c);
        }
        p
    }

    pub fn add_term(&mut self, alpha: MultiIndex, coeff: f64) {
        assert_eq!(alpha.len(), self.nvars, "multi-index arity");
        let entry = self.terms.entry(alpha).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximal total degree over nonzero terms; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|a| a.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(a, c)| c * monomial_value(a, x))
            .sum()
    }

    pub fn partial(&self, axis: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (alpha, &c) in &self.terms {
            if alpha[axis] == 0 {
                continue;
            }
            let mut beta = alpha.clone();
            beta[axis] -= 1;
            out.add_term(beta, c * f64::from(alpha[axis]));
        }
        out
    }

    /// Gradient at `x`, evaluated term by term without building the derivative polynomials.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.nvars];
        for (alpha, &c) in &self.terms {
            for (axis, g) in grad.iter_mut().enumerate() {
                let e = alpha[axis];
                if e == 0 {
                    continue;
                }
                let mut v = c * f64::from(e);
                for (l, (&el, &xl)) in alpha.iter().zip(x).enumerate() {
                    let p = if l == axis { el - 1 } else { el };
                    v *= xl.powi(p as i32);
                }
                *g += v;
            }
        }
        grad
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial::from_terms(
            self.nvars,
            self.terms.iter().map(|(a, &c)| (a.clone(), s * c)),
        )
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (a, &c) in &other.terms {
            out.add_term(a.clone(), c);
        }
        out
    }
}

/// A vector field whose components are polynomials in the patch coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFieldPoly {
    components: Vec<Polynomial>,
}

impl VectorFieldPoly {
    pub fn new(components: Vec<Polynomial>) -> Self {
        assert!(!components.is_empty());
        let n = components.len();
        assert!(
            components.iter().all(|p| p.nvars() == n),
            "vector field components must be polynomials in {n} variables"
        );
        Self { components }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![Polynomial::zero(n); n])
    }

    /// `coeff * x^alpha` in component `k`, zero elsewhere.
    pub fn monomial(k: usize, alpha: MultiIndex, coeff: f64) -> Self {
        let n = alpha.len();
        let mut components = vec![Polynomial::zero(n); n];
        components[k] = Polynomial::monomial(alpha, coeff);
        Self::new(components)
    }

    /// Constant field `v`.
    pub fn constant(v: &[f64]) -> Self {
        let n = v.len();
        Self::new(v.iter().map(|&c| Polynomial::constant(n, c)).collect())
    }

    /// The linear field `x -> B x`.
    pub fn linear(b: &DMatrix<f64>) -> Self {
        let n = b.nrows();
        let components = (0..n)
            .map(|k| Polynomial::from_terms(n, (0..n).map(|i| (unit(n, i), b[(k, i)]))))
            .collect();
        Self::new(components)
    }

    /// Position field `x`, the generator of dilations.
    pub fn dilation(n: usize) -> Self {
        Self::linear(&DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, k: usize) -> &Polynomial {
        &self.components[k]
    }

    pub fn degree(&self) -> u32 {
        self.components
            .iter()
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.components.iter().map(|p| p.eval(x)))
    }

    /// Matrix of first partials, entry `(k, i)` = `d_i X^k`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut jac = DMatrix::zeros(n, n);
        for (k, p) in self.components.iter().enumerate() {
            for (i, g) in p.gradient(x).into_iter().enumerate() {
                jac[(k, i)] = g;
            }
        }
        jac
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.components.iter().map(|p| p.scale(s)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        )
    }
}

fn unit(n: usize, i: usize) -> MultiIndex {
    let mut a = vec![0; n];
    a[i] = 1;
    a
}
