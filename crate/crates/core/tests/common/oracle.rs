//! Exact polynomial-ansatz oracle for (conformal) Killing fields.
//!
//! Writes the Killing or conformal Killing equation for a polynomial field of
//! degree <= d as polynomial identities with rational coefficients (after
//! clearing the positive denominators of the conformal factor), collects the
//! coefficient of every monomial of every tensor component, and computes the
//! null-space dimension of that linear system by exact sparse elimination.
//! Shares no code with the floating-point solver.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

type Exp = Vec<u32>;

#[derive(Clone, Debug, Default)]
struct QPoly(BTreeMap<Exp, BigRational>);

fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl QPoly {
    fn monomial(exp: Exp, c: BigRational) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(exp, c);
        }
        QPoly(m)
    }

    fn constant(n: usize, c: i64) -> Self {
        Self::monomial(vec![0; n], q(c))
    }

    fn coord(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self::monomial(e, q(1))
    }

    fn add(&self, o: &QPoly) -> QPoly {
        let mut m = self.0.clone();
        for (e, c) in &o.0 {
            let entry = m.entry(e.clone()).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                m.remove(e);
            }
        }
        QPoly(m)
    }

    fn scale(&self, s: &BigRational) -> QPoly {
        if s.is_zero() {
            return QPoly::default();
        }
        QPoly(self.0.iter().map(|(e, c)| (e.clone(), c * s)).collect())
    }

    fn mul(&self, o: &QPoly) -> QPoly {
        let mut out = QPoly::default();
        for (ea, ca) in &self.0 {
            for (eb, cb) in &o.0 {
                let e: Exp = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out = out.add(&QPoly::monomial(e, ca * cb));
            }
        }
        out
    }

    fn partial(&self, axis: usize) -> QPoly {
        let mut out = QPoly::default();
        for (e, c) in &self.0 {
            if e[axis] == 0 {
                continue;
            }
            let mut f = e.clone();
            f[axis] -= 1;
            out = out.add(&QPoly::monomial(f, c * q(i64::from(e[axis]))));
        }
        out
    }
}

/// Which equation to impose, with denominators already cleared.
#[derive(Clone, Copy, Debug)]
pub enum Equation {
    /// `T(X) = 0` for the Euclidean metric.
    FlatConformal,
    /// `L_X δ = 0`.
    FlatKilling,
    /// `T(X) = 0` for `4/(1 + s|x|²)² δ`, built term by term from the
    /// factor's derivative (not reduced to the flat equation).
    StereoConformal { sign: i64 },
    /// `L_X g = 0` for `4/(1 + s|x|²)² δ`.
    StereoKilling { sign: i64 },
    /// `L_X g = 0` for `e^{2 x_1} δ`.
    ExpKilling,
}

fn graded(n: usize, d: u32) -> Vec<Exp> {
    fn rec(n: usize, pos: usize, left: u32, cur: &mut Exp, out: &mut Vec<Exp>) {
        if pos == n {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[pos] = e;
            rec(n, pos + 1, left - e, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    rec(n, 0, d, &mut vec![0; n], &mut out);
    out
}

/// Tensor components `(i <= j)` of the cleared equation for field `X`.
fn equation_components(eq: Equation, x: &[QPoly]) -> Vec<QPoly> {
    let n = x.len();
    let nn = q(n as i64);
    let sym = |i: usize, j: usize| x[j].partial(i).add(&x[i].partial(j));
    let div = (0..n).fold(QPoly::default(), |acc, k| acc.add(&x[k].partial(k)));
    let dot_x = (0..n).fold(QPoly::default(), |acc, k| {
        acc.add(&QPoly::coord(n, k).mul(&x[k]))
    });
    let r2 = (0..n).fold(QPoly::default(), |acc, k| {
        acc.add(&QPoly::coord(n, k).mul(&QPoly::coord(n, k)))
    });
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            let delta = if i == j { q(1) } else { q(0) };
            let p = match eq {
                Equation::FlatKilling => sym(i, j),
                Equation::FlatConformal => sym(i, j).scale(&nn).add(&div.scale(&(q(-2) * &delta))),
                Equation::StereoKilling { sign } => {
                    // (u³/4)·[X(c) δ + c S] with c = 4 u⁻², X(c) = −16 s (x·X) u⁻³
                    let u = QPoly::constant(n, 1).add(&r2.scale(&q(sign)));
                    u.mul(&sym(i, j))
                        .add(&dot_x.scale(&(q(-4 * sign) * &delta)))
                }
                Equation::StereoConformal { sign } => {
                    // (n u³/4)·[X(c) δ + c S − (2/n)(div X + (n/2) X(c)/c) c δ]
                    let u = QPoly::constant(n, 1).add(&r2.scale(&q(sign)));
                    let xc_term = dot_x.scale(&(q(-4 * sign) * &delta * &nn));
                    let s_term = u.mul(&sym(i, j)).scale(&nn);
                    let div_term = u.mul(&div).scale(&(q(-2) * &delta));
                    let xc_div_term = dot_x.scale(&(q(4 * sign) * &nn * &delta));
                    xc_term.add(&s_term).add(&div_term).add(&xc_div_term)
                }
                Equation::ExpKilling => {
                    // e^{-2x₁}·[X(c) δ + c S] with X(c) = 2 X¹ c
                    sym(i, j).add(&x[0].scale(&(q(2) * &delta)))
                }
            };
            out.push(p);
        }
    }
    out
}

/// Dimension of the space of polynomial fields of degree <= `d` solving `eq`.
pub fn exact_nullity(eq: Equation, n: usize, d: u32) -> usize {
    let alphas = graded(n, d);
    let mut rows: BTreeMap<(usize, Exp), BTreeMap<usize, BigRational>> = BTreeMap::new();
    let mut col = 0;
    for k in 0..n {
        for alpha in &alphas {
            let mut x = vec![QPoly::default(); n];
            x[k] = QPoly::monomial(alpha.clone(), BigRational::one());
            for (comp, p) in equation_components(eq, &x).into_iter().enumerate() {
                for (e, c) in p.0 {
                    rows.entry((comp, e)).or_default().insert(col, c);
                }
            }
            col += 1;
        }
    }
    col - sparse_rank(rows.into_values())
}

fn sparse_rank(rows: impl Iterator<Item = BTreeMap<usize, BigRational>>) -> usize {
    let mut pivots: BTreeMap<usize, BTreeMap<usize, BigRational>> = BTreeMap::new();
    for mut row in rows {
        while let Some((&lead, lead_val)) = row.iter().next() {
            match pivots.get(&lead) {
                None => {
                    let inv = lead_val.recip();
                    let normalized = row.into_iter().map(|(c, v)| (c, v * &inv)).collect();
                    pivots.insert(lead, normalized);
                    break;
                }
                Some(p) => {
                    let factor = lead_val.clone();
                    for (c, v) in p {
                        let entry = row.entry(*c).or_insert_with(BigRational::zero);
                        *entry -= &factor * v;
                        if entry.is_zero() {
                            row.remove(c);
                        }
                    }
                }
            }
        }
    }
    pivots.len()
}
