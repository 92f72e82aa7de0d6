//! Exact jet-space dimension counts at a point.
//!
//! For dimension `n` and jet order `k`:
//!
//! * metrics: `n(n+1)/2 · C(n+k, k)`
//! * origin-fixing diffeomorphisms: `n · C(n+k, k) − n`
//! * positive functions: `C(n+k, k)`
//! * the parameter domain of the pulled-back, rescaled, translated metrics
//!   (functions at order `k`, diffeomorphisms at order `k+1`, translations):
//!   `C(n+k, k) + n · C(n+k+1, k+1)`
//!
//! When the domain is strictly smaller than the metric jet space, the set of
//! metric jets reachable that way has measure zero.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;

/// `C(n, k)` by the multiplicative formula; every intermediate division is exact.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

pub fn dim_factor_jets(n: u64, k: u64) -> BigUint {
    binomial(n + k, k)
}

pub fn dim_metric_jets(n: u64, k: u64) -> BigUint {
    BigUint::from(n * (n + 1) / 2) * binomial(n + k, k)
}

pub fn dim_diffeo_jets(n: u64, k: u64) -> BigUint {
    // C(n+k, k) >= 1, so the subtraction never underflows
    BigUint::from(n) * binomial(n + k, k) - n
}

pub fn dim_domain(n: u64, k: u64) -> BigUint {
    binomial(n + k, k) + BigUint::from(n) * binomial(n + k + 1, k + 1)
}

pub fn sard_inequality_holds(n: u64, k: u64) -> bool {
    dim_domain(n, k) < dim_metric_jets(n, k)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetDimensionRecord {
    pub n: u64,
    pub k: u64,
    pub dim_metric_jets: BigUint,
    pub dim_diffeo_jets: BigUint,
    pub dim_diffeo_jets_next: BigUint,
    pub dim_factor_jets: BigUint,
    pub dim_domain: BigUint,
    pub holds: bool,
}

impl JetDimensionRecord {
    pub fn new(n: u64, k: u64) -> Self {
        let dim_metric_jets = dim_metric_jets(n, k);
        let dim_domain = dim_domain(n, k);
        Self {
            n,
            k,
            holds: dim_domain < dim_metric_jets,
            dim_metric_jets,
            dim_diffeo_jets: dim_diffeo_jets(n, k),
            dim_diffeo_jets_next: dim_diffeo_jets(n, k + 1),
            dim_factor_jets: dim_factor_jets(n, k),
            dim_domain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetScan {
    /// n-major, then k.
    pub rows: Vec<JetDimensionRecord>,
    /// Smallest scanned k with the inequality holding, per n. Only meaningful
    /// within the scanned k range.
    pub frontier: BTreeMap<u64, u64>,
}

pub fn scan(
    n_range: std::ops::RangeInclusive<u64>,
    k_range: std::ops::RangeInclusive<u64>,
) -> JetScan {
    let pairs: Vec<(u64, u64)> = n_range
        .flat_map(|n| k_range.clone().map(move |k| (n, k)))
        .collect();
    let rows: Vec<JetDimensionRecord> = pairs
        .par_iter()
        .map(|&(n, k)| JetDimensionRecord::new(n, k))
        .collect();
    let mut frontier = BTreeMap::new();
    for r in rows.iter().filter(|r| r.holds) {
        frontier.entry(r.n).or_insert(r.k);
    }
    JetScan { rows, frontier }
}
