//! Compactly supported metric perturbations and symmetry-breaking trials.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ckv::{count_ckv, CkvReport, Mode, SolverConfig};
use crate::error::{CkvError, Result};
use crate::metrics::{builtin_factor, ConformallyScaled};
use crate::tensor::{MetricProvider, Patch};

/// Points per axis of the positive-definiteness check.
pub const PD_GRID: usize = 7;
/// Perturbed smallest eigenvalue must stay above this fraction of the original.
pub const PD_MARGIN: f64 = 1e-3;
/// Default bump radius as a fraction of the shortest box edge.
pub const DEFAULT_RADIUS_FRACTION: f64 = 0.45;
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Support ball of the bump `exp(1 / (|x - c|²/r² - 1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSpec {
    center: Vec<f64>,
    radius: f64,
}

impl BumpSpec {
    /// The closed support ball must lie inside `patch`.
    pub fn new(patch: &Patch, center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.len() != patch.dim() {
            return Err(CkvError::DimensionMismatch {
                expected: patch.dim(),
                got: center.len(),
            });
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(CkvError::invalid(
                "radius",
                format!("must be positive, got {radius}"),
            ));
        }
        for (a, &c) in center.iter().enumerate() {
            if c - radius < patch.lower()[a] || c + radius > patch.upper()[a] {
                return Err(CkvError::invalid(
                    "bump",
                    format!(
                        "ball of radius {radius} around {center:?} leaves the patch on axis {a}"
                    ),
                ));
            }
        }
        Ok(Self { center, radius })
    }

    /// Centered in the box with radius `0.45 * min edge`.
    pub fn centered(patch: &Patch) -> Self {
        Self {
            center: patch.center(),
            radius: DEFAULT_RADIUS_FRACTION * patch.min_edge(),
        }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn scaled_distance_sq(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / (self.radius * self.radius)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.scaled_distance_sq(x) < 1.0
    }
}

/// Smooth bump, `e⁻¹` at the center and identically zero outside the open ball.
pub fn bump(spec: &BumpSpec, x: &[f64]) -> f64 {
    let q = spec.scaled_distance_sq(x);
    if q < 1.0 {
        (1.0 / (q - 1.0)).exp()
    } else {
        0.0
    }
}

pub fn bump_gradient(spec: &BumpSpec, x: &[f64]) -> Vec<f64> {
    let q = spec.scaled_distance_sq(x);
    if q >= 1.0 {
        return vec![0.0; x.len()];
    }
    let rho = (1.0 / (q - 1.0)).exp();
    // dρ/dq = -ρ / (q-1)², dq/dx = 2 (x - c) / r²
    let dq = -rho / ((q - 1.0) * (q - 1.0));
    let r2 = spec.radius * spec.radius;
    x.iter()
        .zip(&spec.center)
        .map(|(a, b)| dq * 2.0 * (a - b) / r2)
        .collect()
}

/// Bump times a constant symmetric direction, scaled by `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub bump: BumpSpec,
    /// Symmetric, max-abs entry 1 (or all zero).
    pub direction: DMatrix<f64>,
    pub epsilon: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(bump: BumpSpec, direction: DMatrix<f64>, epsilon: f64, seed: u64) -> Result<Self> {
        let n = bump.center.len();
        if direction.nrows() != n || direction.ncols() != n {
            return Err(CkvError::DimensionMismatch {
                expected: n,
                got: direction.nrows(),
            });
        }
        if (&direction - direction.transpose()).abs().max() != 0.0 {
            return Err(CkvError::invalid("direction", "must be symmetric"));
        }
        if !epsilon.is_finite() {
            return Err(CkvError::invalid("eps", "must be finite"));
        }
        Ok(Self {
            bump,
            direction,
            epsilon,
            seed,
        })
    }

    /// Random direction drawn from `seed`, centered bump on `patch`.
    pub fn seeded(patch: &Patch, epsilon: f64, seed: u64) -> Result<Self> {
        Self::new(
            BumpSpec::centered(patch),
            random_direction(patch.dim(), seed),
            epsilon,
            seed,
        )
    }
}

/// Symmetric matrix with upper-triangle entries uniform in `[-1, 1]` (drawn
/// row-major), normalized to unit max-abs entry.
pub fn random_direction(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.random_range(-1.0..=1.0);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let m = s.abs().max();
    if m > 0.0 {
        s /= m;
    }
    s
}

/// `g + ε ρ S`.
pub struct PerturbedMetric {
    base: Arc<dyn MetricProvider>,
    spec: PerturbationSpec,
    label: String,
}

impl PerturbedMetric {
    pub fn spec(&self) -> &PerturbationSpec {
        &self.spec
    }

    pub fn base(&self) -> &Arc<dyn MetricProvider> {
        &self.base
    }
}

impl MetricProvider for PerturbedMetric {
    fn patch(&self) -> &Patch {
        self.base.patch()
    }
    fn label(&self) -> &str {
        &self.label
    }
    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let rho = bump(&self.spec.bump, x);
        let g = self.base.eval(x);
        if rho == 0.0 || self.spec.epsilon == 0.0 {
            return g;
        }
        g + &self.spec.direction * (self.spec.epsilon * rho)
    }
    fn deriv(&self, x: &[f64], axis: usize) -> DMatrix<f64> {
        let d = self.base.deriv(x, axis);
        if self.spec.epsilon == 0.0 || !self.spec.bump.contains(x) {
            return d;
        }
        let drho = bump_gradient(&self.spec.bump, x)[axis];
        d + &self.spec.direction * (self.spec.epsilon * drho)
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Wraps `base` with the perturbation after checking positive definiteness on a
/// `7^n` lattice: the perturbed smallest eigenvalue must be at least `1e-3` of
/// the unperturbed one at every lattice point.
pub fn perturb_metric(
    base: Arc<dyn MetricProvider>,
    spec: PerturbationSpec,
) -> Result<PerturbedMetric> {
    if spec.direction.nrows() != base.dim() {
        return Err(CkvError::DimensionMismatch {
            expected: base.dim(),
            got: spec.direction.nrows(),
        });
    }
    let label = format!("{}+bump", base.label());
    let perturbed = PerturbedMetric { base, spec, label };
    for x in perturbed.patch().lattice(PD_GRID) {
        let before = min_eigenvalue(&perturbed.base.eval(&x));
        let after = min_eigenvalue(&perturbed.eval(&x));
        if !(after >= PD_MARGIN * before) || !(after > 0.0) {
            return Err(CkvError::NotPositiveDefinite {
                point: x,
                min_eigenvalue: after,
            });
        }
    }
    Ok(perturbed)
}

/// One perturbation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub base: String,
    pub spec: PerturbationSpec,
    pub before: CkvReport,
    pub after: CkvReport,
}

pub fn run_genericity_trial(
    base: Arc<dyn MetricProvider>,
    config: &SolverConfig,
    epsilon: f64,
    seed: u64,
) -> Result<TrialRecord> {
    let before = count_ckv(base.as_ref(), config)?;
    trial_with_baseline(base, config, epsilon, seed, before)
}

fn trial_with_baseline(
    base: Arc<dyn MetricProvider>,
    config: &SolverConfig,
    epsilon: f64,
    seed: u64,
    before: CkvReport,
) -> Result<TrialRecord> {
    let spec = PerturbationSpec::seeded(base.patch(), epsilon, seed)?;
    let label = base.label().to_string();
    let perturbed = perturb_metric(base, spec.clone())?;
    let after = count_ckv(&perturbed, config)?;
    Ok(TrialRecord {
        base: label,
        spec,
        before,
        after,
    })
}

/// A trial that either ran or was excluded because the perturbation broke
/// positive definiteness.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Valid(Box<TrialRecord>),
    Invalid {
        seed: u64,
        epsilon: f64,
        error: CkvError,
    },
}

impl TrialOutcome {
    pub fn seed(&self) -> u64 {
        match self {
            TrialOutcome::Valid(r) => r.spec.seed,
            TrialOutcome::Invalid { seed, .. } => *seed,
        }
    }

    pub fn record(&self) -> Option<&TrialRecord> {
        match self {
            TrialOutcome::Valid(r) => Some(r),
            TrialOutcome::Invalid { .. } => None,
        }
    }
}

/// Trials for `seeds`, run concurrently and returned in seed order.
///
/// Positive-definiteness failures are recorded as invalid trials; any other
/// error aborts the battery.
pub fn run_trials(
    base: Arc<dyn MetricProvider>,
    config: &SolverConfig,
    epsilon: f64,
    seeds: &[u64],
) -> Result<Vec<TrialOutcome>> {
    let before = count_ckv(base.as_ref(), config)?;
    seeds
        .par_iter()
        .map(|&seed| {
            match trial_with_baseline(base.clone(), config, epsilon, seed, before.clone()) {
                Ok(r) => Ok(TrialOutcome::Valid(Box::new(r))),
                Err(error @ CkvError::NotPositiveDefinite { .. }) => Ok(TrialOutcome::Invalid {
                    seed,
                    epsilon,
                    error,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Conformal-mode reports for `g` and `c g`.
pub fn conformal_invariance_check(
    g: Arc<dyn MetricProvider>,
    factor: &str,
    config: &SolverConfig,
) -> Result<(CkvReport, CkvReport)> {
    let c = builtin_factor(factor)?;
    for x in g.patch().lattice(PD_GRID) {
        let v = c.value(&x);
        if !(v > 0.0) {
            return Err(CkvError::invalid(
                "factor",
                format!("{factor} is not positive at {x:?}"),
            ));
        }
    }
    let config = config.with_mode(Mode::ConformalKilling);
    let scaled = ConformallyScaled::new(g.clone(), c);
    let base = count_ckv(g.as_ref(), &config)?;
    let rescaled = count_ckv(&scaled, &config)?;
    Ok((base, rescaled))
}
