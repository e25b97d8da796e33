//! Bayesian model of the treatment effect.
//!
//! The effect `tau` has a conjugate normal prior `N(m0, v0)`. A completely
//! randomized experiment with `n` units and treatment/control ratio `gamma`
//! yields the difference-in-means estimate, whose posterior mean `m_tilde`
//! and the truth are jointly normal:
//!
//! ```text
//! m_tilde ~ N(m0, v_m),   tau | m_tilde ~ N(m_tilde, v_tilde),   v0 = v_m + v_tilde
//! ```
//!
//! Every downstream expectation uses that factorization; [`joint_density`]
//! exists for cross-checks only.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Prior `N(m0, v0)` on the treatment effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorBelief<T> {
    pub m0: T,
    pub v0: T,
}

/// Experiment size and treatment/control ratio `gamma = n1 / n0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign<T> {
    pub n: usize,
    pub gamma: T,
}

/// Outcome noise: `y = b + tau * w + eps`, `eps ~ N(0, sigma_eps^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel<T> {
    pub sigma_eps: T,
    /// Baseline mean level. Only the simulator reads it.
    #[serde(default)]
    pub b: T,
}

/// Posterior `N(m_tilde, v_tilde)` of the effect after observing the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior<T> {
    pub m_tilde: T,
    pub v_tilde: T,
}

/// Prior, design and noise together with the derived variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefSystem<T> {
    pub prior: PriorBelief<T>,
    pub design: ExperimentDesign<T>,
    pub noise: NoiseModel<T>,
    /// Posterior variance of the effect.
    pub v_tilde: T,
    /// Variance of the posterior mean across experiments.
    pub v_m: T,
}

impl<T: Real> ExperimentDesign<T> {
    /// Precision contributed by the data, `n gamma / (sigma^2 (1 + gamma)^2)`.
    pub fn data_precision(&self, sigma_eps: T) -> T {
        let g = self.gamma;
        T::from_usize_lossy(self.n) * g / (sigma_eps * sigma_eps * (T::one() + g) * (T::one() + g))
    }
}

/// Validates the inputs and derives `v_tilde` and `v_m`.
pub fn build_belief_system<T: Real>(
    prior: PriorBelief<T>,
    design: ExperimentDesign<T>,
    noise: NoiseModel<T>,
) -> Result<BeliefSystem<T>> {
    if !(prior.v0 > T::zero()) || !prior.v0.is_finite() {
        return Err(invalid("v0", format!("prior variance must be positive and finite, got {}", prior.v0)));
    }
    if !prior.m0.is_finite() {
        return Err(invalid("m0", "prior mean must be finite"));
    }
    if !(noise.sigma_eps > T::zero()) || !noise.sigma_eps.is_finite() {
        return Err(invalid("sigma_eps", format!("must be positive, got {}", noise.sigma_eps)));
    }
    if !(design.gamma > T::zero()) || !design.gamma.is_finite() {
        return Err(invalid("gamma", format!("must be positive, got {}", design.gamma)));
    }
    if design.n < 2 {
        return Err(invalid("n", format!("need at least two units, got {}", design.n)));
    }
    let precision = design.data_precision(noise.sigma_eps);
    let v_tilde = T::one() / (T::one() / prior.v0 + precision);
    // v_m = v0^2 / (v0 + 1/precision), written to stay finite for huge n.
    let v_m = prior.v0 * prior.v0 * precision / (prior.v0 * precision + T::one());
    Ok(BeliefSystem { prior, design, noise, v_tilde, v_m })
}

impl<T: Real> BeliefSystem<T> {
    pub fn new(prior: PriorBelief<T>, design: ExperimentDesign<T>, noise: NoiseModel<T>) -> Result<Self> {
        build_belief_system(prior, design, noise)
    }

    /// Conjugate update given the naive difference-in-means estimate.
    pub fn posterior_update(&self, naive_estimate: T) -> Posterior<T> {
        let precision = self.design.data_precision(self.noise.sigma_eps);
        let m_tilde = self.v_tilde / self.prior.v0 * self.prior.m0 + precision * self.v_tilde * naive_estimate;
        Posterior { m_tilde, v_tilde: self.v_tilde }
    }

    /// Law of `tau` given `m_tilde = m`: mean `m`, variance `v_tilde`.
    pub fn conditional_effect_law(&self, m: T) -> (T, T) {
        (m, self.v_tilde)
    }

    pub fn sd_tilde(&self) -> T {
        self.v_tilde.sqrt()
    }

    pub fn sd_m(&self) -> T {
        self.v_m.sqrt()
    }

    /// Bivariate normal density of `(tau, m_tilde)`.
    pub fn joint_density(&self, tau: T, m: T) -> T {
        joint_density(self, tau, m)
    }
}

/// Density of `(tau, m_tilde)` with covariance `[[v0, v_m], [v_m, v_m]]`.
pub fn joint_density<T: Real>(belief: &BeliefSystem<T>, tau: T, m: T) -> T {
    let v0 = belief.prior.v0;
    let vm = belief.v_m;
    let det = vm * (v0 - vm);
    let dt = tau - belief.prior.m0;
    let dm = m - belief.prior.m0;
    let quad = (vm * dt * dt - T::two() * vm * dt * dm + v0 * dm * dm) / det;
    (-quad * T::half()).exp() / (T::two() * T::PI() * det.sqrt())
}
