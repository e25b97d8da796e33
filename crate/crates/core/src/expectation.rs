//! Expectations under the joint law of the effect and its posterior mean.
//!
//! Outer variable `m_tilde ~ N(m0, v_m)`, inner `tau | m_tilde ~ N(m_tilde,
//! v_tilde)`. Unrestricted inner expectations use a Gauss–Hermite rule; any
//! integral over a half-line (the `tau > 0` region, `m_tilde > r`) is mapped
//! to the standardized variable, clipped to `[-tail_sd, tail_sd]` and split at
//! the boundary so that each Gauss–Legendre panel sees a smooth integrand.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::belief::BeliefSystem;
use crate::error::{invalid, PatroError, Result};
use crate::quadrature::{hermite_normal, legendre, Rule};
use crate::scalar::Real;

/// Node counts and truncation for the nested quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub inner_nodes: usize,
    pub outer_nodes: usize,
    pub tail_sd: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { inner_nodes: 64, outer_nodes: 96, tail_sd: 10.0 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.inner_nodes < 8 || self.outer_nodes < 8 {
            return Err(invalid("quadrature", "node counts must be at least 8"));
        }
        if !(self.tail_sd >= 6.0) {
            return Err(invalid("tail_sd", "truncation must be at least 6 standard deviations"));
        }
        Ok(())
    }

    /// Same truncation, twice the nodes.
    pub fn doubled(&self) -> Self {
        Self { inner_nodes: 2 * self.inner_nodes, outer_nodes: 2 * self.outer_nodes, tail_sd: self.tail_sd }
    }
}

/// Half-open interval `(lo, hi)` in the effect or posterior-mean scale;
/// `None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: Option<T>,
    pub hi: Option<T>,
}

impl<T: Real> Interval<T> {
    pub fn all() -> Self {
        Self { lo: None, hi: None }
    }
    pub fn above(lo: T) -> Self {
        Self { lo: Some(lo), hi: None }
    }
    pub fn below(hi: T) -> Self {
        Self { lo: None, hi: Some(hi) }
    }
    pub fn between(lo: T, hi: T) -> Self {
        Self { lo: Some(lo), hi: Some(hi) }
    }
}

/// Precomputed rules bound to one belief system.
#[derive(Debug, Clone)]
pub struct Expectations<T> {
    belief: BeliefSystem<T>,
    spec: QuadratureSpec,
    hermite: Rule<T>,
    inner: Rule<T>,
    outer: Rule<T>,
    tail: T,
}

fn checked<T: Real>(value: T, tau: T, m: T) -> Result<T> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(PatroError::NonFiniteIntegrand { tau: tau.as_f64(), m: m.as_f64() })
    }
}

impl<T: Real> Expectations<T> {
    pub fn new(belief: BeliefSystem<T>, spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            belief,
            spec,
            hermite: hermite_normal(spec.inner_nodes),
            inner: legendre(spec.inner_nodes),
            outer: legendre(spec.outer_nodes),
            tail: T::lit(spec.tail_sd),
        })
    }

    pub fn belief(&self) -> &BeliefSystem<T> {
        &self.belief
    }

    pub fn spec(&self) -> QuadratureSpec {
        self.spec
    }

    /// `int_{interval} g(x) dN(mean, sd^2)(x)` on Legendre panels in the
    /// standardized variable. Extra split points inside the interval start
    /// new panels.
    fn normal_panels<F>(&self, rule: &Rule<T>, mean: T, sd: T, interval: Interval<T>, splits: &[T], mut g: F) -> Result<T>
    where
        F: FnMut(T) -> Result<T>,
    {
        if sd <= T::zero() {
            // Degenerate law: point mass at the mean.
            let inside = interval.lo.is_none_or(|lo| mean > lo) && interval.hi.is_none_or(|hi| mean <= hi);
            return if inside { g(mean) } else { Ok(T::zero()) };
        }
        let to_z = |x: T| (x - mean) / sd;
        let lo = interval.lo.map_or(-self.tail, |x| to_z(x).max(-self.tail));
        let hi = interval.hi.map_or(self.tail, |x| to_z(x).min(self.tail));
        if !(hi > lo) {
            return Ok(T::zero());
        }
        let mut cuts: Vec<T> = splits.iter().map(|&s| to_z(s)).filter(|&z| z > lo && z < hi).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite split points"));
        let norm = (T::two() * T::PI()).sqrt();
        let mut total = T::zero();
        let mut left = lo;
        for right in cuts.into_iter().chain(std::iter::once(hi)) {
            let half = (right - left) * T::half();
            let mid = (right + left) * T::half();
            let mut acc = T::zero();
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                let z = mid + half * x;
                acc = acc + w * (-(z * z) * T::half()).exp() * g(mean + sd * z)?;
            }
            total = total + half * acc / norm;
            left = right;
        }
        Ok(total)
    }

    /// `E[g(tau) | m_tilde = m]`.
    pub fn conditional<F>(&self, m: T, mut g: F) -> Result<T>
    where
        F: FnMut(T) -> T,
    {
        let sd = self.belief.sd_tilde();
        let mut acc = T::zero();
        for (&x, &w) in self.hermite.nodes.iter().zip(&self.hermite.weights) {
            let tau = m + sd * x;
            acc = acc + w * checked(g(tau), tau, m)?;
        }
        Ok(acc)
    }

    /// [`Expectations::conditional`] for a fallible integrand.
    pub fn try_conditional<F>(&self, m: T, mut g: F) -> Result<T>
    where
        F: FnMut(T) -> Result<T>,
    {
        let sd = self.belief.sd_tilde();
        let mut acc = T::zero();
        for (&x, &w) in self.hermite.nodes.iter().zip(&self.hermite.weights) {
            let tau = m + sd * x;
            acc = acc + w * checked(g(tau)?, tau, m)?;
        }
        Ok(acc)
    }

    /// `E[g(tau) 1{tau in interval} | m_tilde = m]`.
    pub fn conditional_on<F>(&self, m: T, interval: Interval<T>, mut g: F) -> Result<T>
    where
        F: FnMut(T) -> T,
    {
        self.normal_panels(&self.inner, m, self.belief.sd_tilde(), interval, &[], |tau| checked(g(tau), tau, m))
    }

    /// `E[h(m_tilde) 1{m_tilde in interval}]` with extra panel splits.
    pub fn outer<F>(&self, interval: Interval<T>, splits: &[T], h: F) -> Result<T>
    where
        F: FnMut(T) -> Result<T>,
    {
        let b = &self.belief;
        self.normal_panels(&self.outer, b.prior.m0, b.sd_m(), interval, splits, h)
    }

    /// `E[g(tau, m_tilde) 1{m_tilde > r}]`.
    pub fn truncated_joint<F>(&self, r: T, g: F) -> Result<T>
    where
        F: Fn(T, T) -> T,
    {
        self.outer(Interval::above(r), &[], |m| self.conditional(m, |tau| g(tau, m)))
    }

    /// `E[g(tau, m_tilde)]` over the full joint law.
    pub fn joint<F>(&self, g: F) -> Result<T>
    where
        F: Fn(T, T) -> T,
    {
        self.outer(Interval::all(), &[], |m| self.conditional(m, |tau| g(tau, m)))
    }

    /// `E[h(e)]` over the estimation error `e = m_tilde - tau ~ N(0, v_tilde)`,
    /// which is independent of `m_tilde`, with extra panel splits.
    pub fn over_error<F>(&self, splits: &[T], h: F) -> Result<T>
    where
        F: FnMut(T) -> Result<T>,
    {
        self.normal_panels(&self.outer, T::zero(), self.belief.sd_tilde(), Interval::all(), splits, h)
    }

    /// `E[g(m_tilde) 1{m_tilde in interval}]` on a single inner panel set.
    pub fn over_mean<F>(&self, interval: Interval<T>, g: F) -> Result<T>
    where
        F: FnMut(T) -> Result<T>,
    {
        let b = &self.belief;
        self.normal_panels(&self.inner, b.prior.m0, b.sd_m(), interval, &[], g)
    }

    /// `E[g(tau) 1{tau in interval}]` under the prior `N(m0, v0)`.
    pub fn prior_on<F>(&self, interval: Interval<T>, mut g: F) -> Result<T>
    where
        F: FnMut(T) -> T,
    {
        let b = &self.belief;
        let m0 = b.prior.m0;
        self.normal_panels(&self.outer, m0, b.prior.v0.sqrt(), interval, &[], |tau| checked(g(tau), tau, m0))
    }
}

/// Free-function form of [`Expectations::conditional`].
pub fn conditional_expectation<T: Real, F: FnMut(T) -> T>(
    belief: &BeliefSystem<T>,
    g: F,
    m: T,
    spec: QuadratureSpec,
) -> Result<T> {
    Expectations::new(*belief, spec)?.conditional(m, g)
}

/// Free-function form of [`Expectations::truncated_joint`].
pub fn truncated_joint_expectation<T: Real, F: Fn(T, T) -> T>(
    belief: &BeliefSystem<T>,
    g: F,
    r: T,
    spec: QuadratureSpec,
) -> Result<T> {
    Expectations::new(*belief, spec)?.truncated_joint(r, g)
}

/// Monte Carlo estimate and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Draws a joint sample `(tau, m_tilde)` using the independence of the
/// estimation error `m_tilde - tau ~ N(0, v_tilde)` from `m_tilde`.
pub fn draw_joint<T: Real, R: rand::Rng + ?Sized>(belief: &BeliefSystem<T>, rng: &mut R) -> (f64, f64) {
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    let m = belief.prior.m0.as_f64() + belief.v_m.as_f64().sqrt() * z1;
    let tau = m - belief.v_tilde.as_f64().sqrt() * z2;
    (tau, m)
}

/// `E[g(tau, m_tilde) 1{m_tilde > r}]` by plain Monte Carlo.
///
/// `r = None` means no truncation. Deterministic given `seed`.
pub fn monte_carlo_expectation<T, F>(belief: &BeliefSystem<T>, g: F, r: Option<f64>, draws: usize, seed: u64) -> Result<McEstimate>
where
    T: Real,
    F: Fn(f64, f64) -> f64,
{
    if draws < 10_000 {
        return Err(invalid("draws", "Monte Carlo needs at least 10^4 draws"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = RunningMean::default();
    for _ in 0..draws {
        let (tau, m) = draw_joint(belief, &mut rng);
        let keep = r.is_none_or(|r| m > r);
        stats.push(if keep { g(tau, m) } else { 0.0 });
    }
    Ok(stats.finish())
}

/// Welford accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningMean {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combines two accumulators (Chan et al.).
    pub fn merge(&mut self, other: &RunningMean) {
        if other.count == 0 {
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.m2 += other.m2 + delta * delta * (self.count as f64) * (other.count as f64) / total as f64;
        self.mean += delta * other.count as f64 / total as f64;
        self.count = total;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn finish(&self) -> McEstimate {
        McEstimate { estimate: self.mean, std_error: (self.variance() / self.count as f64).sqrt() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{build_belief_system, ExperimentDesign, NoiseModel, PriorBelief};
    use crate::special::norm_cdf;

    fn belief(m0: f64, v0: f64, sigma: f64, n: usize) -> BeliefSystem<f64> {
        build_belief_system(PriorBelief { m0, v0 }, ExperimentDesign { n, gamma: 1.0 }, NoiseModel { sigma_eps: sigma, b: 0.0 })
            .unwrap()
    }

    /// A belief whose posterior variance is exactly `v_tilde`.
    fn belief_with_v_tilde(v_tilde: f64) -> BeliefSystem<f64> {
        let mut b = belief(0.0, 1.0, 1.0, 10);
        b.v_tilde = v_tilde;
        b.v_m = b.prior.v0 - v_tilde;
        b
    }

    #[test]
    fn conditional_moments() {
        let b = belief(0.0, 2.0, 1.0, 50);
        let e = Expectations::new(b, QuadratureSpec::default()).unwrap();
        assert!((e.conditional(0.7, |t| t).unwrap() - 0.7).abs() < 1e-14);
        let b = belief_with_v_tilde(0.1);
        let e = Expectations::new(b, QuadratureSpec::default()).unwrap();
        let got = e.conditional(0.0, |t| t.exp()).unwrap();
        assert!((got - 1.051_271_096_376_024).abs() < 1e-13);
    }

    #[test]
    fn normal_cdf_of_normal_identity() {
        let b = belief(0.0, 2.0, 1.5, 30);
        let e = Expectations::new(b, QuadratureSpec::default()).unwrap();
        let (z_cr, s, delta) = (-1.2, 1.5, 0.3);
        for &m in &[-1.0, 0.0, 0.8] {
            let got = e.conditional(m, |t| norm_cdf(z_cr + (m + delta - t) / s)).unwrap();
            let want = norm_cdf((z_cr + delta / s) / (1.0 + b.v_tilde / (s * s)).sqrt());
            assert!((got - want).abs() < 1e-13, "m={m}");
        }
    }

    #[test]
    fn truncated_and_full_expectations() {
        let b = belief(0.4, 2.0, 1.0, 20);
        let e = Expectations::new(b, QuadratureSpec::default()).unwrap();
        assert!((e.truncated_joint(0.4, |_, _| 1.0).unwrap() - 0.5).abs() < 1e-14);
        let r = 0.4 - 10.0 * b.sd_m();
        assert!((e.truncated_joint(r, |t, _| t).unwrap() - 0.4).abs() < 1e-13);
        // Full = truncated + complement.
        let g = |t: f64, m: f64| (t - 0.3 * m).exp() + t * t;
        let full = e.joint(g).unwrap();
        let upper = e.truncated_joint(0.1, g).unwrap();
        let lower = e.outer(Interval::below(0.1), &[], |m| e.conditional(m, |t| g(t, m))).unwrap();
        assert!((full - upper - lower).abs() < 1e-10 * full.abs());
    }

    #[test]
    fn half_line_conditional_matches_truncated_normal_mean() {
        let b = belief_with_v_tilde(0.3);
        let e = Expectations::new(b, QuadratureSpec::default()).unwrap();
        let m = -0.2;
        let s = 0.3f64.sqrt();
        // E[tau 1{tau > 0}] = m Phi(m/s) + s phi(m/s)
        let a = m / s;
        let want = m * norm_cdf(a) + s * crate::special::norm_pdf(a);
        let got = e.conditional_on(m, Interval::above(0.0), |t| t).unwrap();
        assert!((got - want).abs() < 1e-14);
        let mass = e.conditional_on(m, Interval::below(0.0), |_| 1.0).unwrap();
        assert!((mass - norm_cdf(-a)).abs() < 1e-14);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let b = belief(0.0, 1.0, 1.0, 10);
        let e = Expectations::new(b, QuadratureSpec::default()).unwrap();
        let err = e.conditional(0.0, |t| if t > 1.0 { f64::NAN } else { t }).unwrap_err();
        assert!(matches!(err, PatroError::NonFiniteIntegrand { .. }));
    }

    #[test]
    fn rejects_coarse_specs() {
        let bad = QuadratureSpec { inner_nodes: 4, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec { tail_sd: 3.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn monte_carlo_agrees_and_is_deterministic() {
        let b = belief(0.2, 2.0, 1.0, 30);
        let e = Expectations::new(b, QuadratureSpec::default()).unwrap();
        let g = |t: f64, m: f64| (0.5 * t).exp() * m;
        let q = e.truncated_joint(0.0, g).unwrap();
        let mc = monte_carlo_expectation(&b, g, Some(0.0), 200_000, 7).unwrap();
        assert!((mc.estimate - q).abs() < 4.0 * mc.std_error);
        let again = monte_carlo_expectation(&b, g, Some(0.0), 200_000, 7).unwrap();
        assert_eq!(mc, again);
        let ones = monte_carlo_expectation(&b, |_, _| 1.0, None, 10_000, 1).unwrap();
        assert_eq!(ones.estimate, 1.0);
        assert!(monte_carlo_expectation(&b, g, None, 100, 1).is_err());
    }

    #[test]
    fn running_mean_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|k| ((k * 7919) % 1013) as f64 * 0.01).collect();
        let mut all = RunningMean::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (RunningMean::default(), RunningMean::default());
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean() - all.mean()).abs() < 1e-12);
        assert!((a.variance() - all.variance()).abs() < 1e-9);
    }
}
