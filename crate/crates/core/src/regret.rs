//! Prior expected regret of adjusted plug-in policies and its decomposition.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, PatroError, Result};
use crate::expectation::{draw_joint, Expectations, Interval, RunningMean};
use crate::scalar::Real;
use crate::snr::SnrModel;

/// Regret split by scenario: wrongful rollout (type I), wrongful hold-back
/// (type II), and miscalibrated operations after a correct rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretBreakdown<T> {
    pub type_one: T,
    pub type_two: T,
    pub operational: T,
    pub total: T,
}

impl<T: Real> RegretBreakdown<T> {
    fn from_parts(type_one: T, type_two: T, operational: T) -> Self {
        Self { type_one, type_two, operational, total: type_one + type_two + operational }
    }

    /// Every component divided by `n`.
    pub fn per_unit(&self, n: usize) -> Self {
        let n = T::from_usize_lossy(n);
        Self::from_parts(self.type_one / n, self.type_two / n, self.operational / n)
    }
}

/// Quadrature evaluation for the rule `1{m_tilde + delta_r > 0}` with plug-in
/// `m_tilde + delta_o`.
pub fn prior_expected_regret<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    delta_r: T,
    delta_o: T,
) -> Result<RegretBreakdown<T>> {
    policy_regret(model, ex, &[Interval::above(-delta_r)], |m| m + delta_o)
}

/// Regret of the policy that rolls out when `m_tilde` lies in one of the
/// disjoint, sorted intervals `rollout` and plugs `plug(m_tilde)` into the
/// operational rules.
///
/// Integrates over the estimation error `e = m_tilde - tau` (outer) and
/// `m_tilde` (inner). In these coordinates every region boundary is a panel
/// endpoint: `tau > 0` is `m_tilde > e`, and the outer integrand only kinks
/// at the interval endpoints, where panels are split.
pub fn policy_regret<T, M, P>(model: &M, ex: &Expectations<T>, rollout: &[Interval<T>], plug: P) -> Result<RegretBreakdown<T>>
where
    T: Real,
    M: SnrModel<T> + ?Sized,
    P: Fn(T) -> T,
{
    let splits: Vec<T> = rollout.iter().flat_map(|iv| iv.lo.into_iter().chain(iv.hi)).collect();
    let hold = complement(rollout);
    let type_two = ex.over_error(&splits, |e| {
        hold.iter().try_fold(T::zero(), |acc, &iv| {
            Ok(acc + ex.over_mean(clip(iv, Some(e), None), |m| Ok(model.oracle_value(m - e)))?)
        })
    })?;
    let type_one = ex.over_error(&splits, |e| {
        rollout.iter().try_fold(T::zero(), |acc, &iv| {
            Ok(acc + ex.over_mean(clip(iv, None, Some(e)), |m| Ok(-model.value(plug(m), m - e)))?)
        })
    })?;
    let operational = ex.over_error(&splits, |e| {
        rollout.iter().try_fold(T::zero(), |acc, &iv| {
            Ok(acc
                + ex.over_mean(clip(iv, Some(e), None), |m| {
                    let t = m - e;
                    Ok(model.oracle_value(t) - model.value(plug(m), t))
                })?)
        })
    })?;
    Ok(RegretBreakdown::from_parts(type_one, type_two, operational))
}

fn clip<T: Real>(iv: Interval<T>, lo: Option<T>, hi: Option<T>) -> Interval<T> {
    let pick = |a: Option<T>, b: Option<T>, f: fn(T, T) -> T| match (a, b) {
        (Some(x), Some(y)) => Some(f(x, y)),
        (x, None) => x,
        (None, y) => y,
    };
    Interval { lo: pick(iv.lo, lo, T::max), hi: pick(iv.hi, hi, T::min) }
}

/// Complement of sorted disjoint intervals.
fn complement<T: Real>(set: &[Interval<T>]) -> Vec<Interval<T>> {
    let mut out = Vec::new();
    let mut cursor = None;
    for iv in set {
        if iv.lo.is_some() {
            out.push(Interval { lo: cursor, hi: iv.lo });
        }
        match iv.hi {
            Some(hi) => cursor = Some(hi),
            None => return out,
        }
    }
    out.push(Interval { lo: cursor, hi: None });
    out
}

/// `E[Pi(tau|tau) 1{tau > 0}]`, the oracle payoff.
pub fn oracle_payoff<T: Real, M: SnrModel<T> + ?Sized>(model: &M, ex: &Expectations<T>) -> Result<T> {
    ex.prior_on(Interval::above(T::zero()), |t| model.oracle_value(t))
}

/// `E[Pi(m_tilde + delta_o | tau) 1{m_tilde > -delta_r}]`, the policy payoff.
pub fn policy_payoff<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    delta_r: T,
    delta_o: T,
) -> Result<T> {
    ex.truncated_joint(-delta_r, |t, m| model.value(m + delta_o, t))
}

/// Monte Carlo standard errors matching a [`RegretBreakdown`].
pub type RegretErrors = RegretBreakdown<f64>;

/// Accumulates per-draw regret by case.
#[derive(Debug, Clone, Copy, Default)]
pub struct RegretAccumulator {
    pub type_one: RunningMean,
    pub type_two: RunningMean,
    pub operational: RunningMean,
    pub total: RunningMean,
}

impl RegretAccumulator {
    /// Adds one realized `(tau, m_tilde)` under the policy.
    pub fn push<T: Real, M: SnrModel<T> + ?Sized>(&mut self, model: &M, tau: f64, m: f64, delta_r: f64, delta_o: f64) {
        let t = T::lit(tau);
        let rollout = m + delta_r > 0.0;
        let oracle = if tau > 0.0 { model.oracle_value(t).as_f64() } else { 0.0 };
        let earned = if rollout { model.value(T::lit(m + delta_o), t).as_f64() } else { 0.0 };
        let (mut one, mut two, mut op) = (0.0, 0.0, 0.0);
        match (rollout, tau > 0.0) {
            (true, true) => op = oracle - earned,
            (true, false) => one = -earned,
            (false, true) => two = oracle,
            (false, false) => {}
        }
        self.type_one.push(one);
        self.type_two.push(two);
        self.operational.push(op);
        self.total.push(one + two + op);
    }

    pub fn merge(&mut self, other: &Self) {
        self.type_one.merge(&other.type_one);
        self.type_two.merge(&other.type_two);
        self.operational.merge(&other.operational);
        self.total.merge(&other.total);
    }

    pub fn count(&self) -> u64 {
        self.total.count()
    }

    pub fn finish(&self) -> (RegretBreakdown<f64>, RegretErrors) {
        let (a, b, c, d) =
            (self.type_one.finish(), self.type_two.finish(), self.operational.finish(), self.total.finish());
        (
            RegretBreakdown { type_one: a.estimate, type_two: b.estimate, operational: c.estimate, total: d.estimate },
            RegretBreakdown { type_one: a.std_error, type_two: b.std_error, operational: c.std_error, total: d.std_error },
        )
    }
}

/// Draws per generator stream.
pub const MC_CHUNK: usize = 1 << 16;

/// Monte Carlo regret from joint draws of `(tau, m_tilde)`.
///
/// Draws are split into chunks of [`MC_CHUNK`], chunk `k` using stream `k`
/// of a generator seeded with `seed`, and merged in chunk order, so the
/// result does not depend on the thread count.
pub fn monte_carlo_regret<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    delta_r: T,
    delta_o: T,
    draws: usize,
    seed: u64,
) -> Result<(RegretBreakdown<f64>, RegretErrors)> {
    if draws < 10_000 {
        return Err(invalid("draws", "Monte Carlo needs at least 10^4 draws"));
    }
    let belief = *ex.belief();
    let (dr, d_o) = (delta_r.as_f64(), delta_o.as_f64());
    let chunks = draws.div_ceil(MC_CHUNK);
    let parts: Vec<RegretAccumulator> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = MC_CHUNK.min(draws - k * MC_CHUNK);
            let mut acc = RegretAccumulator::default();
            for _ in 0..len {
                let (tau, m) = draw_joint(&belief, &mut rng);
                acc.push(model, tau, m, dr, d_o);
            }
            acc
        })
        .collect();
    let mut all = RegretAccumulator::default();
    parts.iter().for_each(|p| all.merge(p));
    Ok(all.finish())
}

/// `100 (R(0,0) - R(delta_r, delta_o)) / R(0,0)`.
pub fn improvement_rate<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    delta_r: T,
    delta_o: T,
) -> Result<T> {
    let base = prior_expected_regret(model, ex, T::zero(), T::zero())?.total;
    if !(base > T::zero()) {
        return Err(PatroError::Degenerate { what: "improvement rate", reason: "baseline regret is not positive".into() });
    }
    let adjusted = prior_expected_regret(model, ex, delta_r, delta_o)?.total;
    Ok(T::lit(100.0) * (base - adjusted) / base)
}

/// Total regret on the grid `delta_r x delta_o`, rows indexed by `delta_r`.
pub fn regret_surface<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    delta_r: &[T],
    delta_o: &[T],
) -> Result<Vec<Vec<T>>> {
    delta_r
        .par_iter()
        .map(|&r| delta_o.iter().map(|&o| prior_expected_regret(model, ex, r, o).map(|b| b.total)).collect())
        .collect()
}

/// `k` evenly spaced points on `[center - half, center + half]`.
pub fn centered_grid<T: Real>(center: T, half: T, k: usize) -> Vec<T> {
    if k == 1 {
        return vec![center];
    }
    let step = (half + half) / T::from_usize_lossy(k - 1);
    (0..k).map(|i| center - half + step * T::from_usize_lossy(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{build_belief_system, ExperimentDesign, NoiseModel, PriorBelief};
    use crate::expectation::QuadratureSpec;
    use crate::snr::{DemandKind, NewsvendorSnr, PricingSnr, ServiceCapacitySnr};
    use crate::solver::{solve_dual, SolverConfig};

    fn ex(v0: f64, sigma: f64, n: usize) -> Expectations<f64> {
        let b = build_belief_system(
            PriorBelief { m0: 0.0, v0 },
            ExperimentDesign { n, gamma: 1.0 },
            NoiseModel { sigma_eps: sigma, b: 0.0 },
        )
        .unwrap();
        Expectations::new(b, QuadratureSpec::default()).unwrap()
    }

    #[test]
    fn decomposition_matches_payoff_identity() {
        let e = ex(2.0, 1.0, 50);
        let m = NewsvendorSnr::new(10.0, 3.0, 25.0, 10.0, 1.0, 50).unwrap();
        for &(r, o) in &[(0.0, 0.0), (-0.05, -0.04), (0.3, 0.1)] {
            let b = prior_expected_regret(&m, &e, r, o).unwrap();
            let direct = oracle_payoff(&m, &e).unwrap() - policy_payoff(&m, &e, r, o).unwrap();
            assert!((b.total - direct).abs() < 1e-9 * direct.abs(), "{b:?} vs {direct}");
            assert!(b.type_one >= -1e-12 && b.type_two >= -1e-12 && b.operational >= -1e-12);
            assert!((b.total - b.type_one - b.type_two - b.operational).abs() <= 1e-12 * b.total);
        }
    }

    #[test]
    fn perfect_information_has_no_regret() {
        let e = ex(1.0, 1.0, 1_000_000_000);
        let m = ServiceCapacitySnr::new(2.0, 0.5, 1.0, 1.0, 10).unwrap();
        let b = prior_expected_regret(&m, &e, 0.0, 0.0).unwrap();
        let scale = oracle_payoff(&m, &e).unwrap();
        assert!(b.total < 1e-3 * scale, "{b:?}");
    }

    #[test]
    fn extreme_rollout_shifts() {
        let e = ex(2.0, 1.0, 50);
        let m = NewsvendorSnr::new(10.0, 3.0, 25.0, 10.0, 1.0, 50).unwrap();
        let never = prior_expected_regret(&m, &e, -1e6, 0.0).unwrap();
        assert_eq!(never.type_one, 0.0);
        assert_eq!(never.operational, 0.0);
        let o = oracle_payoff(&m, &e).unwrap();
        assert!((never.type_two - o).abs() < 1e-9 * never.type_two, "{} {o}", never.type_two);
        let always = prior_expected_regret(&m, &e, 1e6, 0.0).unwrap();
        assert_eq!(always.type_two, 0.0);
        let (mc, _) = monte_carlo_regret(&m, &e, -1e6, 0.0, 20_000, 3).unwrap();
        assert_eq!(mc.type_one, 0.0);
        assert_eq!(mc.operational, 0.0);
    }

    #[test]
    fn monte_carlo_agrees_and_is_deterministic() {
        let e = ex(2.0, 1.0, 50);
        let m = NewsvendorSnr::new(10.0, 3.0, 25.0, 10.0, 1.0, 50).unwrap();
        let q = prior_expected_regret(&m, &e, -0.02, -0.03).unwrap();
        let (mc, se) = monte_carlo_regret(&m, &e, -0.02, -0.03, 400_000, 11).unwrap();
        assert!((mc.total - q.total).abs() < 4.0 * se.total, "{mc:?} {se:?} {q:?}");
        assert!((mc.type_one - q.type_one).abs() < 4.0 * se.type_one);
        assert!((mc.type_two - q.type_two).abs() < 4.0 * se.type_two);
        assert!((mc.operational - q.operational).abs() < 4.0 * se.operational);
        let again = monte_carlo_regret(&m, &e, -0.02, -0.03, 400_000, 11).unwrap();
        assert_eq!(again.0, mc);
    }

    #[test]
    fn improvement_rates() {
        let e = ex(5.0, 2.0, 10);
        let m = PricingSnr::new(1.0, 1.0, 2.0, DemandKind::LogLinear, 10).unwrap();
        let v = e.belief().v_tilde;
        let rate = improvement_rate(&m, &e, v / 2.0, 0.0).unwrap();
        assert!((rate - 28.8736).abs() < 5e-4, "{rate}");
        let lin = PricingSnr::new(1.0, 1.0, 1.0, DemandKind::Linear, 10).unwrap();
        assert_eq!(improvement_rate(&lin, &e, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn surface_minimum_is_at_the_solver_pair() {
        let e = ex(1.0, 1.0, 10);
        let m = ServiceCapacitySnr::new(2.0, 0.5, 1.0, 1.0, 10).unwrap();
        let pair = solve_dual(&m, &e, &SolverConfig::default()).unwrap();
        let best = prior_expected_regret(&m, &e, pair.delta_r, pair.delta_o).unwrap().total;
        let h = 5.0 * e.belief().sd_tilde();
        let rs = centered_grid(pair.delta_r, h, 11);
        let os = centered_grid(pair.delta_o, h, 11);
        let surface = regret_surface(&m, &e, &rs, &os).unwrap();
        let min = surface.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        assert!(best <= min + 1e-9 * 10.0);
        assert!((surface[5][5] - best).abs() < 1e-12 * best);
    }

    #[test]
    fn complement_of_intervals() {
        assert_eq!(complement::<f64>(&[]), vec![Interval::all()]);
        assert_eq!(complement(&[Interval::above(1.0)]), vec![Interval::below(1.0)]);
        assert_eq!(
            complement(&[Interval::below(-1.0), Interval::above(2.0)]),
            vec![Interval::between(-1.0, 2.0)]
        );
        assert_eq!(
            complement(&[Interval::between(0.0, 1.0)]),
            vec![Interval::below(0.0), Interval::above(1.0)]
        );
        assert!(complement(&[Interval::<f64>::all()]).is_empty());
    }

    #[test]
    fn centered_grid_endpoints() {
        let g = centered_grid(1.0, 2.0, 5);
        assert_eq!(g, vec![-1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(centered_grid(0.5, 1.0, 1), vec![0.5]);
    }
}
