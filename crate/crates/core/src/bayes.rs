//! The Bayes-optimal rule: per realized posterior mean, maximize the
//! posterior expected payoff over plug-in effects and roll out when the
//! maximum is positive.

use serde::Serialize;

use crate::error::{PatroError, Result};
use crate::expectation::{Expectations, Interval};
use crate::regret::{policy_regret, prior_expected_regret, RegretBreakdown};
use crate::roots::{bracketed_root, brent};
use crate::scalar::Real;
use crate::snr::SnrModel;
use crate::solver::AdjustmentPair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesDecision<T> {
    pub rollout: bool,
    /// Plug-in effect maximizing the posterior expected payoff.
    pub effective_effect: T,
    /// Posterior expected payoff at that plug-in.
    pub posterior_value: T,
}

/// Plug-in maximizing `E[Pi(x|tau) | m_tilde = m]`.
pub fn bayes_plug_in<T: Real, M: SnrModel<T> + ?Sized>(model: &M, ex: &Expectations<T>, m: T) -> Result<T> {
    if !model.depends_on_estimate() {
        return Ok(m);
    }
    let slope = |x: T| ex.try_conditional(m, |t| model.partial(1, 0, x, t));
    let half = T::lit(10.0) * ex.belief().sd_tilde().max(T::lit(1e-8));
    let xtol = T::lit(1e-13) * T::one().max(m.abs());
    Ok(bracketed_root("posterior first-order condition", slope, m, half, xtol)?.x)
}

pub fn bayes_decide<T: Real, M: SnrModel<T> + ?Sized>(model: &M, ex: &Expectations<T>, m: T) -> Result<BayesDecision<T>> {
    let x = bayes_plug_in(model, ex, m)?;
    let value = ex.conditional(m, |t| model.value(x, t))?;
    Ok(BayesDecision { rollout: value > T::zero(), effective_effect: x, posterior_value: value })
}

/// Prior expected regret of the Bayes rule with its rollout region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesRegret<T> {
    pub regret: RegretBreakdown<T>,
    /// Sign changes of the optimal posterior expected payoff in `m`.
    pub thresholds: Vec<T>,
    /// Range of `x*(m) - m` over the interpolation nodes.
    pub shift_range: (T, T),
}

/// Number of scan points used to locate rollout thresholds.
const SCAN_POINTS: usize = 241;
/// Chebyshev nodes for the plug-in shift `x*(m) - m`.
const SHIFT_NODES: usize = 33;

/// Barycentric interpolant on Chebyshev points of the second kind.
struct Chebyshev<T> {
    lo: T,
    hi: T,
    nodes: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> Chebyshev<T> {
    fn fit<F: FnMut(T) -> Result<T>>(lo: T, hi: T, k: usize, mut f: F) -> Result<Self> {
        let mid = (lo + hi) * T::half();
        let half = (hi - lo) * T::half();
        let nodes: Vec<T> = (0..k)
            .map(|j| mid + half * (T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(k - 1)).cos())
            .collect();
        let values = nodes.iter().map(|&x| f(x)).collect::<Result<Vec<T>>>()?;
        Ok(Self { lo, hi, nodes, values })
    }

    fn eval(&self, x: T) -> T {
        let x = x.max(self.lo).min(self.hi);
        let last = self.nodes.len() - 1;
        let (mut num, mut den) = (T::zero(), T::zero());
        for (j, (&xj, &fj)) in self.nodes.iter().zip(&self.values).enumerate() {
            let d = x - xj;
            if d == T::zero() {
                return fj;
            }
            let mut w = if j % 2 == 0 { T::one() } else { -T::one() };
            if j == 0 || j == last {
                w = w * T::half();
            }
            num = num + w * fj / d;
            den = den + w / d;
        }
        num / den
    }
}

pub fn bayes_prior_regret<T: Real, M: SnrModel<T> + ?Sized>(model: &M, ex: &Expectations<T>) -> Result<BayesRegret<T>> {
    let belief = ex.belief();
    let reach = T::lit(ex.spec().tail_sd) * belief.sd_m();
    let (lo, hi) = (belief.prior.m0 - reach, belief.prior.m0 + reach);

    let shift = Chebyshev::fit(lo, hi, SHIFT_NODES, |m| Ok(bayes_plug_in(model, ex, m)? - m))?;
    let plug = |m: T| m + shift.eval(m);
    let best = |m: T| {
        let x = plug(m);
        ex.conditional(m, |t| model.value(x, t))
    };

    let step = (hi - lo) / T::from_usize_lossy(SCAN_POINTS - 1);
    let mut thresholds = Vec::new();
    let mut prev_m = lo;
    let mut prev_v = best(lo)?;
    for k in 1..SCAN_POINTS {
        let m = lo + step * T::from_usize_lossy(k);
        let v = best(m)?;
        if (prev_v > T::zero()) != (v > T::zero()) {
            let xtol = T::lit(1e-14) * T::one().max(m.abs());
            thresholds.push(brent("Bayes rollout threshold", &best, prev_m, m, xtol, 200)?.x);
        }
        prev_m = m;
        prev_v = v;
    }

    // Rollout where the optimal posterior value is positive.
    let mut rollout = Vec::new();
    let mut start = if best(lo)? > T::zero() { Some(None) } else { None };
    for &t in &thresholds {
        match start.take() {
            Some(from) => rollout.push(Interval { lo: from, hi: Some(t) }),
            None => start = Some(Some(t)),
        }
    }
    if let Some(from) = start {
        rollout.push(Interval { lo: from, hi: None });
    }

    let regret = policy_regret(model, ex, &rollout, plug)?;
    let lo_shift = shift.values.iter().copied().fold(T::infinity(), T::min);
    let hi_shift = shift.values.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(BayesRegret { regret, thresholds, shift_range: (lo_shift, hi_shift) })
}

/// `100 (R_patro - R_bayes) / R_bayes`.
pub fn patro_bayes_gap<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    pair: &AdjustmentPair<T>,
) -> Result<T> {
    let bayes = bayes_prior_regret(model, ex)?.regret.total;
    if !(bayes > T::zero()) {
        return Err(PatroError::Degenerate { what: "Bayes gap", reason: "Bayes regret is not positive".into() });
    }
    let patro = prior_expected_regret(model, ex, pair.delta_r, pair.delta_o)?.total;
    Ok(T::lit(100.0) * (patro - bayes) / bayes)
}
