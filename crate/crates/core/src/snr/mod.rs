//! Surrogate net reward (SNR) models.
//!
//! `value(tau_hat, tau)` is the payoff of rolling out with downstream
//! decisions tuned to the estimate `tau_hat` when the true effect is `tau`,
//! net of the status-quo payoff. It is linear in the rollout scale `n`.

mod newsvendor;
mod pricing;
mod service;
mod validate;

pub use newsvendor::NewsvendorSnr;
pub use pricing::{DemandKind, PricingSnr};
pub use service::ServiceCapacitySnr;
pub use validate::{validate_assumptions, AssumptionReport, ClauseResult, ClauseStatus};

use crate::error::{PatroError, Result};
use crate::scalar::Real;

/// Interface every payoff model provides to the solvers.
pub trait SnrModel<T: Real>: Send + Sync {
    /// `Pi(tau_hat | tau)` in payoff units.
    fn value(&self, tau_hat: T, tau: T) -> T;

    /// Mixed partial `d^{i+j} Pi / d tau_hat^i d tau^j` for `i + j <= 3`.
    ///
    /// The default uses finite differences of [`SnrModel::value`].
    fn partial(&self, i: u32, j: u32, tau_hat: T, tau: T) -> Result<T> {
        finite_difference_partial(|x, t| self.value(x, t), i, j, tau_hat, tau)
    }

    /// Oracle payoff `Pi(tau | tau)`.
    fn oracle_value(&self, tau: T) -> T {
        self.value(tau, tau)
    }

    /// Rollout scale multiplying the per-unit payoff.
    fn scale_n(&self) -> usize;

    /// False when `Pi` does not depend on `tau_hat` at all, which makes the
    /// operational first-order condition vacuous.
    fn depends_on_estimate(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str;
}

pub(crate) fn check_order(i: u32, j: u32) -> Result<()> {
    if i + j > 3 {
        Err(PatroError::DerivativeOrder { i, j })
    } else {
        Ok(())
    }
}

/// Central finite-difference estimate of `d^{i+j} f / dx^i dt^j`.
///
/// First order uses a plain central difference with `h = eps^(1/3)`; higher
/// orders nest central stencils and apply one Richardson extrapolation.
pub fn finite_difference_partial<T, F>(f: F, i: u32, j: u32, x: T, t: T) -> Result<T>
where
    T: Real,
    F: Fn(T, T) -> T,
{
    check_order(i, j)?;
    let order = i + j;
    if order == 0 {
        return Ok(f(x, t));
    }
    let scale_x = T::one().max(x.abs());
    let scale_t = T::one().max(t.abs());
    if order == 1 {
        let h = T::epsilon().cbrt();
        return Ok(if i == 1 {
            let hx = h * scale_x;
            (f(x + hx, t) - f(x - hx, t)) / (hx + hx)
        } else {
            let ht = h * scale_t;
            (f(x, t + ht) - f(x, t - ht)) / (ht + ht)
        });
    }
    let h = T::epsilon().powf(T::one() / T::from_u32(order + 4).unwrap());
    let coarse = nested_central(&f, i, j, x, t, h * scale_x, h * scale_t);
    let fine = nested_central(&f, i, j, x, t, h * scale_x * T::half(), h * scale_t * T::half());
    Ok((T::lit(4.0) * fine - coarse) / T::lit(3.0))
}

fn nested_central<T: Real, F: Fn(T, T) -> T>(f: &F, i: u32, j: u32, x: T, t: T, hx: T, ht: T) -> T {
    // Applying the two-point central difference k times gives binomial weights
    // on the points x + (k - 2l) h, scaled by (2h)^-k.
    let weights = |k: u32| -> Vec<(T, T)> {
        (0..=k)
            .map(|l| {
                let c = binomial(k, l) * if l % 2 == 0 { 1.0 } else { -1.0 };
                (T::lit(c), T::from_i64(i64::from(k) - 2 * i64::from(l)).unwrap())
            })
            .collect()
    };
    let wx = weights(i);
    let wt = weights(j);
    let mut acc = T::zero();
    for &(cx, ox) in &wx {
        for &(ct, ot) in &wt {
            acc = acc + cx * ct * f(x + ox * hx, t + ot * ht);
        }
    }
    acc / ((hx + hx).powi(i as i32) * (ht + ht).powi(j as i32))
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, m| acc * f64::from(n - m) / f64::from(m + 1))
}

/// The built-in models behind one type, as loaded from a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinModel<T> {
    Newsvendor(NewsvendorSnr<T>),
    Service(ServiceCapacitySnr<T>),
    Pricing(PricingSnr<T>),
}

impl<T: Real> SnrModel<T> for BuiltinModel<T> {
    fn value(&self, tau_hat: T, tau: T) -> T {
        match self {
            Self::Newsvendor(m) => m.value(tau_hat, tau),
            Self::Service(m) => m.value(tau_hat, tau),
            Self::Pricing(m) => m.value(tau_hat, tau),
        }
    }

    fn partial(&self, i: u32, j: u32, tau_hat: T, tau: T) -> Result<T> {
        match self {
            Self::Newsvendor(m) => m.partial(i, j, tau_hat, tau),
            Self::Service(m) => m.partial(i, j, tau_hat, tau),
            Self::Pricing(m) => m.partial(i, j, tau_hat, tau),
        }
    }

    fn oracle_value(&self, tau: T) -> T {
        match self {
            Self::Newsvendor(m) => m.oracle_value(tau),
            Self::Service(m) => m.oracle_value(tau),
            Self::Pricing(m) => m.oracle_value(tau),
        }
    }

    fn scale_n(&self) -> usize {
        match self {
            Self::Newsvendor(m) => m.scale_n(),
            Self::Service(m) => m.scale_n(),
            Self::Pricing(m) => m.scale_n(),
        }
    }

    fn depends_on_estimate(&self) -> bool {
        match self {
            Self::Newsvendor(m) => m.depends_on_estimate(),
            Self::Service(m) => m.depends_on_estimate(),
            Self::Pricing(m) => m.depends_on_estimate(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Newsvendor(m) => m.name(),
            Self::Service(m) => m.name(),
            Self::Pricing(m) => m.name(),
        }
    }
}

/// Multiplies another model by a positive constant.
///
/// Used to check that adjustments and improvement rates do not depend on
/// the payoff scale.
#[derive(Debug, Clone)]
pub struct Scaled<M, T> {
    pub inner: M,
    pub factor: T,
}

impl<T: Real, M: SnrModel<T>> SnrModel<T> for Scaled<M, T> {
    fn value(&self, tau_hat: T, tau: T) -> T {
        self.factor * self.inner.value(tau_hat, tau)
    }

    fn partial(&self, i: u32, j: u32, tau_hat: T, tau: T) -> Result<T> {
        Ok(self.factor * self.inner.partial(i, j, tau_hat, tau)?)
    }

    fn scale_n(&self) -> usize {
        self.inner.scale_n()
    }

    fn depends_on_estimate(&self) -> bool {
        self.inner.depends_on_estimate()
    }

    fn name(&self) -> &'static str {
        self.inner.name()
    }
}
