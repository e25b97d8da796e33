use serde::{Deserialize, Serialize};

use super::{check_order, SnrModel};
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Limiting demand forms of the generalized linear family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandKind {
    /// `Q = 1 + a - b p + eps`; optimal price `(1 + a + tau_hat) / (2b)`.
    Linear,
    /// `Q = exp(a - b p + eps)`; optimal price `1 / b` for every estimate.
    LogLinear,
}

/// Promotion rollout followed by re-pricing.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingSnr<T> {
    /// Market potential.
    pub a: T,
    /// Price sensitivity.
    pub b_price: T,
    pub sigma_eps: T,
    pub kind: DemandKind,
    pub scale_n: usize,
}

impl<T: Real> PricingSnr<T> {
    pub fn new(a: T, b_price: T, sigma_eps: T, kind: DemandKind, scale_n: usize) -> Result<Self> {
        if !(b_price > T::zero()) {
            return Err(invalid("b", "price sensitivity must be positive"));
        }
        if !(sigma_eps > T::zero()) {
            return Err(invalid("sigma_eps", "must be positive"));
        }
        if scale_n == 0 {
            return Err(invalid("scale_n", "must be positive"));
        }
        Ok(Self { a, b_price, sigma_eps, kind, scale_n })
    }

    fn n(&self) -> T {
        T::from_usize_lossy(self.scale_n)
    }

    /// `(n / b) e^{a - 1 + sigma^2 / 2}`, the log-linear revenue scale.
    fn log_linear_scale(&self) -> T {
        self.n() / self.b_price * (self.a - T::one() + self.sigma_eps * self.sigma_eps * T::half()).exp()
    }

    /// Revenue-maximizing price for an estimate.
    pub fn optimal_price(&self, tau_hat: T) -> T {
        match self.kind {
            DemandKind::Linear => (T::one() + self.a + tau_hat) / (T::two() * self.b_price),
            DemandKind::LogLinear => T::one() / self.b_price,
        }
    }
}

impl<T: Real> SnrModel<T> for PricingSnr<T> {
    fn value(&self, tau_hat: T, tau: T) -> T {
        match self.kind {
            DemandKind::Linear => {
                self.n() * (T::two() * (self.a + T::one()) * tau - tau_hat * tau_hat + T::two() * tau * tau_hat)
                    / (T::lit(4.0) * self.b_price)
            }
            DemandKind::LogLinear => self.log_linear_scale() * (tau.exp() - T::one()),
        }
    }

    fn partial(&self, i: u32, j: u32, tau_hat: T, tau: T) -> Result<T> {
        check_order(i, j)?;
        if i + j == 0 {
            return Ok(self.value(tau_hat, tau));
        }
        Ok(match self.kind {
            DemandKind::Linear => {
                let unit = self.n() / (T::lit(4.0) * self.b_price);
                unit * match (i, j) {
                    (1, 0) => T::two() * (tau - tau_hat),
                    (0, 1) => T::two() * (self.a + T::one() + tau_hat),
                    (2, 0) => -T::two(),
                    (1, 1) => T::two(),
                    _ => T::zero(),
                }
            }
            DemandKind::LogLinear => {
                if i == 0 {
                    self.log_linear_scale() * tau.exp()
                } else {
                    T::zero()
                }
            }
        })
    }

    fn scale_n(&self) -> usize {
        self.scale_n
    }

    fn depends_on_estimate(&self) -> bool {
        self.kind == DemandKind::Linear
    }

    fn name(&self) -> &'static str {
        match self.kind {
            DemandKind::Linear => "pricing_linear",
            DemandKind::LogLinear => "pricing_loglinear",
        }
    }
}
