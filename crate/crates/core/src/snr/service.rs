use super::{check_order, SnrModel};
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Service capacity planning with log-normal service times.
///
/// Treated completion rate `lambda(tau) = exp(-a + tau - sigma^2 / 2)`,
/// capacity `M*(tau_hat) = p lambda(tau_hat) / (2 s)`, and
///
/// ```text
/// Pi = n C0 (2 e^{tau_hat + tau} - e^{2 tau_hat} - 1),   C0 = p^2 e^{-2a - sigma^2} / (4 s)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceCapacitySnr<T> {
    pub p: T,
    /// Quadratic capacity cost coefficient.
    pub s: T,
    pub a: T,
    pub sigma_eps: T,
    pub scale_n: usize,
    c0: T,
}

impl<T: Real> ServiceCapacitySnr<T> {
    pub fn new(p: T, s: T, a: T, sigma_eps: T, scale_n: usize) -> Result<Self> {
        if !(p > T::zero()) {
            return Err(invalid("p", "revenue per throughput must be positive"));
        }
        if !(s > T::zero()) {
            return Err(invalid("s", "capacity cost coefficient must be positive"));
        }
        if !(sigma_eps > T::zero()) {
            return Err(invalid("sigma_eps", "must be positive"));
        }
        if scale_n == 0 {
            return Err(invalid("scale_n", "must be positive"));
        }
        let c0 = p * p * (-(T::two() * a) - sigma_eps * sigma_eps).exp() / (T::lit(4.0) * s);
        Ok(Self { p, s, a, sigma_eps, scale_n, c0 })
    }

    pub fn c0(&self) -> T {
        self.c0
    }

    /// Long-run completion rate under effect `tau`.
    pub fn completion_rate(&self, tau: T) -> T {
        (-self.a + tau - self.sigma_eps * self.sigma_eps * T::half()).exp()
    }

    /// Capacity provisioned for an estimate.
    pub fn capacity(&self, tau_hat: T) -> T {
        self.p * self.completion_rate(tau_hat) / (T::two() * self.s)
    }

    fn nc0(&self) -> T {
        T::from_usize_lossy(self.scale_n) * self.c0
    }
}

impl<T: Real> SnrModel<T> for ServiceCapacitySnr<T> {
    fn value(&self, tau_hat: T, tau: T) -> T {
        self.nc0() * (T::two() * (tau_hat + tau).exp() - (T::two() * tau_hat).exp() - T::one())
    }

    fn partial(&self, i: u32, j: u32, tau_hat: T, tau: T) -> Result<T> {
        check_order(i, j)?;
        let cross = T::two() * (tau_hat + tau).exp();
        Ok(self.nc0()
            * match (i, j) {
                (0, 0) => return Ok(self.value(tau_hat, tau)),
                (_, j) if j >= 1 => cross,
                (i, _) => cross - T::two().powi(i as i32) * (T::two() * tau_hat).exp(),
            })
    }

    fn oracle_value(&self, tau: T) -> T {
        self.nc0() * ((T::two() * tau).exp() - T::one())
    }

    fn scale_n(&self) -> usize {
        self.scale_n
    }

    fn name(&self) -> &'static str {
        "service"
    }
}
