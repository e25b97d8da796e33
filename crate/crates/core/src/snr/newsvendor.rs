use super::{check_order, SnrModel};
use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::special::{norm_cdf, norm_cdf_derivative, norm_pdf, norm_quantile};

/// Newsvendor with normal demand `N(mu + tau, sigma^2)`.
///
/// The order-up-to level tuned to `tau_hat` is `mu + tau_hat + sigma z_cr`.
/// With `z1 = z_cr + (tau_hat - tau) / sigma` and `k = c_u + c_o`:
///
/// ```text
/// Pi = n { p tau - k sigma [phi(z1) - phi(z_cr)] - k sigma z1 Phi(z1) + c_u sigma z1 }
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct NewsvendorSnr<T> {
    pub p: T,
    pub c_u: T,
    pub c_o: T,
    pub mu: T,
    pub sigma_eps: T,
    pub scale_n: usize,
    z_cr: T,
}

impl<T: Real> NewsvendorSnr<T> {
    pub fn new(p: T, c_u: T, c_o: T, mu: T, sigma_eps: T, scale_n: usize) -> Result<Self> {
        if !(p > T::zero()) {
            return Err(invalid("p", "unit price must be positive"));
        }
        if !(c_u > T::zero()) || !(c_o > T::zero()) {
            return Err(invalid("c_u/c_o", "understocking and overstocking costs must be positive"));
        }
        if !(sigma_eps > T::zero()) {
            return Err(invalid("sigma_eps", "must be positive"));
        }
        if scale_n == 0 {
            return Err(invalid("scale_n", "must be positive"));
        }
        let z_cr = norm_quantile(c_u / (c_u + c_o));
        Ok(Self { p, c_u, c_o, mu, sigma_eps, scale_n, z_cr })
    }

    pub fn critical_ratio(&self) -> T {
        self.c_u / (self.c_u + self.c_o)
    }

    pub fn z_cr(&self) -> T {
        self.z_cr
    }

    fn k(&self) -> T {
        self.c_u + self.c_o
    }

    fn n(&self) -> T {
        T::from_usize_lossy(self.scale_n)
    }

    fn z1(&self, tau_hat: T, tau: T) -> T {
        self.z_cr + (tau_hat - tau) / self.sigma_eps
    }

    /// Order quantity implied by an effect estimate.
    pub fn order_quantity(&self, tau_hat: T) -> T {
        self.mu + tau_hat + self.sigma_eps * self.z_cr
    }

    /// Expected total status-quo profit `G0 = n [p mu - k sigma phi(z_cr)]`.
    pub fn status_quo_payoff(&self) -> T {
        self.n() * (self.p * self.mu - self.k() * self.sigma_eps * norm_pdf(self.z_cr))
    }

    /// Per-unit kernel `g(z) = -k sigma [phi(z) + z Phi(z)] + c_u sigma z`.
    fn kernel(&self, z: T) -> T {
        let s = self.sigma_eps;
        -self.k() * s * (norm_pdf(z) + z * norm_cdf(z)) + self.c_u * s * z
    }

    /// `k`-th derivative of the per-unit kernel `g(z)`, where
    /// `Pi / n = p tau + g(z1) + const`.
    fn kernel_derivative(&self, order: u32, z: T) -> T {
        let s = self.sigma_eps;
        match order {
            1 => s * (self.c_u - self.k() * norm_cdf(z)),
            _ => -s * self.k() * norm_cdf_derivative(order - 1, z),
        }
    }
}

impl<T: Real> SnrModel<T> for NewsvendorSnr<T> {
    fn value(&self, tau_hat: T, tau: T) -> T {
        let z1 = self.z1(tau_hat, tau);
        self.n() * (self.p * tau + self.kernel(z1) - self.kernel(self.z_cr))
    }

    fn partial(&self, i: u32, j: u32, tau_hat: T, tau: T) -> Result<T> {
        check_order(i, j)?;
        if i + j == 0 {
            return Ok(self.value(tau_hat, tau));
        }
        let z1 = self.z1(tau_hat, tau);
        let inv_s = T::one() / self.sigma_eps;
        // dz1/dtau_hat = 1/s, dz1/dtau = -1/s.
        let chain = inv_s.powi(i as i32) * (-inv_s).powi(j as i32);
        let mut d = chain * self.kernel_derivative(i + j, z1);
        if i == 0 && j == 1 {
            d = d + self.p;
        }
        Ok(self.n() * d)
    }

    fn oracle_value(&self, tau: T) -> T {
        // The z1-terms cancel at z1 = z_cr since Phi(z_cr) = CR.
        self.n() * self.p * tau
    }

    fn scale_n(&self) -> usize {
        self.scale_n
    }

    fn name(&self) -> &'static str {
        "newsvendor"
    }
}
