//! Fixed-node Gaussian quadrature rules.
//!
//! Nodes are computed once in `f64` by Newton iteration on the three-term
//! recurrences and then converted to the working scalar.

use crate::scalar::Real;

/// Nodes and weights of a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn convert(nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        Rule {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }
}

/// Gauss–Hermite rule for expectations under the standard normal:
/// `E[f(Z)] ~= sum w_i f(x_i)`, weights summing to one.
pub fn hermite_normal<T: Real>(n: usize) -> Rule<T> {
    assert!(n >= 1, "rule needs at least one node");
    // Physicists' nodes via the orthonormal recurrence, then rescaled.
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let half = n.div_ceil(2);
    let nf = n as f64;
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut z = 0.0f64;
    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (pim4, 0.0f64);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / (pp * pp);
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..half {
        nodes.push(-x[i] * sqrt2);
        weights.push(w[i] / sqrt_pi);
    }
    for i in (0..n / 2).rev() {
        nodes.push(x[i] * sqrt2);
        weights.push(w[i] / sqrt_pi);
    }
    // Odd n has a zero node that was pushed in the first loop.
    let total: f64 = weights.iter().sum();
    for wi in &mut weights {
        *wi /= total;
    }
    Rule::convert(nodes, weights)
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn legendre<T: Real>(n: usize) -> Rule<T> {
    assert!(n >= 1, "rule needs at least one node");
    let nf = n as f64;
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0f64, 0.0f64);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = wi;
        weights[n - 1 - i] = wi;
    }
    Rule::convert(nodes, weights)
}

impl<T: Real> Rule<T> {
    /// `E[f(Z)]` for a Hermite-normal rule.
    pub fn expect<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes.iter().zip(&self.weights).fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    /// `int_a^b f(x) dx` for a Legendre rule.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) * T::half();
        let mid = (a + b) * T::half();
        half * self.nodes.iter().zip(&self.weights).fold(T::zero(), |acc, (&x, &w)| acc + w * f(mid + half * x))
    }
}
