//! Bracketed scalar root finding (Brent's method).

use crate::error::{PatroError, Result};
use crate::scalar::Real;

/// Outcome of a bracketed root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root<T> {
    pub x: T,
    pub fx: T,
    pub evaluations: usize,
}

/// Brent's method on `[lo, hi]`. `f(lo)` and `f(hi)` must differ in sign.
///
/// Stops once the bracket is narrower than `xtol` (plus a few ulps of the
/// iterate) or an exact zero is hit.
#[allow(clippy::explicit_counter_loop)]
pub fn brent<T, F>(what: &'static str, mut f: F, lo: T, hi: T, xtol: T, max_iter: usize) -> Result<Root<T>>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    let mut evaluations = 2;
    if fa == T::zero() {
        return Ok(Root { x: a, fx: fa, evaluations });
    }
    if fb == T::zero() {
        return Ok(Root { x: b, fx: fb, evaluations });
    }
    if fa.signum() == fb.signum() {
        return Err(PatroError::BracketNotFound { what, lo: lo.as_f64(), hi: hi.as_f64() });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    let two = T::two();
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + xtol * T::half();
        let m = (c - b) * T::half();
        if m.abs() <= tol || fb == T::zero() {
            return Ok(Root { x: b, fx: fb, evaluations });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (T::lit(3.0) * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol { b + d } else { b + tol.copysign(m) };
        fb = f(b)?;
        evaluations += 1;
    }
    Err(PatroError::RootNotConverged { what, iterations: max_iter })
}

/// Finds the sign change of `f` nearest `center`, searching out to ten
/// times `half_width`, and refines it with [`brent`].
pub fn bracketed_root<T, F>(what: &'static str, mut f: F, center: T, half_width: T, xtol: T) -> Result<Root<T>>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    // Walk outward from the center on both sides with doubling steps and
    // stop at the first sign change, so the root nearest the center wins.
    let f0 = f(center)?;
    if f0 == T::zero() {
        return Ok(Root { x: center, fx: f0, evaluations: 1 });
    }
    let limit = half_width * T::lit(10.0);
    let mut step = half_width / T::lit(64.0);
    let (mut left, mut right) = ((center, f0), (center, f0));
    while step <= limit {
        let xr = center + step;
        let fr = f(xr)?;
        if fr == T::zero() || fr.signum() != right.1.signum() {
            return brent(what, &mut f, right.0, xr, xtol, 200);
        }
        right = (xr, fr);
        let xl = center - step;
        let fl = f(xl)?;
        if fl == T::zero() || fl.signum() != left.1.signum() {
            return brent(what, &mut f, xl, left.0, xtol, 200);
        }
        left = (xl, fl);
        step = step + step;
    }
    Err(PatroError::BracketNotFound { what, lo: (center - limit).as_f64(), hi: (center + limit).as_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_roots() {
        let r = brent("cubic", |x: f64| Ok(x * x * x - 2.0), 0.0, 3.0, 1e-15, 100).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-14);
        let r = brent("cos", |x: f64| Ok(x.cos() - x), 0.0, 1.0, 1e-15, 100).unwrap();
        assert!((r.x - 0.739_085_133_215_160_6).abs() < 1e-14);
        let r = brent("f32", |x: f32| Ok(x - 0.25), -1.0, 1.0, 1e-7, 100).unwrap();
        assert!((r.x - 0.25).abs() < 1e-6);
    }

    #[test]
    fn reports_missing_bracket_and_widens_once() {
        let err = brent("square", |x: f64| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 100).unwrap_err();
        assert!(matches!(err, PatroError::BracketNotFound { .. }));
        let r = bracketed_root("shifted", |x: f64| Ok(x - 5.0), 0.0, 1.0, 1e-14).unwrap();
        assert!((r.x - 5.0).abs() < 1e-13);
        assert!(bracketed_root("far", |x: f64| Ok(x - 50.0), 0.0, 1.0, 1e-14).is_err());
    }

    #[test]
    fn propagates_evaluation_errors() {
        let err = brent("boom", |_x: f64| Err(PatroError::Config("x".into())), 0.0, 1.0, 1e-9, 10).unwrap_err();
        assert_eq!(err, PatroError::Config("x".into()));
    }
}
