//! Standard normal density, distribution and quantile functions.

use crate::scalar::Real;

/// Standard normal density.
#[inline]
pub fn norm_pdf<T: Real>(z: T) -> T {
    (-(z * z) * T::half()).exp() / (T::two() * T::PI()).sqrt()
}

/// Standard normal CDF, accurate to roughly machine epsilon in absolute terms.
///
/// Rational approximation of Hart (1968) on `|z| < 7.07`, continued fraction
/// for the tail.
pub fn norm_cdf<T: Real>(z: T) -> T {
    let x = z.abs();
    let tail = if x > T::lit(37.0) {
        T::zero()
    } else {
        let gauss = (-(x * x) * T::half()).exp();
        if x < T::lit(7.071_067_811_865_47) {
            let num = [
                3.526_249_659_989_11e-2,
                0.700_383_064_443_688,
                6.373_962_203_531_65,
                33.912_866_078_383,
                112.079_291_497_871,
                221.213_596_169_931,
                220.206_867_912_376,
            ];
            let den = [
                8.838_834_764_831_84e-2,
                1.755_667_163_182_64,
                16.064_177_579_207,
                86.780_732_202_946_1,
                296.564_248_779_674,
                637.333_633_378_831,
                793.826_512_519_948,
                440.413_735_824_752,
            ];
            gauss * horner(&num, x) / horner(&den, x)
        } else {
            let mut frac = x;
            for k in (1..=40).rev() {
                frac = x + T::lit(f64::from(k)) / frac;
            }
            gauss / frac / (T::two() * T::PI()).sqrt()
        }
    };
    if z > T::zero() {
        T::one() - tail
    } else {
        tail
    }
}

fn horner<T: Real>(coeffs: &[f64], x: T) -> T {
    coeffs.iter().fold(T::zero(), |acc, &c| acc * x + T::lit(c))
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational initial guess followed by two Halley steps against
/// [`norm_cdf`]. Returns `-inf`/`+inf` at 0 and 1, NaN outside `[0, 1]`.
pub fn norm_quantile<T: Real>(p: T) -> T {
    if p.is_nan() || p < T::zero() || p > T::one() {
        return T::nan();
    }
    if p == T::zero() {
        return T::neg_infinity();
    }
    if p == T::one() {
        return T::infinity();
    }
    if p > T::half() {
        return -lower_quantile(T::one() - p);
    }
    lower_quantile(p)
}

fn lower_quantile<T: Real>(p: T) -> T {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 6] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
        1.0,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 5] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
        1.0,
    ];
    let mut x = if p < T::lit(0.02425) {
        let q = (-T::two() * p.ln()).sqrt();
        horner(&C, q) / horner(&D, q)
    } else {
        let q = p - T::half();
        let r = q * q;
        horner(&A, r) * q / horner(&B, r)
    };
    for _ in 0..2 {
        let e = norm_cdf(x) - p;
        let u = e * (T::two() * T::PI()).sqrt() * (x * x * T::half()).exp();
        x = x - u / (T::one() + x * u * T::half());
    }
    x
}

/// `k`-th derivative of the standard normal CDF for `k <= 4`.
///
/// Order 0 is the CDF itself; higher orders are Hermite polynomial multiples
/// of the density.
pub fn norm_cdf_derivative<T: Real>(k: u32, z: T) -> T {
    let pdf = norm_pdf(z);
    match k {
        0 => norm_cdf(z),
        1 => pdf,
        2 => -z * pdf,
        3 => (z * z - T::one()) * pdf,
        4 => -(z * z * z - T::lit(3.0) * z) * pdf,
        _ => panic!("derivative order {k} not supported"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an independent arbitrary-precision evaluation.
    const CDF_TABLE: [(f64, f64); 8] = [
        (-8.0, 6.220_960_574_271_784e-16),
        (-3.0, 1.349_898_031_630_094_6e-3),
        (-1.241_866_791_843_320_2, 0.107_142_857_142_857_18),
        (-0.5, 0.308_537_538_725_986_9),
        (0.0, 0.5),
        (0.841_621_233_572_914_3, 0.8),
        (2.0, 0.977_249_868_051_820_8),
        (5.0, 0.999_999_713_348_428_1),
    ];

    #[test]
    fn cdf_matches_reference_table() {
        for (z, want) in CDF_TABLE {
            let got = norm_cdf(z);
            assert!((got - want).abs() <= 4e-16 + 1e-13 * want, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn cdf_is_symmetric() {
        for i in -300..=300 {
            let z = f64::from(i) * 0.03;
            assert!((norm_cdf(z) + norm_cdf(-z) - 1.0).abs() < 4e-16);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for (z, p) in CDF_TABLE.iter().skip(1).take(6) {
            assert!((norm_quantile(*p) - z).abs() < 1e-12, "p={p}");
        }
        assert!(norm_quantile(0.0f64).is_infinite());
        assert!(norm_quantile(1.2f64).is_nan());
    }

    #[test]
    fn works_for_single_precision() {
        assert!((norm_cdf(1.0f32) - 0.841_344_7).abs() < 1e-6);
        assert!((norm_quantile(0.8f32) - 0.841_621_2).abs() < 1e-5);
    }

    #[test]
    fn cdf_derivatives_match_finite_differences() {
        let h = 1e-4f64;
        for &z in &[-2.0f64, -0.3, 0.0, 0.7, 1.9] {
            for k in 1..=4u32 {
                let fd = (norm_cdf_derivative(k - 1, z + h) - norm_cdf_derivative(k - 1, z - h)) / (2.0 * h);
                assert!((fd - norm_cdf_derivative(k, z)).abs() < 1e-7, "k={k} z={z}");
            }
        }
    }
}
