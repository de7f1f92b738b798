use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use crate::error::Result;

use super::check_open_unit;

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF `Φ(x)`, accurate to double precision in both tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(x)` without cancellation.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Lower-tail standard normal quantile: returns `x` with `Φ(x) = p`.
///
/// Acklam's rational approximation followed by one Halley correction step
/// against the erfc-based CDF, which brings the result to full double
/// precision.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    check_open_unit(p, "p")?;
    if p == 0.5 {
        return Ok(0.0);
    }
    let x = acklam(p);
    // Residual in whichever tail avoids cancellation.
    let e = if x < 0.0 {
        std_normal_cdf(x) - p
    } else {
        (1.0 - p) - std_normal_sf(x)
    };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

#[allow(clippy::excessive_precision)]
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e+01,
        2.209_460_984_245_205e+02,
        -2.759_285_104_469_687e+02,
        1.383_577_518_672_690e+02,
        -3.066_479_806_614_716e+01,
        2.506_628_277_459_239e+00,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e+01,
        1.615_858_368_580_409e+02,
        -1.556_989_798_598_866e+02,
        6.680_131_188_771_972e+01,
        -1.328_068_155_288_572e+01,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-03,
        -3.223_964_580_411_365e-01,
        -2.400_758_277_161_838e+00,
        -2.549_732_539_343_734e+00,
        4.374_664_141_464_968e+00,
        2.938_163_982_698_783e+00,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-03,
        3.224_671_290_700_398e-01,
        2.445_134_137_142_996e+00,
        3.754_408_661_907_416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_quantiles() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!((std_normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((std_normal_quantile(0.80).unwrap() - 0.841_621_233_572_914_3).abs() < 1e-12);
        assert!((std_normal_quantile(0.95).unwrap() - 1.644_853_626_951_472_2).abs() < 1e-12);
        assert!((std_normal_quantile(1e-10).unwrap() + 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn rejects_closed_endpoints() {
        for p in [0.0, 1.0, -0.5, 2.0, f64::NAN] {
            assert!(std_normal_quantile(p).is_err());
        }
    }

    #[test]
    fn inverse_round_trip() {
        let mut x = -6.0;
        while x <= 6.0 {
            let back = std_normal_quantile(std_normal_cdf(x)).unwrap();
            assert!((back - x).abs() < 1e-8, "x = {x}, back = {back}");
            x += 0.01;
        }
    }

    #[test]
    fn cdf_symmetry() {
        for x in [0.1, 1.0, 3.0, 8.0] {
            assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() < 1e-15);
            assert_eq!(std_normal_sf(x), std_normal_cdf(-x));
        }
    }
}
