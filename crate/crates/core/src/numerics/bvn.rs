//! Standard bivariate normal CDF following Genz's `BVND` (Drezner and
//! Wesolowsky's integral form, evaluated with Gauss–Legendre quadrature and a
//! series expansion when the correlation is close to ±1).
#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::std_normal_cdf;

// (weight, abscissa) pairs on [-1, 0]; each is mirrored about 0.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, -0.932_469_514_203_152_2),
    (0.360_761_573_048_138_4, -0.661_209_386_466_264_7),
    (0.467_913_934_572_690_4, -0.238_619_186_083_197_0),
];

const GL12: [(f64, f64); 6] = [
    (0.471_753_363_865_117_7e-01, -0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, -0.904_117_256_370_475_0),
    (0.160_078_328_543_346_4, -0.769_902_674_194_305_0),
    (0.203_167_426_723_065_9, -0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, -0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, -0.125_233_408_511_469_2),
];

const GL20: [(f64, f64); 10] = [
    (0.176_140_071_391_521_2e-01, -0.993_128_599_185_094_9),
    (0.406_014_298_003_869_4e-01, -0.963_971_927_277_913_8),
    (0.626_720_483_341_090_6e-01, -0.912_234_428_251_325_9),
    (0.832_767_415_767_047_5e-01, -0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, -0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, -0.636_053_680_726_515_0),
    (0.131_688_638_449_176_6, -0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, -0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, -0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, -0.765_265_211_334_973_3e-01),
];

/// `P(X ≤ h, Y ≤ k)` for a standard bivariate normal with correlation `rho`.
///
/// Infinite limits are handled exactly (`h = +∞` marginalizes to `Φ(k)`).
/// Absolute accuracy is better than `1e-7` over the whole domain.
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("correlation {rho} outside [-1, 1]")));
    }
    if h.is_nan() || k.is_nan() {
        return Err(Error::domain("NaN integration limit"));
    }
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if h == f64::INFINITY {
        return Ok(std_normal_cdf(k));
    }
    if k == f64::INFINITY {
        return Ok(std_normal_cdf(h));
    }
    if rho == 1.0 {
        return Ok(std_normal_cdf(h.min(k)));
    }
    if rho == -1.0 {
        return Ok((std_normal_cdf(h) + std_normal_cdf(k) - 1.0).max(0.0));
    }
    Ok(upper_orthant(-h, -k, rho).clamp(0.0, 1.0))
}

/// `P(X > h, Y > k)`, the quantity Genz's routine computes.
fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let ra = r.abs();
    let quad: &[(f64, f64)] = if ra < 0.3 {
        &GL6
    } else if ra < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let hk = h * k;

    if ra < 0.925 {
        let mut bvn = 0.0;
        if ra > 0.0 {
            let hs = 0.5 * (h * h + k * k);
            let asr = r.asin();
            for &(w, x) in quad {
                for sign in [-1.0, 1.0] {
                    let sn = (asr * (sign * x + 1.0) / 2.0).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / (2.0 * two_pi);
        }
        return bvn + std_normal_cdf(-h) * std_normal_cdf(-k);
    }

    let (h, k, hk) = if r < 0.0 { (h, -k, -hk) } else { (h, k, hk) };
    let mut bvn = 0.0;
    let as_ = (1.0 - r) * (1.0 + r);
    let mut a = as_.sqrt();
    let bs = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    let asr = -0.5 * (bs / as_ + hk);
    if asr > -100.0 {
        bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
    }
    if hk > -100.0 {
        let b = bs.sqrt();
        bvn -= (-0.5 * hk).exp()
            * two_pi.sqrt()
            * std_normal_cdf(-b / a)
            * b
            * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for &(w, x) in quad {
        for sign in [-1.0, 1.0] {
            let xs = (a * (sign * x + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            let asr = -0.5 * (bs / xs + hk);
            if asr > -100.0 {
                bvn += a
                    * w
                    * asr.exp()
                    * ((-hk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))).exp() / rs
                        - (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
    }
    bvn = -bvn / two_pi;

    if r > 0.0 {
        bvn + std_normal_cdf(-h.max(k))
    } else {
        let mut out = -bvn;
        if k > h {
            out += std_normal_cdf(k) - std_normal_cdf(h);
        }
        out
    }
}
