use std::f64::consts::PI;

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

use super::{check_open_unit, solve_root, std_normal_quantile};

fn check_df(df: u64) -> Result<f64> {
    if df == 0 {
        Err(Error::domain("degrees of freedom must be at least 1"))
    } else {
        Ok(df as f64)
    }
}

/// Upper tail `P(T > x)` for `x ≥ 0`, from the regularized incomplete beta.
fn upper_tail_nonneg(x: f64, df: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    0.5 * beta_reg(0.5 * df, 0.5, df / (df + x * x))
}

/// Student-t CDF with `df` degrees of freedom.
pub fn student_t_cdf(x: f64, df: u64) -> Result<f64> {
    let df = check_df(df)?;
    Ok(if x >= 0.0 {
        1.0 - upper_tail_nonneg(x, df)
    } else {
        upper_tail_nonneg(-x, df)
    })
}

/// Student-t survival function `P(T > x)`.
pub fn student_t_sf(x: f64, df: u64) -> Result<f64> {
    let df = check_df(df)?;
    Ok(if x >= 0.0 {
        upper_tail_nonneg(x, df)
    } else {
        1.0 - upper_tail_nonneg(-x, df)
    })
}

/// Lower-tail Student-t quantile: `x` with `T_df(x) = p`.
///
/// Closed forms for one and two degrees of freedom; otherwise the upper tail
/// `0.5·I_{df/(df+x²)}(df/2, 1/2)` is inverted by bracketed root finding on
/// the side of the distribution that holds `p`.
pub fn student_t_quantile(p: f64, df: u64) -> Result<f64> {
    check_open_unit(p, "p")?;
    let nu = check_df(df)?;
    if p == 0.5 {
        return Ok(0.0);
    }
    match df {
        1 => return Ok((PI * (p - 0.5)).tan()),
        2 => {
            let a = 4.0 * p * (1.0 - p);
            return Ok(2.0 * (p - 0.5) * (2.0 / a).sqrt());
        }
        _ => {}
    }
    // Probability mass beyond |x| in the tail that holds p.
    let tail = p.min(1.0 - p);
    let sign = if p > 0.5 { 1.0 } else { -1.0 };

    // The t tail is heavier than the normal tail, so |z| is a lower bracket.
    let lo = -std_normal_quantile(tail)?;
    let mut hi = (2.0 * lo).max(1.0);
    while upper_tail_nonneg(hi, nu) > tail {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::domain(format!("t quantile for p = {p}, df = {df} overflows")));
        }
    }
    let q = solve_root(
        |x| (upper_tail_nonneg(x, nu) - tail) / tail,
        lo,
        hi,
        1e-13 * hi,
    )?;
    Ok(sign * q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_is_zero() {
        for df in [1, 3, 30, 1959] {
            assert_eq!(student_t_quantile(0.5, df).unwrap(), 0.0);
        }
    }

    #[test]
    fn worked_example_quantile() {
        let t = student_t_quantile(0.95, 1959).unwrap();
        assert!((t - 1.645_631_827_240_912_7).abs() < 1e-9, "{t}");
    }

    #[test]
    fn cauchy_closed_form() {
        let t = student_t_quantile(0.975, 1).unwrap();
        assert!((t - 12.706_204_736_432_095).abs() < 1e-9);
    }

    #[test]
    fn cdf_inverts_quantile() {
        for df in [3u64, 4, 7, 25, 120] {
            for p in [1e-6, 0.01, 0.2, 0.7, 0.975, 0.999_9] {
                let x = student_t_quantile(p, df).unwrap();
                let back = student_t_cdf(x, df).unwrap();
                assert!((back - p).abs() < 1e-9 * p.max(1e-3), "df {df} p {p} back {back}");
            }
        }
    }

    #[test]
    fn df_two_closed_form_matches_cdf() {
        for p in [0.01, 0.3, 0.9] {
            let x = student_t_quantile(p, 2).unwrap();
            assert!((student_t_cdf(x, 2).unwrap() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn approaches_normal() {
        for p in [0.025, 0.8, 0.95] {
            let t = student_t_quantile(p, 1_000_000).unwrap();
            let z = std_normal_quantile(p).unwrap();
            assert!((t - z).abs() < 1e-4);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(student_t_quantile(0.0, 5).is_err());
        assert!(student_t_quantile(1.0, 5).is_err());
        assert!(student_t_quantile(0.5, 0).is_err());
        assert!(student_t_cdf(1.0, 0).is_err());
    }
}
