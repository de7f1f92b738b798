use crate::error::{Error, Result};

const MAX_ITER: usize = 500;

/// Finds a root of `f` on `[lo, hi]` by bisection with secant acceleration.
///
/// `f(lo)` and `f(hi)` must have opposite signs (a zero at either end is
/// accepted). Returns once the bracket is no wider than `tol` or `f` hits
/// zero exactly. Secant steps are taken only while they keep shrinking the
/// bracket by at least half per two iterations; otherwise the step falls
/// back to bisection.
pub fn solve_root<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance {tol} must be positive")));
    }
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut width_before = b - a;
    for iter in 0..MAX_ITER {
        let width = b - a;
        if width <= tol {
            break;
        }
        let mid = a + 0.5 * width;
        if mid <= a || mid >= b {
            // Bracket has collapsed to adjacent floats.
            break;
        }
        // Every second step, demand that the bracket has at least halved.
        let force_bisect = iter % 2 == 1 && width > 0.5 * width_before;
        if iter % 2 == 1 {
            width_before = width;
        }
        let x = if force_bisect || !fa.is_finite() || !fb.is_finite() {
            mid
        } else {
            let s = b - fb * (b - a) / (fb - fa);
            if s > a && s < b {
                s
            } else {
                mid
            }
        };
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.is_nan() {
            return Err(Error::domain(format!("function returned NaN at {x}")));
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    // Return the endpoint with the smaller residual.
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::std_normal_cdf;

    #[test]
    fn linear() {
        let x = solve_root(|x| x - 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_by_root() {
        let x = solve_root(|x| std_normal_cdf(x) - 0.95, 0.0, 3.0, 1e-12).unwrap();
        assert!((x - 1.644_854).abs() < 1e-6);
    }

    #[test]
    fn sqrt_two() {
        let x = solve_root(|x| x * x - 2.0, 1.0, 2.0, 1e-12).unwrap();
        assert!((x - std::f64::consts::SQRT_2).abs() < 1e-6);
        assert!((x - std::f64::consts::SQRT_2).abs() < 1e-11);
    }

    #[test]
    fn reversed_bracket_is_accepted() {
        let x = solve_root(|x| x - 1.0, 2.0, 0.0, 1e-12).unwrap();
        assert!((x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_sign_change() {
        let err = solve_root(|x| x * x + 1.0, -1.0, 1.0, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn bad_tolerance() {
        assert!(solve_root(|x| x, -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn flat_tail_converges() {
        // Slowly varying function where plain secant stalls.
        let x = solve_root(|x: f64| (x - 0.3).powi(7), -1.0, 5.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-9);
    }
}
