//! Numerical kernel: normal and Student-t distribution functions, the
//! bivariate normal CDF, bracketed root finding and counter-based random
//! streams.
//!
//! Every quantile in this crate follows the lower-tail convention:
//! `std_normal_quantile(p)` returns `x` with `Φ(x) = p`.

mod bvn;
mod normal;
mod root;
mod rng;
mod student_t;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bvn::bvn_cdf;
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf};
pub use root::solve_root;
pub use rng::{mix_seed, rng_normal, RngStream};
pub use student_t::{student_t_cdf, student_t_quantile, student_t_sf};

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!("probability {value} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub(crate) fn check_open_unit(p: f64, what: &str) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} = {p} must lie in (0, 1)")))
    }
}
