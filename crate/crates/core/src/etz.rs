//! ETZ decomposition of repeated-measures outcome variability.
//!
//! An observed outcome is modelled as a patient intercept `Z`, plus (after
//! treatment starts) a random trajectory `Traj`, plus i.i.d. per-visit
//! measurement error `E`. With `Z ⊥ Traj` the three variances usually
//! published for a trial identify all three components:
//!
//! ```text
//! Var(baseline)  = Var(Z) + Var(E)
//! Var(milestone) = Var(Z) + Var(Traj) + Var(E)
//! Var(change)    = Var(Traj) + 2·Var(E)
//! ```
//!
//! All variances are in squared outcome units.

use serde::{Deserialize, Serialize};

use crate::error::{Component, Error, Result};

/// Whether a larger raw outcome is good or bad for the patient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

impl Direction {
    /// Maps a raw effect onto the efficacy scale where positive means benefit.
    pub fn canonicalize(self, raw: f64) -> f64 {
        match self {
            Direction::HigherIsBetter => raw,
            Direction::LowerIsBetter => -raw,
        }
    }
}

/// Variances of the baseline outcome, the milestone outcome and the change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceTriple {
    pub var_baseline: f64,
    pub var_milestone: f64,
    pub var_change: f64,
}

impl VarianceTriple {
    pub fn new(var_baseline: f64, var_milestone: f64, var_change: f64) -> Result<Self> {
        let v = VarianceTriple {
            var_baseline,
            var_milestone,
            var_change,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("var_baseline", self.var_baseline),
            ("var_milestone", self.var_milestone),
            ("var_change", self.var_change),
        ] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::domain(format!("{name} = {x} must be finite and non-negative")));
            }
        }
        Ok(())
    }

    /// Pools per-arm triples entrywise, weighting each arm by `n − 1`.
    pub fn pooled(arms: &[(VarianceTriple, u64)]) -> Result<Self> {
        let dof: u64 = arms.iter().map(|(_, n)| n.saturating_sub(1)).sum();
        if arms.iter().any(|&(_, n)| n < 2) || dof == 0 {
            return Err(Error::domain("every arm needs at least two patients to pool"));
        }
        let dof = dof as f64;
        let pool = |f: fn(&VarianceTriple) -> f64| {
            arms.iter().map(|(v, n)| (*n as f64 - 1.0) * f(v)).sum::<f64>() / dof
        };
        VarianceTriple::new(
            pool(|v| v.var_baseline),
            pool(|v| v.var_milestone),
            pool(|v| v.var_change),
        )
    }
}

/// The decomposed variances `Var(Z)`, `Var(E)` and `Var(Traj)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtzComponents {
    /// Random intercept (true baseline) variance.
    pub var_z: f64,
    /// Per-visit measurement error variance.
    pub var_e: f64,
    /// Random trajectory variance at the milestone visit.
    pub var_traj: f64,
}

impl EtzComponents {
    pub fn new(var_z: f64, var_e: f64, var_traj: f64) -> Result<Self> {
        let c = EtzComponents { var_z, var_e, var_traj };
        c.validate()?;
        Ok(c)
    }

    /// Builds components from standard deviations.
    pub fn from_sds(sd_z: f64, sd_e: f64, sd_traj: f64) -> Result<Self> {
        for sd in [sd_z, sd_e, sd_traj] {
            if !(sd >= 0.0) || !sd.is_finite() {
                return Err(Error::domain(format!("standard deviation {sd} must be non-negative")));
            }
        }
        EtzComponents::new(sd_z * sd_z, sd_e * sd_e, sd_traj * sd_traj)
    }

    pub fn validate(&self) -> Result<()> {
        for (component, value) in [
            (Component::VarZ, self.var_z),
            (Component::VarE, self.var_e),
            (Component::VarTraj, self.var_traj),
        ] {
            if !value.is_finite() {
                return Err(Error::domain(format!("{component} = {value} is not finite")));
            }
            if value < 0.0 {
                return Err(Error::Decomposition { component, value });
            }
        }
        Ok(())
    }

    pub fn sd_z(&self) -> f64 {
        self.var_z.sqrt()
    }

    pub fn sd_e(&self) -> f64 {
        self.var_e.sqrt()
    }

    pub fn sd_traj(&self) -> f64 {
        self.var_traj.sqrt()
    }
}

/// Recovers `Var(Z)`, `Var(E)`, `Var(Traj)` from the three published variances.
///
/// A negative component is reported as [`Error::Decomposition`]: it means
/// the inputs are inconsistent or `Z` and `Traj` are correlated. Negative
/// values within rounding of zero are treated as zero.
pub fn decompose_etz(v: &VarianceTriple) -> Result<EtzComponents> {
    v.validate()?;
    let var_z = 0.5 * (v.var_baseline + v.var_milestone - v.var_change);
    let var_e = v.var_baseline - var_z;
    let var_traj = v.var_change - 2.0 * var_e;

    let scale = v.var_baseline.max(v.var_milestone).max(v.var_change);
    let slack = 1e-12 * scale;
    let settle = |component, value: f64| {
        if value >= 0.0 {
            Ok(value)
        } else if value >= -slack {
            Ok(0.0)
        } else {
            Err(Error::Decomposition { component, value })
        }
    };
    Ok(EtzComponents {
        var_z: settle(Component::VarZ, var_z)?,
        var_e: settle(Component::VarE, var_e)?,
        var_traj: settle(Component::VarTraj, var_traj)?,
    })
}

/// The variances implied by a set of ETZ components.
pub fn compose_variances(c: &EtzComponents) -> VarianceTriple {
    VarianceTriple {
        var_baseline: c.var_z + c.var_e,
        var_milestone: c.var_z + c.var_traj + c.var_e,
        var_change: c.var_traj + 2.0 * c.var_e,
    }
}

/// Builds the triple from the `[1,1]`, `[m,m]` and `[1,m]` entries of an
/// MMRM residual covariance matrix.
pub fn variances_from_r_matrix(r11: f64, rmm: f64, r1m: f64) -> Result<VarianceTriple> {
    if !(r11 >= 0.0) || !(rmm >= 0.0) || !r1m.is_finite() {
        return Err(Error::domain("R-matrix diagonal entries must be non-negative"));
    }
    let bound = (r11 * rmm).sqrt();
    if r1m.abs() > bound * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "covariance {r1m} violates Cauchy-Schwarz bound {bound}"
        )));
    }
    VarianceTriple::new(r11, rmm, (r11 + rmm - 2.0 * r1m).max(0.0))
}

/// Summary statistics for one arm as typically published.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub n_baseline: u64,
    pub mean_baseline: f64,
    pub sd_baseline: f64,
    pub n_milestone: u64,
    pub mean_milestone: f64,
    pub sd_milestone: f64,
    /// Sample size behind the change estimate.
    pub n_change: u64,
    pub lsmean_change: f64,
    pub se_change: f64,
}

impl ArmSummary {
    /// Default change sample size: the rounded average of the baseline and
    /// milestone counts.
    pub fn default_n_change(n_baseline: u64, n_milestone: u64) -> u64 {
        (n_baseline + n_milestone).div_ceil(2)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("n_baseline", self.n_baseline),
            ("n_milestone", self.n_milestone),
            ("n_change", self.n_change),
        ] {
            if n < 2 {
                return Err(Error::domain(format!("{name} = {n} must be at least 2")));
            }
        }
        for (name, x) in [
            ("sd_baseline", self.sd_baseline),
            ("sd_milestone", self.sd_milestone),
            ("se_change", self.se_change),
        ] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::domain(format!("{name} = {x} must be non-negative")));
            }
        }
        for (name, x) in [
            ("mean_baseline", self.mean_baseline),
            ("mean_milestone", self.mean_milestone),
            ("lsmean_change", self.lsmean_change),
        ] {
            if !x.is_finite() {
                return Err(Error::domain(format!("{name} = {x} must be finite")));
            }
        }
        Ok(())
    }
}

/// A two-arm randomized study summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub outcome_name: String,
    pub direction: Direction,
    pub rx: ArmSummary,
    pub control: ArmSummary,
    pub milestone_week: f64,
    pub visit_weeks: Vec<f64>,
    /// Directly published `Var(change)`, used instead of the SE conversion.
    pub published_change_variance: Option<f64>,
}

impl StudySummary {
    pub fn validate(&self) -> Result<()> {
        self.rx.validate()?;
        self.control.validate()?;
        let weeks = &self.visit_weeks;
        if weeks.len() < 2 || weeks[0] != 0.0 {
            return Err(Error::domain("visit_weeks must start at 0 and have at least two visits"));
        }
        if weeks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("visit_weeks must be strictly increasing"));
        }
        if self.milestone_week != *weeks.last().unwrap() {
            return Err(Error::domain(format!(
                "milestone_week {} must equal the last visit week {}",
                self.milestone_week,
                weeks.last().unwrap()
            )));
        }
        if let Some(v) = self.published_change_variance {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("published_change_variance {v} must be non-negative")));
            }
        }
        Ok(())
    }

    /// Observed treatment effect on the efficacy scale (positive = benefit).
    pub fn efficacy_estimate(&self) -> f64 {
        self.direction
            .canonicalize(self.rx.lsmean_change - self.control.lsmean_change)
    }
}

/// Converts the arms' SE of the LS-mean change into a pooled change variance.
///
/// Each arm contributes `se² · n_change`; arms are pooled with `n − 1`
/// weights.
pub fn change_variance_from_se(rx: &ArmSummary, control: &ArmSummary) -> Result<f64> {
    let mut acc = 0.0;
    let mut dof = 0.0;
    for arm in [rx, control] {
        if !(arm.se_change > 0.0) || !arm.se_change.is_finite() {
            return Err(Error::domain(format!("se_change = {} must be positive", arm.se_change)));
        }
        if arm.n_change < 2 {
            return Err(Error::domain(format!("n_change = {} must be at least 2", arm.n_change)));
        }
        let n = arm.n_change as f64;
        acc += (n - 1.0) * arm.se_change * arm.se_change * n;
        dof += n - 1.0;
    }
    Ok(acc / dof)
}

/// SD of change implied by the components: `√(Var(Traj) + 2·Var(E))`.
pub fn pooled_change_sd(c: &EtzComponents) -> f64 {
    (c.var_traj + 2.0 * c.var_e).sqrt()
}
