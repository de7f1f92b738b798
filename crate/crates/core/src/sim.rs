//! Random-coefficients simulator for linear response profiles.
//!
//! Patient `i` in arm `Trt` is observed at week `t_v` as
//!
//! ```text
//! Y = α + a_i + (β_Trt + b_i)·t_v + e_iv,
//! a_i ~ N(0, Var(Z)),  b_i ~ N(0, Var(Traj)/t_m²),  e_iv ~ N(0, Var(E))
//! ```
//!
//! with `a ⊥ b`, one intercept law shared by both arms, and no dropout.
//!
//! Every patient owns a random stream keyed by `(seed, rep, arm, patient)`
//! and consumes it in a fixed order: intercept, slope, then one error per
//! visit. Draws are standard normals scaled afterwards, so two runs with the
//! same seed but different variances use common random numbers, and adding
//! patients never perturbs existing ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::etz::{EtzComponents, StudySummary, VarianceTriple};
use crate::numerics::{mix_seed, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Rx,
    Control,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Rx, Arm::Control];

    fn key(self) -> u64 {
        match self {
            Arm::Rx => 0,
            Arm::Control => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Rx => "rx",
            Arm::Control => "control",
        }
    }
}

impl std::fmt::Display for Arm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedEffects {
    /// Shared intercept mean; randomization forces equal arm means.
    pub alpha_common: f64,
    /// Slopes in outcome units per week.
    pub beta_rx: f64,
    pub beta_c: f64,
    /// Published per-arm baselines, kept for plot annotation only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_rx_display: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_c_display: Option<f64>,
}

impl FixedEffects {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("alpha_common", self.alpha_common),
            ("beta_rx", self.beta_rx),
            ("beta_c", self.beta_c),
        ] {
            if !x.is_finite() {
                return Err(Error::domain(format!("{name} = {x} must be finite")));
            }
        }
        Ok(())
    }

    /// A warning when the display intercepts differ by more than a quarter of
    /// SD(Z), which would contradict the shared-intercept law.
    pub fn display_gap_warning(&self, etz: &EtzComponents) -> Option<String> {
        let (rx, c) = (self.alpha_rx_display?, self.alpha_c_display?);
        let gap = (rx - c).abs();
        (gap > 0.25 * etz.sd_z()).then(|| {
            format!(
                "display intercepts differ by {gap:.3}, large relative to SD(Z) = {:.3}",
                etz.sd_z()
            )
        })
    }

    pub fn slope(&self, arm: Arm) -> f64 {
        match arm {
            Arm::Rx => self.beta_rx,
            Arm::Control => self.beta_c,
        }
    }

    /// Noise-free mean outcome of `arm` at `week`.
    pub fn mean_at(&self, arm: Arm, week: f64) -> f64 {
        self.alpha_common + self.slope(arm) * week
    }

    /// Fixed effects implied by a study summary: the baseline-count weighted
    /// mean of the arm baselines as the common intercept and the LS-mean
    /// change over the milestone week as each slope.
    pub fn from_study(study: &StudySummary) -> Result<Self> {
        study.validate()?;
        let (rx, c) = (&study.rx, &study.control);
        let (nr, nc) = (rx.n_baseline as f64, c.n_baseline as f64);
        Ok(FixedEffects {
            alpha_common: (nr * rx.mean_baseline + nc * c.mean_baseline) / (nr + nc),
            beta_rx: rx.lsmean_change / study.milestone_week,
            beta_c: c.lsmean_change / study.milestone_week,
            alpha_rx_display: Some(rx.mean_baseline),
            alpha_c_display: Some(c.mean_baseline),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub visit_weeks: Vec<f64>,
    pub n_rx: u64,
    pub n_c: u64,
    pub etz: EtzComponents,
    pub seed: u64,
    pub n_reps: u64,
}

impl SimConfig {
    /// The EXPEDITION3 schedule: baseline then weeks 12 through 80.
    pub const DEFAULT_WEEKS: [f64; 7] = [0.0, 12.0, 28.0, 40.0, 52.0, 64.0, 80.0];

    pub fn validate(&self) -> Result<()> {
        let w = &self.visit_weeks;
        if w.len() < 2 || w[0] != 0.0 {
            return Err(Error::domain("visit_weeks must start at 0 and have at least two visits"));
        }
        if w.windows(2).any(|p| !(p[1] > p[0])) || !w.iter().all(|x| x.is_finite()) {
            return Err(Error::domain("visit_weeks must be finite and strictly increasing"));
        }
        if self.n_rx == 0 || self.n_c == 0 {
            return Err(Error::domain("both arms need at least one patient"));
        }
        if self.n_reps == 0 {
            return Err(Error::domain("n_reps must be at least 1"));
        }
        self.etz.validate()
    }

    pub fn milestone_week(&self) -> f64 {
        *self.visit_weeks.last().expect("validated schedule")
    }

    pub fn n_arm(&self, arm: Arm) -> u64 {
        match arm {
            Arm::Rx => self.n_rx,
            Arm::Control => self.n_c,
        }
    }

    /// Normal draws needed for all replications.
    pub fn draw_count(&self) -> u128 {
        let per_patient = self.visit_weeks.len() as u128 + 2;
        self.n_reps as u128 * (self.n_rx as u128 + self.n_c as u128) * per_patient
    }

    /// A configuration mirroring a study summary's schedule and baseline
    /// counts.
    pub fn from_study(study: &StudySummary, etz: EtzComponents, seed: u64, n_reps: u64) -> Self {
        SimConfig {
            visit_weeks: study.visit_weeks.clone(),
            n_rx: study.rx.n_baseline,
            n_c: study.control.n_baseline,
            etz,
            seed,
            n_reps,
        }
    }
}

/// Random-coefficient variances `(σ_a², σ_b², σ²)`; the intercept-slope
/// covariance is fixed at zero.
pub fn etz_to_random_coefficients(etz: &EtzComponents, milestone_week: f64) -> Result<(f64, f64, f64)> {
    if !(milestone_week > 0.0) || !milestone_week.is_finite() {
        return Err(Error::domain(format!("milestone week {milestone_week} must be positive")));
    }
    etz.validate()?;
    Ok((etz.var_z, etz.var_traj / (milestone_week * milestone_week), etz.var_e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPatient {
    pub arm: Arm,
    pub index: u64,
    pub intercept_draw: f64,
    pub slope_draw: f64,
    /// One observation per visit week.
    pub observations: Vec<f64>,
}

impl SimPatient {
    pub fn change(&self) -> f64 {
        self.observations[self.observations.len() - 1] - self.observations[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedStudy {
    pub rep_index: u64,
    pub visit_weeks: Vec<f64>,
    pub fixed: FixedEffects,
    /// Rx patients first, then control, each in index order.
    pub patients: Vec<SimPatient>,
}

impl SimulatedStudy {
    pub fn arm(&self, arm: Arm) -> impl Iterator<Item = &SimPatient> {
        self.patients.iter().filter(move |p| p.arm == arm)
    }

    /// Measurement error of `p` at visit `v`, recovered from the stored draws.
    pub fn error_at(&self, p: &SimPatient, v: usize) -> f64 {
        let week = self.visit_weeks[v];
        p.observations[v]
            - (self.fixed.alpha_common + p.intercept_draw + (self.fixed.slope(p.arm) + p.slope_draw) * week)
    }

    pub fn mean_change(&self, arm: Arm) -> f64 {
        mean(self.arm(arm).map(SimPatient::change))
    }

    /// Milestone separation: mean change in Rx minus mean change in control.
    pub fn separation(&self) -> f64 {
        self.mean_change(Arm::Rx) - self.mean_change(Arm::Control)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut s) = (0usize, 0.0);
    for x in xs {
        n += 1;
        s += x;
    }
    s / n as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn simulate_patient(fx: &FixedEffects, cfg: &SimConfig, sds: (f64, f64, f64), rep: u64, arm: Arm, index: u64) -> SimPatient {
    let (sd_a, sd_b, sd_e) = sds;
    let mut rng = RngStream::new(mix_seed(cfg.seed, &[rep, arm.key()]), index);
    let a = sd_a * rng.standard_normal();
    let b = sd_b * rng.standard_normal();
    let slope = fx.slope(arm) + b;
    let observations = cfg
        .visit_weeks
        .iter()
        .map(|&w| fx.alpha_common + a + slope * w + sd_e * rng.standard_normal())
        .collect();
    SimPatient {
        arm,
        index,
        intercept_draw: a,
        slope_draw: b,
        observations,
    }
}

/// Simulates replication `rep_index` of the study described by `cfg`.
pub fn simulate_study(fx: &FixedEffects, cfg: &SimConfig, rep_index: u64) -> Result<SimulatedStudy> {
    fx.validate()?;
    cfg.validate()?;
    let (va, vb, ve) = etz_to_random_coefficients(&cfg.etz, cfg.milestone_week())?;
    let sds = (va.sqrt(), vb.sqrt(), ve.sqrt());
    let patients = Arm::BOTH
        .iter()
        .flat_map(|&arm| (0..cfg.n_arm(arm)).map(move |i| (arm, i)))
        .map(|(arm, i)| simulate_patient(fx, cfg, sds, rep_index, arm, i))
        .collect();
    Ok(SimulatedStudy {
        rep_index,
        visit_weeks: cfg.visit_weeks.clone(),
        fixed: *fx,
        patients,
    })
}

/// Per-arm sample variances of baseline, milestone and change.
fn arm_triple(s: &SimulatedStudy, arm: Arm) -> (VarianceTriple, u64) {
    let last = s.visit_weeks.len() - 1;
    let base: Vec<f64> = s.arm(arm).map(|p| p.observations[0]).collect();
    let mile: Vec<f64> = s.arm(arm).map(|p| p.observations[last]).collect();
    let change: Vec<f64> = s.arm(arm).map(SimPatient::change).collect();
    let n = base.len() as u64;
    let triple = VarianceTriple {
        var_baseline: sample_var(&base),
        var_milestone: sample_var(&mile),
        var_change: sample_var(&change),
    };
    (triple, n)
}

/// Arm-pooled sample variances of baseline, milestone and change.
pub fn empirical_variance_triple(s: &SimulatedStudy) -> Result<VarianceTriple> {
    pooled_empirical_variance_triple(std::slice::from_ref(s))
}

/// Like [`empirical_variance_triple`] but pooling every arm of every study.
pub fn pooled_empirical_variance_triple(studies: &[SimulatedStudy]) -> Result<VarianceTriple> {
    let mut arms = Vec::with_capacity(2 * studies.len());
    for s in studies {
        for arm in Arm::BOTH {
            if s.arm(arm).count() < 2 {
                return Err(Error::domain(format!("arm {arm} needs at least two patients")));
            }
            arms.push(arm_triple(s, arm));
        }
    }
    if arms.is_empty() {
        return Err(Error::domain("no studies to pool"));
    }
    VarianceTriple::pooled(&arms)
}

/// Empirical covariance of baseline and milestone observations, pooled over
/// arms. Estimates `Var(Z)`.
pub fn empirical_baseline_milestone_cov(s: &SimulatedStudy) -> Result<f64> {
    let last = s.visit_weeks.len() - 1;
    let (mut acc, mut dof) = (0.0, 0.0);
    for arm in Arm::BOTH {
        let pts: Vec<(f64, f64)> = s.arm(arm).map(|p| (p.observations[0], p.observations[last])).collect();
        if pts.len() < 2 {
            return Err(Error::domain(format!("arm {arm} needs at least two patients")));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        acc += pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>();
        dof += n - 1.0;
    }
    Ok(acc / dof)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub week: f64,
    pub arm: Arm,
    pub n: u64,
    pub mean_y: f64,
    pub mean_change: f64,
}

/// Per-visit arm means of the outcome and of change from baseline, ordered
/// by week then arm (Rx before control).
pub fn profile_table(s: &SimulatedStudy) -> Vec<ProfileRow> {
    let mut rows = Vec::with_capacity(2 * s.visit_weeks.len());
    for (v, &week) in s.visit_weeks.iter().enumerate() {
        for arm in Arm::BOTH {
            let n = s.arm(arm).count() as u64;
            rows.push(ProfileRow {
                week,
                arm,
                n,
                mean_y: mean(s.arm(arm).map(|p| p.observations[v])),
                mean_change: mean(s.arm(arm).map(|p| p.observations[v] - p.observations[0])),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicabilityMetrics {
    pub mean_separation: f64,
    pub sd_separation: f64,
    pub frac_positive: f64,
    /// Milestone separation of each replication, in replication order.
    pub per_rep: Vec<f64>,
}

/// Runs `cfg.n_reps` independent replications and summarises the spread of
/// the milestone separation.
pub fn replicability_metrics(fx: &FixedEffects, cfg: &SimConfig) -> Result<ReplicabilityMetrics> {
    cfg.validate()?;
    if cfg.n_reps < 2 {
        return Err(Error::domain("replicability needs at least two replications"));
    }
    let per_rep = (0..cfg.n_reps)
        .into_par_iter()
        .map(|rep| simulate_study(fx, cfg, rep).map(|s| s.separation()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ReplicabilityMetrics {
        mean_separation: per_rep.iter().sum::<f64>() / per_rep.len() as f64,
        sd_separation: sample_var(&per_rep).sqrt(),
        frac_positive: per_rep.iter().filter(|&&x| x > 0.0).count() as f64 / per_rep.len() as f64,
        per_rep,
    })
}

/// Simulates all replications of `cfg` in parallel, in replication order.
pub fn simulate_replications(fx: &FixedEffects, cfg: &SimConfig) -> Result<Vec<SimulatedStudy>> {
    (0..cfg.n_reps)
        .into_par_iter()
        .map(|rep| simulate_study(fx, cfg, rep))
        .collect()
}

/// Profile table of every replication, in replication order. Studies are
/// dropped as soon as their table is built, so memory stays proportional to
/// one study per worker.
pub fn replicate_profiles(fx: &FixedEffects, cfg: &SimConfig) -> Result<Vec<Vec<ProfileRow>>> {
    (0..cfg.n_reps)
        .into_par_iter()
        .map(|rep| simulate_study(fx, cfg, rep).map(|s| profile_table(&s)))
        .collect()
}

/// Decomposition of each replication's empirical triple; a Monte-Carlo view
/// of how well the simulator reproduces its configured components.
///
/// The algebra is applied without the sign check, so sampling noise on a
/// small component shows up as a small negative value instead of an error.
pub fn round_trip_components(studies: &[SimulatedStudy]) -> Result<Vec<EtzComponents>> {
    studies
        .iter()
        .map(|s| {
            let v = empirical_variance_triple(s)?;
            let var_z = (v.var_baseline + v.var_milestone - v.var_change) / 2.0;
            let var_e = v.var_baseline - var_z;
            Ok(EtzComponents {
                var_z,
                var_e,
                var_traj: v.var_change - 2.0 * var_e,
            })
        })
        .collect()
}
