//! Confidently Bounded Quantile (CBQ) pipeline for Phase 2 → Phase 3
//! transition planning.
//!
//! Two discounts relative to the median-unbiased 50/50 point split the
//! desired success confidence `γ`:
//!
//! ```text
//! γ = (d₂ + 0.5)·(d₃ + 0.5)
//! ```
//!
//! The Phase 2 discount turns the feeder estimate into a Confident Efficacy
//! (a one-sided lower `t` limit at level `d₂ + 0.5`). The Phase 3 discount
//! then takes the lower `1 − (d₃ + 0.5)` quantile of the confirmatory
//! estimate's distribution, centred at the Confident Efficacy. A positive CBQ
//! means the efficacious direction is retained with confidence `γ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::etz::{pooled_change_sd, Direction, EtzComponents, StudySummary};
use crate::numerics::{std_normal_quantile, student_t_quantile, Probability, RngStream};

/// Number of histogram bins reported with Monte-Carlo results.
pub const HISTOGRAM_BINS: usize = 50;

const PRODUCT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountPlan {
    /// Desired success confidence `P(A ∩ B)`.
    pub gamma: Probability,
    pub d_phase2: f64,
    pub d_phase3: f64,
}

impl DiscountPlan {
    pub fn validate(&self) -> Result<()> {
        for (name, d) in [("d_phase2", self.d_phase2), ("d_phase3", self.d_phase3)] {
            if !(0.0..0.5).contains(&d) {
                return Err(Error::domain(format!("{name} = {d} must lie in [0, 0.5)")));
            }
        }
        let product = (self.d_phase2 + 0.5) * (self.d_phase3 + 0.5);
        if (product - self.gamma.value()).abs() > PRODUCT_TOL {
            return Err(Error::domain(format!(
                "gamma = {} differs from (d_phase2 + 0.5)(d_phase3 + 0.5) = {product}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// The discount the caller fixes when completing a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnownDiscount {
    Phase2(f64),
    Phase3(f64),
}

/// Solves `γ = (d₂ + 0.5)(d₃ + 0.5)` for the discount not supplied.
pub fn complete_discount_plan(gamma: f64, known: KnownDiscount) -> Result<DiscountPlan> {
    if !(0.25..1.0).contains(&gamma) {
        return Err(Error::domain(format!("gamma = {gamma} must lie in [0.25, 1)")));
    }
    let k = match known {
        KnownDiscount::Phase2(d) | KnownDiscount::Phase3(d) => d,
    };
    if !(0.0..0.5).contains(&k) {
        return Err(Error::domain(format!("known discount {k} must lie in [0, 0.5)")));
    }
    let mut other = gamma / (k + 0.5) - 0.5;
    if other < 0.0 && other > -PRODUCT_TOL {
        other = 0.0;
    }
    if !(0.0..0.5).contains(&other) {
        return Err(Error::Infeasible(format!(
            "gamma = {gamma} with known discount {k} needs the other discount to be {other}, outside [0, 0.5)"
        )));
    }
    let (d_phase2, d_phase3) = match known {
        KnownDiscount::Phase2(d) => (d, other),
        KnownDiscount::Phase3(d) => (other, d),
    };
    Ok(DiscountPlan {
        gamma: Probability::new(gamma)?,
        d_phase2,
        d_phase3,
    })
}

/// Conservative lower confidence limit for the feeder study's efficacy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidentEfficacy {
    pub value: f64,
    pub level: Probability,
    pub df: u64,
    pub se_pooled: f64,
}

/// Confident Efficacy `θ̄ − t_{d₂+0.5, n_rx+n_c−2}·√(se_rx² + se_c²)`.
///
/// `theta_bar` is the raw Rx − C difference; it is flipped onto the benefit
/// scale for `LowerIsBetter` outcomes before discounting.
pub fn confident_efficacy(
    theta_bar: f64,
    se_rx: f64,
    se_c: f64,
    n_rx: u64,
    n_c: u64,
    d_phase2: f64,
    direction: Direction,
) -> Result<ConfidentEfficacy> {
    if !theta_bar.is_finite() {
        return Err(Error::domain("effect estimate must be finite"));
    }
    if !(se_rx >= 0.0) || !(se_c >= 0.0) || !se_rx.is_finite() || !se_c.is_finite() {
        return Err(Error::domain("standard errors must be non-negative"));
    }
    if n_rx + n_c <= 2 {
        return Err(Error::domain("need n_rx + n_c > 2"));
    }
    if !(0.0..0.5).contains(&d_phase2) {
        return Err(Error::domain(format!("d_phase2 = {d_phase2} must lie in [0, 0.5)")));
    }
    let df = n_rx + n_c - 2;
    let level = d_phase2 + 0.5;
    let se_pooled = se_rx.hypot(se_c);
    let t = student_t_quantile(level, df)?;
    Ok(ConfidentEfficacy {
        value: direction.canonicalize(theta_bar) - t * se_pooled,
        level: Probability::new(level)?,
        df,
        se_pooled,
    })
}

fn default_reps() -> u64 {
    10_000
}

/// Planned confirmatory study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase3Design {
    pub n_rx: u64,
    pub n_c: u64,
    /// SD of change. Derived from the ETZ components when assessing a
    /// scenario, so it may be omitted in scenario files.
    #[serde(default)]
    pub sigma_pooled: f64,
    #[serde(default = "default_reps")]
    pub reps: u64,
    pub seed: u64,
}

impl Phase3Design {
    pub fn validate(&self) -> Result<()> {
        if self.n_rx < 2 || self.n_c < 2 {
            return Err(Error::domain("n_rx and n_c must each be at least 2"));
        }
        if !(self.sigma_pooled >= 0.0) || !self.sigma_pooled.is_finite() {
            return Err(Error::domain(format!("sigma_pooled = {} must be non-negative", self.sigma_pooled)));
        }
        if self.reps < 1000 {
            return Err(Error::domain(format!("reps = {} must be at least 1000", self.reps)));
        }
        Ok(())
    }

    /// Standard error of the confirmatory effect estimate.
    pub fn effect_se(&self) -> f64 {
        self.sigma_pooled * (1.0 / self.n_rx as f64 + 1.0 / self.n_c as f64).sqrt()
    }
}

fn check_d3(d_phase3: f64) -> Result<()> {
    if (0.0..0.5).contains(&d_phase3) {
        Ok(())
    } else {
        Err(Error::domain(format!("d_phase3 = {d_phase3} must lie in [0, 0.5)")))
    }
}

/// Closed-form CBQ: `L − Φ⁻¹(d₃ + 0.5)·σ·√(1/n_rx + 1/n_c)`.
pub fn cbq_closed_form(l: &ConfidentEfficacy, design: &Phase3Design, d_phase3: f64) -> Result<f64> {
    check_d3(d_phase3)?;
    if design.n_rx < 1 || design.n_c < 1 {
        return Err(Error::domain("Phase 3 arms must be non-empty"));
    }
    Ok(l.value - std_normal_quantile(d_phase3 + 0.5)? * design.effect_se())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCbq {
    pub cbq: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Draws of the replicated confirmatory estimate, in replication order.
///
/// Replication `i` uses its own stream `(seed, i)`, so the output does not
/// depend on how rayon schedules the work.
pub fn replicate_phase3_estimates(l: &ConfidentEfficacy, design: &Phase3Design) -> Vec<f64> {
    let se = design.effect_se();
    (0..design.reps)
        .into_par_iter()
        .map(|i| {
            if se == 0.0 {
                l.value
            } else {
                l.value + se * RngStream::new(design.seed, i).standard_normal()
            }
        })
        .collect()
}

/// Nearest-rank lower quantile of sorted data.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Equal-width histogram over `[min, max]` of the data.
pub fn histogram(sorted: &[f64], bins: usize) -> Vec<HistogramBin> {
    if sorted.is_empty() || bins == 0 {
        return Vec::new();
    }
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    if min == max {
        return vec![HistogramBin {
            lo: min,
            hi: max,
            count: sorted.len() as u64,
        }];
    }
    let width = (max - min) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in sorted {
        let idx = (((x - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lo: min + i as f64 * width,
            hi: if i + 1 == bins { max } else { min + (i + 1) as f64 * width },
            count,
        })
        .collect()
}

/// Monte-Carlo CBQ: replicate the confirmatory estimate `reps` times and
/// take the lower `1 − (d₃ + 0.5)` nearest-rank quantile.
pub fn cbq_monte_carlo(l: &ConfidentEfficacy, design: &Phase3Design, d_phase3: f64) -> Result<MonteCarloCbq> {
    check_d3(d_phase3)?;
    if design.reps == 0 {
        return Err(Error::domain("at least one replication is required"));
    }
    let mut draws = replicate_phase3_estimates(l, design);
    draws.sort_by(f64::total_cmp);
    Ok(MonteCarloCbq {
        cbq: nearest_rank(&draws, 1.0 - (d_phase3 + 0.5)),
        histogram: histogram(&draws, HISTOGRAM_BINS),
    })
}

/// Smallest per-arm Rx sample size giving a strictly positive CBQ, with the
/// control arm at `round(allocation_ratio · n)`.
pub fn min_n_for_positive_cbq(
    l: &ConfidentEfficacy,
    sigma_pooled: f64,
    d_phase3: f64,
    allocation_ratio: f64,
) -> Result<u64> {
    check_d3(d_phase3)?;
    if !(allocation_ratio > 0.0) || !allocation_ratio.is_finite() {
        return Err(Error::domain("allocation ratio must be positive"));
    }
    if !(sigma_pooled >= 0.0) {
        return Err(Error::domain("sigma_pooled must be non-negative"));
    }
    if !(l.value > 0.0) {
        return Err(Error::Infeasible(format!(
            "Confident Efficacy {} is not positive; no sample size yields a positive CBQ",
            l.value
        )));
    }
    let z = std_normal_quantile(d_phase3 + 0.5)?;
    let control = |n: u64| ((allocation_ratio * n as f64).round() as u64).max(2);
    let cbq_at = |n: u64| {
        let se = sigma_pooled * (1.0 / n as f64 + 1.0 / control(n) as f64).sqrt();
        l.value - z * se
    };
    let analytic = (z * sigma_pooled / l.value).powi(2) * (1.0 + 1.0 / allocation_ratio);
    if !analytic.is_finite() || analytic > u64::MAX as f64 / 4.0 {
        return Err(Error::Infeasible("required sample size overflows".into()));
    }
    let mut n = (analytic.ceil() as u64).max(2);
    // Rounding of the control arm can move the exact threshold by a patient.
    while cbq_at(n) <= 0.0 {
        n += 1;
    }
    while n > 2 && cbq_at(n - 1) > 0.0 {
        n -= 1;
    }
    Ok(n)
}

/// Conventional per-arm sample size `2(z_{1−α/2} + z_{1−β})²(σ/Δ)²`.
pub fn classical_sample_size(alpha: f64, beta: f64, sigma: f64, delta: f64) -> Result<u64> {
    if !(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain("alpha and beta must lie in (0, 1)"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain("sigma must be positive"));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::domain("delta must be non-zero"));
    }
    let z = std_normal_quantile(1.0 - alpha / 2.0)? + std_normal_quantile(1.0 - beta)?;
    let n = 2.0 * z * z * (sigma / delta).powi(2);
    Ok((n - 1e-9 * n.max(1.0)).ceil().max(1.0) as u64)
}

/// Everything computed while assessing a transition, for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub outcome_name: String,
    /// Feeder effect estimate on the benefit scale.
    pub efficacy_estimate: f64,
    pub etz: EtzComponents,
    pub confident_efficacy: ConfidentEfficacy,
    pub cbq: f64,
    pub cbq_monte_carlo: f64,
    pub transition_recommended: bool,
    pub plan: DiscountPlan,
    pub design: Phase3Design,
    pub quantile_histogram: Vec<HistogramBin>,
}

/// End-to-end transition assessment: Confident Efficacy from the feeder
/// summary, closed-form and Monte-Carlo CBQ for the planned design, and the
/// recommendation (`cbq > 0`).
///
/// The design's `sigma_pooled` is replaced by the change SD implied by `etz`.
pub fn transition_assessment(
    study: &StudySummary,
    etz: &EtzComponents,
    plan: &DiscountPlan,
    design: &Phase3Design,
) -> Result<DecisionReport> {
    study.validate()?;
    etz.validate()?;
    plan.validate()?;
    let design = Phase3Design {
        sigma_pooled: pooled_change_sd(etz),
        ..*design
    };
    design.validate()?;

    let l = confident_efficacy(
        study.rx.lsmean_change - study.control.lsmean_change,
        study.rx.se_change,
        study.control.se_change,
        study.rx.n_change,
        study.control.n_change,
        plan.d_phase2,
        study.direction,
    )?;
    let cbq = cbq_closed_form(&l, &design, plan.d_phase3)?;
    let mc = cbq_monte_carlo(&l, &design, plan.d_phase3)?;
    Ok(DecisionReport {
        outcome_name: study.outcome_name.clone(),
        efficacy_estimate: study.efficacy_estimate(),
        etz: *etz,
        confident_efficacy: l,
        cbq,
        cbq_monte_carlo: mc.cbq,
        transition_recommended: cbq > 0.0,
        plan: *plan,
        design,
        quantile_histogram: mc.histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn efficacy(value: f64) -> ConfidentEfficacy {
        ConfidentEfficacy {
            value,
            level: Probability::new(0.95).unwrap(),
            df: 1959,
            se_pooled: 0.45,
        }
    }

    fn design(n: u64, sigma: f64) -> Phase3Design {
        Phase3Design {
            n_rx: n,
            n_c: n,
            sigma_pooled: sigma,
            reps: 10_000,
            seed: 7,
        }
    }

    #[test]
    fn discount_examples() {
        let p = complete_discount_plan(0.80, KnownDiscount::Phase2(0.45)).unwrap();
        assert!((p.d_phase3 - 0.3421).abs() < 1e-4);
        assert!((p.d_phase3 - 0.342_105_263_157_894_8).abs() < 1e-12);
        let p = complete_discount_plan(0.25, KnownDiscount::Phase2(0.0)).unwrap();
        assert_eq!(p.d_phase3, 0.0);
        let p = complete_discount_plan(0.76, KnownDiscount::Phase2(0.45)).unwrap();
        assert!((p.d_phase3 - 0.30).abs() < 1e-12);
        let p = complete_discount_plan(0.76, KnownDiscount::Phase3(0.30)).unwrap();
        assert!((p.d_phase2 - 0.45).abs() < 1e-12);
        p.validate().unwrap();
    }

    #[test]
    fn discount_infeasible() {
        // 0.9 / 0.5 - 0.5 = 1.3
        assert!(matches!(
            complete_discount_plan(0.9, KnownDiscount::Phase2(0.0)),
            Err(Error::Infeasible(_))
        ));
        // 0.3 / 0.99 - 0.5 < 0
        assert!(matches!(
            complete_discount_plan(0.3, KnownDiscount::Phase2(0.49)),
            Err(Error::Infeasible(_))
        ));
        assert!(complete_discount_plan(1.0, KnownDiscount::Phase2(0.45)).is_err());
        assert!(complete_discount_plan(0.2, KnownDiscount::Phase2(0.0)).is_err());
    }

    #[test]
    fn confident_efficacy_worked_example() {
        let l = confident_efficacy(1.0, 0.32, 0.32, 981, 980, 0.45, Direction::HigherIsBetter).unwrap();
        assert_eq!(l.df, 1959);
        assert!((l.se_pooled - 0.452_548_339_959_390_4).abs() < 1e-12);
        assert!((l.value - 0.255_272_048_397_786_6).abs() < 1e-8, "{}", l.value);
        assert!((l.value - 0.26).abs() < 0.01);
    }

    #[test]
    fn confident_efficacy_edge_cases() {
        let l = confident_efficacy(1.0, 0.32, 0.32, 981, 980, 0.0, Direction::HigherIsBetter).unwrap();
        assert_eq!(l.value, 1.0);
        let l = confident_efficacy(1.0, 0.0, 0.0, 981, 980, 0.45, Direction::HigherIsBetter).unwrap();
        assert_eq!(l.value, 1.0);
        // Lower-is-better: a negative raw difference is a benefit.
        let l = confident_efficacy(-1.0, 0.32, 0.32, 981, 980, 0.45, Direction::LowerIsBetter).unwrap();
        assert!((l.value - 0.255_272_048_397_786_6).abs() < 1e-8);
        assert!(confident_efficacy(1.0, -0.1, 0.3, 10, 10, 0.4, Direction::HigherIsBetter).is_err());
        assert!(confident_efficacy(1.0, 0.1, 0.3, 1, 1, 0.4, Direction::HigherIsBetter).is_err());
        assert!(confident_efficacy(1.0, 0.1, 0.3, 10, 10, 0.5, Direction::HigherIsBetter).is_err());
    }

    #[test]
    fn closed_form_worked_example() {
        let sigma = 92.365f64.sqrt();
        let cbq = cbq_closed_form(&efficacy(0.26), &design(1000, sigma), 0.30).unwrap();
        assert!((cbq - (-0.101_730_725_190_618_38)).abs() < 1e-9, "{cbq}");
        let cbq = cbq_closed_form(&efficacy(0.26), &design(2000, sigma), 0.30).unwrap();
        assert!(cbq > 0.0);
        assert!((cbq - 0.004_217_751_254_186_275).abs() < 1e-9);
        assert_eq!(cbq_closed_form(&efficacy(0.26), &design(1000, sigma), 0.0).unwrap(), 0.26);
        let huge = cbq_closed_form(&efficacy(0.26), &design(1_000_000_000, sigma), 0.30).unwrap();
        assert!((huge - 0.26).abs() < 1e-3);
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let sigma = 92.365f64.sqrt();
        let mut d = design(1000, sigma);
        d.reps = 1_000_000;
        let mc = cbq_monte_carlo(&efficacy(0.26), &d, 0.30).unwrap();
        let cf = cbq_closed_form(&efficacy(0.26), &d, 0.30).unwrap();
        // Quantile MC-SE: √(q(1−q)/n)/φ(z_q) · se.
        let q: f64 = 0.2;
        let zq = std_normal_quantile(q).unwrap();
        let mcse = (q * (1.0 - q) / d.reps as f64).sqrt() / crate::numerics::std_normal_pdf(zq) * d.effect_se();
        assert!((mc.cbq - cf).abs() < 3.0 * mcse, "{} vs {cf}", mc.cbq);
        assert!((mc.cbq + 0.10).abs() < 0.01);
        assert_eq!(mc.histogram.len(), HISTOGRAM_BINS);
        assert_eq!(mc.histogram.iter().map(|b| b.count).sum::<u64>(), d.reps);
    }

    #[test]
    fn monte_carlo_degenerate_and_deterministic() {
        let mc = cbq_monte_carlo(&efficacy(0.26), &design(1000, 0.0), 0.30).unwrap();
        assert_eq!(mc.cbq, 0.26);
        assert_eq!(mc.histogram.len(), 1);
        let a = cbq_monte_carlo(&efficacy(0.26), &design(1000, 9.6), 0.30).unwrap();
        let b = cbq_monte_carlo(&efficacy(0.26), &design(1000, 9.6), 0.30).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_independent_of_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| cbq_monte_carlo(&efficacy(0.26), &design(1000, 9.6), 0.30).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one.cbq.to_bits(), run(3).cbq.to_bits());
    }

    #[test]
    fn min_n_examples() {
        let n = min_n_for_positive_cbq(&efficacy(0.26), 9.611, 0.30, 1.0).unwrap();
        assert_eq!(n, 1936);
        let at = |n| cbq_closed_form(&efficacy(0.26), &design(n, 9.611), 0.30).unwrap();
        assert!(at(1936) > 0.0 && at(1935) < 0.0);

        // L exactly at the n = 1 threshold: floor of two patients per arm.
        let z = std_normal_quantile(0.8).unwrap();
        let l = efficacy(9.611 * z * 2f64.sqrt());
        assert_eq!(min_n_for_positive_cbq(&l, 9.611, 0.30, 1.0).unwrap(), 2);

        assert!(matches!(
            min_n_for_positive_cbq(&efficacy(-0.1), 9.611, 0.30, 1.0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            min_n_for_positive_cbq(&efficacy(0.0), 9.611, 0.30, 1.0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn min_n_unequal_allocation() {
        let l = efficacy(0.26);
        let n = min_n_for_positive_cbq(&l, 9.611, 0.30, 2.0).unwrap();
        let z = std_normal_quantile(0.8).unwrap();
        let cbq = |n: u64| {
            let nc = (2.0 * n as f64).round();
            0.26 - z * 9.611 * (1.0 / n as f64 + 1.0 / nc).sqrt()
        };
        assert!(cbq(n) > 0.0 && cbq(n - 1) <= 0.0);
    }

    #[test]
    fn classical_examples() {
        assert_eq!(classical_sample_size(0.05, 0.1, 1.0, 1.0).unwrap(), 22);
        assert_eq!(classical_sample_size(0.05, 0.5, 1.0, 1.0).unwrap(), 8);
        assert_eq!(classical_sample_size(0.05, 0.1, 10.0, -10.0).unwrap(), 22);
        assert!(classical_sample_size(0.05, 0.1, 1.0, 0.0).is_err());
        // Doubling σ/Δ quadruples the unrounded size.
        let raw = |r: f64| {
            let z = std_normal_quantile(0.975).unwrap() + std_normal_quantile(0.9).unwrap();
            2.0 * z * z * r * r
        };
        assert!((raw(2.0) / raw(1.0) - 4.0).abs() < 1e-12);
        assert_eq!(classical_sample_size(0.05, 0.1, 2.0, 1.0).unwrap(), raw(2.0).ceil() as u64);
    }

    #[test]
    fn design_validation() {
        let mut d = design(1000, 9.6);
        d.reps = 999;
        assert!(d.validate().is_err());
        let d = design(1, 9.6);
        assert!(d.validate().is_err());
        let parsed: Phase3Design = serde_json::from_str(r#"{"n_rx": 10, "n_c": 10, "seed": 1}"#).unwrap();
        assert_eq!(parsed.reps, 10_000);
    }

    #[test]
    fn nearest_rank_quantile() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(nearest_rank(&xs, 0.2), 2.0);
        assert_eq!(nearest_rank(&xs, 0.0), 1.0);
        assert_eq!(nearest_rank(&xs, 1.0), 10.0);
        assert_eq!(nearest_rank(&xs, 0.21), 3.0);
    }

    proptest! {
        #[test]
        fn plan_product_invariant(gamma in 0.26..0.99f64, known in 0.0..0.4999f64, phase2 in any::<bool>()) {
            let k = if phase2 { KnownDiscount::Phase2(known) } else { KnownDiscount::Phase3(known) };
            if let Ok(plan) = complete_discount_plan(gamma, k) {
                let product = (plan.d_phase2 + 0.5) * (plan.d_phase3 + 0.5);
                prop_assert!((product - gamma).abs() < 1e-9);
                prop_assert!(plan.validate().is_ok());
            }
        }

        #[test]
        fn closed_form_monotone(n in 10u64..100_000, sigma in 0.1..50.0f64, d3 in 0.0..0.45f64) {
            let l = efficacy(0.3);
            let base = cbq_closed_form(&l, &design(n, sigma), d3).unwrap();
            let more_rx = Phase3Design { n_rx: n + 1, ..design(n, sigma) };
            let more_c = Phase3Design { n_c: n + 1, ..design(n, sigma) };
            prop_assert!(cbq_closed_form(&l, &more_rx, d3).unwrap() > base);
            prop_assert!(cbq_closed_form(&l, &more_c, d3).unwrap() > base);
            prop_assert!(cbq_closed_form(&l, &design(n, sigma * 1.01), d3 + 0.001).unwrap() < base);
            if d3 > 0.0 {
                prop_assert!(cbq_closed_form(&l, &design(n, sigma), d3 + 0.01).unwrap() < base);
            }
        }

        #[test]
        fn confident_efficacy_decreases_with_d2(d2 in 0.0..0.48f64) {
            let a = confident_efficacy(1.0, 0.3, 0.3, 100, 100, d2, Direction::HigherIsBetter).unwrap();
            let b = confident_efficacy(1.0, 0.3, 0.3, 100, 100, d2 + 0.01, Direction::HigherIsBetter).unwrap();
            prop_assert!(b.value < a.value);
        }
    }
}
