//! Directed confidence sets over the two-endpoint parameter space.
//!
//! The plane of true efficacies `(θ₁, θ₂)` (positive = benefit) is
//! partitioned into disjoint regions, and each region is tested at level α
//! with no multiplicity adjustment between regions:
//!
//! * the three quadrants `NegNeg`, `PosNeg`, `NegPos` answer whether to
//!   transition to a confirmatory study;
//! * inside the positive quadrant, the two cones `θ₂ − θ₁ > c_md` and
//!   `θ₂ − θ₁ < −c_md` and the band between them decide which endpoint to
//!   designate primary.
//!
//! The cone tests use a two-sided acceptance region whose upper edge grows
//! with `|θ_diff|`. Inverting it gives a one-sided interval
//! `[θ̂_diff − d, ∞)` where the allowance `d` solves
//!
//! ```text
//! Φ(d/σ) − Φ((−σ·z_{1−α/2} − (θ̂ − d))/σ) = 1 − α
//! ```
//!
//! and shrinks from `σ·z_{1−α/2}` (at `θ̂ = σ·z_{1−α/2}`) to `σ·z_{1−α}`
//! as `θ̂ → ∞`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bvn_cdf, solve_root, std_normal_cdf, std_normal_quantile, Probability};

/// A point estimate on the efficacy scale and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointEstimate {
    pub theta_hat: f64,
    pub sigma: f64,
}

impl EndpointEstimate {
    pub fn new(theta_hat: f64, sigma: f64) -> Result<Self> {
        let e = EndpointEstimate { theta_hat, sigma };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta_hat.is_finite() {
            return Err(Error::domain(format!("estimate {} is not finite", self.theta_hat)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::domain(format!("standard error {} must be positive", self.sigma)));
        }
        Ok(())
    }

    pub fn z_score(&self) -> f64 {
        self.theta_hat / self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub alpha: Probability,
    /// Clinically meaningful difference between endpoint efficacies.
    pub c_md: f64,
    /// Correlation between the two endpoint estimates.
    #[serde(default)]
    pub rho: f64,
}

impl PartitionConfig {
    pub fn new(alpha: f64, c_md: f64, rho: f64) -> Result<Self> {
        let cfg = PartitionConfig {
            alpha: Probability::new(alpha)?,
            c_md,
            rho,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.alpha.value();
        if !(a > 0.0 && a < 0.5) {
            return Err(Error::domain(format!("alpha = {a} must lie in (0, 0.5)")));
        }
        if !(self.c_md >= 0.0) || !self.c_md.is_finite() {
            return Err(Error::domain(format!("c_md = {} must be non-negative", self.c_md)));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::domain(format!("rho = {} outside [-1, 1]", self.rho)));
        }
        Ok(())
    }
}

/// Result of inverting the directed acceptance regions for `θ_diff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DirectedInterval {
    /// `[lower, ∞)` for `θ_diff`, or for `−θ_diff` when `negated` is set
    /// (i.e. `θ_diff ∈ (−∞, −lower]`).
    LowerBounded { lower: f64, negated: bool },
    /// No informative bound: both cones remain in the confidence set.
    WholeLine,
}

impl DirectedInterval {
    /// The bound expressed on `θ_diff` itself: `(lower, upper)`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            DirectedInterval::LowerBounded { lower, negated: false } => (lower, f64::INFINITY),
            DirectedInterval::LowerBounded { lower, negated: true } => (f64::NEG_INFINITY, -lower),
            DirectedInterval::WholeLine => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

fn two_sided_z(alpha: f64) -> Result<f64> {
    std_normal_quantile(1.0 - alpha / 2.0)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha = {alpha} must lie in (0, 0.5)")))
    }
}

/// Allowance `d` for an observed `|θ̂_diff|` that clears `σ·z_{1−α/2}`.
///
/// Returns [`Error::NotApplicable`] below the threshold; callers should
/// report the whole line in that case.
pub fn allowance_d(theta_hat_abs: f64, sigma: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("sigma = {sigma} must be positive")));
    }
    let z2 = two_sided_z(alpha)?;
    let z1 = std_normal_quantile(1.0 - alpha)?;
    let threshold = sigma * z2;
    if !(theta_hat_abs >= threshold) {
        return Err(Error::NotApplicable {
            theta_hat_abs,
            threshold,
        });
    }
    if theta_hat_abs == threshold {
        return Ok(threshold);
    }
    let f = |d: f64| {
        std_normal_cdf(d / sigma) - std_normal_cdf((-threshold - (theta_hat_abs - d)) / sigma) - (1.0 - alpha)
    };
    // f(σ·z_{1−α}) < 0 always; f(threshold) = α/2 − Φ(−θ̂/σ) ≥ 0 in exact
    // arithmetic, with a tangency at the boundary that rounding can push
    // just below zero.
    let lo = sigma * z1;
    if f(threshold) <= 0.0 {
        return Ok(threshold);
    }
    let d = solve_root(f, lo, threshold, 1e-10 * sigma.max(1e-300))?;
    Ok(d.clamp(sigma * z1, threshold))
}

/// Upper edge `ē(θ)` of the directed acceptance region for `θ_diff = θ ≥ 0`:
/// `P(−σ·z_{1−α/2} ≤ θ̂ ≤ ē(θ)) = 1 − α` under `θ̂ ~ N(θ, σ²)`.
pub fn acceptance_upper_edge(theta: f64, sigma: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(theta >= 0.0) {
        return Err(Error::domain("acceptance edge is defined for θ ≥ 0; mirror for the bottom cone"));
    }
    let z2 = two_sided_z(alpha)?;
    let mass_below = std_normal_cdf(-z2 - theta / sigma);
    let p = (1.0 - alpha + mass_below).min(1.0 - f64::EPSILON);
    Ok(theta + sigma * std_normal_quantile(p)?)
}

/// Directed confidence interval for the difference between endpoints.
pub fn directed_diff_interval(diff: &EndpointEstimate, alpha: f64) -> Result<DirectedInterval> {
    diff.validate()?;
    check_alpha(alpha)?;
    let abs = diff.theta_hat.abs();
    if abs <= diff.sigma * two_sided_z(alpha)? {
        return Ok(DirectedInterval::WholeLine);
    }
    let d = allowance_d(abs, diff.sigma, alpha)?;
    Ok(DirectedInterval::LowerBounded {
        lower: abs - d,
        negated: diff.theta_hat < 0.0,
    })
}

/// Common critical value `b` for the negative-negative quadrant test:
/// `P(max(Z₁, Z₂) > b) = α` for standard normals with correlation `rho`.
///
/// `b` runs from `Φ⁻¹(√(1−α))` at `ρ = 0` down to `z_{1−α}` at `ρ = 1`.
/// Negative correlations are rejected.
pub fn joint_critical_bound(rho: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!(
            "joint critical bound needs rho in [0, 1], got {rho}"
        )));
    }
    let lo = std_normal_quantile(1.0 - alpha)?;
    let hi = std_normal_quantile((1.0 - alpha).sqrt())?;
    if rho == 1.0 {
        return Ok(lo);
    }
    if rho == 0.0 {
        return Ok(hi);
    }
    let mut err = None;
    let b = solve_root(
        |b| match bvn_cdf(b, b, rho) {
            Ok(p) => 1.0 - p - alpha,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        lo - 1e-9,
        hi + 1e-9,
        1e-12,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(b?.clamp(lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    /// `θ₁ ≤ 0` and `θ₂ ≤ 0`.
    NegNeg,
    /// `θ₁ > 0`, `θ₂ ≤ 0`.
    PosNeg,
    /// `θ₁ ≤ 0`, `θ₂ > 0`.
    NegPos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionDecision {
    pub eliminated_quadrants: Vec<Quadrant>,
    pub transition: bool,
    pub per_endpoint_lower: [f64; 2],
    /// Critical value used for the negative-negative quadrant.
    pub joint_bound: f64,
}

impl TransitionDecision {
    pub fn eliminated(&self, q: Quadrant) -> bool {
        self.eliminated_quadrants.contains(&q)
    }
}

/// Quadrant elimination for the transition question.
pub fn transition_decision(
    e1: &EndpointEstimate,
    e2: &EndpointEstimate,
    cfg: &PartitionConfig,
) -> Result<TransitionDecision> {
    e1.validate()?;
    e2.validate()?;
    cfg.validate()?;
    let alpha = cfg.alpha.value();
    let b = joint_critical_bound(cfg.rho, alpha)?;
    let z_single = std_normal_quantile(1.0 - alpha)?;
    let (z1, z2) = (e1.z_score(), e2.z_score());

    let mut eliminated = Vec::new();
    if z1.max(z2) > b {
        eliminated.push(Quadrant::NegNeg);
    }
    if z2 > z_single {
        eliminated.push(Quadrant::PosNeg);
    }
    if z1 > z_single {
        eliminated.push(Quadrant::NegPos);
    }
    let transition = eliminated.contains(&Quadrant::NegNeg)
        && (eliminated.contains(&Quadrant::PosNeg) || eliminated.contains(&Quadrant::NegPos));
    Ok(TransitionDecision {
        eliminated_quadrants: eliminated,
        transition,
        per_endpoint_lower: [e1.theta_hat - b * e1.sigma, e2.theta_hat - b * e2.sigma],
        joint_bound: b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum DesignationOutcome {
    Primary1,
    Primary2,
    Combine { avg_lower: f64 },
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignationDecision {
    pub outcome: DesignationOutcome,
    pub diff_interval: DirectedInterval,
}

/// One-sided level-α lower bound for the average efficacy `(θ₁ + θ₂)/2`.
pub fn combined_lower_bound(
    e1: &EndpointEstimate,
    e2: &EndpointEstimate,
    rho: f64,
    alpha: f64,
) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("rho = {rho} outside [-1, 1]")));
    }
    for e in [e1, e2] {
        if !e.theta_hat.is_finite() || !(e.sigma >= 0.0) {
            return Err(Error::domain("endpoint estimates must be finite with non-negative SE"));
        }
    }
    check_alpha(alpha)?;
    let avg = 0.5 * (e1.theta_hat + e2.theta_hat);
    let var = e1.sigma * e1.sigma + e2.sigma * e2.sigma + 2.0 * rho * e1.sigma * e2.sigma;
    let sigma_avg = 0.5 * var.max(0.0).sqrt();
    Ok(avg - std_normal_quantile(1.0 - alpha)? * sigma_avg)
}

/// Endpoint designation from already-formed difference and average
/// contrasts. Cone checks come first; anything short of clearing `c_md`
/// strictly falls through to `Combine`.
pub fn designate_from_contrasts(
    diff: &EndpointEstimate,
    avg: &EndpointEstimate,
    cfg: &PartitionConfig,
) -> Result<DesignationDecision> {
    cfg.validate()?;
    avg.validate()?;
    let alpha = cfg.alpha.value();
    let diff_interval = directed_diff_interval(diff, alpha)?;
    let outcome = match diff_interval {
        DirectedInterval::LowerBounded { lower, negated: false } if lower > cfg.c_md => {
            DesignationOutcome::Primary2
        }
        DirectedInterval::LowerBounded { lower, negated: true } if lower > cfg.c_md => {
            DesignationOutcome::Primary1
        }
        _ => DesignationOutcome::Combine {
            avg_lower: avg.theta_hat - std_normal_quantile(1.0 - alpha)? * avg.sigma,
        },
    };
    Ok(DesignationDecision { outcome, diff_interval })
}

/// Endpoint designation for two endpoint estimates.
///
/// Returns `Inconclusive` unless the transition test has established
/// efficacy on both endpoints.
pub fn designate_endpoint(
    e1: &EndpointEstimate,
    e2: &EndpointEstimate,
    cfg: &PartitionConfig,
) -> Result<DesignationDecision> {
    let td = transition_decision(e1, e2, cfg)?;
    let rho = cfg.rho;
    let var_diff = e1.sigma * e1.sigma + e2.sigma * e2.sigma - 2.0 * rho * e1.sigma * e2.sigma;
    if !(var_diff > 0.0) {
        return Err(Error::domain("difference of the endpoints has zero variance"));
    }
    let diff = EndpointEstimate::new(e2.theta_hat - e1.theta_hat, var_diff.sqrt())?;

    let both_positive = td.transition && td.eliminated(Quadrant::PosNeg) && td.eliminated(Quadrant::NegPos);
    if !both_positive {
        return Ok(DesignationDecision {
            outcome: DesignationOutcome::Inconclusive,
            diff_interval: directed_diff_interval(&diff, cfg.alpha.value())?,
        });
    }
    let var_avg = e1.sigma * e1.sigma + e2.sigma * e2.sigma + 2.0 * rho * e1.sigma * e2.sigma;
    let avg = EndpointEstimate::new(0.5 * (e1.theta_hat + e2.theta_hat), 0.5 * var_avg.max(1e-300).sqrt())?;
    designate_from_contrasts(&diff, &avg, cfg)
}
