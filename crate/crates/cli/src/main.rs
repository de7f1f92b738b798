//! `confirm`: batch driver for decomposition, transition assessment,
//! profile simulation and endpoint designation.
//!
//! Exit codes: 0 success (for `assess`, transition recommended), 1 `assess`
//! ran but does not recommend transition, 2 usage or input error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use confirmability::cbq::{complete_discount_plan, DecisionReport, KnownDiscount};
use confirmability::confset::{designate_endpoint, DesignationDecision, DesignationOutcome, DirectedInterval, EndpointEstimate, PartitionConfig};
use confirmability::etz::{decompose_etz, EtzComponents, VarianceTriple};
use confirmability::ingest::{parse_scenario, ScenarioRecord};
use confirmability::sim::{replicate_profiles, FixedEffects, SimConfig};

#[derive(Parser)]
#[command(name = "confirm", version, about = "Confirmability of promising trial results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose outcome variances into Var(Z), Var(E) and Var(Traj).
    Etz {
        #[arg(long, value_name = "V")]
        baseline_var: f64,
        #[arg(long, value_name = "V")]
        milestone_var: f64,
        #[arg(long, value_name = "V")]
        change_var: f64,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Assess a Phase 2 to Phase 3 transition for a scenario.
    Assess {
        #[arg(long, value_name = "FILE")]
        scenario: PathBuf,
        #[arg(long = "n3-rx", value_name = "N")]
        n3_rx: Option<u64>,
        #[arg(long = "n3-c", value_name = "N")]
        n3_c: Option<u64>,
        /// Desired success confidence; d3 is re-derived from it and d2.
        #[arg(long, value_name = "G")]
        gamma: Option<f64>,
        #[arg(long, value_name = "D")]
        d2: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Simulate replications of a scenario and write per-visit arm means.
    Simulate {
        #[arg(long, value_name = "FILE")]
        scenario: PathBuf,
        #[arg(long, value_name = "R")]
        reps: u64,
        #[arg(long, value_name = "S")]
        seed: u64,
        #[arg(long = "sd-e", value_name = "X")]
        sd_e: Option<f64>,
        #[arg(long = "sd-traj", value_name = "Y")]
        sd_traj: Option<f64>,
        #[arg(long = "sd-z", value_name = "Z")]
        sd_z: Option<f64>,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
    },
    /// Designate the primary endpoint from two endpoint estimates.
    Designate {
        #[arg(long, value_name = "EST,SE", value_parser = parse_estimate, allow_hyphen_values = true)]
        e1: EndpointEstimate,
        #[arg(long, value_name = "EST,SE", value_parser = parse_estimate, allow_hyphen_values = true)]
        e2: EndpointEstimate,
        #[arg(long, value_name = "R", default_value_t = 0.0, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, value_name = "A")]
        alpha: f64,
        /// Clinically meaningful difference between endpoint efficacies.
        #[arg(long = "cmd", value_name = "C")]
        c_md: f64,
        #[arg(long)]
        json: bool,
    },
}

fn parse_estimate(s: &str) -> Result<EndpointEstimate, String> {
    let (est, se) = s.split_once(',').ok_or("expected EST,SE")?;
    let est: f64 = est.trim().parse().map_err(|e| format!("estimate: {e}"))?;
    let se: f64 = se.trim().parse().map_err(|e| format!("standard error: {e}"))?;
    EndpointEstimate::new(est, se).map_err(|e| e.to_string())
}

type CliResult<T> = Result<T, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Etz {
            baseline_var,
            milestone_var,
            change_var,
            json,
        } => {
            let v = VarianceTriple::new(baseline_var, milestone_var, change_var).map_err(|e| e.to_string())?;
            let c = decompose_etz(&v).map_err(|e| e.to_string())?;
            print!("{}", if json { to_json(&c) } else { etz_table(&c) });
            Ok(ExitCode::SUCCESS)
        }
        Command::Assess {
            scenario,
            n3_rx,
            n3_c,
            gamma,
            d2,
            json,
        } => {
            let mut record = load_scenario(&scenario)?;
            if let Some(n) = n3_rx {
                record.design.n_rx = n;
            }
            if let Some(n) = n3_c {
                record.design.n_c = n;
            }
            if gamma.is_some() || d2.is_some() {
                let g = gamma.unwrap_or(record.plan.gamma.value());
                let d = d2.unwrap_or(record.plan.d_phase2);
                record.plan = complete_discount_plan(g, KnownDiscount::Phase2(d)).map_err(|e| e.to_string())?;
            }
            let report = record.assess().map_err(|e| e.to_string())?;
            print!("{}", if json { to_json(&report) } else { report_table(&report) });
            Ok(if report.transition_recommended {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Simulate {
            scenario,
            reps,
            seed,
            sd_e,
            sd_traj,
            sd_z,
            out,
        } => {
            let record = load_scenario(&scenario)?;
            let base = record.etz().map_err(|e| e.to_string())?;
            let etz = EtzComponents::from_sds(
                sd_z.unwrap_or(base.sd_z()),
                sd_e.unwrap_or(base.sd_e()),
                sd_traj.unwrap_or(base.sd_traj()),
            )
            .map_err(|e| e.to_string())?;
            let fx = FixedEffects::from_study(&record.study).map_err(|e| e.to_string())?;
            let cfg = SimConfig::from_study(&record.study, etz, seed, reps);
            write_profiles_csv(&fx, &cfg, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Designate {
            e1,
            e2,
            rho,
            alpha,
            c_md,
            json,
        } => {
            let cfg = PartitionConfig::new(alpha, c_md, rho).map_err(|e| e.to_string())?;
            let d = designate_endpoint(&e1, &e2, &cfg).map_err(|e| e.to_string())?;
            print!("{}", if json { to_json(&d) } else { designation_table(&d) });
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_scenario(path: &Path) -> CliResult<ScenarioRecord> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn etz_table(c: &EtzComponents) -> String {
    let mut s = String::new();
    writeln!(s, "{:<10} {:>10} {:>10} {:>10}", "", "Z", "E", "Traj").unwrap();
    writeln!(s, "{:<10} {:>10.3} {:>10.3} {:>10.3}", "Variance", c.var_z, c.var_e, c.var_traj).unwrap();
    writeln!(s, "{:<10} {:>10.3} {:>10.3} {:>10.3}", "SD", c.sd_z(), c.sd_e(), c.sd_traj()).unwrap();
    s
}

fn report_table(r: &DecisionReport) -> String {
    let mut s = String::new();
    let mut row = |k: &str, v: String| writeln!(s, "{k:<26} {v}").unwrap();
    row("outcome", r.outcome_name.clone());
    row("efficacy estimate", format!("{:.3}", r.efficacy_estimate));
    row(
        "ETZ variances (Z, E, Traj)",
        format!("{:.3}, {:.3}, {:.3}", r.etz.var_z, r.etz.var_e, r.etz.var_traj),
    );
    row("gamma", format!("{:.3}", r.plan.gamma.value()));
    row("d_phase2, d_phase3", format!("{:.3}, {:.3}", r.plan.d_phase2, r.plan.d_phase3));
    row(
        "confident efficacy",
        format!("{:.3} (level {:.3}, df {})", r.confident_efficacy.value, r.confident_efficacy.level.value(), r.confident_efficacy.df),
    );
    row("phase 3 n (rx, control)", format!("{}, {}", r.design.n_rx, r.design.n_c));
    row("sigma (change)", format!("{:.3}", r.design.sigma_pooled));
    row("CBQ (closed form)", format!("{:.3}", r.cbq));
    row(
        "CBQ (Monte Carlo)",
        format!("{:.3} ({} reps, seed {})", r.cbq_monte_carlo, r.design.reps, r.design.seed),
    );
    row(
        "transition",
        if r.transition_recommended { "recommended" } else { "not recommended" }.into(),
    );
    s
}

fn designation_table(d: &DesignationDecision) -> String {
    let verdict = match d.outcome {
        DesignationOutcome::Primary1 => "Primary1".to_string(),
        DesignationOutcome::Primary2 => "Primary2".to_string(),
        DesignationOutcome::Combine { avg_lower } => format!("Combine (average lower bound {avg_lower:.3})"),
        DesignationOutcome::Inconclusive => "Inconclusive".to_string(),
    };
    let interval = match d.diff_interval {
        DirectedInterval::LowerBounded { lower, negated: false } => format!("theta1 - theta2 >= {lower:.3}"),
        DirectedInterval::LowerBounded { lower, negated: true } => format!("theta2 - theta1 >= {lower:.3}"),
        DirectedInterval::WholeLine => "unbounded".to_string(),
    };
    format!("{:<14} {verdict}\n{:<14} {interval}\n", "verdict", "difference")
}

fn write_profiles_csv(fx: &FixedEffects, cfg: &SimConfig, out: &Path) -> CliResult<()> {
    cfg.validate().map_err(|e| e.to_string())?;
    let tables = replicate_profiles(fx, cfg).map_err(|e| e.to_string())?;
    let mut w = csv::Writer::from_path(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let io = |e: csv::Error| format!("{}: {e}", out.display());
    w.write_record(["rep", "week", "arm", "mean_y", "mean_change"]).map_err(io)?;
    for (rep, rows) in tables.iter().enumerate() {
        for r in rows {
            w.write_record([
                rep.to_string(),
                r.week.to_string(),
                r.arm.to_string(),
                r.mean_y.to_string(),
                r.mean_change.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| format!("{}: {e}", out.display()))?;
    Ok(())
}
