//! Study-summary documents and named what-if scenarios.
//!
//! Documents are JSON or TOML key-value trees (JSON when the first
//! non-blank character is `{`). Both are read into one tree and walked by
//! hand so that every error names the offending field path.

mod store;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::cbq::{transition_assessment, DecisionReport, DiscountPlan, Phase3Design};
use crate::error::{Error, Result};
use crate::etz::{change_variance_from_se, decompose_etz, ArmSummary, Direction, EtzComponents, StudySummary, VarianceTriple};

pub use store::ScenarioStore;

/// Version of the study-summary field set understood by this crate.
pub const SCHEMA_VERSION: u64 = 1;

/// Reads a JSON or TOML document into a generic tree.
pub fn parse_document(text: &str) -> Result<Value> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::parse("", format!("invalid JSON: {e}")))
    } else {
        toml::from_str(text).map_err(|e| Error::parse("", format!("invalid TOML: {e}")))
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_owned()
    } else {
        format!("{prefix}.{key}")
    }
}

/// A JSON object being consumed field by field.
struct Fields<'a> {
    path: String,
    map: &'a Map<String, Value>,
}

impl<'a> Fields<'a> {
    fn new(value: &'a Value, path: String) -> Result<Self> {
        match value {
            Value::Object(map) => Ok(Fields { path, map }),
            other => Err(Error::parse(path, format!("expected a table, found {}", kind(other)))),
        }
    }

    fn at(&self, key: &str) -> String {
        join(&self.path, key)
    }

    fn get(&self, key: &str) -> Result<&'a Value> {
        self.map
            .get(key)
            .ok_or_else(|| Error::parse(self.at(key), "missing field"))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key)?;
        v.as_f64()
            .filter(|_| v.is_number())
            .ok_or_else(|| Error::parse(self.at(key), format!("expected a number, found {}", kind(v))))
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(_) => self.f64(key).map(Some),
        }
    }

    fn u64(&self, key: &str) -> Result<u64> {
        let v = self.get(key)?;
        v.as_u64()
            .ok_or_else(|| Error::parse(self.at(key), format!("expected a non-negative integer, found {}", kind(v))))
    }

    fn opt_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(_) => self.u64(key).map(Some),
        }
    }

    fn str(&self, key: &str) -> Result<&'a str> {
        let v = self.get(key)?;
        v.as_str()
            .ok_or_else(|| Error::parse(self.at(key), format!("expected a string, found {}", kind(v))))
    }

    fn f64_array(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.get(key)?;
        let items = v
            .as_array()
            .ok_or_else(|| Error::parse(self.at(key), format!("expected an array, found {}", kind(v))))?;
        items
            .iter()
            .enumerate()
            .map(|(i, x)| {
                x.as_f64()
                    .ok_or_else(|| Error::parse(format!("{}[{i}]", self.at(key)), "expected a number"))
            })
            .collect()
    }

    fn table(&self, key: &str) -> Result<Fields<'a>> {
        Fields::new(self.get(key)?, self.at(key))
    }

    fn deny_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::parse(self.at(k), "unknown field")),
            None => Ok(()),
        }
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "a table",
    }
}

/// Re-labels a validation failure with the path of the field it names.
/// Validation messages start with the field name.
fn at_field(prefix: &str, e: Error) -> Error {
    match e {
        Error::Domain(msg) => {
            let field = msg.split_whitespace().next().unwrap_or_default();
            Error::parse(join(prefix, field), msg)
        }
        other => other,
    }
}

const ARM_FIELDS: [&str; 9] = [
    "n_baseline",
    "mean_baseline",
    "sd_baseline",
    "n_milestone",
    "mean_milestone",
    "sd_milestone",
    "n_change",
    "lsmean_change",
    "se_change",
];

fn arm_from_fields(f: &Fields) -> Result<ArmSummary> {
    f.deny_unknown(&ARM_FIELDS)?;
    let n_baseline = f.u64("n_baseline")?;
    let n_milestone = f.u64("n_milestone")?;
    let arm = ArmSummary {
        n_baseline,
        mean_baseline: f.f64("mean_baseline")?,
        sd_baseline: f.f64("sd_baseline")?,
        n_milestone,
        mean_milestone: f.f64("mean_milestone")?,
        sd_milestone: f.f64("sd_milestone")?,
        n_change: f
            .opt_u64("n_change")?
            .unwrap_or_else(|| ArmSummary::default_n_change(n_baseline, n_milestone)),
        lsmean_change: f.f64("lsmean_change")?,
        se_change: f.f64("se_change")?,
    };
    arm.validate().map_err(|e| at_field(&f.path, e))?;
    Ok(arm)
}

fn parse_direction(f: &Fields) -> Result<Direction> {
    match f.str("direction")? {
        "HigherIsBetter" | "higher_is_better" => Ok(Direction::HigherIsBetter),
        "LowerIsBetter" | "lower_is_better" => Ok(Direction::LowerIsBetter),
        other => Err(Error::parse(
            f.at("direction"),
            format!("expected HigherIsBetter or LowerIsBetter, found `{other}`"),
        )),
    }
}

/// Parses a study summary from a tree, reporting errors under `prefix`.
pub fn study_from_value(value: &Value, prefix: &str) -> Result<StudySummary> {
    let f = Fields::new(value, prefix.to_owned())?;
    f.deny_unknown(&[
        "schema_version",
        "outcome_name",
        "direction",
        "visit_weeks",
        "milestone_week",
        "arms",
        "published_change_variance",
    ])?;
    let version = f.u64("schema_version")?;
    if version != SCHEMA_VERSION {
        return Err(Error::parse(
            f.at("schema_version"),
            format!("unsupported schema version {version}; expected {SCHEMA_VERSION}"),
        ));
    }
    let arms = f.table("arms")?;
    arms.deny_unknown(&["rx", "control"])?;
    let study = StudySummary {
        outcome_name: f.str("outcome_name")?.to_owned(),
        direction: parse_direction(&f)?,
        rx: arm_from_fields(&arms.table("rx")?)?,
        control: arm_from_fields(&arms.table("control")?)?,
        milestone_week: f.f64("milestone_week")?,
        visit_weeks: f.f64_array("visit_weeks")?,
        published_change_variance: f.opt_f64("published_change_variance")?,
    };
    study.validate().map_err(|e| at_field(prefix, e))?;
    Ok(study)
}

/// Parses and validates a study-summary document.
pub fn parse_study_summary(document: &str) -> Result<StudySummary> {
    study_from_value(&parse_document(document)?, "")
}

fn arm_to_value(a: &ArmSummary) -> Value {
    json!({
        "n_baseline": a.n_baseline,
        "mean_baseline": a.mean_baseline,
        "sd_baseline": a.sd_baseline,
        "n_milestone": a.n_milestone,
        "mean_milestone": a.mean_milestone,
        "sd_milestone": a.sd_milestone,
        "n_change": a.n_change,
        "lsmean_change": a.lsmean_change,
        "se_change": a.se_change,
    })
}

/// The document tree for a study summary, in the versioned schema.
pub fn study_to_value(s: &StudySummary) -> Value {
    let mut v = json!({
        "schema_version": SCHEMA_VERSION,
        "outcome_name": s.outcome_name,
        "direction": match s.direction {
            Direction::HigherIsBetter => "HigherIsBetter",
            Direction::LowerIsBetter => "LowerIsBetter",
        },
        "visit_weeks": s.visit_weeks,
        "milestone_week": s.milestone_week,
        "arms": { "rx": arm_to_value(&s.rx), "control": arm_to_value(&s.control) },
    });
    if let Some(var) = s.published_change_variance {
        v["published_change_variance"] = json!(var);
    }
    v
}

/// Pretty-printed JSON document for a study summary.
pub fn write_study_summary(s: &StudySummary) -> String {
    serde_json::to_string_pretty(&study_to_value(s)).expect("tree serialization cannot fail")
}

fn pooled_variance(parts: [(f64, u64); 2]) -> f64 {
    let dof: f64 = parts.iter().map(|&(_, n)| n as f64 - 1.0).sum();
    parts.iter().map(|&(sd, n)| (n as f64 - 1.0) * sd * sd).sum::<f64>() / dof
}

/// Variance triple needed for ETZ: arm-pooled baseline and milestone
/// variances, and the published change variance when present or else the
/// one implied by the LS-mean SEs.
pub fn study_to_variance_triple(s: &StudySummary) -> Result<VarianceTriple> {
    s.validate()?;
    let var_change = match s.published_change_variance {
        Some(v) => v,
        None => change_variance_from_se(&s.rx, &s.control)?,
    };
    VarianceTriple::new(
        pooled_variance([(s.rx.sd_baseline, s.rx.n_baseline), (s.control.sd_baseline, s.control.n_baseline)]),
        pooled_variance([(s.rx.sd_milestone, s.rx.n_milestone), (s.control.sd_milestone, s.control.n_milestone)]),
        var_change,
    )
}

/// A named what-if scenario: a feeder study plus a transition plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRecord {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub study: StudySummary,
    /// Components to use instead of decomposing the study's variances.
    pub etz_override: Option<EtzComponents>,
    pub plan: DiscountPlan,
    pub design: Phase3Design,
    pub notes: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    id: String,
    created_at: DateTime<Utc>,
    study: Value,
    #[serde(default)]
    etz_override: Option<EtzComponents>,
    plan: DiscountPlan,
    design: Phase3Design,
    #[serde(default)]
    notes: String,
}

#[derive(Serialize)]
struct ScenarioOut<'a> {
    id: &'a str,
    created_at: &'a DateTime<Utc>,
    notes: &'a str,
    study: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    etz_override: Option<&'a EtzComponents>,
    plan: &'a DiscountPlan,
    design: &'a Phase3Design,
}

/// Scenario ids double as file names, so they are restricted to ASCII
/// letters, digits, `-`, `_` and `.` (not leading).
pub fn validate_scenario_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::parse("id", format!("invalid scenario id `{id}`")))
    }
}

impl ScenarioRecord {
    pub fn validate(&self) -> Result<()> {
        validate_scenario_id(&self.id)?;
        self.study.validate().map_err(|e| at_field("study", e))?;
        if let Some(etz) = &self.etz_override {
            etz.validate()?;
        }
        self.plan.validate().map_err(|e| at_field("plan", e))?;
        self.design.validate().map_err(|e| at_field("design", e))
    }

    /// The override if present, else the decomposition of the study's
    /// variance triple.
    pub fn etz(&self) -> Result<EtzComponents> {
        match self.etz_override {
            Some(c) => Ok(c),
            None => decompose_etz(&study_to_variance_triple(&self.study)?),
        }
    }

    pub fn assess(&self) -> Result<DecisionReport> {
        transition_assessment(&self.study, &self.etz()?, &self.plan, &self.design)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("tree serialization cannot fail")
    }
}

/// Parses and validates a scenario from a tree.
pub fn scenario_from_value(value: Value) -> Result<ScenarioRecord> {
    let raw: RawScenario = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        Error::parse(path, e.into_inner().to_string())
    })?;
    let study = study_from_value(&raw.study, "study")?;
    let record = ScenarioRecord {
        id: raw.id,
        created_at: raw.created_at,
        study,
        etz_override: raw.etz_override,
        plan: raw.plan,
        design: raw.design,
        notes: raw.notes,
    };
    record.validate()?;
    Ok(record)
}

/// Parses and validates a scenario document (JSON or TOML).
pub fn parse_scenario(document: &str) -> Result<ScenarioRecord> {
    scenario_from_value(parse_document(document)?)
}

impl Serialize for ScenarioRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ScenarioOut {
            id: &self.id,
            created_at: &self.created_at,
            notes: &self.notes,
            study: study_to_value(&self.study),
            etz_override: self.etz_override.as_ref(),
            plan: &self.plan,
            design: &self.design,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ScenarioRecord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        scenario_from_value(value).map_err(serde::de::Error::custom)
    }
}

/// Built-in example inputs.
pub mod fixtures {
    use super::*;

    /// EXPEDITION3 ADCS-iADL as a scenario document.
    pub const EXPEDITION3_SCENARIO: &str = include_str!("../../fixtures/expedition3_iadl.json");

    pub fn expedition3_scenario() -> ScenarioRecord {
        parse_scenario(EXPEDITION3_SCENARIO).expect("bundled fixture is valid")
    }

    pub fn expedition3_study() -> StudySummary {
        expedition3_scenario().study
    }
}
