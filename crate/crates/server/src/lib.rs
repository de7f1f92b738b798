//! HTTP API over the confirmability engine.
//!
//! Every computation endpoint is a pure function of its request body; all
//! randomness is seeded from the body, so identical requests get
//! byte-identical responses. The scenario store is the only shared state.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use confirmability::confset::{designate_endpoint, transition_decision, EndpointEstimate, PartitionConfig};
use confirmability::etz::{decompose_etz, VarianceTriple};
use confirmability::ingest::{scenario_from_value, ScenarioRecord, ScenarioStore};
use confirmability::sim::{profile_table, replicability_metrics, simulate_study, FixedEffects, ProfileRow, SimConfig};
use confirmability::Error;

/// Largest number of normal draws a single request may ask for.
pub const MAX_DRAWS: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    ParseError,
    DomainError,
    DecompositionError,
    Infeasible,
    NotFound,
    Conflict,
    TooLarge,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::ParseError => StatusCode::BAD_REQUEST,
            ErrorCode::DomainError | ErrorCode::DecompositionError | ErrorCode::Infeasible => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::TooLarge => StatusCode::PAYLOAD_TOO_LARGE,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_path: Option<String>,
}

impl ApiError {
    fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            field_path: None,
        }
    }

    fn parse(path: String, message: impl Into<String>) -> Self {
        ApiError {
            code: ErrorCode::ParseError,
            message: message.into(),
            field_path: (!path.is_empty()).then_some(path),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Parse { path, message } => ApiError::parse(path, message),
            Error::Domain(_) | Error::NotApplicable { .. } => ApiError::new(ErrorCode::DomainError, message),
            Error::Decomposition { component, .. } => ApiError {
                code: ErrorCode::DecompositionError,
                message,
                field_path: Some(component.to_string()),
            },
            Error::Infeasible(_) => ApiError::new(ErrorCode::Infeasible, message),
            Error::NotFound(_) => ApiError::new(ErrorCode::NotFound, message),
            Error::Conflict(_) => ApiError::new(ErrorCode::Conflict, message),
            Error::Bracket { .. } | Error::Corrupt(_) | Error::Io(_) => ApiError::new(ErrorCode::Internal, message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Deserializes a request body, reporting the failing field path.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ApiError::parse(path, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| ApiError::parse(String::new(), e.to_string()))?;
    Ok(value)
}

/// Runs CPU-bound work off the async workers.
async fn compute<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, format!("worker failed: {e}")))?
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<ScenarioStore>,
}

impl AppState {
    pub fn new(store: ScenarioStore) -> Self {
        AppState { store: Arc::new(store) }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/etz/decompose", post(etz_decompose))
        .route("/v1/confset/transition", post(confset_transition))
        .route("/v1/confset/designate", post(confset_designate))
        .route("/v1/cbq/assess", post(cbq_assess))
        .route("/v1/sim/profiles", post(sim_profiles))
        .route("/v1/sim/replicability", post(sim_replicability))
        .route("/v1/scenarios", get(list_scenarios))
        .route("/v1/scenarios/{id}", get(get_scenario).put(put_scenario))
        .with_state(state)
}

async fn etz_decompose(body: Bytes) -> ApiResult<confirmability::etz::EtzComponents> {
    let v: VarianceTriple = parse_body(&body)?;
    v.validate()?;
    Ok(Json(decompose_etz(&v)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointPairRequest {
    pub e1: EndpointEstimate,
    pub e2: EndpointEstimate,
    pub config: PartitionConfig,
}

async fn confset_transition(body: Bytes) -> ApiResult<confirmability::confset::TransitionDecision> {
    let r: EndpointPairRequest = parse_body(&body)?;
    Ok(Json(transition_decision(&r.e1, &r.e2, &r.config)?))
}

async fn confset_designate(body: Bytes) -> ApiResult<confirmability::confset::DesignationDecision> {
    let r: EndpointPairRequest = parse_body(&body)?;
    Ok(Json(designate_endpoint(&r.e1, &r.e2, &r.config)?))
}

/// Either a stored scenario id or an inline record.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssessRequest {
    #[serde(default)]
    scenario_id: Option<String>,
    #[serde(default)]
    scenario: Option<Value>,
}

fn prefixed(prefix: &str, e: Error) -> ApiError {
    match e {
        Error::Parse { path, message } if path.is_empty() => ApiError::parse(prefix.into(), message),
        Error::Parse { path, message } => ApiError::parse(format!("{prefix}.{path}"), message),
        other => other.into(),
    }
}

async fn cbq_assess(State(state): State<AppState>, body: Bytes) -> ApiResult<confirmability::cbq::DecisionReport> {
    let r: AssessRequest = parse_body(&body)?;
    let record = match (r.scenario_id, r.scenario) {
        (Some(id), None) => state.store.load(&id)?,
        (None, Some(v)) => scenario_from_value(v).map_err(|e| prefixed("scenario", e))?,
        _ => {
            return Err(ApiError::parse(
                String::new(),
                "supply exactly one of `scenario_id` or `scenario`",
            ))
        }
    };
    let design = record.design;
    if u128::from(design.reps) > MAX_DRAWS {
        return Err(ApiError::new(
            ErrorCode::TooLarge,
            format!("{} replications exceed the limit of {MAX_DRAWS} draws", design.reps),
        ));
    }
    compute(move || record.assess().map(Json).map_err(Into::into)).await
}

fn check_draws(draws: u128) -> Result<(), ApiError> {
    if draws > MAX_DRAWS {
        Err(ApiError::new(
            ErrorCode::TooLarge,
            format!("request needs {draws} normal draws; the limit is {MAX_DRAWS}"),
        ))
    } else {
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfilesRequest {
    fixed: FixedEffects,
    config: SimConfig,
    rep_index: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProfilesResponse {
    pub rep_index: u64,
    /// Mean change Rx minus control at the milestone.
    pub separation: f64,
    pub rows: Vec<ProfileRow>,
}

async fn sim_profiles(body: Bytes) -> ApiResult<ProfilesResponse> {
    let r: ProfilesRequest = parse_body(&body)?;
    r.config.validate()?;
    check_draws(r.config.draw_count() / u128::from(r.config.n_reps))?;
    compute(move || {
        let s = simulate_study(&r.fixed, &r.config, r.rep_index)?;
        Ok(Json(ProfilesResponse {
            rep_index: r.rep_index,
            separation: s.separation(),
            rows: profile_table(&s),
        }))
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplicabilityRequest {
    fixed: FixedEffects,
    config: SimConfig,
}

async fn sim_replicability(body: Bytes) -> ApiResult<confirmability::sim::ReplicabilityMetrics> {
    let r: ReplicabilityRequest = parse_body(&body)?;
    r.config.validate()?;
    check_draws(r.config.draw_count())?;
    compute(move || Ok(Json(replicability_metrics(&r.fixed, &r.config)?))).await
}

async fn list_scenarios(State(state): State<AppState>) -> ApiResult<Vec<ScenarioRecord>> {
    compute(move || Ok(Json(state.store.list()?))).await
}

async fn get_scenario(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<ScenarioRecord> {
    compute(move || Ok(Json(state.store.load(&id)?))).await
}

async fn put_scenario(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<(StatusCode, Json<ScenarioRecord>), ApiError> {
    let value: Value = parse_body(&body)?;
    let record = scenario_from_value(value)?;
    if record.id != id {
        return Err(ApiError::parse(
            "id".into(),
            format!("body id `{}` does not match path id `{id}`", record.id),
        ));
    }
    compute(move || {
        state.store.save(&record)?;
        Ok((StatusCode::CREATED, Json(record)))
    })
    .await
}

/// Listen address and store directory, read from the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub addr: SocketAddr,
    pub store_dir: PathBuf,
}

impl Config {
    pub const PORT_VAR: &'static str = "CONFIRM_PORT";
    pub const STORE_VAR: &'static str = "CONFIRM_STORE_DIR";

    /// `CONFIRM_PORT` (default 8080) on all interfaces and
    /// `CONFIRM_STORE_DIR` (default `./scenarios`).
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let port = match get(Self::PORT_VAR) {
            Some(p) => p
                .parse::<u16>()
                .map_err(|e| format!("{} = `{p}`: {e}", Self::PORT_VAR))?,
            None => 8080,
        };
        Ok(Config {
            addr: SocketAddr::from(([0, 0, 0, 0], port)),
            store_dir: get(Self::STORE_VAR).map_or_else(|| PathBuf::from("scenarios"), PathBuf::from),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let c = Config::from_lookup(|_| None).unwrap();
        assert_eq!(c.addr.port(), 8080);
        assert_eq!(c.store_dir, PathBuf::from("scenarios"));
        let c = Config::from_lookup(|k| match k {
            "CONFIRM_PORT" => Some("9001".into()),
            "CONFIRM_STORE_DIR" => Some("/tmp/s".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(c.addr.port(), 9001);
        assert_eq!(c.store_dir, PathBuf::from("/tmp/s"));
        assert!(Config::from_lookup(|_| Some("http".into())).is_err());
    }

    #[test]
    fn error_mapping() {
        let e: ApiError = Error::Parse {
            path: "arms.rx.se_change".into(),
            message: "missing field".into(),
        }
        .into();
        assert_eq!(e.code, ErrorCode::ParseError);
        assert_eq!(e.field_path.as_deref(), Some("arms.rx.se_change"));
        assert_eq!(ApiError::from(Error::NotFound("x".into())).code.status(), StatusCode::NOT_FOUND);
        assert_eq!(ApiError::from(Error::Conflict("x".into())).code.status(), StatusCode::CONFLICT);
        assert!(ApiError::from(Error::Corrupt("x".into())).code.status().is_server_error());
        assert!(ErrorCode::DomainError.status().is_client_error());
    }
}
