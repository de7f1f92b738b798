use std::fmt;

use serde::{Deserialize, Serialize};

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// The ETZ component that came out negative in a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    VarZ,
    VarE,
    VarTraj,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::VarZ => "var_z",
            Component::VarE => "var_e",
            Component::VarTraj => "var_traj",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root is not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("inconsistent variances: {component} = {value}")]
    Decomposition { component: Component, value: f64 },

    /// The directed allowance is undefined because the estimate does not
    /// clear the two-sided critical value.
    #[error("allowance not applicable: |estimate| = {theta_hat_abs} <= {threshold}")]
    NotApplicable { theta_hat_abs: f64, threshold: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("scenario `{0}` not found")]
    NotFound(String),

    #[error("scenario `{0}` already exists")]
    Conflict(String),

    #[error("scenario store is corrupt: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
