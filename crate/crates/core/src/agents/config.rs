//! Run configuration. The JSON config file mirrors these field names;
//! command-line flags override file values field by field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datacheck::CheckConfig;
use crate::models::Task;
use crate::perturb::DEFAULT_K;
use crate::plan::DEFAULT_N_MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {reason}")]
    Unreadable { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskChoice {
    Classification,
    Regression,
    #[default]
    Auto,
}

impl TaskChoice {
    pub fn fixed(self) -> Option<Task> {
        match self {
            TaskChoice::Classification => Some(Task::Classification),
            TaskChoice::Regression => Some(Task::Regression),
            TaskChoice::Auto => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendChoice {
    /// Scenario file; `None` uses fallbacks only.
    Scripted(Option<PathBuf>),
    Remote {
        endpoint: String,
        model: String,
        api_key_env: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub target: Option<String>,
    pub task: TaskChoice,
    pub problem_description: Option<String>,
    pub k: usize,
    pub n_max: u32,
    pub seed: u64,
    /// `scripted`, `scripted:<scenario.json>` or `remote`.
    pub backend: String,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Name of the environment variable holding the remote credential.
    pub api_key_env: Option<String>,
    pub out_dir: PathBuf,
    pub jobs: usize,
    /// Share of the data held out when no test file is given.
    pub holdout_fraction: f64,
    pub checks: CheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            test: None,
            target: None,
            task: TaskChoice::Auto,
            problem_description: None,
            k: DEFAULT_K,
            n_max: DEFAULT_N_MAX,
            seed: 0,
            backend: "scripted".into(),
            endpoint: None,
            model: None,
            api_key_env: None,
            out_dir: PathBuf::from("runs"),
            jobs: 1,
            holdout_fraction: 0.2,
            checks: CheckConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        serde_json::from_str(&text)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn backend_choice(&self) -> Result<BackendChoice, ConfigError> {
        match self.backend.as_str() {
            "scripted" => Ok(BackendChoice::Scripted(None)),
            "remote" => {
                let need = |v: &Option<String>, flag: &str| {
                    v.clone()
                        .ok_or_else(|| ConfigError::Invalid(format!("remote backend needs {flag}")))
                };
                Ok(BackendChoice::Remote {
                    endpoint: need(&self.endpoint, "--endpoint")?,
                    model: need(&self.model, "--model")?,
                    api_key_env: need(&self.api_key_env, "--api-key-env")?,
                })
            }
            other => match other.strip_prefix("scripted:") {
                Some(path) if !path.is_empty() => {
                    Ok(BackendChoice::Scripted(Some(PathBuf::from(path))))
                }
                _ => Err(ConfigError::Invalid(format!("unknown backend `{other}`"))),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::Invalid("k must be at least 1".into()));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(ConfigError::Invalid(
                "holdout_fraction must be in (0, 1)".into(),
            ));
        }
        self.checks
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.backend_choice().map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_parsing() {
        let c: RunConfig = serde_json::from_str(r#"{"k":3,"backend":"scripted:s.json"}"#).unwrap();
        assert_eq!((c.k, c.n_max), (3, 3));
        assert_eq!(
            c.backend_choice().unwrap(),
            BackendChoice::Scripted(Some("s.json".into()))
        );
        assert!(serde_json::from_str::<RunConfig>(r#"{"api_key":"x"}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig {
            k: 0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        c.k = 1;
        c.backend = "remote".into();
        assert!(c.validate().is_err());
        c.endpoint = Some("http://x".into());
        c.model = Some("m".into());
        c.api_key_env = Some("KEY".into());
        assert!(c.validate().is_ok());
    }
}
