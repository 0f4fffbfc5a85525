//! Planner backends: a deterministic scripted double and a chat-completions
//! HTTP client.

use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::AgentRole;
use crate::plan::{Plan, RepairContext, StageId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("backend request timed out")]
    Timeout,
    #[error("backend returned HTTP {0}")]
    HttpError(u16),
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("backend transport failure: {0}")]
    Transport(String),
    #[error("scripted failure: {0}")]
    Scripted(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseShape {
    ProblemDefinition,
    Plan,
    Review,
    ModelSpecs,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    /// `system` or `user`.
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub role: AgentRole,
    pub stage: StageId,
    /// 0-based index of this call among calls with the same role and stage.
    pub attempt: u32,
    pub messages: Vec<Message>,
    pub response_shape: ResponseShape,
    /// Set on plan repair requests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair: Option<RepairContext>,
}

/// A language-model planner. Each call is independent: everything the
/// backend may use is in the request.
pub trait PlannerBackend {
    fn respond(&mut self, request: &BackendRequest) -> Result<String, BackendError>;

    fn name(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub role: AgentRole,
    pub stage: StageId,
    /// Absent: matches any attempt not matched by a more specific entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u32>,
    /// JSON values are sent as their compact serialization, strings verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<Value>,
    /// Simulated transport failure with this message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub responses: Vec<ScriptEntry>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, BackendError> {
        let s: Scenario = serde_json::from_str(text)
            .map_err(|e| BackendError::Config(format!("scenario: {e}")))?;
        for (i, e) in s.responses.iter().enumerate() {
            if e.response.is_some() == e.fail.is_some() {
                return Err(BackendError::Config(format!(
                    "scenario entry {i} needs exactly one of response/fail"
                )));
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, BackendError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            BackendError::Config(format!("cannot read scenario {}: {e}", path.display()))
        })?;
        Scenario::parse(&text)
    }
}

/// Answers from a scenario table keyed by (role, stage, attempt). Requests
/// with no entry get fixed fallbacks: the identity plan, the failing plan
/// echoed back on repair, an accepting review, an empty problem definition
/// and an empty model list (meaning the full zoo).
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    scenario: Scenario,
}

impl ScriptedBackend {
    pub fn new(scenario: Scenario) -> Self {
        ScriptedBackend { scenario }
    }

    fn lookup(&self, req: &BackendRequest) -> Option<&ScriptEntry> {
        let same = |e: &&ScriptEntry| e.role == req.role && e.stage == req.stage;
        let entries = self.scenario.responses.iter();
        entries
            .clone()
            .filter(same)
            .find(|e| e.attempt == Some(req.attempt))
            .or_else(|| entries.filter(same).find(|e| e.attempt.is_none()))
    }
}

pub fn fallback_response(req: &BackendRequest) -> String {
    match req.response_shape {
        ResponseShape::Plan => match &req.repair {
            Some(ctx) => ctx.plan.to_json(),
            None => Plan::identity().to_json(),
        },
        ResponseShape::Review => {
            json!({"Predictability": "no concerns", "Stability": "no concerns", "verdict": "accept"}).to_string()
        }
        ResponseShape::ProblemDefinition | ResponseShape::Evaluation => "{}".to_string(),
        ResponseShape::ModelSpecs => json!({"models": []}).to_string(),
    }
}

impl PlannerBackend for ScriptedBackend {
    fn respond(&mut self, req: &BackendRequest) -> Result<String, BackendError> {
        match self.lookup(req) {
            Some(ScriptEntry {
                fail: Some(msg), ..
            }) => Err(BackendError::Scripted(msg.clone())),
            Some(ScriptEntry {
                response: Some(Value::String(s)),
                ..
            }) => Ok(s.clone()),
            Some(ScriptEntry {
                response: Some(v), ..
            }) => Ok(v.to_string()),
            _ => Ok(fallback_response(req)),
        }
    }

    fn name(&self) -> String {
        "scripted".into()
    }
}

#[derive(Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: String,
    pub timeout: Duration,
    /// Extra attempts after a 5xx or transport failure.
    pub max_retries: u32,
    /// JSON-lines log of request/response bodies; credentials redacted.
    pub log_path: Option<PathBuf>,
}

impl fmt::Debug for RemoteConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteConfig")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("api_key", &"<redacted>")
            .field("timeout", &self.timeout)
            .field("max_retries", &self.max_retries)
            .finish()
    }
}

impl RemoteConfig {
    /// Reads the credential from the environment variable `key_env`; fails
    /// before any network traffic when it is unset or empty.
    pub fn from_env(
        endpoint: &str,
        model: &str,
        key_env: &str,
    ) -> Result<RemoteConfig, BackendError> {
        let api_key = std::env::var(key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| {
                BackendError::Config(format!("environment variable {key_env} is not set"))
            })?;
        Ok(RemoteConfig {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key,
            timeout: Duration::from_secs(120),
            max_retries: 2,
            log_path: None,
        })
    }
}

/// Chat-completions client: role-tagged messages in, first choice text out.
#[derive(Debug)]
pub struct RemoteBackend {
    cfg: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(cfg: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteBackend { cfg, agent }
    }

    fn url(&self) -> String {
        let base = self.cfg.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    fn redact(&self, text: &str) -> String {
        if self.cfg.api_key.is_empty() {
            text.to_string()
        } else {
            text.replace(&self.cfg.api_key, "<redacted>")
        }
    }

    fn log(&self, entry: Value) {
        let Some(path) = &self.cfg.log_path else {
            return;
        };
        if let Ok(mut f) = OpenOptions::new().create(true).append(true).open(path) {
            let _ = writeln!(f, "{}", self.redact(&entry.to_string()));
        }
    }

    fn once(&self, body: &str) -> Result<String, BackendError> {
        let result = self
            .agent
            .post(&self.url())
            .header("Authorization", &format!("Bearer {}", self.cfg.api_key))
            .header("Content-Type", "application/json")
            .send(body);
        let mut resp = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(BackendError::Timeout),
            Err(e) => return Err(BackendError::Transport(self.redact(&e.to_string()))),
        };
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        self.log(json!({"status": status, "response": text}));
        if !(200..300).contains(&status) {
            return Err(BackendError::HttpError(status));
        }
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::MalformedResponse("no choices[0].message.content".into()))
    }
}

impl PlannerBackend for RemoteBackend {
    fn respond(&mut self, req: &BackendRequest) -> Result<String, BackendError> {
        let body = json!({
            "model": self.cfg.model,
            "temperature": 0,
            "messages": req.messages,
        })
        .to_string();
        self.log(
            json!({"role": req.role, "stage": req.stage, "attempt": req.attempt, "request": body}),
        );
        let mut last = BackendError::Transport("no attempt made".into());
        for _ in 0..=self.cfg.max_retries {
            match self.once(&body) {
                Ok(text) => return Ok(text),
                Err(
                    e @ (BackendError::HttpError(500..=599)
                    | BackendError::Transport(_)
                    | BackendError::Timeout),
                ) => last = e,
                Err(e) => return Err(e),
            }
        }
        Err(last)
    }

    fn name(&self) -> String {
        format!("remote:{}", self.cfg.model)
    }
}

/// Extracts the first JSON object from a reply, tolerating prose or code
/// fences around it.
pub fn extract_json(text: &str) -> Option<Value> {
    if let Ok(v) = serde_json::from_str::<Value>(text.trim()) {
        return Some(v);
    }
    let start = text.find('{')?;
    let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
    stream.next()?.ok()
}
