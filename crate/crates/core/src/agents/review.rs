//! PCS review records.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::backend::extract_json;
use crate::mltools::Operation;
use crate::perturb::JudgmentCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Revise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcsReview {
    pub predictability: String,
    pub stability: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub judgment_calls: Vec<JudgmentCall>,
    /// Verbatim reply, kept only when it could not be parsed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

impl PcsReview {
    /// Record for a reply that stayed unparseable after the retry.
    pub fn unparsed(raw: String) -> Self {
        PcsReview {
            predictability: String::new(),
            stability: String::new(),
            verdict: Verdict::Accept,
            judgment_calls: Vec::new(),
            raw: Some(raw),
        }
    }
}

fn text_field(v: &Value, key: &str) -> Result<String, String> {
    v.get(key)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| format!("missing string `{key}`"))
}

/// Parses a review reply. `Predictability` and `Stability` are required;
/// `verdict` defaults to accept. Every suggested alternative must be a valid
/// operation, and a revise verdict needs critique text or suggestions.
pub fn parse_review(text: &str) -> Result<PcsReview, String> {
    let v = extract_json(text).ok_or("no JSON object in reply")?;
    let predictability = text_field(&v, "Predictability")?;
    let stability = text_field(&v, "Stability")?;
    let verdict = match v.get("verdict").and_then(Value::as_str) {
        None | Some("accept") => Verdict::Accept,
        Some("revise") => Verdict::Revise,
        Some(other) => return Err(format!("unknown verdict `{other}`")),
    };
    let judgment_calls: Vec<JudgmentCall> = match v.get("judgment_calls") {
        None | Some(Value::Null) => Vec::new(),
        Some(calls) => {
            serde_json::from_value(calls.clone()).map_err(|e| format!("judgment_calls: {e}"))?
        }
    };
    for call in &judgment_calls {
        if call.alternatives.is_empty() {
            return Err(format!(
                "judgment call `{}` has no alternatives",
                call.decision_point
            ));
        }
        for alt in &call.alternatives {
            Operation::parse(alt)
                .map_err(|e| format!("judgment call `{}`: {e}", call.decision_point))?;
        }
    }
    if verdict == Verdict::Revise
        && judgment_calls.is_empty()
        && predictability.trim().is_empty()
        && stability.trim().is_empty()
    {
        return Err("revise verdict without critique or suggestions".into());
    }
    Ok(PcsReview {
        predictability,
        stability,
        verdict,
        judgment_calls,
        raw: None,
    })
}
