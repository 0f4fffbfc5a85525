use std::fmt;

use serde::{Deserialize, Serialize};

use crate::mltools::catalog::{self, ParamInfo, ParamKind};

/// Workflow stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageId {
    Define,
    Explore,
    Model,
    Evaluate,
}

impl StageId {
    pub const ALL: [StageId; 4] = [
        StageId::Define,
        StageId::Explore,
        StageId::Model,
        StageId::Evaluate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageId::Define => "define",
            StageId::Explore => "explore",
            StageId::Model => "model",
            StageId::Evaluate => "evaluate",
        }
    }
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct ToolInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamInfo],
    pub stages: &'static [StageId],
    /// Whether the tool may appear as a plan step (dataset → dataset).
    pub plan_step: bool,
}

const CLEANING: &[StageId] = &[StageId::Explore, StageId::Model];
const FEATURE: &[StageId] = &[StageId::Model];

/// Every library operation plus the split and summary helpers, tagged with
/// the stages that may use them.
#[derive(Debug, Clone)]
pub struct ToolRegistry {
    tools: Vec<ToolInfo>,
}

impl Default for ToolRegistry {
    fn default() -> Self {
        let mut tools: Vec<ToolInfo> = catalog::CATALOG
            .iter()
            .map(|op| ToolInfo {
                name: op.name,
                description: op.description,
                params: op.params,
                stages: match op.name {
                    "create_polynomial_features" | "reduce_dimensions" | "select_features" => {
                        FEATURE
                    }
                    _ => CLEANING,
                },
                plan_step: true,
            })
            .collect();
        tools.push(ToolInfo {
            name: "split_train_test",
            description: "Seeded train/test partition preserving row order",
            params: &[
                ParamInfo {
                    name: "test_fraction",
                    kind: ParamKind::Number,
                    description: "share of rows held out",
                },
                ParamInfo {
                    name: "seed",
                    kind: ParamKind::Integer,
                    description: "shuffle seed",
                },
            ],
            stages: &[StageId::Model, StageId::Evaluate],
            plan_step: false,
        });
        tools.push(ToolInfo {
            name: "summarize",
            description: "Per-column statistics and distribution facts",
            params: &[],
            stages: &[StageId::Define, StageId::Explore],
            plan_step: false,
        });
        ToolRegistry { tools }
    }
}

impl ToolRegistry {
    pub fn get(&self, name: &str) -> Option<&ToolInfo> {
        self.tools.iter().find(|t| t.name == name)
    }

    pub fn tools(&self) -> &[ToolInfo] {
        &self.tools
    }

    pub fn for_stage(&self, stage: StageId) -> impl Iterator<Item = &ToolInfo> {
        self.tools.iter().filter(move |t| t.stages.contains(&stage))
    }

    /// Plain-text tool list for planner prompts.
    pub fn describe(&self, stage: StageId) -> String {
        let mut out = String::new();
        for t in self.for_stage(stage) {
            out.push_str(&format!("- {}: {}\n", t.name, t.description));
            for p in t.params {
                out.push_str(&format!(
                    "    {} ({}): {}\n",
                    p.name,
                    kind_name(p.kind),
                    p.description
                ));
            }
        }
        out
    }
}

fn kind_name(kind: ParamKind) -> String {
    match kind {
        ParamKind::Enum(values) => format!("one of {}", values.join("|")),
        ParamKind::Number => "number".into(),
        ParamKind::Integer => "integer".into(),
        ParamKind::Bool => "boolean".into(),
        ParamKind::Text => "string".into(),
        ParamKind::Scalar => "number|boolean|string".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_unique_and_complete() {
        let r = ToolRegistry::default();
        let mut names: Vec<&str> = r.tools().iter().map(|t| t.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), r.tools().len());
        assert_eq!(names.len(), catalog::CATALOG.len() + 2);
        assert!(r.describe(StageId::Explore).contains("fill_missing"));
        assert!(!r.describe(StageId::Explore).contains("reduce_dimensions"));
    }
}
