#![forbid(unsafe_code)]
//! Staged, auditable data-science pipelines.
//!
//! Cleaning and modeling decisions are expressed as structured plans over a
//! closed operation library, gated by dataset checks, and audited by
//! re-running the pipeline over perturbed cleaning choices.

pub mod agents;
pub mod datacheck;
pub mod metrics;
pub mod mltools;
pub mod models;
pub mod perturb;
pub mod plan;
pub mod seeding;
pub mod stats;
pub mod tabular;
