//! Deterministic cleaning and feature-engineering library.
//!
//! Every operation is pure: it takes a [`Dataset`], returns a new one with a
//! single lineage entry appended, and never touches its input. Operations are
//! addressed by name through [`OpDescriptor`]s (the plan wire format) and
//! parsed into the typed [`Operation`] enum before execution.
//!
//! Each application also yields a [`FittedOp`]: the statistics it learned
//! (fill values, bounds, category maps, bin edges, loadings). Replaying a
//! fitted op on new rows reuses those statistics instead of recomputing them.

pub mod catalog;
mod discretize;
mod encode;
mod frame;
mod impute;
mod outliers;
mod pca;
mod poly;
mod remove;
mod select;
mod transform;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabular::{ColumnSpec, Dataset, Dtype, LineageEntry, Param, Role, TabularError};
use catalog::{OpInfo, ParamKind};

pub use discretize::{discretize_features, kmeans_1d};
pub use encode::encode_categorical;
pub use impute::fill_missing;
pub use outliers::handle_outliers;
pub use pca::{pca_fit, reduce_dimensions, PcaFit};
pub use poly::{create_polynomial_features, monomials};
pub use remove::remove_columns;
pub use select::{mutual_information, select_features};
pub use transform::transform_features;

/// Names generated by column-adding operations, for static schema walks.
pub(crate) mod naming {
    pub(crate) use super::encode::indicator_name;
    pub(crate) use super::pca::component_names;
    pub(crate) use super::poly::term_name;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlError {
    #[error("unknown operation `{0}`")]
    UnknownOp(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{column}` is {found}, expected {expected}")]
    DtypeMismatch {
        column: String,
        expected: String,
        found: Dtype,
    },
    #[error("invalid parameter `{param}`: {reason}")]
    InvalidParam { param: String, reason: String },
    #[error("column `{0}` has no observed values to impute from")]
    AllMissing(String),
    #[error("column `{column}` has {cardinality} categories, more than the one-hot limit {max}")]
    CardinalityExceeded {
        column: String,
        cardinality: usize,
        max: usize,
    },
    #[error("refusing to drop target column `{0}`")]
    WouldDropTarget(String),
    #[error("domain error in column `{column}`: {reason}")]
    DomainError { column: String, reason: String },
    #[error("column `{column}` has {distinct} distinct values, fewer than {bins} bins")]
    TooFewDistinct {
        column: String,
        distinct: usize,
        bins: usize,
    },
    #[error("operation would produce {count} columns, above the cap of {cap}")]
    TooManyColumns { count: usize, cap: usize },
    #[error("column `{0}` contains missing values")]
    MissingValuesPresent(String),
    #[error("{0}")]
    Tabular(String),
}

impl From<TabularError> for MlError {
    fn from(e: TabularError) -> Self {
        match e {
            TabularError::UnknownColumn(c) => MlError::UnknownColumn(c),
            other => MlError::Tabular(other.to_string()),
        }
    }
}

/// A named operation, its target columns and flat scalar parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpDescriptor {
    #[serde(rename = "op")]
    pub op_name: String,
    #[serde(default)]
    pub columns: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, Param>,
}

impl OpDescriptor {
    pub fn new(op: &str, columns: &[&str]) -> Self {
        OpDescriptor {
            op_name: op.to_string(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            params: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Param>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Number(v)
    }
}

impl From<usize> for Param {
    fn from(v: usize) -> Self {
        Param::Number(v as f64)
    }
}

impl From<bool> for Param {
    fn from(v: bool) -> Self {
        Param::Bool(v)
    }
}

impl From<&str> for Param {
    fn from(v: &str) -> Self {
        Param::Text(v.to_string())
    }
}

impl fmt::Display for OpDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.op_name)?;
        write!(f, "[{}]", self.columns.join(", "))?;
        for (k, v) in &self.params {
            write!(f, ", {k}={v}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Mean,
    Median,
    Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FillStrategy {
    Mean,
    Median,
    Mode,
    Constant(Param),
    Knn { k: usize },
    GroupWise { group_col: String, agg: Aggregate },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutlierMethod {
    Iqr { multiplier: f64 },
    ZScore { threshold: f64 },
    Quantile { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutlierAction {
    Clip,
    RemoveRow,
    SetMissing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingScheme {
    Label,
    OneHot { max_cardinality: usize },
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RemovalCriterion {
    /// Drop when missing fraction > threshold.
    MissingFraction(f64),
    /// Drop numeric columns with population variance < threshold.
    Variance(f64),
    /// Drop the later column of any pair with |Pearson r| > threshold.
    Correlation(f64),
    /// Drop exactly the listed columns.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Log1p,
    MinMax,
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinMethod {
    EqualWidth(usize),
    Quantile(usize),
    KMeans(usize),
}

impl BinMethod {
    pub fn bins(&self) -> usize {
        match *self {
            BinMethod::EqualWidth(n) | BinMethod::Quantile(n) | BinMethod::KMeans(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionMethod {
    /// Keep features with population variance > threshold.
    Variance(f64),
    Correlation {
        top: usize,
    },
    MutualInfo {
        top: usize,
    },
}

pub const DEFAULT_KNN_K: usize = 5;
pub const DEFAULT_MAX_ONE_HOT: usize = 50;
pub const DEFAULT_MAX_COLUMNS: usize = 1000;
pub const MAX_POLY_DEGREE: usize = 3;

/// A parsed, validated operation.
#[derive(Debug, Clone, PartialEq)]
pub enum Operation {
    FillMissing(FillStrategy),
    HandleOutliers {
        method: OutlierMethod,
        action: OutlierAction,
    },
    EncodeCategorical(EncodingScheme),
    RemoveColumns(RemovalCriterion),
    TransformFeatures(Transform),
    DiscretizeFeatures(BinMethod),
    SelectFeatures {
        method: SelectionMethod,
        target: Option<String>,
    },
    PolynomialFeatures {
        degree: usize,
        interactions_only: bool,
        max_columns: usize,
    },
    ReduceDimensions {
        n_components: usize,
    },
}

/// Which dtypes an operation accepts in its target columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Requirement {
    Numeric,
    CategoricalOrBoolean,
    NotText,
    Any,
}

impl Requirement {
    pub fn accepts(self, dtype: Dtype) -> bool {
        match self {
            Requirement::Numeric => dtype == Dtype::Numeric,
            Requirement::CategoricalOrBoolean => {
                matches!(dtype, Dtype::Categorical | Dtype::Boolean)
            }
            Requirement::NotText => dtype != Dtype::Text,
            Requirement::Any => true,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Requirement::Numeric => "numeric",
            Requirement::CategoricalOrBoolean => "categorical or boolean",
            Requirement::NotText => "numeric, categorical or boolean",
            Requirement::Any => "any dtype",
        }
    }
}

struct ParamReader<'a> {
    info: &'static OpInfo,
    params: &'a BTreeMap<String, Param>,
    used: BTreeSet<&'static str>,
}

impl<'a> ParamReader<'a> {
    fn new(info: &'static OpInfo, params: &'a BTreeMap<String, Param>) -> Result<Self, MlError> {
        for (key, value) in params {
            let spec = info.param(key).ok_or_else(|| MlError::InvalidParam {
                param: key.clone(),
                reason: format!("not a parameter of {}", info.name),
            })?;
            let ok = match spec.kind {
                ParamKind::Enum(allowed) => value.as_str().is_some_and(|s| allowed.contains(&s)),
                ParamKind::Number => value.as_f64().is_some(),
                ParamKind::Integer => value.as_f64().is_some_and(|v| v >= 0.0 && v.fract() == 0.0),
                ParamKind::Bool => value.as_bool().is_some(),
                ParamKind::Text => value.as_str().is_some(),
                ParamKind::Scalar => true,
            };
            if !ok {
                let expected = match spec.kind {
                    ParamKind::Enum(allowed) => format!("one of {}", allowed.join(", ")),
                    ParamKind::Number => "a number".into(),
                    ParamKind::Integer => "a non-negative integer".into(),
                    ParamKind::Bool => "a boolean".into(),
                    ParamKind::Text => "a string".into(),
                    ParamKind::Scalar => "a scalar".into(),
                };
                return Err(MlError::InvalidParam {
                    param: key.clone(),
                    reason: format!("expected {expected}, got {} `{value}`", value.type_name()),
                });
            }
        }
        Ok(ParamReader {
            info,
            params,
            used: BTreeSet::new(),
        })
    }

    fn mark(&mut self, key: &str) -> Option<&'a Param> {
        let spec = self.info.param(key)?;
        self.used.insert(spec.name);
        self.params.get(key)
    }

    fn required_enum(&mut self, key: &str) -> Result<&'a str, MlError> {
        self.mark(key)
            .and_then(Param::as_str)
            .ok_or_else(|| MlError::InvalidParam {
                param: key.into(),
                reason: "required".into(),
            })
    }

    fn opt_enum(&mut self, key: &str) -> Option<&'a str> {
        self.mark(key).and_then(Param::as_str)
    }

    fn opt_number(&mut self, key: &str) -> Option<f64> {
        self.mark(key).and_then(Param::as_f64)
    }

    fn required_number(&mut self, key: &str) -> Result<f64, MlError> {
        self.opt_number(key).ok_or_else(|| MlError::InvalidParam {
            param: key.into(),
            reason: "required".into(),
        })
    }

    fn opt_usize(&mut self, key: &str) -> Option<usize> {
        self.opt_number(key).map(|v| v as usize)
    }

    fn required_usize(&mut self, key: &str) -> Result<usize, MlError> {
        self.required_number(key).map(|v| v as usize)
    }

    fn opt_text(&mut self, key: &str) -> Option<String> {
        self.mark(key).and_then(Param::as_str).map(str::to_string)
    }

    fn opt_bool(&mut self, key: &str) -> Option<bool> {
        self.mark(key).and_then(Param::as_bool)
    }

    /// Rejects parameters that are declared for the op but irrelevant to
    /// the chosen variant.
    fn finish(self, variant: &str) -> Result<(), MlError> {
        for key in self.params.keys() {
            if !self.used.contains(key.as_str()) {
                return Err(MlError::InvalidParam {
                    param: key.clone(),
                    reason: format!("does not apply to {variant}"),
                });
            }
        }
        Ok(())
    }
}

fn invalid(param: &str, reason: impl Into<String>) -> MlError {
    MlError::InvalidParam {
        param: param.to_string(),
        reason: reason.into(),
    }
}

impl Operation {
    pub fn parse(desc: &OpDescriptor) -> Result<Operation, MlError> {
        let info = catalog::lookup(&desc.op_name)
            .ok_or_else(|| MlError::UnknownOp(desc.op_name.clone()))?;
        let mut r = ParamReader::new(info, &desc.params)?;
        let op = match info.name {
            "fill_missing" => {
                let strategy = r.required_enum("strategy")?;
                let s = match strategy {
                    "mean" => FillStrategy::Mean,
                    "median" => FillStrategy::Median,
                    "mode" => FillStrategy::Mode,
                    "constant" => FillStrategy::Constant(
                        r.mark("value")
                            .cloned()
                            .ok_or_else(|| invalid("value", "required for constant"))?,
                    ),
                    "knn" => {
                        let k = r.opt_usize("k").unwrap_or(DEFAULT_KNN_K);
                        if k == 0 {
                            return Err(invalid("k", "must be at least 1"));
                        }
                        FillStrategy::Knn { k }
                    }
                    _ => {
                        let group_col = r
                            .opt_text("group_col")
                            .ok_or_else(|| invalid("group_col", "required for group_wise"))?;
                        let agg = match r.required_enum("agg")? {
                            "mean" => Aggregate::Mean,
                            "median" => Aggregate::Median,
                            _ => Aggregate::Mode,
                        };
                        FillStrategy::GroupWise { group_col, agg }
                    }
                };
                r.finish(&format!("strategy {strategy}"))?;
                Operation::FillMissing(s)
            }
            "handle_outliers" => {
                let m = r.required_enum("method")?;
                let method = match m {
                    "iqr" => {
                        let multiplier = r.opt_number("multiplier").unwrap_or(1.5);
                        if multiplier < 0.0 {
                            return Err(invalid("multiplier", "must be non-negative"));
                        }
                        OutlierMethod::Iqr { multiplier }
                    }
                    "zscore" => {
                        let threshold = r.opt_number("threshold").unwrap_or(3.0);
                        if threshold <= 0.0 {
                            return Err(invalid("threshold", "must be positive"));
                        }
                        OutlierMethod::ZScore { threshold }
                    }
                    _ => {
                        let lower = r.required_number("lower")?;
                        let upper = r.required_number("upper")?;
                        if !(0.0..=1.0).contains(&lower)
                            || !(0.0..=1.0).contains(&upper)
                            || lower >= upper
                        {
                            return Err(invalid(
                                "lower",
                                "quantile bounds need 0 <= lower < upper <= 1",
                            ));
                        }
                        OutlierMethod::Quantile { lower, upper }
                    }
                };
                let action = match r.opt_enum("action").unwrap_or("clip") {
                    "clip" => OutlierAction::Clip,
                    "remove_row" => OutlierAction::RemoveRow,
                    _ => OutlierAction::SetMissing,
                };
                r.finish(&format!("method {m}"))?;
                Operation::HandleOutliers { method, action }
            }
            "encode_categorical" => {
                let s = r.required_enum("scheme")?;
                let scheme = match s {
                    "label" => EncodingScheme::Label,
                    "frequency" => EncodingScheme::Frequency,
                    _ => {
                        let max_cardinality = r
                            .opt_usize("max_cardinality")
                            .unwrap_or(DEFAULT_MAX_ONE_HOT);
                        if max_cardinality == 0 {
                            return Err(invalid("max_cardinality", "must be at least 1"));
                        }
                        EncodingScheme::OneHot { max_cardinality }
                    }
                };
                r.finish(&format!("scheme {s}"))?;
                Operation::EncodeCategorical(scheme)
            }
            "remove_columns" => {
                let c = r.required_enum("criterion")?;
                let criterion = match c {
                    "explicit" => {
                        if desc.columns.is_empty() {
                            return Err(invalid("columns", "explicit removal needs a column list"));
                        }
                        RemovalCriterion::Explicit
                    }
                    _ => {
                        let t = r.required_number("threshold")?;
                        match c {
                            "missing_fraction" if (0.0..=1.0).contains(&t) => {
                                RemovalCriterion::MissingFraction(t)
                            }
                            "variance" if t >= 0.0 => RemovalCriterion::Variance(t),
                            "correlation" if (0.0..=1.0).contains(&t) => {
                                RemovalCriterion::Correlation(t)
                            }
                            _ => {
                                return Err(invalid(
                                    "threshold",
                                    format!("{t} out of range for {c}"),
                                ))
                            }
                        }
                    }
                };
                r.finish(&format!("criterion {c}"))?;
                Operation::RemoveColumns(criterion)
            }
            "transform_features" => {
                let t = match r.required_enum("transform")? {
                    "log1p" => Transform::Log1p,
                    "minmax" => Transform::MinMax,
                    _ => Transform::Standard,
                };
                r.finish("transform_features")?;
                Operation::TransformFeatures(t)
            }
            "discretize_features" => {
                let m = r.required_enum("method")?;
                let n = r.required_usize("bins")?;
                if n < 2 {
                    return Err(invalid("bins", "must be at least 2"));
                }
                r.finish("discretize_features")?;
                Operation::DiscretizeFeatures(match m {
                    "equal_width" => BinMethod::EqualWidth(n),
                    "quantile" => BinMethod::Quantile(n),
                    _ => BinMethod::KMeans(n),
                })
            }
            "select_features" => {
                let m = r.required_enum("method")?;
                let method = match m {
                    "variance" => {
                        let t = r.required_number("threshold")?;
                        if t < 0.0 {
                            return Err(invalid("threshold", "must be non-negative"));
                        }
                        SelectionMethod::Variance(t)
                    }
                    _ => {
                        let top = r.required_usize("top")?;
                        if top == 0 {
                            return Err(invalid("top", "must be at least 1"));
                        }
                        if m == "correlation" {
                            SelectionMethod::Correlation { top }
                        } else {
                            SelectionMethod::MutualInfo { top }
                        }
                    }
                };
                let target = r.opt_text("target");
                r.finish(&format!("method {m}"))?;
                Operation::SelectFeatures { method, target }
            }
            "create_polynomial_features" => {
                let degree = r.required_usize("degree")?;
                if !(2..=MAX_POLY_DEGREE).contains(&degree) {
                    return Err(invalid(
                        "degree",
                        format!("must be between 2 and {MAX_POLY_DEGREE}"),
                    ));
                }
                let interactions_only = r.opt_bool("interactions_only").unwrap_or(false);
                let max_columns = r.opt_usize("max_columns").unwrap_or(DEFAULT_MAX_COLUMNS);
                r.finish("create_polynomial_features")?;
                Operation::PolynomialFeatures {
                    degree,
                    interactions_only,
                    max_columns,
                }
            }
            _ => {
                let n_components = r.required_usize("n_components")?;
                if n_components == 0 {
                    return Err(invalid("n_components", "must be at least 1"));
                }
                if !desc.columns.is_empty() && n_components > desc.columns.len() {
                    return Err(invalid("n_components", "exceeds the number of columns"));
                }
                r.finish("reduce_dimensions")?;
                Operation::ReduceDimensions { n_components }
            }
        };
        Ok(op)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Operation::FillMissing(_) => "fill_missing",
            Operation::HandleOutliers { .. } => "handle_outliers",
            Operation::EncodeCategorical(_) => "encode_categorical",
            Operation::RemoveColumns(_) => "remove_columns",
            Operation::TransformFeatures(_) => "transform_features",
            Operation::DiscretizeFeatures(_) => "discretize_features",
            Operation::SelectFeatures { .. } => "select_features",
            Operation::PolynomialFeatures { .. } => "create_polynomial_features",
            Operation::ReduceDimensions { .. } => "reduce_dimensions",
        }
    }

    /// Canonical parameters, defaults filled in. Used for lineage.
    pub fn params(&self) -> BTreeMap<String, Param> {
        let mut p = BTreeMap::new();
        let mut put = |k: &str, v: Param| {
            p.insert(k.to_string(), v);
        };
        match self {
            Operation::FillMissing(s) => match s {
                FillStrategy::Mean => put("strategy", "mean".into()),
                FillStrategy::Median => put("strategy", "median".into()),
                FillStrategy::Mode => put("strategy", "mode".into()),
                FillStrategy::Constant(v) => {
                    put("strategy", "constant".into());
                    put("value", v.clone());
                }
                FillStrategy::Knn { k } => {
                    put("strategy", "knn".into());
                    put("k", (*k).into());
                }
                FillStrategy::GroupWise { group_col, agg } => {
                    put("strategy", "group_wise".into());
                    put("group_col", group_col.as_str().into());
                    put(
                        "agg",
                        match agg {
                            Aggregate::Mean => "mean",
                            Aggregate::Median => "median",
                            Aggregate::Mode => "mode",
                        }
                        .into(),
                    );
                }
            },
            Operation::HandleOutliers { method, action } => {
                match method {
                    OutlierMethod::Iqr { multiplier } => {
                        put("method", "iqr".into());
                        put("multiplier", (*multiplier).into());
                    }
                    OutlierMethod::ZScore { threshold } => {
                        put("method", "zscore".into());
                        put("threshold", (*threshold).into());
                    }
                    OutlierMethod::Quantile { lower, upper } => {
                        put("method", "quantile".into());
                        put("lower", (*lower).into());
                        put("upper", (*upper).into());
                    }
                }
                put(
                    "action",
                    match action {
                        OutlierAction::Clip => "clip",
                        OutlierAction::RemoveRow => "remove_row",
                        OutlierAction::SetMissing => "set_missing",
                    }
                    .into(),
                );
            }
            Operation::EncodeCategorical(s) => match s {
                EncodingScheme::Label => put("scheme", "label".into()),
                EncodingScheme::Frequency => put("scheme", "frequency".into()),
                EncodingScheme::OneHot { max_cardinality } => {
                    put("scheme", "one_hot".into());
                    put("max_cardinality", (*max_cardinality).into());
                }
            },
            Operation::RemoveColumns(c) => match c {
                RemovalCriterion::MissingFraction(t) => {
                    put("criterion", "missing_fraction".into());
                    put("threshold", (*t).into());
                }
                RemovalCriterion::Variance(t) => {
                    put("criterion", "variance".into());
                    put("threshold", (*t).into());
                }
                RemovalCriterion::Correlation(t) => {
                    put("criterion", "correlation".into());
                    put("threshold", (*t).into());
                }
                RemovalCriterion::Explicit => put("criterion", "explicit".into()),
            },
            Operation::TransformFeatures(t) => put(
                "transform",
                match t {
                    Transform::Log1p => "log1p",
                    Transform::MinMax => "minmax",
                    Transform::Standard => "standard",
                }
                .into(),
            ),
            Operation::DiscretizeFeatures(m) => {
                put(
                    "method",
                    match m {
                        BinMethod::EqualWidth(_) => "equal_width",
                        BinMethod::Quantile(_) => "quantile",
                        BinMethod::KMeans(_) => "kmeans",
                    }
                    .into(),
                );
                put("bins", m.bins().into());
            }
            Operation::SelectFeatures { method, target } => {
                match method {
                    SelectionMethod::Variance(t) => {
                        put("method", "variance".into());
                        put("threshold", (*t).into());
                    }
                    SelectionMethod::Correlation { top } => {
                        put("method", "correlation".into());
                        put("top", (*top).into());
                    }
                    SelectionMethod::MutualInfo { top } => {
                        put("method", "mutual_info".into());
                        put("top", (*top).into());
                    }
                }
                if let Some(t) = target {
                    put("target", t.as_str().into());
                }
            }
            Operation::PolynomialFeatures {
                degree,
                interactions_only,
                max_columns,
            } => {
                put("degree", (*degree).into());
                put("interactions_only", (*interactions_only).into());
                put("max_columns", (*max_columns).into());
            }
            Operation::ReduceDimensions { n_components } => {
                put("n_components", (*n_components).into())
            }
        }
        p
    }

    pub fn to_descriptor(&self, columns: &[String]) -> OpDescriptor {
        OpDescriptor {
            op_name: self.name().to_string(),
            columns: columns.to_vec(),
            params: self.params(),
        }
    }

    pub fn requirement(&self) -> Requirement {
        match self {
            Operation::FillMissing(FillStrategy::Mode) => Requirement::NotText,
            Operation::FillMissing(FillStrategy::Constant(_)) => Requirement::Any,
            Operation::FillMissing(FillStrategy::GroupWise {
                agg: Aggregate::Mode,
                ..
            }) => Requirement::NotText,
            Operation::FillMissing(_) => Requirement::Numeric,
            Operation::HandleOutliers { .. } => Requirement::Numeric,
            Operation::EncodeCategorical(_) => Requirement::CategoricalOrBoolean,
            Operation::RemoveColumns(_) => Requirement::Any,
            Operation::TransformFeatures(_) => Requirement::Numeric,
            Operation::DiscretizeFeatures(_) => Requirement::Numeric,
            Operation::SelectFeatures {
                method: SelectionMethod::MutualInfo { .. },
                ..
            } => Requirement::NotText,
            Operation::SelectFeatures { .. } => Requirement::Numeric,
            Operation::PolynomialFeatures { .. } => Requirement::Numeric,
            Operation::ReduceDimensions { .. } => Requirement::Numeric,
        }
    }

    /// Dtype check for one target column, including the constant-fill value
    /// type. Shared by execution and static plan validation.
    pub fn check_column(&self, name: &str, dtype: Dtype) -> Result<(), MlError> {
        let req = self.requirement();
        if !req.accepts(dtype) {
            return Err(MlError::DtypeMismatch {
                column: name.to_string(),
                expected: req.describe().to_string(),
                found: dtype,
            });
        }
        if let Operation::FillMissing(FillStrategy::Constant(v)) = self {
            let ok = matches!(
                (dtype, v),
                (Dtype::Numeric, Param::Number(_))
                    | (Dtype::Boolean, Param::Bool(_))
                    | (Dtype::Categorical | Dtype::Text, Param::Text(_))
            );
            if !ok {
                return Err(invalid(
                    "value",
                    format!(
                        "{} value cannot fill {dtype} column `{name}`",
                        v.type_name()
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Whether the operation needs an explicit target column (given by
    /// parameter or by the dataset's target role).
    pub fn needs_target(&self) -> bool {
        matches!(self, Operation::SelectFeatures { .. })
    }
}

/// Resolves the columns an operation acts on. An empty list means every
/// feature-role column the operation accepts.
pub(crate) fn resolve_columns(
    ds: &Dataset,
    op: &Operation,
    columns: &[String],
) -> Result<Vec<usize>, MlError> {
    resolve_in_schema(ds.columns(), op, columns)
}

/// [`resolve_columns`] against a bare schema.
pub(crate) fn resolve_in_schema(
    schema: &[ColumnSpec],
    op: &Operation,
    columns: &[String],
) -> Result<Vec<usize>, MlError> {
    if columns.is_empty() {
        return Ok(schema
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == Role::Feature && op.check_column(&c.name, c.dtype).is_ok())
            .map(|(i, _)| i)
            .collect());
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(columns.len());
    for name in columns {
        if !seen.insert(name.as_str()) {
            return Err(invalid("columns", format!("`{name}` listed twice")));
        }
        let idx = schema
            .iter()
            .position(|c| &c.name == name)
            .ok_or_else(|| MlError::UnknownColumn(name.clone()))?;
        op.check_column(name, schema[idx].dtype)?;
        out.push(idx);
    }
    Ok(out)
}

/// Learned state of one applied operation, sufficient to replay it on rows
/// the operation never saw.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedOp {
    pub op_name: String,
    pub(crate) state: FittedState,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum FittedState {
    Fill(Vec<impute::FittedFill>),
    Bounds(Vec<outliers::FittedBounds>),
    Encode(Vec<encode::FittedEncoding>),
    Drop(Vec<String>),
    Transform(Vec<transform::FittedTransform>),
    Bins(Vec<discretize::FittedBins>),
    Polynomial(Vec<poly::Term>),
    Project(pca::FittedProjection),
}

/// Result of applying one operation.
#[derive(Debug, Clone)]
pub struct Applied {
    pub dataset: Dataset,
    pub fitted: FittedOp,
    /// Feature names kept by `select_features`.
    pub selected: Option<Vec<String>>,
}

/// Parses and applies a descriptor.
pub fn apply(ds: &Dataset, desc: &OpDescriptor) -> Result<Applied, MlError> {
    let op = Operation::parse(desc)?;
    apply_operation(ds, &op, &desc.columns)
}

pub fn apply_operation(
    ds: &Dataset,
    op: &Operation,
    columns: &[String],
) -> Result<Applied, MlError> {
    let cols = resolve_columns(ds, op, columns)?;
    let names: Vec<String> = cols.iter().map(|&i| ds.columns()[i].name.clone()).collect();
    let mut entry = LineageEntry::new(op.name(), names, ds.id());
    entry.params = op.params();
    let mut selected = None;
    let (dataset, state) = match op {
        Operation::FillMissing(s) => impute::apply(ds, &cols, s, entry)?,
        Operation::HandleOutliers { method, action } => {
            outliers::apply(ds, &cols, *method, *action, entry)?
        }
        Operation::EncodeCategorical(s) => encode::apply(ds, &cols, *s, entry)?,
        Operation::RemoveColumns(c) => remove::apply(ds, &cols, *c, entry)?,
        Operation::TransformFeatures(t) => transform::apply(ds, &cols, *t, entry)?,
        Operation::DiscretizeFeatures(m) => discretize::apply(ds, &cols, *m, entry)?,
        Operation::SelectFeatures { method, target } => {
            let (out, state, kept) = select::apply(ds, &cols, *method, target.as_deref(), entry)?;
            selected = Some(kept);
            (out, state)
        }
        Operation::PolynomialFeatures {
            degree,
            interactions_only,
            max_columns,
        } => poly::apply(ds, &cols, *degree, *interactions_only, *max_columns, entry)?,
        Operation::ReduceDimensions { n_components } => {
            pca::apply(ds, &cols, *n_components, entry)?
        }
    };
    Ok(Applied {
        dataset,
        fitted: FittedOp {
            op_name: op.name().to_string(),
            state,
        },
        selected,
    })
}

/// Re-applies a fitted operation to new rows using the stored statistics.
///
/// Columns that are absent from `ds` are skipped when they are the target
/// (unlabelled test data) and reported as `UnknownColumn` otherwise. Row
/// removal is never replayed: `remove_row` outlier handling clips instead, so
/// replayed outputs stay row-aligned with their input.
pub fn replay(ds: &Dataset, fitted: &FittedOp, target: Option<&str>) -> Result<Dataset, MlError> {
    let skip = |name: &str| ds.column_index(name).is_none() && Some(name) == target;
    let mut entry = LineageEntry::new(format!("replay:{}", fitted.op_name), Vec::new(), ds.id());
    entry.note = Some("statistics frozen from the fitting data".into());
    let mut frame = frame::Frame::new(ds);
    match &fitted.state {
        FittedState::Fill(fills) => impute::replay(&mut frame, fills, &skip, &mut entry)?,
        FittedState::Bounds(b) => outliers::replay(&mut frame, b, &skip, &mut entry)?,
        FittedState::Encode(e) => encode::replay(&mut frame, e, &skip, &mut entry)?,
        FittedState::Drop(cols) => {
            for c in cols {
                if skip(c) {
                    continue;
                }
                let idx = frame
                    .index(c)
                    .ok_or_else(|| MlError::UnknownColumn(c.clone()))?;
                frame.remove(idx);
                entry.removed.push(c.clone());
            }
        }
        FittedState::Transform(t) => transform::replay(&mut frame, t, &skip, &mut entry)?,
        FittedState::Bins(b) => discretize::replay(&mut frame, b, &skip, &mut entry)?,
        FittedState::Polynomial(terms) => poly::replay(&mut frame, terms, &mut entry)?,
        FittedState::Project(p) => pca::replay(&mut frame, p, &mut entry)?,
    }
    let (specs, rows) = frame.finish();
    Ok(ds.derive(entry, specs, rows)?)
}
