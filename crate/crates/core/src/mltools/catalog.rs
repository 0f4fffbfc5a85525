//! Static description of every library operation and its parameters.
//!
//! The same table drives parameter validation, the plan registry and the
//! tool descriptions injected into planner prompts.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Enum(&'static [&'static str]),
    Number,
    Integer,
    Bool,
    Text,
    /// Any scalar (used for constant fill values).
    Scalar,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamInfo {
    pub name: &'static str,
    pub kind: ParamKind,
    pub description: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct OpInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamInfo],
}

impl OpInfo {
    pub fn param(&self, name: &str) -> Option<&ParamInfo> {
        self.params.iter().find(|p| p.name == name)
    }
}

const fn p(name: &'static str, kind: ParamKind, description: &'static str) -> ParamInfo {
    ParamInfo {
        name,
        kind,
        description,
    }
}

pub const FILL_STRATEGIES: &[&str] = &["mean", "median", "mode", "constant", "knn", "group_wise"];
pub const AGGREGATES: &[&str] = &["mean", "median", "mode"];
pub const OUTLIER_METHODS: &[&str] = &["iqr", "zscore", "quantile"];
pub const OUTLIER_ACTIONS: &[&str] = &["clip", "remove_row", "set_missing"];
pub const ENCODINGS: &[&str] = &["label", "one_hot", "frequency"];
pub const REMOVAL_CRITERIA: &[&str] = &["missing_fraction", "variance", "correlation", "explicit"];
pub const TRANSFORMS: &[&str] = &["log1p", "minmax", "standard"];
pub const BIN_METHODS: &[&str] = &["equal_width", "quantile", "kmeans"];
pub const SELECTION_METHODS: &[&str] = &["variance", "correlation", "mutual_info"];

pub const CATALOG: &[OpInfo] = &[
    OpInfo {
        name: "fill_missing",
        description: "Impute missing values with mean, median, mode, a constant, KNN or group-wise aggregates",
        params: &[
            p("strategy", ParamKind::Enum(FILL_STRATEGIES), "imputation strategy"),
            p("value", ParamKind::Scalar, "fill value (strategy=constant)"),
            p("k", ParamKind::Integer, "neighbours (strategy=knn, default 5)"),
            p("group_col", ParamKind::Text, "grouping column (strategy=group_wise)"),
            p("agg", ParamKind::Enum(AGGREGATES), "group aggregate (strategy=group_wise)"),
        ],
    },
    OpInfo {
        name: "handle_outliers",
        description: "Detect outliers by IQR, z-score or quantile bounds and clip, drop or blank them",
        params: &[
            p("method", ParamKind::Enum(OUTLIER_METHODS), "detection rule"),
            p("multiplier", ParamKind::Number, "IQR fence multiplier (method=iqr, default 1.5)"),
            p("threshold", ParamKind::Number, "|z| threshold (method=zscore, default 3)"),
            p("lower", ParamKind::Number, "lower quantile (method=quantile)"),
            p("upper", ParamKind::Number, "upper quantile (method=quantile)"),
            p("action", ParamKind::Enum(OUTLIER_ACTIONS), "treatment (default clip)"),
        ],
    },
    OpInfo {
        name: "encode_categorical",
        description: "Encode categorical columns as labels, one-hot indicators or frequencies",
        params: &[
            p("scheme", ParamKind::Enum(ENCODINGS), "encoding scheme"),
            p("max_cardinality", ParamKind::Integer, "one-hot category limit (default 50)"),
        ],
    },
    OpInfo {
        name: "remove_columns",
        description: "Drop columns by missingness, low variance, pairwise correlation or an explicit list",
        params: &[
            p("criterion", ParamKind::Enum(REMOVAL_CRITERIA), "removal rule"),
            p("threshold", ParamKind::Number, "rule threshold (not used by explicit)"),
        ],
    },
    OpInfo {
        name: "transform_features",
        description: "Apply log1p, min-max or standard scaling",
        params: &[p("transform", ParamKind::Enum(TRANSFORMS), "transformation")],
    },
    OpInfo {
        name: "discretize_features",
        description: "Bin numeric columns by equal width, quantiles or 1-D k-means",
        params: &[
            p("method", ParamKind::Enum(BIN_METHODS), "binning rule"),
            p("bins", ParamKind::Integer, "number of bins (>= 2)"),
        ],
    },
    OpInfo {
        name: "select_features",
        description: "Keep features by variance, correlation with the target or mutual information",
        params: &[
            p("method", ParamKind::Enum(SELECTION_METHODS), "selection rule"),
            p("threshold", ParamKind::Number, "minimum variance (method=variance)"),
            p("top", ParamKind::Integer, "features to keep (correlation, mutual_info)"),
            p("target", ParamKind::Text, "target column (defaults to the dataset target)"),
        ],
    },
    OpInfo {
        name: "create_polynomial_features",
        description: "Append powers and interaction products of numeric columns",
        params: &[
            p("degree", ParamKind::Integer, "maximum total degree (2 or 3)"),
            p("interactions_only", ParamKind::Bool, "only cross-products of distinct columns"),
            p("max_columns", ParamKind::Integer, "output column cap (default 1000)"),
        ],
    },
    OpInfo {
        name: "reduce_dimensions",
        description: "Replace numeric columns by their leading principal components",
        params: &[p("n_components", ParamKind::Integer, "components to keep")],
    },
];

pub fn lookup(name: &str) -> Option<&'static OpInfo> {
    CATALOG.iter().find(|op| op.name == name)
}
