// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node type `{0}`")]
    UnknownType(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("duplicate node `{id}` declared with conflicting type `{ty}`")]
    ConflictingNode { id: String, ty: String },

    #[error("invalid weight `{weight}` on edge {src} -> {dst}: weights must be positive integers")]
    InvalidWeight {
        src: String,
        dst: String,
        weight: String,
    },

    #[error("label on non-target node `{0}`")]
    LabelOnNonTarget(String),

    #[error("label {label} out of range 1..={classes} for node `{id}`")]
    LabelOutOfRange { id: String, label: u32, classes: u32 },

    #[error("no such relation {0}-{1}")]
    NoSuchRelation(String, String),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid meta-path `{path}`: {reason}")]
    MetaPath { path: String, reason: String },

    #[error("pathsim requires palindromic path (matrix is not symmetric)")]
    NotSymmetric,

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("need at least 2 seed nodes to build training pairs, got {0}")]
    TooFewSeeds(usize),

    #[error("svr did not converge after {iterations} iterations (kkt residual {residual:.3e})")]
    SvrNotConverged {
        iterations: usize,
        residual: f64,
        best: Box<crate::weights::BetaWeights>,
    },

    #[error("propagation did not converge after {iterations} iterations (residual {residual:.3e})")]
    PropagationNotConverged {
        iterations: usize,
        residual: f64,
        last: Box<crate::propagate::ScoreMatrix>,
    },

    #[error("linear solve failed: system is ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("NaN score at row {0}")]
    NanScore(usize),

    #[error("seed fraction {fraction} selects no seed nodes")]
    EmptySplit { fraction: f64 },

    #[error("empty evaluation set")]
    EmptyEvalSet,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("generator: {0}")]
    Generator(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            Error::Config(_) | Error::MetaPath { .. } | Error::Schema(_)
        )
    }

    /// Stable snake_case name of the innermost error, for machine-readable
    /// reporting.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::UnknownType(_) => "unknown_type",
            Error::UnknownNode(_) => "unknown_node",
            Error::ConflictingNode { .. } => "conflicting_node",
            Error::InvalidWeight { .. } => "invalid_weight",
            Error::LabelOnNonTarget(_) => "label_on_non_target",
            Error::LabelOutOfRange { .. } => "label_out_of_range",
            Error::NoSuchRelation(..) => "no_such_relation",
            Error::Schema(_) => "schema",
            Error::MetaPath { .. } => "metapath",
            Error::NotSymmetric => "not_symmetric",
            Error::NegativeEntry { .. } => "negative_entry",
            Error::Dimension(_) => "dimension",
            Error::TooFewSeeds(_) => "too_few_seeds",
            Error::SvrNotConverged { .. } => "svr_not_converged",
            Error::PropagationNotConverged { .. } => "propagation_not_converged",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::NanScore(_) => "nan_score",
            Error::EmptySplit { .. } => "empty_split",
            Error::EmptyEvalSet => "empty_eval_set",
            Error::Config(_) => "config",
            Error::Generator(_) => "generator",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Json { .. } => "json",
            Error::Parse { .. } => "parse",
            Error::Context { .. } => unreachable!("root() strips context"),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
