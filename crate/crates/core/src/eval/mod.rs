//! Parameter-level scoring of detectors against labeled datasets.

mod counts;
mod manifest;
mod run;
mod truth;

pub use counts::{classify, compute_metrics, f1_score, ConfusionCounts, Metrics};
pub use manifest::{Cohort, DatasetItem, DatasetManifest, ManifestEntry};
pub use run::{
    render_table, run_eval, run_eval_items, score_file, EvalReport, FileFailure, FileOutcome, MeanMetrics, RunReport,
    DEFAULT_REPETITIONS,
};
pub use truth::{GroundTruth, TruthEntry};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("{origin}: ground truth names `{path}`, which is not a parameter of the template")]
    TruthPathMissing { origin: String, path: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("repetitions must be at least 1")]
    InvalidRepetitions,
    #[error("manifest entry {entry}: {message}")]
    Manifest { entry: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed {path}: {message}")]
    Format { path: String, message: String },
}
