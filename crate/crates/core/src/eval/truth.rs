use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::config::{ConfigDocument, ParameterPath};
use crate::findings::FindingCategory;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub path: ParameterPath,
    pub category: FindingCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Labeled misconfigurations of one template. An empty list marks an
/// error-free file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub origin: String,
    #[serde(default)]
    pub misconfigured: Vec<TruthEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl GroundTruth {
    pub fn error_free(origin: impl Into<String>) -> Self {
        GroundTruth { origin: origin.into(), misconfigured: Vec::new(), note: None }
    }

    /// Distinct labeled paths in listing order.
    pub fn paths(&self) -> Vec<&ParameterPath> {
        let mut out: Vec<&ParameterPath> = Vec::new();
        for e in &self.misconfigured {
            if !out.contains(&&e.path) {
                out.push(&e.path);
            }
        }
        out
    }

    /// Every labeled path must be a parameter of `doc`.
    pub fn check_against(&self, doc: &ConfigDocument) -> Result<(), EvalError> {
        match self.misconfigured.iter().find(|e| !doc.contains(&e.path)) {
            Some(e) => Err(EvalError::TruthPathMissing { origin: self.origin.clone(), path: e.path.to_string() }),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes") + "\n"
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvalError::Io { path: path.display().to_string(), message: e.to_string() })?;
        serde_json::from_str(&text).map_err(|e| EvalError::Format { path: path.display().to_string(), message: e.to_string() })
    }
}
