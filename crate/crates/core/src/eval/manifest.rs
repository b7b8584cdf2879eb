use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EvalError, GroundTruth};
use crate::config::{ConfigDocument, ParameterPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cohort {
    ErrorFree,
    RealWorld,
    Injected,
}

impl Cohort {
    pub const ALL: [Cohort; 3] = [Cohort::ErrorFree, Cohort::RealWorld, Cohort::Injected];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub template: PathBuf,
    pub truth: PathBuf,
    pub cohort: Cohort,
}

/// Template/truth/cohort triples. Relative paths resolve against `base_dir`,
/// the directory holding the manifest file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// A validated manifest entry, ready for scoring.
#[derive(Debug, Clone)]
pub struct DatasetItem {
    /// Origin is the template path as written in the manifest.
    pub doc: ConfigDocument,
    pub truth: GroundTruth,
    pub cohort: Cohort,
    pub params: Vec<ParameterPath>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvalError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| EvalError::Format { path: path.display().to_string(), message: e.to_string() })?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Reads and cross-checks every entry; the first problem aborts.
    pub fn load_items(&self) -> Result<Vec<DatasetItem>, EvalError> {
        if self.entries.is_empty() {
            return Err(EvalError::EmptyDataset);
        }
        self.entries
            .iter()
            .map(|e| {
                let invalid = |message: String| EvalError::Manifest { entry: e.template.display().to_string(), message };
                let template = self.resolve(&e.template);
                let text = std::fs::read_to_string(&template)
                    .map_err(|err| invalid(format!("template {}: {err}", template.display())))?;
                let doc = ConfigDocument::parse(&text, e.template.display().to_string())
                    .map_err(|err| invalid(format!("template {}: {err}", template.display())))?;
                let truth_path = self.resolve(&e.truth);
                if !truth_path.is_file() {
                    return Err(invalid(format!("ground-truth file {} does not exist", truth_path.display())));
                }
                let truth = GroundTruth::load(&truth_path).map_err(|err| invalid(err.to_string()))?;
                truth.check_against(&doc).map_err(|err| invalid(err.to_string()))?;
                if e.cohort == Cohort::ErrorFree && !truth.misconfigured.is_empty() {
                    return Err(invalid("error-free entry has labeled misconfigurations".into()));
                }
                let params = doc.parameters();
                Ok(DatasetItem { doc, truth, cohort: e.cohort, params })
            })
            .collect()
    }
}
