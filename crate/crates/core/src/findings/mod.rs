//! Detector output: delimiter extraction, category parsing, and alignment of
//! free-text findings to configuration parameters.

mod align;
mod extract;
mod parse;

use serde::{Deserialize, Serialize};

use crate::config::ParameterPath;

pub use align::{align_finding, align_findings};
pub use extract::{extract_delimited, ExtractWarning};
pub use parse::parse_findings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FindingCategory {
    ResourceTypeError,
    ConfigurationEntryError,
    ConfigurationEntryValueError,
    EntryDependencyError,
    ValueDependencyError,
    Uncategorized,
}

impl FindingCategory {
    pub const NAMED: [FindingCategory; 5] = [
        FindingCategory::ResourceTypeError,
        FindingCategory::ConfigurationEntryError,
        FindingCategory::ConfigurationEntryValueError,
        FindingCategory::EntryDependencyError,
        FindingCategory::ValueDependencyError,
    ];

    /// The heading used in responses.
    pub fn heading(self) -> &'static str {
        match self {
            FindingCategory::ResourceTypeError => "Resource Type Errors",
            FindingCategory::ConfigurationEntryError => "Configuration Entry Errors",
            FindingCategory::ConfigurationEntryValueError => "Configuration Entry Value Errors",
            FindingCategory::EntryDependencyError => "Entry Dependency Errors",
            FindingCategory::ValueDependencyError => "Value Dependency Errors",
            FindingCategory::Uncategorized => "Uncategorized",
        }
    }

    /// Categories whose subject is a value rather than an entry key.
    pub fn targets_value(self) -> bool {
        matches!(
            self,
            FindingCategory::ResourceTypeError
                | FindingCategory::ConfigurationEntryValueError
                | FindingCategory::ValueDependencyError
        )
    }

    pub fn targets_entry(self) -> bool {
        matches!(self, FindingCategory::ConfigurationEntryError | FindingCategory::EntryDependencyError)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub category: FindingCategory,
    pub mention_text: String,
    pub explanation: String,
    /// `None` is the unmatched state.
    pub aligned_path: Option<ParameterPath>,
}

impl Finding {
    pub fn new(category: FindingCategory, mention_text: impl Into<String>, explanation: impl Into<String>) -> Self {
        Finding { category, mention_text: mention_text.into(), explanation: explanation.into(), aligned_path: None }
    }

    pub fn is_matched(&self) -> bool {
        self.aligned_path.is_some()
    }

    pub fn full_text(&self) -> String {
        if self.explanation.is_empty() {
            self.mention_text.clone()
        } else {
            format!("{}: {}", self.mention_text, self.explanation)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    SlsDetector,
    BasicLLM,
    DataDriven,
}

impl DetectorKind {
    pub fn label(self) -> &'static str {
        match self {
            DetectorKind::SlsDetector => "sls",
            DetectorKind::BasicLLM => "basic",
            DetectorKind::DataDriven => "dd",
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sls" => Ok(DetectorKind::SlsDetector),
            "basic" => Ok(DetectorKind::BasicLLM),
            "dd" => Ok(DetectorKind::DataDriven),
            other => Err(format!("unknown detector `{other}` (expected sls, basic or dd)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub origin: String,
    pub detector: DetectorKind,
    pub findings: Vec<Finding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl DetectionReport {
    /// Distinct aligned paths, in first-seen order.
    pub fn detected_paths(&self) -> Vec<ParameterPath> {
        let mut out: Vec<ParameterPath> = Vec::new();
        for p in self.findings.iter().filter_map(|f| f.aligned_path.as_ref()) {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
        out
    }

    pub fn unmatched_count(&self) -> usize {
        self.findings.iter().filter(|f| !f.is_matched()).count()
    }
}

/// Full post-processing of a raw model answer for `doc`.
pub fn process_response(raw: &str, doc: &crate::config::ConfigDocument, detector: DetectorKind) -> DetectionReport {
    let (inner, warning) = extract_delimited(raw);
    let findings = align_findings(parse_findings(&inner), doc);
    DetectionReport {
        origin: doc.origin.clone(),
        detector,
        findings,
        raw_response: Some(raw.to_string()),
        warnings: warning.into_iter().map(|w| w.to_string()).collect(),
    }
}
