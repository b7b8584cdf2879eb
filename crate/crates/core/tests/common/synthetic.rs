//! The bundled synthetic evaluation dataset under `fixtures/synthetic`.
//!
//! `dataset.json` is the hand-written definition: where each template comes
//! from and which findings the scripted model reports for it. Everything
//! else in the directory except the hand-labeled templates and truths is
//! derived from it by [`generate`].

use std::collections::BTreeMap;
use std::path::PathBuf;

use samcheck::config::ConfigDocument;
use samcheck::eval::{Cohort, DatasetManifest, GroundTruth, ManifestEntry};
use samcheck::findings::FindingCategory;
use samcheck::gateway::{request_id, CacheRecord, ProviderConfig};
use samcheck::inject::{inject, Subcategory};
use samcheck::prompt::{build_prompt, PromptVariant};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::repo_root;

pub const CACHE_TIMESTAMP: &str = "2024-01-01T00:00:00+00:00";

#[derive(Debug, Deserialize)]
pub struct Dataset {
    pub files: Vec<FileSpec>,
}

#[derive(Debug, Deserialize)]
pub struct FileSpec {
    pub name: String,
    pub cohort: Cohort,
    pub source: Source,
    #[serde(default = "yes")]
    pub delimited: bool,
    pub findings: Vec<ScriptedFinding>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Source {
    Copy { copy: String },
    Inject { inject: String, subcategory: Subcategory, seed: u64 },
    Hand(String),
}

#[derive(Debug, Deserialize)]
pub struct ScriptedFinding {
    pub category: FindingCategory,
    pub mention: String,
    pub explanation: String,
    /// Parameter the finding must align to; `None` means unmatched.
    pub expect: Option<String>,
}

impl FileSpec {
    pub fn template_rel(&self) -> String {
        format!("templates/{}.yaml", self.name)
    }

    pub fn truth_rel(&self) -> String {
        format!("truths/{}.truth.json", self.name)
    }
}

pub fn dir() -> PathBuf {
    repo_root().join("fixtures/synthetic")
}

pub fn load() -> Dataset {
    serde_json::from_str(&std::fs::read_to_string(dir().join("dataset.json")).unwrap()).unwrap()
}

/// The scripted model answer for one file.
pub fn render_response(spec: &FileSpec) -> String {
    let mut body = String::new();
    if spec.findings.is_empty() {
        body.push_str("No misconfigurations were found.\n");
    }
    let mut current: Option<FindingCategory> = None;
    for f in &spec.findings {
        if current != Some(f.category) {
            if current.is_some() {
                body.push('\n');
            }
            body.push_str(f.category.heading());
            body.push_str(":\n");
            current = Some(f.category);
        }
        if f.explanation.is_empty() {
            body.push_str(&format!("- {}\n", f.mention));
        } else {
            body.push_str(&format!("- {}: {}\n", f.mention, f.explanation));
        }
    }
    if spec.delimited {
        format!("Here is my analysis.\n<START>\n{body}<END>\n")
    } else {
        format!("Here is my analysis.\n\n{body}")
    }
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn json(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).unwrap() + "\n"
}

/// Derived files keyed by path relative to the dataset directory.
pub fn generate(dataset: &Dataset) -> BTreeMap<String, String> {
    let base = dir();
    let provider = ProviderConfig::default();
    let mut out = BTreeMap::new();
    let mut cache = String::new();
    let mut entries = Vec::new();
    for spec in &dataset.files {
        let template_rel = spec.template_rel();
        let text = match &spec.source {
            Source::Copy { copy } => {
                let text = std::fs::read_to_string(base.join(copy)).unwrap();
                out.insert(spec.truth_rel(), GroundTruth::error_free(&template_rel).to_json());
                text
            }
            Source::Inject { inject: from, subcategory, seed } => {
                let doc = ConfigDocument::from_file(&base.join(from)).unwrap();
                let outcome = inject(&doc, *subcategory, *seed).unwrap();
                let truth = GroundTruth { origin: template_rel.clone(), ..outcome.ground_truth };
                out.insert(spec.truth_rel(), truth.to_json());
                outcome.mutated.source_text
            }
            Source::Hand(_) => std::fs::read_to_string(base.join(&template_rel)).unwrap(),
        };
        if !matches!(spec.source, Source::Hand(_)) {
            out.insert(template_rel.clone(), text.clone());
        }
        let prompt = build_prompt(PromptVariant::SlsDetector, &text).unwrap();
        let record = CacheRecord {
            request_id: request_id(&provider.model_name, provider.temperature, &prompt),
            model: provider.model_name.clone(),
            temperature: provider.temperature,
            prompt_sha: sha256_hex(&prompt),
            response_text: render_response(spec),
            timestamp: CACHE_TIMESTAMP.to_string(),
        };
        cache.push_str(&serde_json::to_string(&record).unwrap());
        cache.push('\n');
        entries.push(ManifestEntry { template: template_rel.into(), truth: spec.truth_rel().into(), cohort: spec.cohort });
    }
    out.insert("cache.jsonl".into(), cache);
    out.insert("manifest.json".into(), json(&DatasetManifest { entries, base_dir: PathBuf::new() }));
    out
}

/// Writes the derived files when `SAMCHECK_UPDATE_FIXTURES` is set;
/// otherwise lists the files whose committed bytes differ.
pub fn sync(dataset: &Dataset) -> Vec<String> {
    let update = std::env::var_os("SAMCHECK_UPDATE_FIXTURES").is_some();
    let mut stale = Vec::new();
    for (rel, text) in generate(dataset) {
        let path = dir().join(&rel);
        if update {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &text).unwrap();
        } else if std::fs::read_to_string(&path).ok().as_deref() != Some(text.as_str()) {
            stale.push(rel);
        }
    }
    stale
}
