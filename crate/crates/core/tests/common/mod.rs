#![allow(dead_code)]

pub mod checks;
pub mod planted;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use samcheck::config::{serialize_with_lines, ConfigDocument, LineSpan, ParameterPath};
use samcheck::inject::InjectionOutcome;
use similar::{ChangeTag, TextDiff};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(rel: &str) -> ConfigDocument {
    ConfigDocument::from_file(&repo_root().join("fixtures").join(rel)).unwrap()
}

/// The clean fixtures, sorted by file name.
pub fn clean_fixtures() -> Vec<ConfigDocument> {
    yaml_files(&repo_root().join("fixtures/clean")).iter().map(|p| ConfigDocument::from_file(p).unwrap()).collect()
}

pub fn yaml_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "yaml"))
        .collect();
    files.sort();
    files
}

/// Lines occupied by `p` and, for entry keys, everything nested under it.
fn covered(p: &ParameterPath, spans: &BTreeMap<ParameterPath, LineSpan>, out: &mut BTreeSet<usize>) {
    for (q, (a, b)) in spans {
        let inside = if p.is_value() { q.segments() == p.segments() } else { q.starts_with(p.segments()) };
        if inside {
            out.extend(*a..=*b);
        }
    }
}

fn strip_lead(line: &str) -> &str {
    line.trim_start().trim_start_matches("- ").trim_start()
}

/// Changed lines of the serialized documents that fall outside the site and
/// ground-truth parameters. Lines that only moved or lost a `- ` lead pair
/// off against each other.
pub fn minimality_violations(original: &ConfigDocument, outcome: &InjectionOutcome) -> Vec<String> {
    let (old_text, old_spans) = serialize_with_lines(original);
    let (new_text, new_spans) = serialize_with_lines(&outcome.mutated);
    let mut touched: Vec<&ParameterPath> = outcome.ground_truth.misconfigured.iter().map(|e| &e.path).collect();
    touched.push(&outcome.site);
    let (mut old_ok, mut new_ok) = (BTreeSet::new(), BTreeSet::new());
    for p in touched {
        covered(p, &old_spans, &mut old_ok);
        covered(p, &new_spans, &mut new_ok);
    }
    let diff = TextDiff::from_lines(&old_text, &new_text);
    let (mut removed, mut added) = (Vec::new(), Vec::new());
    for change in diff.iter_all_changes() {
        match change.tag() {
            ChangeTag::Delete if !old_ok.contains(&(change.old_index().unwrap() + 1)) => {
                removed.push(change.value().trim_end().to_string())
            }
            ChangeTag::Insert if !new_ok.contains(&(change.new_index().unwrap() + 1)) => {
                added.push(change.value().trim_end().to_string())
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    for r in removed {
        match added.iter().position(|a| strip_lead(a) == strip_lead(&r)) {
            Some(i) => {
                added.remove(i);
            }
            None => out.push(format!("-{r}")),
        }
    }
    out.extend(added.into_iter().map(|a| format!("+{a}")));
    out
}
