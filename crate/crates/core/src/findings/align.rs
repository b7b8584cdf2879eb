//! Text-to-parameter alignment.
//!
//! Cascade, tried on the mention and then on the whole finding text:
//! 1. a dotted path naming a parameter (full, or a unique path suffix);
//! 2. an entry key name that occurs exactly once in the document;
//! 3. an entry key under a mentioned resource (or under a unique key that
//!    serves as an anchor), first occurrence in document order;
//! 4. a scalar value that occurs exactly once.
//!
//! The result is then moved to the entry or the value at the same location
//! when the finding's category is about the other one.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use regex::Regex;

use super::{Finding, FindingCategory};
use crate::config::{ConfigDocument, Node, ParamKind, ParameterPath, Segment};

static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z][A-Za-z0-9_-]*").unwrap());
static PATHLIKE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[A-Za-z0-9_-]+(?:(?:\.|/|\s*>\s*)[A-Za-z0-9_-]+|\[\d+\])+").unwrap());
static QUOTED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"`([^`]+)`|"([^"]+)"|'([^']+)'"#).unwrap());

struct Index<'a> {
    params: Vec<ParameterPath>,
    param_set: HashSet<ParameterPath>,
    entries_by_key: HashMap<&'a str, Vec<usize>>,
    values_by_text: HashMap<String, Vec<usize>>,
    logical_names: HashSet<String>,
}

impl<'a> Index<'a> {
    fn new(doc: &'a ConfigDocument, params: &'a [ParameterPath]) -> Self {
        let mut entries_by_key: HashMap<&str, Vec<usize>> = HashMap::new();
        let mut values_by_text: HashMap<String, Vec<usize>> = HashMap::new();
        let logical_names: HashSet<String> = doc.logical_names().into_iter().map(str::to_string).collect();
        for (i, p) in params.iter().enumerate() {
            if p.kind() == ParamKind::EntryKey {
                let is_logical_name = p.segments().len() == 2 && p.segments()[0].key() == Some("Resources");
                if !is_logical_name {
                    entries_by_key.entry(p.last_key().unwrap()).or_default().push(i);
                }
            } else if let Some(text) = doc.node(p.segments()).and_then(leaf_text) {
                values_by_text.entry(text).or_default().push(i);
            }
        }
        Index {
            params: params.to_vec(),
            param_set: params.iter().cloned().collect(),
            entries_by_key,
            values_by_text,
            logical_names,
        }
    }

    fn align(&self, text: &str, category: FindingCategory) -> Option<ParameterPath> {
        let found = self
            .by_path(text)
            .or_else(|| self.by_key(text))
            .or_else(|| self.by_resource_type(text, category))
            .or_else(|| self.by_value(text))?;
        Some(self.adjust(found, category))
    }

    fn by_path(&self, text: &str) -> Option<ParameterPath> {
        let mut best: Option<ParameterPath> = None;
        for m in PATHLIKE.find_iter(text) {
            let segments = path_segments(m.as_str());
            if segments.len() < 2 {
                continue;
            }
            let candidate = self.exact(&segments).or_else(|| self.suffix(&segments));
            if let Some(c) = candidate {
                if best.as_ref().is_none_or(|b| c.segments().len() > b.segments().len()) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn exact(&self, segments: &[Segment]) -> Option<ParameterPath> {
        let entry = ParameterPath::entry(segments.to_vec());
        if self.param_set.contains(&entry) {
            return Some(entry);
        }
        let value = ParameterPath::value(segments.to_vec());
        self.param_set.contains(&value).then_some(value)
    }

    /// The unique entry (or, failing that, value) whose path ends with `segments`.
    fn suffix(&self, segments: &[Segment]) -> Option<ParameterPath> {
        for want_entry in [true, false] {
            let hits: Vec<&ParameterPath> = self
                .params
                .iter()
                .filter(|p| (p.kind() == ParamKind::EntryKey) == want_entry && p.segments().ends_with(segments))
                .collect();
            if hits.len() == 1 {
                return Some(hits[0].clone());
            }
        }
        None
    }

    fn mentioned_keys<'t>(&self, text: &'t str) -> Vec<&'t str> {
        let mut out: Vec<&str> = Vec::new();
        for w in words(text) {
            if self.entries_by_key.contains_key(w) && !self.logical_names.contains(w) && !out.contains(&w) {
                out.push(w);
            }
        }
        out
    }

    fn by_key(&self, text: &str) -> Option<ParameterPath> {
        let keys = self.mentioned_keys(text);
        let unique: Vec<(&str, &ParameterPath)> = keys
            .iter()
            .filter_map(|k| match self.entries_by_key[k].as_slice() {
                [i] => Some((*k, &self.params[*i])),
                _ => None,
            })
            .collect();
        let is_anchor = |path: &ParameterPath, own: &str| {
            keys.iter().any(|other| {
                *other != own
                    && self.entries_by_key[other].iter().any(|&i| {
                        self.params[i].segments().len() > path.segments().len() && self.params[i].starts_with(path.segments())
                    })
            })
        };
        if let Some((_, p)) = unique.iter().find(|(k, p)| !is_anchor(p, k)) {
            return Some((*p).clone());
        }
        // Scoped lookup under mentioned resources and anchors.
        let mut scopes: Vec<Vec<Segment>> = words(text)
            .into_iter()
            .filter(|w| self.logical_names.contains(*w))
            .map(|w| vec![Segment::from("Resources"), Segment::from(w)])
            .collect();
        scopes.extend(unique.iter().map(|(_, p)| p.segments().to_vec()));
        for key in &keys {
            for scope in &scopes {
                let hit = self.entries_by_key[key]
                    .iter()
                    .map(|&i| &self.params[i])
                    .find(|p| p.segments().len() > scope.len() && p.starts_with(scope));
                if let Some(p) = hit {
                    return Some(p.clone());
                }
            }
        }
        None
    }

    /// A resource named without any of its keys, under a resource type finding.
    fn by_resource_type(&self, text: &str, category: FindingCategory) -> Option<ParameterPath> {
        if category != FindingCategory::ResourceTypeError {
            return None;
        }
        let name = words(text).into_iter().find(|w| self.logical_names.contains(*w))?;
        let path = ParameterPath::value(vec![Segment::from("Resources"), Segment::from(name), Segment::from("Type")]);
        self.param_set.contains(&path).then_some(path)
    }

    fn by_value(&self, text: &str) -> Option<ParameterPath> {
        let mut candidates: Vec<&str> =
            QUOTED.captures_iter(text).filter_map(|c| c.iter().skip(1).flatten().next().map(|m| m.as_str().trim())).collect();
        candidates.extend(
            text.split_whitespace()
                .map(|t| {
                    t.trim_matches(|c: char| {
                        matches!(c, ',' | ';' | '(' | ')' | '`' | '"' | '\'') || c == '.' && !t.ends_with("..")
                    })
                })
                .map(|t| t.trim_end_matches(':')),
        );
        candidates.into_iter().filter(|c| c.len() >= 2).find_map(|c| match self.values_by_text.get(c).map(Vec::as_slice) {
            Some([i]) => Some(self.params[*i].clone()),
            _ => None,
        })
    }

    fn adjust(&self, path: ParameterPath, category: FindingCategory) -> ParameterPath {
        if category.targets_value() && path.kind() == ParamKind::EntryKey {
            let value = path.to_value();
            if self.param_set.contains(&value) {
                return value;
            }
        }
        if category.targets_entry() && path.is_value() {
            if let Some(entry) = path.to_entry().filter(|e| self.param_set.contains(e)) {
                return entry;
            }
        }
        path
    }
}

/// Identifier-like words, excluding parts of `Vendor::Service::Type` strings.
fn words(text: &str) -> Vec<&str> {
    WORD.find_iter(text)
        .filter(|m| !text[..m.start()].ends_with("::") && !text[m.end()..].starts_with("::"))
        .map(|m| m.as_str())
        .collect()
}

fn leaf_text(node: &Node) -> Option<String> {
    match node {
        Node::Scalar(s) if !s.text.is_empty() => Some(s.text.clone()),
        Node::Tagged(_, payload) => match payload.as_ref() {
            Node::Scalar(s) if !s.text.is_empty() => Some(s.text.clone()),
            _ => None,
        },
        _ => None,
    }
}

fn path_segments(text: &str) -> Vec<Segment> {
    let mut out = Vec::new();
    for part in text.split(['.', '/', '>']) {
        let part = part.trim();
        let (name, rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if !name.is_empty() {
            out.push(Segment::Key(name.to_string()));
        }
        for idx in rest.split(['[', ']']).filter(|s| !s.is_empty()) {
            if let Ok(n) = idx.parse::<usize>() {
                out.push(Segment::Index(n));
            }
        }
    }
    out
}

/// Aligns one finding against a prepared parameter list of `doc`.
pub fn align_finding(finding: &Finding, doc: &ConfigDocument) -> Finding {
    let params = doc.parameters();
    let index = Index::new(doc, &params);
    align_with(&index, finding)
}

fn align_with(index: &Index, finding: &Finding) -> Finding {
    let mut out = finding.clone();
    out.aligned_path =
        index.align(&finding.mention_text, finding.category).or_else(|| index.align(&finding.full_text(), finding.category));
    out
}

pub fn align_findings(findings: Vec<Finding>, doc: &ConfigDocument) -> Vec<Finding> {
    let params = doc.parameters();
    let index = Index::new(doc, &params);
    findings.iter().map(|f| align_with(&index, f)).collect()
}
