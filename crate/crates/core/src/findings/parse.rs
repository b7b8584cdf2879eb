use std::sync::LazyLock;

use regex::Regex;

use super::{Finding, FindingCategory};

static HEADING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:(resource\s+types?\s+errors?)|(configuration\s+entry\s+values?\s+errors?)|(configuration\s+entry\s+errors?)|(entry\s+dependenc(?:y|ies)\s+errors?)|(value\s+dependenc(?:y|ies)\s+errors?))\b",
    )
    .unwrap()
});

static BULLET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:[-*•+]|\d{1,3}[.)])(?:\s+|$)").unwrap());

static CONCRETE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"`[^`\s][^`]*`|\w::\w|\b[A-Z][a-z0-9]+[A-Z][a-z0-9]+[A-Za-z0-9]*\b|\b[A-Z]\w*\.[A-Z]\w*").unwrap()
});

/// Capture group order of [`HEADING`].
const CATEGORY_GROUPS: [FindingCategory; 5] = [
    FindingCategory::ResourceTypeError,
    FindingCategory::ConfigurationEntryValueError,
    FindingCategory::ConfigurationEntryError,
    FindingCategory::EntryDependencyError,
    FindingCategory::ValueDependencyError,
];

struct Heading {
    category: FindingCategory,
    start: usize,
    body_start: usize,
}

/// Headings followed by a colon or by the end of their line, ignoring
/// markdown emphasis around them.
fn headings(text: &str) -> Vec<Heading> {
    let mut out = Vec::new();
    for caps in HEADING.captures_iter(text) {
        let m = caps.get(0).unwrap();
        let category = (1..=5).find(|&i| caps.get(i).is_some()).map(|i| CATEGORY_GROUPS[i - 1]).unwrap();
        let rest = &text[m.end()..];
        let skipped = rest.len() - rest.trim_start_matches(['*', '_', ' ', '\t']).len();
        let after = &rest[skipped..];
        let body_start = if let Some(stripped) = after.strip_prefix(':') {
            let extra = stripped.len() - stripped.trim_start_matches(['*', '_']).len();
            m.end() + skipped + 1 + extra
        } else if after.is_empty() || after.starts_with(['\n', '\r']) {
            m.end() + skipped
        } else {
            continue;
        };
        out.push(Heading { category, start: m.start(), body_start });
    }
    out
}

/// Findings from the delimited part of a response.
pub fn parse_findings(inner: &str) -> Vec<Finding> {
    let heads = headings(inner);
    let mut out = Vec::new();
    let preamble_end = heads.first().map_or(inner.len(), |h| h.start);
    for f in section_findings(&inner[..preamble_end], FindingCategory::Uncategorized) {
        if CONCRETE.is_match(&f.mention_text) || CONCRETE.is_match(&f.explanation) {
            out.push(f);
        }
    }
    for (i, h) in heads.iter().enumerate() {
        let end = heads.get(i + 1).map_or(inner.len(), |n| n.start);
        out.extend(section_findings(&inner[h.body_start..end], h.category));
    }
    out
}

fn section_findings(body: &str, category: FindingCategory) -> Vec<Finding> {
    let mut items: Vec<(usize, String)> = Vec::new();
    for line in body.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        if let Some(m) = BULLET.find(trimmed) {
            items.push((indent, trimmed[m.end()..].to_string()));
        } else if let Some(last) = items.last_mut().filter(|(i, _)| indent > *i) {
            last.1.push(' ');
            last.1.push_str(trimmed);
        } else {
            items.push((indent, trimmed.to_string()));
        }
    }
    items
        .into_iter()
        .map(|(_, text)| clean(&text))
        .filter(|t| !t.is_empty() && !is_nothing(t))
        .map(|t| {
            let (mention, explanation) = split_mention(&t);
            Finding::new(category, mention, explanation)
        })
        .collect()
}

fn clean(text: &str) -> String {
    let t = text.trim().trim_end_matches([',', ';']).trim();
    let t = t.trim_matches(|c| c == '*' || c == '_').trim();
    t.to_string()
}

/// "None", "N/A", "...", "No misconfigurations found." and similar.
fn is_nothing(text: &str) -> bool {
    let t = text.trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace() || c == '…').to_lowercase();
    if t.is_empty()
        || matches!(t.as_str(), "none" | "n/a" | "na" | "nothing" | "none found" | "none detected" | "none identified")
    {
        return true;
    }
    let words = t.split_whitespace().count();
    (t.starts_with("no ") || t.starts_with("none ") || t.starts_with("there are no ") || t.starts_with("not found"))
        && words <= 10
        && ["error", "misconfiguration", "issue", "problem", "found", "detected", "identified"].iter().any(|w| t.contains(w))
}

/// Splits at the first `: ` (or ` - `) outside backticks and not part of `::`.
fn split_mention(text: &str) -> (String, String) {
    let bytes = text.as_bytes();
    let mut in_code = false;
    let mut dash = None;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'`' => in_code = !in_code,
            b':' if !in_code && bytes.get(i + 1).is_none_or(|c| c.is_ascii_whitespace()) && (i == 0 || bytes[i - 1] != b':') => {
                let mention = text[..i].trim();
                if !mention.is_empty() {
                    return (mention.to_string(), text[i + 1..].trim().to_string());
                }
            }
            b'-' if !in_code && dash.is_none() && i > 0 && bytes[i - 1] == b' ' && bytes.get(i + 1) == Some(&b' ') => {
                dash = Some(i);
            }
            _ => {}
        }
    }
    match dash {
        Some(i) if !text[..i].trim().is_empty() => (text[..i].trim().to_string(), text[i + 1..].trim().to_string()),
        _ => (text.to_string(), String::new()),
    }
}
