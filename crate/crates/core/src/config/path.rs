//! Hierarchical parameter addresses and the parameter counting rule.
//!
//! A parameter is either a mapping key at any depth ([`ParamKind::EntryKey`])
//! or a scalar/tagged leaf that is the value of a key or a sequence element
//! ([`ParamKind::ScalarValue`]). The value of `Resources.<name>.Type` is marked
//! [`ParamKind::ResourceTypeDecl`] instead of `ScalarValue`.
//!
//! Dotted rendering: keys are joined with `.`, sequence indices are written
//! `[i]`, and value parameters carry an `@value` suffix so a key and its value
//! never render to the same text. Keys containing `.[]@"\`, whitespace, or
//! nothing at all are written as double-quoted strings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::node::Node;
use super::ConfigDocument;

const VALUE_SUFFIX: &str = "@value";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    Key(String),
    Index(usize),
}

impl Segment {
    pub fn key(&self) -> Option<&str> {
        match self {
            Segment::Key(k) => Some(k),
            Segment::Index(_) => None,
        }
    }
}

impl From<&str> for Segment {
    fn from(k: &str) -> Self {
        Segment::Key(k.to_string())
    }
}

impl From<usize> for Segment {
    fn from(i: usize) -> Self {
        Segment::Index(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKind {
    EntryKey,
    ScalarValue,
    ResourceTypeDecl,
}

impl ParamKind {
    pub fn is_value(self) -> bool {
        !matches!(self, ParamKind::EntryKey)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParameterPath {
    segments: Vec<Segment>,
    kind: ParamKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid parameter path `{text}`: {reason}")]
pub struct PathParseError {
    pub text: String,
    pub reason: &'static str,
}

impl ParameterPath {
    /// Path of the entry key at `segments`; the last segment must be a key.
    pub fn entry(segments: Vec<Segment>) -> Self {
        debug_assert!(matches!(segments.last(), Some(Segment::Key(_))));
        ParameterPath { segments, kind: ParamKind::EntryKey }
    }

    /// Path of the leaf value stored at `segments`.
    pub fn value(segments: Vec<Segment>) -> Self {
        let kind = if is_resource_type_location(&segments) { ParamKind::ResourceTypeDecl } else { ParamKind::ScalarValue };
        ParameterPath { segments, kind }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    pub fn is_value(&self) -> bool {
        self.kind.is_value()
    }

    /// The innermost key name, if the path ends with a key.
    pub fn last_key(&self) -> Option<&str> {
        self.segments.last().and_then(Segment::key)
    }

    /// The value parameter living at the same location as this entry key.
    pub fn to_value(&self) -> ParameterPath {
        ParameterPath::value(self.segments.clone())
    }

    /// The entry key for this location, if the location ends with a key.
    pub fn to_entry(&self) -> Option<ParameterPath> {
        match self.segments.last() {
            Some(Segment::Key(_)) => Some(ParameterPath::entry(self.segments.clone())),
            _ => None,
        }
    }

    /// Whether `prefix` is a (non-strict) prefix of this path's segments.
    pub fn starts_with(&self, prefix: &[Segment]) -> bool {
        self.segments.starts_with(prefix)
    }
}

fn is_resource_type_location(segments: &[Segment]) -> bool {
    matches!(segments, [Segment::Key(r), Segment::Key(_), Segment::Key(t)] if r == "Resources" && t == "Type")
}

fn key_needs_quotes(key: &str) -> bool {
    key.is_empty() || key.chars().any(|c| matches!(c, '.' | '[' | ']' | '@' | '"' | '\\') || c.is_whitespace() || c.is_control())
}

fn write_key(f: &mut fmt::Formatter<'_>, key: &str) -> fmt::Result {
    if !key_needs_quotes(key) {
        return f.write_str(key);
    }
    f.write_str("\"")?;
    for c in key.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c if c.is_control() => write!(f, "\\u{{{:x}}}", c as u32)?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for ParameterPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.segments.iter().enumerate() {
            match seg {
                Segment::Key(k) => {
                    if i > 0 {
                        f.write_str(".")?;
                    }
                    write_key(f, k)?;
                }
                Segment::Index(n) => write!(f, "[{n}]")?,
            }
        }
        if self.kind.is_value() {
            f.write_str(VALUE_SUFFIX)?;
        }
        Ok(())
    }
}

impl FromStr for ParameterPath {
    type Err = PathParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |reason| PathParseError { text: text.to_string(), reason };
        // `@` always forces quoting inside a key, so a bare suffix is unambiguous.
        let (body, is_value) = match text.strip_suffix(VALUE_SUFFIX) {
            Some(b) => (b, true),
            None => (text, false),
        };
        let chars: Vec<char> = body.chars().collect();
        let mut segments = Vec::new();
        let mut i = 0;
        let mut expect_key = true;
        while i < chars.len() {
            if expect_key {
                let key = if chars[i] == '"' {
                    i += 1;
                    let mut key = String::new();
                    loop {
                        let c = *chars.get(i).ok_or_else(|| err("unterminated quoted key"))?;
                        i += 1;
                        match c {
                            '"' => break,
                            '\\' => {
                                let e = *chars.get(i).ok_or_else(|| err("dangling escape"))?;
                                i += 1;
                                match e {
                                    'n' => key.push('\n'),
                                    't' => key.push('\t'),
                                    'u' => {
                                        if chars.get(i) != Some(&'{') {
                                            return Err(err("bad unicode escape"));
                                        }
                                        let end =
                                            chars[i..].iter().position(|&c| c == '}').ok_or_else(|| err("bad unicode escape"))?;
                                        let hex: String = chars[i + 1..i + end].iter().collect();
                                        let code = u32::from_str_radix(&hex, 16)
                                            .ok()
                                            .and_then(char::from_u32)
                                            .ok_or_else(|| err("bad unicode escape"))?;
                                        key.push(code);
                                        i += end + 1;
                                    }
                                    other => key.push(other),
                                }
                            }
                            c => key.push(c),
                        }
                    }
                    key
                } else {
                    let start = i;
                    while i < chars.len() && !matches!(chars[i], '.' | '[') {
                        if matches!(chars[i], ']' | '@' | '"' | '\\') || chars[i].is_whitespace() {
                            return Err(err("unexpected character in key"));
                        }
                        i += 1;
                    }
                    if i == start {
                        return Err(err("empty key segment"));
                    }
                    chars[start..i].iter().collect()
                };
                segments.push(Segment::Key(key));
                expect_key = false;
            } else {
                match chars[i] {
                    '.' => {
                        i += 1;
                        expect_key = true;
                        if i == chars.len() {
                            return Err(err("trailing dot"));
                        }
                    }
                    '[' => {
                        let end = chars[i..].iter().position(|&c| c == ']').ok_or_else(|| err("unterminated index"))?;
                        let digits: String = chars[i + 1..i + end].iter().collect();
                        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
                            return Err(err("index is not a number"));
                        }
                        let n = digits.parse().map_err(|_| err("index out of range"))?;
                        segments.push(Segment::Index(n));
                        i += end + 1;
                    }
                    _ => return Err(err("expected `.` or `[` after segment")),
                }
            }
        }
        if segments.is_empty() {
            return Err(err("empty path"));
        }
        if !matches!(segments[0], Segment::Key(_)) {
            return Err(err("path must start with a key"));
        }
        if is_value {
            Ok(ParameterPath::value(segments))
        } else {
            match segments.last() {
                Some(Segment::Key(_)) => Ok(ParameterPath::entry(segments)),
                _ => Err(err("an entry path must end with a key")),
            }
        }
    }
}

impl Serialize for ParameterPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParameterPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Every parameter of `doc`, in document order.
pub fn enumerate_parameters(doc: &ConfigDocument) -> Vec<ParameterPath> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    walk(&doc.root, &mut prefix, &mut out);
    out
}

fn walk(node: &Node, prefix: &mut Vec<Segment>, out: &mut Vec<ParameterPath>) {
    match node {
        Node::Mapping(entries) => {
            for (key, child) in entries {
                prefix.push(Segment::Key(key.clone()));
                out.push(ParameterPath::entry(prefix.clone()));
                visit_child(child, prefix, out);
                prefix.pop();
            }
        }
        Node::Sequence(items) => {
            for (i, item) in items.iter().enumerate() {
                prefix.push(Segment::Index(i));
                visit_child(item, prefix, out);
                prefix.pop();
            }
        }
        Node::Scalar(_) | Node::Tagged(..) => {}
    }
}

fn visit_child(child: &Node, prefix: &mut Vec<Segment>, out: &mut Vec<ParameterPath>) {
    if child.is_leaf() {
        out.push(ParameterPath::value(prefix.clone()));
    } else {
        walk(child, prefix, out);
    }
}

/// Resolves `segments` against `root`.
pub fn node_at<'a>(root: &'a Node, segments: &[Segment]) -> Option<&'a Node> {
    segments.iter().try_fold(root, |node, seg| match (seg, node) {
        (Segment::Key(k), Node::Mapping(_)) => node.get(k),
        (Segment::Index(i), Node::Sequence(items)) => items.get(*i),
        _ => None,
    })
}

pub fn node_at_mut<'a>(root: &'a mut Node, segments: &[Segment]) -> Option<&'a mut Node> {
    segments.iter().try_fold(root, |node, seg| match (seg, node) {
        (Segment::Key(k), node @ Node::Mapping(_)) => node.get_mut(k),
        (Segment::Index(i), Node::Sequence(items)) => items.get_mut(*i),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_template;
    use proptest::prelude::*;

    fn p(s: &str) -> ParameterPath {
        s.parse().unwrap()
    }

    #[test]
    fn counts_keys_and_leaf_values() {
        let doc = parse_template("A: {B: 1}").unwrap();
        let params = enumerate_parameters(&doc);
        assert_eq!(params, vec![p("A"), p("A.B"), p("A.B@value")]);
        assert_eq!(params[1].kind(), ParamKind::EntryKey);
        assert_eq!(params[2].kind(), ParamKind::ScalarValue);
    }

    #[test]
    fn empty_resources_mapping_is_a_single_key() {
        let doc = parse_template("Resources: {}").unwrap();
        assert_eq!(enumerate_parameters(&doc), vec![p("Resources")]);
    }

    #[test]
    fn sequence_elements_and_tags_are_leaves() {
        let doc = parse_template("L:\n  - a\n  - !Ref B\n  - k: v\n").unwrap();
        let rendered: Vec<String> = enumerate_parameters(&doc).iter().map(|p| p.to_string()).collect();
        assert_eq!(rendered, ["L", "L[0]@value", "L[1]@value", "L[2].k", "L[2].k@value"]);
    }

    #[test]
    fn resource_type_values_are_marked() {
        let doc = parse_template("Resources:\n  Fn:\n    Type: AWS::Serverless::Function\n").unwrap();
        let params = enumerate_parameters(&doc);
        assert_eq!(params.last().unwrap().kind(), ParamKind::ResourceTypeDecl);
        assert_eq!(params.last().unwrap().to_string(), "Resources.Fn.Type@value");
        assert_eq!(p("Resources.Fn.Type@value").kind(), ParamKind::ResourceTypeDecl);
        // A Type key deeper in the tree is an ordinary value.
        assert_eq!(p("Resources.Fn.Properties.Type@value").kind(), ParamKind::ScalarValue);
    }

    #[test]
    fn quoted_keys_render_and_parse() {
        let path = ParameterPath::entry(vec!["Outputs".into(), "a.b @x".into(), 2.into(), "".into()]);
        let text = path.to_string();
        assert_eq!(text, r#"Outputs."a.b @x"[2]."""#);
        assert_eq!(text.parse::<ParameterPath>().unwrap(), path);
        let v = ParameterPath::value(vec!["k@value".into()]);
        assert_eq!(v.to_string().parse::<ParameterPath>().unwrap(), v);
    }

    #[test]
    fn rejects_malformed_paths() {
        for bad in ["", ".a", "a.", "a..b", "[0]", "a[x]", "a[0]", "a b", "\"a"] {
            assert!(bad.parse::<ParameterPath>().is_err(), "accepted {bad:?}");
        }
    }

    fn segment() -> impl Strategy<Value = Segment> {
        prop_oneof!["[A-Za-z0-9:._@\\[\\]\" -]{0,8}".prop_map(Segment::Key), (0usize..20).prop_map(Segment::Index),]
    }

    proptest! {
        #[test]
        fn dotted_rendering_round_trips(
            first in "[A-Za-z][A-Za-z0-9.@ ]{0,6}",
            rest in proptest::collection::vec(segment(), 0..6),
            value in any::<bool>(),
        ) {
            let mut segments = vec![Segment::Key(first)];
            segments.extend(rest);
            let path = if value || matches!(segments.last(), Some(Segment::Index(_))) {
                ParameterPath::value(segments)
            } else {
                ParameterPath::entry(segments)
            };
            let parsed: ParameterPath = path.to_string().parse().unwrap();
            prop_assert_eq!(parsed, path);
        }
    }
}
