//! SAM template model: parsing, parameter enumeration, normalization and
//! serialization.

mod emit;
mod node;
mod normalize;
mod parse;
mod path;

use std::collections::BTreeMap;
use std::path::Path;

pub use emit::LineSpan;
pub use node::{infer_kind, Node, Scalar, ScalarKind, ScalarStyle};
pub use normalize::{normalize_for_mining, normalized_occurrences, ItemPrefix, Locator, NormalizedItem};
pub use path::{enumerate_parameters, node_at, node_at_mut, ParamKind, ParameterPath, PathParseError, Segment};

/// Top-level sections a SAM template may declare.
pub const SECTIONS: &[&str] = &[
    "AWSTemplateFormatVersion",
    "Transform",
    "Description",
    "Parameters",
    "Conditions",
    "Resources",
    "Outputs",
    "Globals",
    "Mappings",
    "Metadata",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("duplicate key `{key}` at line {line}, column {column}")]
    DuplicateKey { key: String, line: usize, column: usize },
    #[error("template has no top-level mapping")]
    EmptyTemplate,
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A parsed template. Immutable once built; mutations produce new documents.
#[derive(Debug, Clone)]
pub struct ConfigDocument {
    pub source_text: String,
    pub root: Node,
    pub origin: String,
}

impl ConfigDocument {
    pub fn parse(text: &str, origin: impl Into<String>) -> Result<Self, ConfigError> {
        if text.trim().is_empty() {
            return Err(ConfigError::EmptyTemplate);
        }
        let root = parse::parse_root(text)?;
        Ok(ConfigDocument { source_text: text.to_string(), root, origin: origin.into() })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, path.display().to_string())
    }

    /// Builds a document around an already-constructed tree; `source_text` is
    /// the serialized form of `root`.
    pub fn from_root(root: Node, origin: impl Into<String>) -> Self {
        let source_text = emit::Emitter::emit(&root).0;
        ConfigDocument { source_text, root, origin: origin.into() }
    }

    pub fn parameters(&self) -> Vec<ParameterPath> {
        enumerate_parameters(self)
    }

    pub fn node(&self, segments: &[Segment]) -> Option<&Node> {
        node_at(&self.root, segments)
    }

    /// Whether `path` names a parameter of this document.
    pub fn contains(&self, path: &ParameterPath) -> bool {
        let segments = path.segments();
        match path.kind() {
            ParamKind::EntryKey => {
                let (last, parent) = segments.split_last().expect("paths are non-empty");
                matches!(last, Segment::Key(k) if self.node(parent).and_then(|n| n.get(k)).is_some())
            }
            _ => self.node(segments).is_some_and(Node::is_leaf),
        }
    }

    pub fn resources(&self) -> Vec<ResourceDecl> {
        list_resources(self)
    }

    /// Logical names declared under `Resources`.
    pub fn logical_names(&self) -> Vec<&str> {
        self.root
            .get("Resources")
            .and_then(Node::as_mapping)
            .map(|entries| entries.iter().map(|(k, _)| k.as_str()).collect())
            .unwrap_or_default()
    }
}

/// One entry of the `Resources` section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceDecl {
    pub logical_name: String,
    /// Empty when the declaration has no usable `Type`.
    pub resource_type: String,
    pub properties_path: ParameterPath,
    /// Set when `Type` is missing or not a scalar string.
    pub flagged: bool,
}

pub fn parse_template(text: &str) -> Result<ConfigDocument, ConfigError> {
    ConfigDocument::parse(text, "<inline>")
}

pub fn list_resources(doc: &ConfigDocument) -> Vec<ResourceDecl> {
    let Some(entries) = doc.root.get("Resources").and_then(Node::as_mapping) else {
        return Vec::new();
    };
    entries
        .iter()
        .map(|(name, body)| {
            let resource_type = body.get("Type").and_then(Node::as_str).unwrap_or_default().to_string();
            ResourceDecl {
                logical_name: name.clone(),
                flagged: resource_type.is_empty(),
                resource_type,
                properties_path: ParameterPath::entry(vec![
                    Segment::from("Resources"),
                    Segment::Key(name.clone()),
                    Segment::from("Properties"),
                ]),
            }
        })
        .collect()
}

/// Map from logical resource name to its declared type (empty when unknown).
pub fn resource_types(doc: &ConfigDocument) -> BTreeMap<String, String> {
    list_resources(doc).into_iter().map(|r| (r.logical_name, r.resource_type)).collect()
}

/// Block-style YAML with short-form tags and original quoting preserved.
pub fn serialize(doc: &ConfigDocument) -> String {
    emit::Emitter::emit(&doc.root).0
}

/// Like [`serialize`], also reporting the line span of every parameter.
pub fn serialize_with_lines(doc: &ConfigDocument) -> (String, BTreeMap<ParameterPath, LineSpan>) {
    emit::Emitter::emit(&doc.root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_section() {
        let doc = parse_template("Transform: AWS::Serverless-2016-10-31").unwrap();
        let entries = doc.root.as_mapping().unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].0, "Transform");
        assert_eq!(entries[0].1.as_str(), Some("AWS::Serverless-2016-10-31"));
    }

    #[test]
    fn malformed_yaml_reports_position() {
        match parse_template("a: [1, 2") {
            Err(ConfigError::Syntax { line, column, .. }) => {
                assert!((1..=2).contains(&line), "line {line}");
                assert!(column >= 1);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn empty_and_non_mapping_templates() {
        assert!(matches!(parse_template(""), Err(ConfigError::EmptyTemplate)));
        assert!(matches!(parse_template("   \n# only a comment\n"), Err(ConfigError::EmptyTemplate)));
        assert!(matches!(parse_template("- a\n- b\n"), Err(ConfigError::EmptyTemplate)));
        assert!(matches!(parse_template("just text"), Err(ConfigError::EmptyTemplate)));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = parse_template("Resources:\n  A: 1\n  A: 2\n").unwrap_err();
        match err {
            ConfigError::DuplicateKey { key, line, .. } => {
                assert_eq!(key, "A");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_dropped_and_order_kept() {
        let doc = parse_template("# head\nb: 1 # trailing\na: 2\n").unwrap();
        let keys: Vec<&str> = doc.root.as_mapping().unwrap().iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["b", "a"]);
    }

    #[test]
    fn tags_become_tagged_nodes() {
        let doc = parse_template("X: !Ref SomeBucket\nY: !Equals [!Ref P, 'no']\n").unwrap();
        assert_eq!(doc.root.get("X"), Some(&Node::tagged("Ref", Node::scalar("SomeBucket"))));
        match doc.root.get("Y") {
            Some(Node::Tagged(tag, payload)) => {
                assert_eq!(tag, "Equals");
                assert_eq!(payload.as_sequence().unwrap().len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn anchors_expand() {
        let doc = parse_template("a: &x {k: 1}\nb: *x\n").unwrap();
        assert_eq!(doc.root.get("a"), doc.root.get("b"));
    }

    #[test]
    fn resources_without_type_are_flagged() {
        let doc =
            parse_template("Resources:\n  A:\n    Type:\n  B:\n    Properties: {}\n  C:\n    Type: AWS::SQS::Queue\n").unwrap();
        let decls = list_resources(&doc);
        assert_eq!(decls.len(), 3);
        assert!(decls[0].flagged && decls[0].resource_type.is_empty());
        assert!(decls[1].flagged);
        assert!(!decls[2].flagged);
        assert_eq!(decls[2].resource_type, "AWS::SQS::Queue");
        assert!(list_resources(&parse_template("Transform: x").unwrap()).is_empty());
    }
}
