use std::fmt;
use std::sync::LazyLock;

use regex::Regex;

/// Scalar kind inferred from the source text using the YAML 1.2 core schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarKind {
    String,
    Int,
    Float,
    Bool,
    Null,
}

/// How a scalar was written in the source. Only used to keep quoting stable
/// across a parse/serialize cycle; it takes no part in structural equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScalarStyle {
    #[default]
    Plain,
    SingleQuoted,
    DoubleQuoted,
    Literal,
    Folded,
}

#[derive(Debug, Clone)]
pub struct Scalar {
    pub text: String,
    pub kind: ScalarKind,
    pub style: ScalarStyle,
}

impl Scalar {
    /// A plain scalar whose kind is inferred from `text`.
    pub fn plain(text: impl Into<String>) -> Self {
        let text = text.into();
        let kind = infer_kind(&text);
        Scalar { text, kind, style: ScalarStyle::Plain }
    }

    /// A scalar that is always a string, whatever it looks like.
    pub fn string(text: impl Into<String>) -> Self {
        Scalar { text: text.into(), kind: ScalarKind::String, style: ScalarStyle::Plain }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        if self.kind != other.kind {
            return false;
        }
        // `~`, `null` and an empty value all denote the same null.
        self.kind == ScalarKind::Null || self.text == other.text
    }
}

impl Eq for Scalar {}

/// One node of a parsed template.
///
/// Mappings keep their source key order; keys are unique within a mapping.
/// `Tagged` wraps the payload of a short-form intrinsic such as `!Ref` or
/// `!Equals`; the tag is stored without its leading `!`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Mapping(Vec<(String, Node)>),
    Sequence(Vec<Node>),
    Scalar(Scalar),
    Tagged(String, Box<Node>),
}

impl Node {
    pub fn scalar(text: impl Into<String>) -> Node {
        Node::Scalar(Scalar::plain(text))
    }

    pub fn tagged(tag: impl Into<String>, payload: Node) -> Node {
        Node::Tagged(tag.into(), Box::new(payload))
    }

    pub fn as_mapping(&self) -> Option<&[(String, Node)]> {
        match self {
            Node::Mapping(entries) => Some(entries),
            _ => None,
        }
    }

    pub fn as_mapping_mut(&mut self) -> Option<&mut Vec<(String, Node)>> {
        match self {
            Node::Mapping(entries) => Some(entries),
            _ => None,
        }
    }

    pub fn as_sequence(&self) -> Option<&[Node]> {
        match self {
            Node::Sequence(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_scalar(&self) -> Option<&Scalar> {
        match self {
            Node::Scalar(s) => Some(s),
            _ => None,
        }
    }

    /// Text of a non-null scalar.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Node::Scalar(s) if s.kind != ScalarKind::Null => Some(&s.text),
            _ => None,
        }
    }

    pub fn get(&self, key: &str) -> Option<&Node> {
        self.as_mapping()?.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_mut(&mut self, key: &str) -> Option<&mut Node> {
        self.as_mapping_mut()?.iter_mut().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// Scalars and tagged values are leaves for parameter accounting.
    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Scalar(_) | Node::Tagged(..))
    }
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ScalarKind::String => "string",
            ScalarKind::Int => "int",
            ScalarKind::Float => "float",
            ScalarKind::Bool => "bool",
            ScalarKind::Null => "null",
        };
        f.write_str(name)
    }
}

static INT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:[-+]?[0-9]+|0o[0-7]+|0x[0-9a-fA-F]+)$").unwrap());
static FLOAT_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:[-+]?(?:\.[0-9]+|[0-9]+(?:\.[0-9]*)?)(?:[eE][-+]?[0-9]+)?|[-+]?\.(?:inf|Inf|INF)|\.(?:nan|NaN|NAN))$")
        .unwrap()
});

/// Core-schema resolution of a plain scalar.
pub fn infer_kind(text: &str) -> ScalarKind {
    match text {
        "" | "~" | "null" | "Null" | "NULL" => ScalarKind::Null,
        "true" | "True" | "TRUE" | "false" | "False" | "FALSE" => ScalarKind::Bool,
        _ if INT_RE.is_match(text) => ScalarKind::Int,
        _ if FLOAT_RE.is_match(text) => ScalarKind::Float,
        _ => ScalarKind::String,
    }
}
