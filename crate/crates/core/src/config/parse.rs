use std::collections::HashMap;

use yaml_rust2::parser::{Event, Parser, Tag};
use yaml_rust2::scanner::{Marker, TScalarStyle};

use super::node::{infer_kind, Node, Scalar, ScalarKind, ScalarStyle};
use super::ConfigError;

const CORE_TAG_PREFIX: &str = "tag:yaml.org,2002:";

/// Builds a [`Node`] tree from the event stream of the first YAML document.
pub(super) fn parse_root(text: &str) -> Result<Node, ConfigError> {
    let mut builder = TreeBuilder { parser: Parser::new_from_str(text), anchors: HashMap::new() };
    loop {
        let (event, mark) = builder.next()?;
        match event {
            Event::StreamStart | Event::DocumentStart | Event::Nothing => continue,
            Event::StreamEnd | Event::DocumentEnd => return Err(ConfigError::EmptyTemplate),
            other => {
                let root = builder.node(other, mark)?;
                return match root {
                    Node::Mapping(_) => Ok(root),
                    _ => Err(ConfigError::EmptyTemplate),
                };
            }
        }
    }
}

struct TreeBuilder<'a> {
    parser: Parser<std::str::Chars<'a>>,
    anchors: HashMap<usize, Node>,
}

impl TreeBuilder<'_> {
    fn next(&mut self) -> Result<(Event, Marker), ConfigError> {
        self.parser.next_token().map_err(|e| ConfigError::Syntax {
            line: e.marker().line(),
            column: e.marker().col() + 1,
            message: e.info().to_string(),
        })
    }

    fn node(&mut self, event: Event, mark: Marker) -> Result<Node, ConfigError> {
        let (node, anchor) = match event {
            Event::Scalar(text, style, anchor, tag) => (scalar_node(text, style, tag, mark)?, anchor),
            Event::SequenceStart(anchor, tag) => {
                let mut items = Vec::new();
                loop {
                    let (ev, m) = self.next()?;
                    if matches!(ev, Event::SequenceEnd) {
                        break;
                    }
                    items.push(self.node(ev, m)?);
                }
                (wrap_collection(Node::Sequence(items), tag, mark)?, anchor)
            }
            Event::MappingStart(anchor, tag) => {
                let mut entries: Vec<(String, Node)> = Vec::new();
                loop {
                    let (ev, key_mark) = self.next()?;
                    let key = match ev {
                        Event::MappingEnd => break,
                        Event::Scalar(text, ..) => text,
                        Event::Alias(id) => match self.anchors.get(&id) {
                            Some(Node::Scalar(s)) => s.text.clone(),
                            _ => return Err(syntax(key_mark, "mapping keys must be scalars")),
                        },
                        _ => return Err(syntax(key_mark, "mapping keys must be scalars")),
                    };
                    if entries.iter().any(|(k, _)| *k == key) {
                        return Err(ConfigError::DuplicateKey { key, line: key_mark.line(), column: key_mark.col() + 1 });
                    }
                    let (ev, m) = self.next()?;
                    let value = self.node(ev, m)?;
                    entries.push((key, value));
                }
                (wrap_collection(Node::Mapping(entries), tag, mark)?, anchor)
            }
            Event::Alias(id) => {
                return self.anchors.get(&id).cloned().ok_or_else(|| syntax(mark, "unknown alias"));
            }
            _ => return Err(syntax(mark, "unexpected event")),
        };
        if anchor > 0 {
            self.anchors.insert(anchor, node.clone());
        }
        Ok(node)
    }
}

fn syntax(mark: Marker, message: &str) -> ConfigError {
    ConfigError::Syntax { line: mark.line(), column: mark.col() + 1, message: message.to_string() }
}

fn local_tag(tag: &Tag) -> Option<&str> {
    (tag.handle == "!").then_some(tag.suffix.as_str())
}

fn scalar_node(text: String, style: TScalarStyle, tag: Option<Tag>, mark: Marker) -> Result<Node, ConfigError> {
    let style = match style {
        TScalarStyle::Plain => ScalarStyle::Plain,
        TScalarStyle::SingleQuoted => ScalarStyle::SingleQuoted,
        TScalarStyle::DoubleQuoted => ScalarStyle::DoubleQuoted,
        TScalarStyle::Literal => ScalarStyle::Literal,
        TScalarStyle::Folded => ScalarStyle::Folded,
    };
    let mut kind = if style == ScalarStyle::Plain { infer_kind(&text) } else { ScalarKind::String };
    match tag {
        None => {}
        Some(ref t) if t.handle == CORE_TAG_PREFIX => {
            kind = match t.suffix.as_str() {
                "str" => ScalarKind::String,
                "int" => ScalarKind::Int,
                "float" => ScalarKind::Float,
                "bool" => ScalarKind::Bool,
                "null" => ScalarKind::Null,
                _ => return Err(syntax(mark, "unsupported core tag")),
            };
        }
        Some(ref t) => {
            let name = local_tag(t).ok_or_else(|| syntax(mark, "only short-form `!Tag` tags are supported"))?;
            return Ok(Node::tagged(name, Node::Scalar(Scalar { text, kind, style })));
        }
    }
    Ok(Node::Scalar(Scalar { text, kind, style }))
}

fn wrap_collection(node: Node, tag: Option<Tag>, mark: Marker) -> Result<Node, ConfigError> {
    match tag {
        None => Ok(node),
        Some(t) if t.handle == CORE_TAG_PREFIX && matches!(t.suffix.as_str(), "map" | "seq") => Ok(node),
        Some(t) => {
            let name = local_tag(&t).ok_or_else(|| syntax(mark, "only short-form `!Tag` tags are supported"))?;
            Ok(Node::tagged(name, node))
        }
    }
}
