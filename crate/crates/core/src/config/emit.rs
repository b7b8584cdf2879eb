use std::collections::BTreeMap;

use super::node::{infer_kind, Node, Scalar, ScalarKind, ScalarStyle};
use super::path::{ParameterPath, Segment};

/// Inclusive, 1-based line range of a parameter in emitted text.
pub type LineSpan = (usize, usize);

const INDENT: usize = 2;

pub(super) struct Emitter {
    out: String,
    line: usize,
    spans: BTreeMap<ParameterPath, LineSpan>,
    path: Vec<Segment>,
}

impl Emitter {
    pub(super) fn emit(root: &Node) -> (String, BTreeMap<ParameterPath, LineSpan>) {
        let mut e = Emitter { out: String::new(), line: 1, spans: BTreeMap::new(), path: Vec::new() };
        match root {
            Node::Mapping(entries) if !entries.is_empty() => e.mapping(entries, 0, None),
            _ => e.push_line("{}"),
        }
        (e.out, e.spans)
    }

    fn push_line(&mut self, text: &str) {
        self.out.push_str(text);
        self.out.push('\n');
        self.line += 1 + text.matches('\n').count();
    }

    /// Emits a block mapping. When `first_prefix` is set (a mapping inside a
    /// sequence item), the first entry goes on the `- ` line.
    fn mapping(&mut self, entries: &[(String, Node)], indent: usize, mut first_prefix: Option<String>) {
        for (key, value) in entries {
            let lead = first_prefix.take().unwrap_or_else(|| " ".repeat(indent));
            self.path.push(Segment::Key(key.clone()));
            let key_line = self.line;
            self.spans.insert(ParameterPath::entry(self.path.clone()), (key_line, key_line));
            let head = format!("{lead}{}:", key_text(key));
            self.value_after(head, value, indent);
            self.path.pop();
        }
    }

    fn sequence(&mut self, items: &[Node], indent: usize) {
        for (i, item) in items.iter().enumerate() {
            self.path.push(Segment::Index(i));
            let lead = format!("{}-", " ".repeat(indent));
            match item {
                Node::Mapping(entries) if !entries.is_empty() => {
                    self.mapping(entries, indent + INDENT, Some(format!("{lead} ")));
                }
                _ => self.value_after(lead, item, indent),
            }
            self.path.pop();
        }
    }

    /// Emits `value` following `head` (either `key:` or `-`).
    fn value_after(&mut self, head: String, value: &Node, indent: usize) {
        match value {
            Node::Mapping(entries) if entries.is_empty() => self.push_line(&format!("{head} {{}}")),
            Node::Sequence(items) if items.is_empty() => self.push_line(&format!("{head} []")),
            Node::Mapping(entries) => {
                self.push_line(&head);
                self.mapping(entries, indent + INDENT, None);
            }
            Node::Sequence(items) => {
                self.push_line(&head);
                self.sequence(items, indent + INDENT);
            }
            Node::Scalar(_) | Node::Tagged(..) => {
                let start = self.line;
                let text = leaf_block(value, indent + INDENT);
                if text.is_empty() {
                    self.push_line(&head);
                } else {
                    self.push_line(&format!("{head} {text}"));
                }
                self.spans.insert(ParameterPath::value(self.path.clone()), (start, self.line - 1));
            }
        }
    }
}

/// Leaf rendering in block context; may span several lines for literal scalars.
fn leaf_block(node: &Node, indent: usize) -> String {
    match node {
        Node::Scalar(s) => scalar_block(s, indent),
        Node::Tagged(tag, payload) => {
            let body = match payload.as_ref() {
                Node::Scalar(s) => scalar_block(s, indent),
                other => flow(other),
            };
            if body.is_empty() {
                format!("!{tag}")
            } else {
                format!("!{tag} {body}")
            }
        }
        other => flow(other),
    }
}

fn scalar_block(s: &Scalar, indent: usize) -> String {
    if s.kind == ScalarKind::String && s.text.contains('\n') {
        if let Some(lit) = literal_block(&s.text, indent) {
            return lit;
        }
        return double_quoted(&s.text);
    }
    scalar_inline(s, false)
}

/// Flow rendering, used for the payload of tagged collections.
fn flow(node: &Node) -> String {
    match node {
        Node::Scalar(s) => {
            if s.kind == ScalarKind::Null && s.text.is_empty() {
                "~".to_string()
            } else {
                scalar_inline(s, true)
            }
        }
        Node::Tagged(tag, payload) => format!("!{tag} {}", flow(payload)),
        Node::Sequence(items) => {
            let parts: Vec<String> = items.iter().map(flow).collect();
            format!("[{}]", parts.join(", "))
        }
        Node::Mapping(entries) => {
            let parts: Vec<String> = entries.iter().map(|(k, v)| format!("{}: {}", flow_key(k), flow(v))).collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

fn flow_key(key: &str) -> String {
    if plain_unsafe(key, true) || infer_kind(key) != ScalarKind::String {
        quote(key, ScalarStyle::SingleQuoted)
    } else {
        key.to_string()
    }
}

fn key_text(key: &str) -> String {
    if plain_unsafe(key, false) || infer_kind(key) != ScalarKind::String {
        quote(key, ScalarStyle::SingleQuoted)
    } else {
        key.to_string()
    }
}

fn scalar_inline(s: &Scalar, in_flow: bool) -> String {
    if s.kind != ScalarKind::String {
        return s.text.clone();
    }
    match s.style {
        ScalarStyle::SingleQuoted | ScalarStyle::DoubleQuoted => quote(&s.text, s.style),
        _ if infer_kind(&s.text) != ScalarKind::String || plain_unsafe(&s.text, in_flow) => {
            quote(&s.text, ScalarStyle::SingleQuoted)
        }
        _ => s.text.clone(),
    }
}

/// Quotes with the preferred style, falling back to double quotes when the
/// text cannot be written single-quoted.
fn quote(text: &str, preferred: ScalarStyle) -> String {
    let single_ok = !text.chars().any(|c| c.is_control());
    if preferred == ScalarStyle::SingleQuoted && single_ok {
        format!("'{}'", text.replace('\'', "''"))
    } else {
        double_quoted(text)
    }
}

fn double_quoted(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Words that other YAML 1.1 readers would turn into booleans.
const YAML11_BOOLS: &[&str] = &["y", "Y", "yes", "Yes", "YES", "n", "N", "no", "No", "NO", "on", "On", "ON", "off", "Off", "OFF"];

fn plain_unsafe(text: &str, in_flow: bool) -> bool {
    let Some(first) = text.chars().next() else {
        return true;
    };
    if matches!(
        first,
        '-' | '?' | ':' | ',' | '[' | ']' | '{' | '}' | '#' | '&' | '*' | '!' | '|' | '>' | '\'' | '"' | '%' | '@' | '`'
    ) || first.is_whitespace()
        || text.ends_with(char::is_whitespace)
        || text.ends_with(':')
        || text.contains(": ")
        || text.contains(" #")
        || text.contains(":\t")
        || text.chars().any(|c| c.is_control())
        || YAML11_BOOLS.contains(&text)
    {
        return true;
    }
    in_flow && text.chars().any(|c| matches!(c, ',' | '[' | ']' | '{' | '}' | ':' | '#'))
}

/// A literal block (`|`) for multi-line text, or `None` when the text cannot
/// be represented faithfully as one.
fn literal_block(text: &str, indent: usize) -> Option<String> {
    if text.chars().any(|c| c.is_control() && c != '\n' && c != '\t') || text.trim_end_matches('\n').is_empty() {
        return None;
    }
    let body = text.trim_end_matches('\n');
    let trailing = text.len() - body.len();
    if body.starts_with([' ', '\t']) || body.lines().any(|l| !l.is_empty() && l.trim().is_empty()) {
        return None;
    }
    let chomp = match trailing {
        0 => "-",
        1 => "",
        _ => "+",
    };
    let pad = " ".repeat(indent);
    let mut out = format!("|{chomp}");
    for line in body.split('\n') {
        out.push('\n');
        if !line.is_empty() {
            out.push_str(&pad);
            out.push_str(line);
        }
    }
    for _ in 1..trailing {
        out.push('\n');
    }
    Some(out)
}
