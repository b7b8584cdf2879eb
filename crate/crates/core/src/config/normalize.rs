//! Corpus normalization for pattern mining.
//!
//! Each parameter becomes an item scoped by the type of the resource that owns
//! it (or by its top-level section outside `Resources`):
//!
//! - `RT:<type>` for every declared resource type,
//! - `E:<owner>/<relative/key/path>` for every entry key,
//! - `V:<owner>/<relative/key/path>=<value>` for every leaf value.
//!
//! Logical resource names never survive: references to them inside values
//! become `PH<type-of-referent>`, and user-chosen keys (event names, parameter
//! names) and sequence positions become `*`.

use std::collections::{BTreeMap, HashSet};

use super::node::{Node, ScalarKind};
use super::path::{enumerate_parameters, node_at, ParamKind, ParameterPath, Segment};
use super::{resource_types, ConfigDocument};

/// Sections whose direct children are user-chosen names.
const NAMED_SECTIONS: &[&str] = &["Parameters", "Conditions", "Outputs", "Mappings"];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormalizedItem {
    pub item_text: String,
    pub origin_path: ParameterPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ItemPrefix {
    ResourceType,
    Entry,
    Value,
}

impl ItemPrefix {
    pub fn of(item_text: &str) -> Option<ItemPrefix> {
        if item_text.starts_with("RT:") {
            Some(ItemPrefix::ResourceType)
        } else if item_text.starts_with("E:") {
            Some(ItemPrefix::Entry)
        } else if item_text.starts_with("V:") {
            Some(ItemPrefix::Value)
        } else {
            None
        }
    }
}

impl NormalizedItem {
    pub fn prefix(&self) -> ItemPrefix {
        ItemPrefix::of(&self.item_text).expect("items always carry a prefix")
    }
}

/// The document as a transaction: one item per distinct token, each carrying
/// the first parameter (in document order) that produced it.
pub fn normalize_for_mining(doc: &ConfigDocument) -> Vec<NormalizedItem> {
    let mut seen = HashSet::new();
    normalized_occurrences(doc).into_iter().filter(|item| seen.insert(item.item_text.clone())).collect()
}

/// Every item occurrence, without de-duplication, in document order.
pub fn normalized_occurrences(doc: &ConfigDocument) -> Vec<NormalizedItem> {
    let ctx = Context::new(doc);
    enumerate_parameters(doc)
        .into_iter()
        .filter_map(|p| ctx.item_for(&p).map(|item_text| NormalizedItem { item_text, origin_path: p }))
        .collect()
}

/// Type-scoped locations of parameters, as used in normalized item texts.
pub struct Locator<'a>(Context<'a>);

impl<'a> Locator<'a> {
    pub fn new(doc: &'a ConfigDocument) -> Self {
        Locator(Context::new(doc))
    }

    /// `AWS::Serverless::Function/Properties/Runtime` for
    /// `Resources.Fn.Properties.Runtime` (entry or value alike); `None` for
    /// resource logical-name keys.
    pub fn location(&self, p: &ParameterPath) -> Option<String> {
        self.0.location(p)
    }
}

struct Context<'a> {
    doc: &'a ConfigDocument,
    types: BTreeMap<String, String>,
}

impl<'a> Context<'a> {
    fn new(doc: &'a ConfigDocument) -> Self {
        Context { doc, types: resource_types(doc) }
    }

    fn placeholder(&self, name: &str) -> Option<String> {
        self.types.get(name).map(|t| if t.is_empty() { "PHUnknown".to_string() } else { format!("PH{t}") })
    }

    fn item_for(&self, p: &ParameterPath) -> Option<String> {
        if p.kind() == ParamKind::ResourceTypeDecl {
            let name = p.segments()[1].key()?;
            if let Some(ty) = self.types.get(name).filter(|t| !t.is_empty()) {
                return Some(format!("RT:{ty}"));
            }
        }
        let location = self.location(p)?;
        Some(match p.kind() {
            ParamKind::EntryKey => format!("E:{location}"),
            _ => format!("V:{location}={}", self.value_text(p.segments())),
        })
    }

    /// `<owner>/<relative path>`, or the bare section name for top-level keys.
    fn location(&self, p: &ParameterPath) -> Option<String> {
        let segs = p.segments();
        let section = segs[0].key()?;
        let (owner, rel) = if section == "Resources" && segs.len() >= 2 {
            let name = segs[1].key()?;
            if segs.len() == 2 && p.kind() == ParamKind::EntryKey {
                return None;
            }
            if segs.len() == 2 {
                ("Resources".to_string(), vec!["*".to_string()])
            } else {
                let ty = self.types.get(name).cloned().unwrap_or_default();
                let owner = if ty.is_empty() { "?".to_string() } else { ty };
                (owner, self.relative(&segs[2..], false))
            }
        } else if segs.len() == 1 {
            return Some(section.to_string());
        } else {
            (section.to_string(), self.relative(&segs[1..], NAMED_SECTIONS.contains(&section)))
        };
        Some(format!("{owner}/{}", rel.join("/")))
    }

    fn relative(&self, segs: &[Segment], first_is_name: bool) -> Vec<String> {
        let mut out = Vec::with_capacity(segs.len());
        let mut parent_is_events = false;
        for (i, seg) in segs.iter().enumerate() {
            match seg {
                Segment::Index(_) => {
                    out.push("*".to_string());
                    parent_is_events = false;
                }
                Segment::Key(k) => {
                    if parent_is_events || (i == 0 && first_is_name) {
                        out.push("*".to_string());
                    } else {
                        out.push(k.clone());
                    }
                    parent_is_events = k == "Events";
                }
            }
        }
        out
    }

    fn value_text(&self, segs: &[Segment]) -> String {
        node_at(&self.doc.root, segs).map(|n| self.render(n, true)).unwrap_or_default()
    }

    fn render(&self, node: &Node, top: bool) -> String {
        match node {
            Node::Scalar(s) if s.kind == ScalarKind::Null => "null".to_string(),
            Node::Scalar(s) => self.replace_names(&s.text),
            Node::Tagged(tag, payload) => match (tag.as_str(), payload.as_ref()) {
                ("Ref", Node::Scalar(s)) if top => self.replace_names(&s.text),
                _ => format!("!{tag} {}", self.render(payload, false)),
            },
            Node::Sequence(items) => {
                let parts: Vec<String> = items.iter().map(|n| self.render(n, false)).collect();
                format!("[{}]", parts.join(","))
            }
            Node::Mapping(entries) => {
                let parts: Vec<String> =
                    entries.iter().map(|(k, v)| format!("{}:{}", self.replace_names(k), self.render(v, false))).collect();
                format!("{{{}}}", parts.join(","))
            }
        }
    }

    /// Replaces every alphanumeric token equal to a logical name, except
    /// tokens that are part of a `Vendor::Service::Type` string.
    fn replace_names(&self, text: &str) -> String {
        if self.types.is_empty() {
            return text.to_string();
        }
        let mut out = String::with_capacity(text.len());
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < text.len() {
            if !bytes[i].is_ascii_alphanumeric() {
                let ch = text[i..].chars().next().unwrap();
                out.push(ch);
                i += ch.len_utf8();
                continue;
            }
            let start = i;
            while i < text.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let token = &text[start..i];
            let qualified = text[..start].ends_with("::") || text[i..].starts_with("::");
            match self.placeholder(token) {
                Some(ph) if !qualified => out.push_str(&ph),
                _ => out.push_str(token),
            }
        }
        out
    }
}
