//! Fault injection: one seeded, labeled misconfiguration per call, drawn
//! from the shipped spec data.

mod data;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::rngs::ChaCha8Rng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::config::{node_at, node_at_mut, ConfigDocument, Locator, Node, ParamKind, ParameterPath, Scalar, ScalarKind, Segment};
use crate::eval::{GroundTruth, TruthEntry};
use crate::findings::FindingCategory;

pub use data::{SpecData, SpecDataError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleCategory {
    Syntax,
    Range,
    Dependency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subcategory {
    ResourceType,
    Entry,
    BasicNumeric,
    Enum,
    EntryRelationship,
    ValueRelationship,
}

impl Subcategory {
    pub const ALL: [Subcategory; 6] = [
        Subcategory::ResourceType,
        Subcategory::Entry,
        Subcategory::BasicNumeric,
        Subcategory::Enum,
        Subcategory::EntryRelationship,
        Subcategory::ValueRelationship,
    ];

    pub fn category(self) -> RuleCategory {
        match self {
            Subcategory::ResourceType | Subcategory::Entry => RuleCategory::Syntax,
            Subcategory::BasicNumeric | Subcategory::Enum => RuleCategory::Range,
            Subcategory::EntryRelationship | Subcategory::ValueRelationship => RuleCategory::Dependency,
        }
    }

    /// Category recorded in the ground truth.
    pub fn finding_category(self) -> FindingCategory {
        match self {
            Subcategory::ResourceType => FindingCategory::ResourceTypeError,
            Subcategory::Entry => FindingCategory::ConfigurationEntryError,
            Subcategory::BasicNumeric | Subcategory::Enum => FindingCategory::ConfigurationEntryValueError,
            Subcategory::EntryRelationship => FindingCategory::EntryDependencyError,
            Subcategory::ValueRelationship => FindingCategory::ValueDependencyError,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Subcategory::ResourceType => "resource-type",
            Subcategory::Entry => "entry",
            Subcategory::BasicNumeric => "basic-numeric",
            Subcategory::Enum => "enum",
            Subcategory::EntryRelationship => "entry-relationship",
            Subcategory::ValueRelationship => "value-relationship",
        }
    }
}

impl fmt::Display for Subcategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect()
}

impl FromStr for Subcategory {
    type Err = String;

    /// Case and separators are ignored: `Enum`, `basic-numeric`, `EntryRelationship`.
    fn from_str(s: &str) -> Result<Self, String> {
        let key = squash(s);
        Subcategory::ALL.into_iter().find(|c| squash(c.name()) == key).ok_or_else(|| format!("unknown subcategory `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Selector {
    Random,
    Only(Subcategory),
}

impl FromStr for Selector {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if squash(s) == "random" {
            Ok(Selector::Random)
        } else {
            s.parse().map(Selector::Only)
        }
    }
}

impl From<Subcategory> for Selector {
    fn from(c: Subcategory) -> Self {
        Selector::Only(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelOp {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "occurrence")]
    Occurrence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelForm {
    /// `(P1, V, op) -> P2`: an entry constrains which other entries appear.
    EntryRelationship,
    /// `(P1, P2, op)`: a value must agree with another parameter.
    ValueRelationship,
}

/// For entry relationships `scope` is the location of the mapping holding
/// `p1` and `p2`. For value relationships `p1` names a reference form
/// (`!Ref`, `!GetAtt`, `!Sub`, `Condition`, `DependsOn`) and `p2` the
/// `|`-separated sections its referent may live in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipSpec {
    pub scope: String,
    pub p1: String,
    pub p2: String,
    pub op: RelOp,
    pub form: RelForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleSpec {
    ValueSet { location: String, size: usize },
    EntryCatalog { resource_type: String, size: usize },
    Range { location: String, min: i64, max: i64 },
    Relationship(RelationshipSpec),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionRule {
    pub category: RuleCategory,
    pub subcategory: Subcategory,
    pub spec: RuleSpec,
}

#[derive(Debug, Clone)]
pub struct InjectionOutcome {
    pub mutated: ConfigDocument,
    pub ground_truth: GroundTruth,
    pub applied_rule: InjectionRule,
    pub seed: u64,
    /// Parameter the rule acted on: the replaced value, the inserted key, or
    /// (in the original document) the deleted key.
    pub site: ParameterPath,
    /// Pre-mutation content at `site`; `None` for insertions.
    pub original_value: Option<String>,
    /// Post-mutation content at `site`; `None` for deletions.
    pub injected_value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InjectError {
    #[error("{origin}: no parameter eligible for {subcategory}")]
    NoEligibleParameter { origin: String, subcategory: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RefForm {
    Ref,
    GetAtt,
    Sub,
    Condition,
    DependsOn,
}

impl RefForm {
    fn parse(p1: &str) -> Option<RefForm> {
        match p1.trim_start_matches('!') {
            "Ref" => Some(RefForm::Ref),
            "GetAtt" => Some(RefForm::GetAtt),
            "Sub" => Some(RefForm::Sub),
            "Condition" => Some(RefForm::Condition),
            "DependsOn" => Some(RefForm::DependsOn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
enum Action {
    /// Replace a leaf with one of `tokens`.
    ReplaceToken(Vec<String>),
    /// Replace an integer with `min - 1` or `max + 1`.
    OutOfRange(i64, i64),
    /// Add a key to the mapping at the site, picked from `keys`.
    InsertKey(Vec<String>),
    /// Remove the site key; the ground truth is `survivor`.
    DeleteKey { survivor: ParameterPath },
    /// Point a reference at a name that does not exist.
    Dangle { referent: String, form: RefForm },
}

#[derive(Debug, Clone)]
struct Site {
    path: ParameterPath,
    spec: RuleSpec,
    action: Action,
}

/// Parameters where `subcategory` can apply, in document order.
pub fn eligible_sites(doc: &ConfigDocument, subcategory: Subcategory) -> Vec<ParameterPath> {
    sites(doc, subcategory, SpecData::shipped()).into_iter().map(|s| s.path).collect()
}

pub fn inject(doc: &ConfigDocument, selector: impl Into<Selector>, seed: u64) -> Result<InjectionOutcome, InjectError> {
    inject_with(doc, selector.into(), seed, SpecData::shipped())
}

/// Like [`inject`], with caller-supplied spec data.
pub fn inject_with(
    doc: &ConfigDocument,
    selector: Selector,
    seed: u64,
    data: &SpecData,
) -> Result<InjectionOutcome, InjectError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (subcategory, candidates) = match selector {
        Selector::Only(c) => (c, sites(doc, c, data)),
        Selector::Random => {
            let mut open: Vec<(Subcategory, Vec<Site>)> =
                Subcategory::ALL.into_iter().map(|c| (c, sites(doc, c, data))).filter(|(_, s)| !s.is_empty()).collect();
            if open.is_empty() {
                return Err(InjectError::NoEligibleParameter { origin: doc.origin.clone(), subcategory: "random".into() });
            }
            let i = rng.random_range(0..open.len());
            open.swap_remove(i)
        }
    };
    if candidates.is_empty() {
        return Err(InjectError::NoEligibleParameter { origin: doc.origin.clone(), subcategory: subcategory.to_string() });
    }
    let site = &candidates[rng.random_range(0..candidates.len())];
    Ok(apply(doc, subcategory, site, seed, &mut rng))
}

fn apply(doc: &ConfigDocument, subcategory: Subcategory, site: &Site, seed: u64, rng: &mut ChaCha8Rng) -> InjectionOutcome {
    let mut root = doc.root.clone();
    let segs = site.path.segments();
    let (truth_path, site_path, original_value, injected_value, note) = match &site.action {
        Action::ReplaceToken(tokens) => {
            let old = leaf_text(node_at(&root, segs).expect("site exists"));
            let choices: Vec<&String> = tokens.iter().filter(|t| **t != old).collect();
            let token = choices[rng.random_range(0..choices.len())].clone();
            *node_at_mut(&mut root, segs).expect("site exists") = Node::Scalar(Scalar::string(token.clone()));
            let note = format!("`{old}` replaced with `{token}`, outside the allowed set");
            (site.path.clone(), site.path.clone(), Some(old), Some(token), note)
        }
        Action::OutOfRange(min, max) => {
            let old = leaf_text(node_at(&root, segs).expect("site exists"));
            let new = if rng.random_range(0..2) == 0 { min - 1 } else { max + 1 };
            *node_at_mut(&mut root, segs).expect("site exists") = Node::scalar(new.to_string());
            let note = format!("`{old}` replaced with {new}, outside [{min}, {max}]");
            (site.path.clone(), site.path.clone(), Some(old), Some(new.to_string()), note)
        }
        Action::InsertKey(keys) => {
            let mapping = node_at_mut(&mut root, segs).and_then(Node::as_mapping_mut).expect("site is a mapping");
            let present: BTreeSet<&str> = mapping.iter().map(|(k, _)| k.as_str()).collect();
            let fresh: Vec<&String> = keys.iter().filter(|k| !present.contains(k.as_str())).collect();
            let key = if fresh.is_empty() {
                let base = &keys[rng.random_range(0..keys.len())];
                let mut n: u32 = rng.random_range(2..100);
                while present.contains(format!("{base}{n}").as_str()) {
                    n += 1;
                }
                format!("{base}{n}")
            } else {
                fresh[rng.random_range(0..fresh.len())].clone()
            };
            let value = similar_leaf(mapping, &key).unwrap_or_else(|| Node::scalar("true"));
            let shown = leaf_text(&value);
            mapping.push((key.clone(), value));
            let mut new_segs = segs.to_vec();
            new_segs.push(Segment::Key(key.clone()));
            let inserted = ParameterPath::entry(new_segs);
            let note = format!("entry `{key}` is not valid here");
            (inserted.clone(), inserted, None, Some(format!("{key}: {shown}")), note)
        }
        Action::DeleteKey { survivor } => {
            let (last, parent) = segs.split_last().expect("paths are non-empty");
            let key = last.key().expect("entry paths end with a key");
            let removed = node_at(&root, segs).expect("site exists").clone();
            let shown = ConfigDocument::from_root(Node::Mapping(vec![(key.to_string(), removed)]), "").source_text;
            node_at_mut(&mut root, parent).and_then(Node::as_mapping_mut).expect("parent is a mapping").retain(|(k, _)| k != key);
            let note = format!("`{key}` removed; `{}` requires it", survivor.last_key().unwrap_or_default());
            (survivor.clone(), site.path.clone(), Some(shown.trim_end().to_string()), None, note)
        }
        Action::Dangle { referent, form } => {
            let taken = declared_names(doc);
            let fresh = dangling_name(referent, &taken);
            let node = node_at_mut(&mut root, segs).expect("site exists");
            let old = leaf_text(node);
            rename_reference(node, *form, referent, &fresh);
            let new = leaf_text(node);
            let note = format!("reference to `{referent}` now names `{fresh}`, which is not declared");
            (site.path.clone(), site.path.clone(), Some(old), Some(new), note)
        }
    };
    let origin = format!("{}#{}-{}", doc.origin, subcategory, seed);
    let mutated = ConfigDocument::from_root(root, origin.clone());
    InjectionOutcome {
        ground_truth: GroundTruth {
            origin,
            misconfigured: vec![TruthEntry { path: truth_path, category: subcategory.finding_category(), note: None }],
            note: Some(note),
        },
        mutated,
        applied_rule: InjectionRule { category: subcategory.category(), subcategory, spec: site.spec.clone() },
        seed,
        site: site_path,
        original_value,
        injected_value,
    }
}

fn sites(doc: &ConfigDocument, subcategory: Subcategory, data: &SpecData) -> Vec<Site> {
    let locator = Locator::new(doc);
    let mut out = match subcategory {
        Subcategory::ResourceType => resource_type_sites(doc, data),
        Subcategory::Entry => entry_sites(doc, data),
        Subcategory::BasicNumeric => leaf_sites(doc, |p, node| {
            let loc = locator.location(p)?;
            let (min, max) = data.range(&loc)?;
            let v: i64 = match node {
                Node::Scalar(s) if s.kind == ScalarKind::Int => s.text.parse().ok()?,
                _ => return None,
            };
            ((min..=max).contains(&v)).then_some((RuleSpec::Range { location: loc, min, max }, Action::OutOfRange(min, max)))
        }),
        Subcategory::Enum => leaf_sites(doc, |p, node| {
            let loc = locator.location(p)?;
            let allowed = data.enum_values(&loc)?;
            let text = match node {
                Node::Scalar(s) if s.kind != ScalarKind::Null => &s.text,
                _ => return None,
            };
            allowed.contains(text).then(|| {
                let spec = RuleSpec::ValueSet { location: loc.clone(), size: allowed.len() };
                (spec, Action::ReplaceToken(data.enum_deny_for(&loc).to_vec()))
            })
        }),
        Subcategory::EntryRelationship => entry_relationship_sites(doc, data, &locator),
        Subcategory::ValueRelationship => value_relationship_sites(doc, data),
    };
    let order: HashMap<ParameterPath, usize> = doc.parameters().into_iter().enumerate().map(|(i, p)| (p, i)).collect();
    out.sort_by_key(|s| order.get(&s.path).copied().unwrap_or(usize::MAX));
    let mut seen = BTreeSet::new();
    out.retain(|s| seen.insert(s.path.clone()));
    out
}

/// Value parameters (excluding resource types) accepted by `pick`.
fn leaf_sites(doc: &ConfigDocument, pick: impl Fn(&ParameterPath, &Node) -> Option<(RuleSpec, Action)>) -> Vec<Site> {
    doc.parameters()
        .into_iter()
        .filter(|p| p.kind() == ParamKind::ScalarValue)
        .filter_map(|p| {
            let node = doc.node(p.segments())?;
            let (spec, action) = pick(&p, node)?;
            Some(Site { path: p, spec, action })
        })
        .collect()
}

fn resource_type_sites(doc: &ConfigDocument, data: &SpecData) -> Vec<Site> {
    doc.parameters()
        .into_iter()
        .filter(|p| p.kind() == ParamKind::ResourceTypeDecl)
        .filter_map(|p| {
            let ty = doc.node(p.segments())?.as_str()?;
            data.resource_types.iter().any(|t| t == ty).then(|| Site {
                spec: RuleSpec::ValueSet { location: "Resources/*/Type".into(), size: data.resource_types.len() },
                action: Action::ReplaceToken(data.resource_type_deny.clone()),
                path: p,
            })
        })
        .collect()
}

fn entry_sites(doc: &ConfigDocument, data: &SpecData) -> Vec<Site> {
    doc.resources()
        .into_iter()
        .filter_map(|r| {
            let catalog = data.entries.get(&r.resource_type)?;
            let props = doc.node(r.properties_path.segments())?.as_mapping()?;
            (!props.is_empty()).then(|| Site {
                path: r.properties_path.clone(),
                spec: RuleSpec::EntryCatalog { resource_type: r.resource_type.clone(), size: catalog.len() },
                action: Action::InsertKey(data.entry_deny.clone()),
            })
        })
        .collect()
}

/// Every mapping node below the root, with its segments.
fn mappings(node: &Node, prefix: &mut Vec<Segment>, out: &mut Vec<Vec<Segment>>) {
    match node {
        Node::Mapping(entries) => {
            if !prefix.is_empty() {
                out.push(prefix.clone());
            }
            for (k, child) in entries {
                prefix.push(Segment::Key(k.clone()));
                mappings(child, prefix, out);
                prefix.pop();
            }
        }
        Node::Sequence(items) => {
            for (i, child) in items.iter().enumerate() {
                prefix.push(Segment::Index(i));
                mappings(child, prefix, out);
                prefix.pop();
            }
        }
        _ => {}
    }
}

fn entry_relationship_sites(doc: &ConfigDocument, data: &SpecData, locator: &Locator) -> Vec<Site> {
    let rules: Vec<&RelationshipSpec> =
        data.relationships.iter().filter(|r| r.form == RelForm::EntryRelationship && r.op == RelOp::Occurrence).collect();
    let globals = doc.root.get("Globals").and_then(|g| g.get("Function"));
    let mut all = Vec::new();
    mappings(&doc.root, &mut Vec::new(), &mut all);
    let mut out = Vec::new();
    for segs in all {
        let Some(location) = locator.location(&ParameterPath::value(segs.clone())) else { continue };
        let node = doc.node(&segs).expect("collected from the tree");
        for rule in rules.iter().filter(|r| data::location_matches(&r.scope, &location)) {
            if node.get(&rule.p1).is_none() || node.get(&rule.p2).is_none() {
                continue;
            }
            if location == "AWS::Serverless::Function/Properties" && globals.and_then(|g| g.get(&rule.p2)).is_some() {
                continue;
            }
            let at = |k: &str| {
                let mut s = segs.clone();
                s.push(Segment::Key(k.to_string()));
                ParameterPath::entry(s)
            };
            out.push(Site {
                path: at(&rule.p2),
                spec: RuleSpec::Relationship((*rule).clone()),
                action: Action::DeleteKey { survivor: at(&rule.p1) },
            });
        }
    }
    out
}

fn section_names<'a>(doc: &'a ConfigDocument, section: &str) -> Vec<&'a str> {
    doc.root.get(section).and_then(Node::as_mapping).map(|m| m.iter().map(|(k, _)| k.as_str()).collect()).unwrap_or_default()
}

fn declared_names(doc: &ConfigDocument) -> BTreeSet<String> {
    ["Resources", "Parameters", "Conditions", "Mappings", "Outputs"]
        .iter()
        .flat_map(|s| section_names(doc, s))
        .map(str::to_string)
        .collect()
}

/// `${Name}` and `${Name.Attr}` referents of a substitution string.
fn sub_referents(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(i) = rest.find("${") {
        rest = &rest[i + 2..];
        let Some(end) = rest.find('}') else { break };
        let var = &rest[..end];
        if !var.starts_with('!') && !var.contains("::") {
            out.push(var.split('.').next().unwrap_or(var));
        }
        rest = &rest[end..];
    }
    out
}

/// The reference form and referent candidates of a value parameter.
fn reference_at(p: &ParameterPath, node: &Node) -> Option<(RefForm, Vec<String>)> {
    let segs = p.segments();
    let parent_key = |back: usize| segs.len().checked_sub(back).and_then(|i| segs[i].key());
    let scalar = |n: &Node| n.as_scalar().filter(|s| s.kind == ScalarKind::String).map(|s| s.text.clone());
    let getatt_name = |t: &str| t.split('.').next().unwrap_or(t).to_string();
    match node {
        Node::Tagged(tag, payload) => match (tag.as_str(), payload.as_ref()) {
            ("Ref", n) => scalar(n).map(|t| (RefForm::Ref, vec![t])),
            ("GetAtt", Node::Sequence(items)) => items.first().and_then(scalar).map(|t| (RefForm::GetAtt, vec![t])),
            ("GetAtt", n) => scalar(n).map(|t| (RefForm::GetAtt, vec![getatt_name(&t)])),
            ("Sub", n) => scalar(n).map(|t| (RefForm::Sub, sub_referents(&t).into_iter().map(str::to_string).collect())),
            _ => None,
        },
        Node::Scalar(_) => {
            let text = scalar(node)?;
            let section = segs[0].key()?;
            match (parent_key(1), segs.last()) {
                (Some("Ref"), _) => Some((RefForm::Ref, vec![text])),
                (Some("Fn::GetAtt"), _) => Some((RefForm::GetAtt, vec![getatt_name(&text)])),
                (Some("Fn::Sub"), _) => Some((RefForm::Sub, sub_referents(&text).into_iter().map(str::to_string).collect())),
                (_, Some(Segment::Index(0))) if parent_key(2) == Some("Fn::GetAtt") => Some((RefForm::GetAtt, vec![text])),
                (Some("Condition"), _) if segs.len() == 3 && matches!(section, "Resources" | "Outputs") => {
                    Some((RefForm::Condition, vec![text]))
                }
                (Some("DependsOn"), _) if segs.len() == 3 && section == "Resources" => Some((RefForm::DependsOn, vec![text])),
                (_, Some(Segment::Index(_)))
                    if segs.len() == 4 && section == "Resources" && parent_key(2) == Some("DependsOn") =>
                {
                    Some((RefForm::DependsOn, vec![text]))
                }
                _ => None,
            }
        }
        _ => None,
    }
}

fn value_relationship_sites(doc: &ConfigDocument, data: &SpecData) -> Vec<Site> {
    let rules: Vec<(RefForm, &RelationshipSpec)> = data
        .relationships
        .iter()
        .filter(|r| r.form == RelForm::ValueRelationship)
        .filter_map(|r| RefForm::parse(&r.p1).map(|f| (f, r)))
        .collect();
    leaf_sites(doc, |p, node| {
        let (form, referents) = reference_at(p, node)?;
        rules.iter().filter(|(f, _)| *f == form).find_map(|(_, rule)| {
            let names: Vec<&str> = rule.p2.split('|').flat_map(|s| section_names(doc, s)).collect();
            let referent = referents.iter().find(|r| names.contains(&r.as_str()))?;
            Some((RuleSpec::Relationship((*rule).clone()), Action::Dangle { referent: referent.clone(), form }))
        })
    })
}

/// `NoSuch` plus the last CamelCase hump of `name`, numbered if taken.
fn dangling_name(name: &str, taken: &BTreeSet<String>) -> String {
    let hump_start = name.char_indices().rev().find(|(_, c)| c.is_ascii_uppercase()).map_or(0, |(i, _)| i);
    let hump = &name[hump_start..];
    let mut base = String::from("NoSuch");
    let mut chars = hump.chars();
    if let Some(c) = chars.next() {
        base.push(c.to_ascii_uppercase());
        base.extend(chars);
    }
    if !taken.contains(&base) {
        return base;
    }
    (2..).map(|n| format!("{base}{n}")).find(|c| !taken.contains(c)).expect("unbounded search")
}

fn replace_text(node: &mut Node, f: impl Fn(&str) -> String) {
    if let Node::Scalar(s) = node {
        s.text = f(&s.text);
        s.kind = ScalarKind::String;
    }
}

fn rename_reference(node: &mut Node, form: RefForm, old: &str, new: &str) {
    let getatt = |t: &str| match t.split_once('.') {
        Some((n, attr)) if n == old => format!("{new}.{attr}"),
        _ if t == old => new.to_string(),
        _ => t.to_string(),
    };
    let sub =
        |t: &str| t.replace(&format!("${{{old}}}"), &format!("${{{new}}}")).replace(&format!("${{{old}."), &format!("${{{new}."));
    match (form, node) {
        (RefForm::GetAtt, Node::Tagged(_, payload)) => match payload.as_mut() {
            Node::Sequence(items) => replace_text(&mut items[0], |_| new.to_string()),
            n => replace_text(n, getatt),
        },
        (RefForm::Sub, Node::Tagged(_, payload)) => replace_text(payload, sub),
        (_, Node::Tagged(_, payload)) => replace_text(payload, |_| new.to_string()),
        (RefForm::GetAtt, n) => replace_text(n, getatt),
        (RefForm::Sub, n) => replace_text(n, sub),
        (_, n) => replace_text(n, |_| new.to_string()),
    }
}

/// Leaf value of a sibling whose key shares its first four letters with
/// `key`, ignoring case.
fn similar_leaf(mapping: &[(String, Node)], key: &str) -> Option<Node> {
    let head = |k: &str| k.chars().take(4).collect::<String>().to_lowercase();
    mapping.iter().find(|(k, v)| v.is_leaf() && k.len() >= 4 && head(k) == head(key)).map(|(_, v)| v.clone())
}

fn leaf_text(node: &Node) -> String {
    match node {
        Node::Scalar(s) if s.kind == ScalarKind::Null => "null".to_string(),
        Node::Scalar(s) => s.text.clone(),
        Node::Tagged(tag, payload) => format!("!{tag} {}", leaf_text(payload)),
        Node::Sequence(items) => format!("[{}]", items.iter().map(leaf_text).collect::<Vec<_>>().join(", ")),
        Node::Mapping(entries) => {
            let parts: Vec<String> = entries.iter().map(|(k, v)| format!("{k}: {}", leaf_text(v))).collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}
