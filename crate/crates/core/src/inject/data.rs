use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use super::RelationshipSpec;

const SHIPPED: &str = include_str!("../../data/spec_data.json");

static SHIPPED_DATA: LazyLock<SpecData> = LazyLock::new(|| SpecData::from_json(SHIPPED).expect("shipped spec data is valid"));

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum EnumEntry {
    Values(Vec<String>),
    /// `@<location>`: same set as another location.
    Alias(String),
}

#[derive(Debug, Deserialize)]
struct RawSpecData {
    version: String,
    source: String,
    resource_types: Vec<String>,
    resource_type_deny: Vec<String>,
    entries: BTreeMap<String, Vec<String>>,
    entry_deny: Vec<String>,
    enums: BTreeMap<String, EnumEntry>,
    enum_deny: BTreeMap<String, Vec<String>>,
    ranges: BTreeMap<String, (i64, i64)>,
    relationships: Vec<RelationshipSpec>,
}

/// Value sets, entry catalogs, numeric ranges and relationships the injector
/// draws on. Locations use the type-scoped form produced by
/// [`crate::config::Locator`]; an owner of `*` matches any owner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecData {
    pub version: String,
    pub source: String,
    pub resource_types: Vec<String>,
    pub resource_type_deny: Vec<String>,
    /// Valid `Properties` keys per resource type.
    pub entries: BTreeMap<String, Vec<String>>,
    pub entry_deny: Vec<String>,
    pub enums: BTreeMap<String, Vec<String>>,
    /// Out-of-set tokens per location; `*` is the fallback list.
    pub enum_deny: BTreeMap<String, Vec<String>>,
    /// Inclusive integer bounds per location.
    pub ranges: BTreeMap<String, (i64, i64)>,
    pub relationships: Vec<RelationshipSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid spec data: {0}")]
pub struct SpecDataError(pub String);

impl SpecData {
    /// The data file bundled with the crate.
    pub fn shipped() -> &'static SpecData {
        &SHIPPED_DATA
    }

    /// Parses and validates: aliases resolve, deny lists are disjoint from
    /// the sets they negate, ranges are ordered.
    pub fn from_json(text: &str) -> Result<SpecData, SpecDataError> {
        let raw: RawSpecData = serde_json::from_str(text).map_err(|e| SpecDataError(e.to_string()))?;
        let mut enums = BTreeMap::new();
        for (loc, entry) in &raw.enums {
            let values = match entry {
                EnumEntry::Values(v) => v.clone(),
                EnumEntry::Alias(a) => match a.strip_prefix('@').and_then(|t| raw.enums.get(t)) {
                    Some(EnumEntry::Values(v)) => v.clone(),
                    _ => return Err(SpecDataError(format!("enum alias `{a}` at `{loc}` does not name a value set"))),
                },
            };
            enums.insert(loc.clone(), values);
        }
        let data = SpecData {
            version: raw.version,
            source: raw.source,
            resource_types: raw.resource_types,
            resource_type_deny: raw.resource_type_deny,
            entries: raw.entries,
            entry_deny: raw.entry_deny,
            enums,
            enum_deny: raw.enum_deny,
            ranges: raw.ranges,
            relationships: raw.relationships,
        };
        data.validate()?;
        Ok(data)
    }

    fn validate(&self) -> Result<(), SpecDataError> {
        let fail = |m: String| Err(SpecDataError(m));
        if let Some(t) = self.resource_type_deny.iter().find(|t| self.resource_types.contains(t)) {
            return fail(format!("denied resource type `{t}` is also supported"));
        }
        for (ty, keys) in &self.entries {
            if let Some(k) = self.entry_deny.iter().find(|k| keys.contains(k)) {
                return fail(format!("denied entry `{k}` is valid for {ty}"));
            }
        }
        if !self.enum_deny.contains_key("*") {
            return fail("enum_deny needs a `*` fallback list".into());
        }
        for (loc, allowed) in &self.enums {
            if let Some(t) = self.enum_deny_for(loc).iter().find(|t| allowed.contains(t)) {
                return fail(format!("denied token `{t}` is allowed at `{loc}`"));
            }
        }
        if let Some((loc, _)) = self.ranges.iter().find(|(_, (lo, hi))| lo > hi) {
            return fail(format!("empty range at `{loc}`"));
        }
        if self.resource_type_deny.is_empty() || self.entry_deny.is_empty() {
            return fail("deny lists must be non-empty".into());
        }
        Ok(())
    }

    fn lookup<'a, T>(map: &'a BTreeMap<String, T>, location: &str) -> Option<&'a T> {
        map.get(location).or_else(|| {
            let (_, rel) = location.split_once('/')?;
            map.get(&format!("*/{rel}"))
        })
    }

    pub fn enum_values(&self, location: &str) -> Option<&[String]> {
        Self::lookup(&self.enums, location).map(Vec::as_slice)
    }

    pub fn enum_deny_for(&self, location: &str) -> &[String] {
        self.enum_deny.get(location).unwrap_or_else(|| &self.enum_deny["*"])
    }

    pub fn range(&self, location: &str) -> Option<(i64, i64)> {
        Self::lookup(&self.ranges, location).copied()
    }
}

/// Whether a location pattern (exact, or `*/<rest>`) covers `location`.
pub(super) fn location_matches(pattern: &str, location: &str) -> bool {
    if pattern == location {
        return true;
    }
    match (pattern.strip_prefix("*/"), location.split_once('/')) {
        (Some(rest), Some((_, loc_rest))) => rest == loc_rest,
        _ => false,
    }
}
