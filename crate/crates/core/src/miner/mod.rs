//! Data-driven baseline: frequent-pattern mining over normalized templates
//! and rule-violation detection.

mod fpgrowth;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::config::{normalize_for_mining, normalized_occurrences, ConfigDocument, ItemPrefix, NormalizedItem};
use crate::findings::{DetectionReport, DetectorKind, Finding, FindingCategory};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.95;
/// Largest itemset split into rules.
pub const MAX_RULE_ITEMSET: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MinerError {
    #[error("alpha must satisfy 0 < alpha <= 1, got {0}")]
    InvalidAlpha(f64),
    #[error("min_confidence must lie in [0, 1], got {0}")]
    InvalidConfidence(f64),
    #[error("corpus is empty")]
    EmptyCorpus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub origin: String,
    pub items: BTreeSet<String>,
}

impl Transaction {
    pub fn new(origin: impl Into<String>, items: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Transaction { origin: origin.into(), items: items.into_iter().map(Into::into).collect() }
    }

    pub fn from_document(doc: &ConfigDocument) -> Self {
        Transaction::new(doc.origin.clone(), normalize_for_mining(doc).into_iter().map(|i| i.item_text))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemsetCatalog {
    /// Item text to the number of transactions containing it.
    pub known_items: BTreeMap<String, usize>,
    pub corpus_size: usize,
}

impl ItemsetCatalog {
    pub fn from_transactions(transactions: &[Transaction]) -> Self {
        let mut known_items = BTreeMap::new();
        for t in transactions {
            for item in &t.items {
                *known_items.entry(item.clone()).or_insert(0) += 1;
            }
        }
        ItemsetCatalog { known_items, corpus_size: transactions.len() }
    }

    pub fn contains(&self, item: &str) -> bool {
        self.known_items.contains_key(item)
    }
}

/// A frequent itemset: items in ascending order and the number of
/// transactions containing all of them.
pub type FrequentItemset = (Vec<String>, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub support: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub corpus: String,
    pub corpus_size: usize,
    pub alpha: f64,
    pub support_threshold: usize,
    pub min_confidence: f64,
    pub max_rule_itemset: usize,
    /// Frequent itemsets of at most `max_rule_itemset` items.
    #[serde(default)]
    pub frequent_itemsets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleBase {
    pub alpha: f64,
    pub min_confidence: f64,
    pub rules: Vec<AssociationRule>,
    pub catalog: ItemsetCatalog,
    pub provenance: Provenance,
}

fn check_alpha(alpha: f64) -> Result<(), MinerError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(MinerError::InvalidAlpha(alpha))
    }
}

/// `ceil(alpha * len)`, treating products within 1e-9 of an integer as that
/// integer so `0.03 * 100` means 3.
pub fn support_threshold(alpha: f64, len: usize) -> usize {
    let raw = alpha * len as f64;
    let rounded = raw.round();
    let t = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (t as usize).max(1)
}

/// Frequent itemsets at `alpha`, ordered by size then lexicographically.
pub fn mine_frequent(transactions: &[Transaction], alpha: f64) -> Result<Vec<FrequentItemset>, MinerError> {
    mine_frequent_bounded(transactions, alpha, usize::MAX)
}

/// As [`mine_frequent`], limited to itemsets of at most `max_len` items.
pub fn mine_frequent_bounded(
    transactions: &[Transaction],
    alpha: f64,
    max_len: usize,
) -> Result<Vec<FrequentItemset>, MinerError> {
    check_alpha(alpha)?;
    if transactions.is_empty() {
        return Err(MinerError::EmptyCorpus);
    }
    let mut vocab: Vec<&str> = transactions.iter().flat_map(|t| t.items.iter().map(String::as_str)).collect();
    vocab.sort_unstable();
    vocab.dedup();
    let ids: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
    let encoded: Vec<Vec<u32>> = transactions.iter().map(|t| t.items.iter().map(|s| ids[s.as_str()]).collect()).collect();
    let min_count = support_threshold(alpha, transactions.len());
    let mut found = fpgrowth::frequent_itemsets(&encoded, min_count, max_len);
    // Ids follow lexicographic item order, so sorting ids sorts texts.
    found.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    Ok(found.into_iter().map(|(set, count)| (set.into_iter().map(|i| vocab[i as usize].to_string()).collect(), count)).collect())
}

/// Rules from every frequent itemset of size 2 to [`MAX_RULE_ITEMSET`].
pub fn derive_rules(frequent: &[FrequentItemset], len: usize, min_confidence: f64) -> Vec<AssociationRule> {
    derive_rules_capped(frequent, len, min_confidence, MAX_RULE_ITEMSET)
}

pub fn derive_rules_capped(
    frequent: &[FrequentItemset],
    len: usize,
    min_confidence: f64,
    max_itemset: usize,
) -> Vec<AssociationRule> {
    let counts: HashMap<&[String], usize> = frequent.iter().map(|(s, c)| (s.as_slice(), *c)).collect();
    let mut rules = Vec::new();
    for (set, count) in frequent {
        let n = set.len();
        if n < 2 || n > max_itemset {
            continue;
        }
        for mask in 1..(1u32 << n) - 1 {
            let side = |inside: bool| -> Vec<String> {
                set.iter().enumerate().filter(|(i, _)| (mask & (1 << i) != 0) == inside).map(|(_, s)| s.clone()).collect()
            };
            let (left, right) = (side(true), side(false));
            let Some(&left_count) = counts.get(left.as_slice()) else {
                continue;
            };
            let confidence = *count as f64 / left_count as f64;
            if confidence + 1e-12 >= min_confidence {
                rules.push(AssociationRule { left, right, support: *count as f64 / len as f64, confidence });
            }
        }
    }
    rules
}

/// Mines a rule base from parsed corpus documents.
pub fn mine_rulebase(
    corpus: &[ConfigDocument],
    alpha: f64,
    min_confidence: f64,
    description: impl Into<String>,
) -> Result<RuleBase, MinerError> {
    let transactions: Vec<Transaction> = corpus.iter().map(Transaction::from_document).collect();
    mine_rulebase_from_transactions(&transactions, alpha, min_confidence, description)
}

pub fn mine_rulebase_from_transactions(
    transactions: &[Transaction],
    alpha: f64,
    min_confidence: f64,
    description: impl Into<String>,
) -> Result<RuleBase, MinerError> {
    if !(0.0..=1.0).contains(&min_confidence) {
        return Err(MinerError::InvalidConfidence(min_confidence));
    }
    // Rules never use itemsets beyond the cap, so mining stops there too.
    let frequent = mine_frequent_bounded(transactions, alpha, MAX_RULE_ITEMSET)?;
    let rules = derive_rules(&frequent, transactions.len(), min_confidence);
    Ok(RuleBase {
        alpha,
        min_confidence,
        rules,
        catalog: ItemsetCatalog::from_transactions(transactions),
        provenance: Provenance {
            corpus: description.into(),
            corpus_size: transactions.len(),
            alpha,
            support_threshold: support_threshold(alpha, transactions.len()),
            min_confidence,
            max_rule_itemset: MAX_RULE_ITEMSET,
            frequent_itemsets: frequent.len(),
        },
    })
}

/// Which item prefixes the unknown-item channel reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DdOptions {
    pub unknown_resource_types: bool,
    pub unknown_entries: bool,
    pub unknown_values: bool,
}

impl Default for DdOptions {
    fn default() -> Self {
        DdOptions { unknown_resource_types: true, unknown_entries: true, unknown_values: true }
    }
}

impl DdOptions {
    fn reports(&self, prefix: ItemPrefix) -> bool {
        match prefix {
            ItemPrefix::ResourceType => self.unknown_resource_types,
            ItemPrefix::Entry => self.unknown_entries,
            ItemPrefix::Value => self.unknown_values,
        }
    }
}

pub fn detect_dd(doc: &ConfigDocument, rulebase: &RuleBase) -> DetectionReport {
    detect_dd_with(doc, rulebase, &DdOptions::default())
}

pub fn detect_dd_with(doc: &ConfigDocument, rulebase: &RuleBase, options: &DdOptions) -> DetectionReport {
    let occurrences = normalized_occurrences(doc);
    let mut findings = Vec::new();

    for item in &occurrences {
        let prefix = item.prefix();
        if !rulebase.catalog.contains(&item.item_text) && options.reports(prefix) {
            let category = match prefix {
                ItemPrefix::ResourceType => FindingCategory::ResourceTypeError,
                ItemPrefix::Entry => FindingCategory::ConfigurationEntryError,
                ItemPrefix::Value => FindingCategory::ConfigurationEntryValueError,
            };
            let mut f = Finding::new(category, item.item_text.clone(), "item never seen in the mining corpus");
            f.aligned_path = Some(item.origin_path.clone());
            findings.push(f);
        }
    }

    let mut first: HashMap<&str, &NormalizedItem> = HashMap::new();
    for item in &occurrences {
        first.entry(item.item_text.as_str()).or_insert(item);
    }
    let present: HashSet<&str> = first.keys().copied().collect();
    // Missing item -> (violated rule used in the explanation, candidate
    // anchors). Only rules with the smallest left side contribute anchors.
    let mut missing: Vec<(&str, &AssociationRule, BTreeSet<&str>)> = Vec::new();
    for rule in &rulebase.rules {
        if !rule.left.iter().all(|l| present.contains(l.as_str())) {
            continue;
        }
        let lefts = || rule.left.iter().map(String::as_str).collect::<BTreeSet<&str>>();
        for r in rule.right.iter().filter(|r| !present.contains(r.as_str())) {
            match missing.iter_mut().find(|(m, _, _)| *m == r.as_str()) {
                Some((_, best, anchors)) if rule.left.len() < best.left.len() => {
                    *best = rule;
                    *anchors = lefts();
                }
                Some((_, best, anchors)) if rule.left.len() == best.left.len() => anchors.extend(lefts()),
                Some(_) => {}
                None => missing.push((r.as_str(), rule, lefts())),
            }
        }
    }
    let position: HashMap<&str, usize> =
        occurrences.iter().enumerate().rev().map(|(i, item)| (item.item_text.as_str(), i)).collect();
    for (item, rule, anchors) in missing {
        let anchor = anchors
            .iter()
            .max_by_key(|a| (shared_prefix(a, item), std::cmp::Reverse(position[*a])))
            .expect("rules have non-empty left sides");
        let category = match ItemPrefix::of(item) {
            Some(ItemPrefix::Value) => FindingCategory::ValueDependencyError,
            _ => FindingCategory::EntryDependencyError,
        };
        let mut f = Finding::new(
            category,
            item.to_string(),
            format!(
                "missing; required by {{{}}} -> {{{}}} (support {:.4}, confidence {:.4})",
                rule.left.join(", "),
                rule.right.join(", "),
                rule.support,
                rule.confidence
            ),
        );
        f.aligned_path = Some(first[*anchor].origin_path.clone());
        findings.push(f);
    }

    DetectionReport {
        origin: doc.origin.clone(),
        detector: DetectorKind::DataDriven,
        findings,
        raw_response: None,
        warnings: Vec::new(),
    }
}

/// Number of leading `/`-separated segments shared by the item paths.
fn shared_prefix(a: &str, b: &str) -> usize {
    fn path(item: &str) -> &str {
        let body = item.split_once(':').map_or(item, |(_, rest)| rest);
        match ItemPrefix::of(item) {
            Some(ItemPrefix::Value) => body.split_once('=').map_or(body, |(p, _)| p),
            _ => body,
        }
    }
    path(a).split('/').zip(path(b).split('/')).take_while(|(x, y)| x == y).count()
}
