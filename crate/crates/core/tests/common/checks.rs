//! Checks shared by the focused suites and the acceptance report. Each
//! returns `Err` with a description of the first problem found.

use std::collections::BTreeSet;
use std::path::Path;

use rand::rngs::ChaCha8Rng;
use rand::{RngExt, SeedableRng};
use samcheck::config::{parse_template, serialize};
use samcheck::detector::{Detector, LlmDetector};
use samcheck::eval::{
    compute_metrics, f1_score, run_eval, score_file, Cohort, ConfusionCounts, DatasetItem, DatasetManifest, EvalReport,
    GroundTruth, TruthEntry, DEFAULT_REPETITIONS,
};
use samcheck::findings::{extract_delimited, ExtractWarning, FindingCategory};
use samcheck::gateway::{CacheMode, CacheRecord, Gateway, ProviderConfig, ResponseCache};
use samcheck::inject::{inject, Subcategory};
use samcheck::miner::{mine_frequent, FrequentItemset, Transaction};
use samcheck::prompt::{build_basic_prompt, build_prompt, build_slsdetector_prompt, Dimension, PromptVariant};
use serde::Deserialize;
use serde_json::Value;

use super::{clean_fixtures, fixture, minimality_violations, planted, repo_root, synthetic};

pub type Check = Result<(), String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn within_pp(got: f64, want_pct: f64) -> bool {
    (got * 100.0 - want_pct).abs() <= 0.01
}

pub fn metric_arithmetic() -> Check {
    let m = compute_metrics(&ConfusionCounts { tp: 218, fn_: 90, fp: 926, tn: 3182 });
    ensure(within_pp(m.precision, 19.06) && within_pp(m.recall, 70.78) && within_pp(m.f1, 30.03), || {
        format!("got {:.4}/{:.4}/{:.4}", m.precision * 100.0, m.recall * 100.0, m.f1 * 100.0)
    })
}

pub fn f1_consistency() -> Check {
    let f1 = f1_score(0.7183, 0.9188).ok_or("undefined")?;
    ensure(within_pp(f1, 80.63), || format!("got {:.4}", f1 * 100.0))
}

// Miner.

pub const ALPHA_GRID: [f64; 4] = [0.01, 0.03, 0.05, 0.10];

/// Exhaustive enumeration of every itemset over the corpus vocabulary.
pub fn brute_force(transactions: &[Transaction], alpha: f64) -> Vec<FrequentItemset> {
    let vocab: Vec<String> =
        transactions.iter().flat_map(|t| t.items.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    let min = (alpha * transactions.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    let mut out = Vec::new();
    for mask in 1u32..(1 << vocab.len()) {
        let set: Vec<String> = (0..vocab.len()).filter(|i| mask & (1 << i) != 0).map(|i| vocab[i].clone()).collect();
        let count = transactions.iter().filter(|t| set.iter().all(|i| t.items.contains(i))).count();
        if count >= min {
            out.push((set, count));
        }
    }
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    out
}

/// `count` seeded corpora of at most 12 items and 50 transactions.
pub fn random_corpora(count: usize, seed: u64) -> Vec<Vec<Transaction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let items = rng.random_range(1..=12usize);
            let len = rng.random_range(1..=50usize);
            let density = rng.random_range(0.1..0.9f64);
            (0..len)
                .map(|i| {
                    let set: Vec<String> = (0..items).filter(|_| rng.random_bool(density)).map(|x| format!("I{x:02}")).collect();
                    Transaction::new(format!("t{i}"), set)
                })
                .collect()
        })
        .collect()
}

pub fn downward_closed(found: &[FrequentItemset]) -> Check {
    let family: BTreeSet<&Vec<String>> = found.iter().map(|(s, _)| s).collect();
    for (set, _) in found {
        for skip in 0..set.len() {
            let mut sub = set.clone();
            sub.remove(skip);
            ensure(sub.is_empty() || family.contains(&sub), || format!("{sub:?} missing under {set:?}"))?;
        }
    }
    Ok(())
}

fn mined(corpora: &[Vec<Transaction>]) -> Result<Vec<Vec<Vec<FrequentItemset>>>, String> {
    corpora.iter().map(|t| ALPHA_GRID.iter().map(|&a| mine_frequent(t, a).map_err(|e| e.to_string())).collect()).collect()
}

pub fn miner_equivalence(corpora: &[Vec<Transaction>]) -> Check {
    let mut discrepancies = 0;
    for (t, per_alpha) in corpora.iter().zip(mined(corpora)?) {
        for (alpha, got) in ALPHA_GRID.iter().zip(per_alpha) {
            discrepancies += usize::from(got != brute_force(t, *alpha));
        }
    }
    ensure(discrepancies == 0, || format!("{discrepancies} discrepancies"))
}

pub fn miner_monotone_and_closed(corpora: &[Vec<Transaction>]) -> Check {
    for (i, per_alpha) in mined(corpora)?.iter().enumerate() {
        for found in per_alpha {
            downward_closed(found).map_err(|e| format!("corpus {i}: {e}"))?;
        }
        for pair in per_alpha.windows(2) {
            let low: BTreeSet<&Vec<String>> = pair[0].iter().map(|(s, _)| s).collect();
            let high: BTreeSet<&Vec<String>> = pair[1].iter().map(|(s, _)| s).collect();
            ensure(high.is_subset(&low), || format!("corpus {i}: raising alpha added itemsets"))?;
        }
    }
    Ok(())
}

// Planted rule.

pub fn planted_rule() -> Check {
    let rb = planted::rulebase();
    let rule = rb
        .rules
        .iter()
        .find(|r| r.left == [planted::PLANTED_LEFT] && r.right == [planted::PLANTED_RIGHT])
        .ok_or("planted rule not mined")?;
    ensure(rule.confidence == 1.0, || format!("confidence {}", rule.confidence))?;
    let report = planted::held_out_report(rb);
    let paths: Vec<String> = report.detected_paths().iter().map(ToString::to_string).collect();
    ensure(paths == [planted::EXPECTED_PATH], || format!("flagged {paths:?}"))?;
    let committed = std::fs::read_to_string(repo_root().join(planted::EXPECTED_REPORT)).map_err(|e| e.to_string())?;
    ensure(committed == planted::expected_report_text(), || "differs from the committed expected report".into())
}

// Prompts.

pub const ROLE: &str = "You are an expert at writing AWS SAM configurations for serverless applications";
pub const TASK: &str = "Are there any misconfigurations in the above configuration file?";
pub const ANCHORS: &[&str] = &[
    "Check whether the resource type is currently supported by AWS SAM, search the following URL to compare all supported AWS resources listed, noting the letter case.",
    "https://docs.aws.amazon.com/serverlessrepo/latest/devguide/list-supported-resources.html",
    "case sensitivity, and the use of singular or plural forms",
    "special attention to indentation",
    "Check that the value type, constraints, and supported values of the configuration entry are correct, that the value representation is accurate, and that the value cannot be defined as null",
    "Check if there are dependencies between configuration entries, check that they are used in the correct way",
    "Check if there is a dependency (possibly implicit) between the values of configuration entries, check that the usage is correct and that the relevant required reference definitions are given",
    "Please summarize the misconfigurations that are absolutely certain",
    "<START> Resource Type Errors: ..., Value Dependency Errors: ... <END>",
];
pub const CATEGORIES: &[&str] = &[
    "Resource Type Errors",
    "Configuration Entry Errors",
    "Configuration Entry Value Errors",
    "Entry Dependency Errors",
    "Value Dependency Errors",
];

pub fn s3_condition_text() -> String {
    std::fs::read_to_string(repo_root().join("fixtures/s3_condition.yaml")).unwrap()
}

pub fn sls_prompt_structure() -> Check {
    let text = build_slsdetector_prompt(&s3_condition_text()).map_err(|e| e.to_string())?;
    ensure(text.contains(ROLE) && text.contains(TASK), || "role or task sentence missing".into())?;
    for anchor in ANCHORS.iter().chain(CATEGORIES) {
        ensure(text.contains(anchor), || format!("missing {anchor:?}"))?;
    }
    for step in 1..=3 {
        ensure(text.matches(&format!("Step {step}: ")).count() == 1, || format!("step {step} not present exactly once"))?;
    }
    let order: Vec<Option<usize>> = std::iter::once(text.find("AWSTemplateFormatVersion"))
        .chain([text.find(ROLE)])
        .chain(Dimension::ALL.iter().map(|d| text.find(&format!("{}:\n", d.heading()))))
        .chain([text.find("Please summarize"), text.find("<START>")])
        .collect();
    ensure(order.iter().all(Option::is_some) && order.windows(2).all(|w| w[0] < w[1]), || {
        format!("sections out of order: {order:?}")
    })
}

pub fn basic_prompt_structure() -> Check {
    let text = build_basic_prompt(&s3_condition_text()).map_err(|e| e.to_string())?;
    ensure(text.contains(ROLE) && text.contains(TASK), || "role or task sentence missing".into())?;
    ensure(text.contains("<START>") && text.contains("<END>"), || "delimiters missing".into())?;
    ensure(!text.contains("Check whether the resource type"), || "constraint text present".into())?;
    for d in Dimension::ALL {
        ensure(!text.contains(d.heading()), || format!("heading {:?} present", d.heading()))?;
    }
    Ok(())
}

/// `(golden file, variant, template text)` for every committed golden.
pub fn golden_cases() -> Vec<(&'static str, PromptVariant, String)> {
    vec![
        ("s3_condition_sls.txt", PromptVariant::SlsDetector, s3_condition_text()),
        ("s3_condition_basic.txt", PromptVariant::Basic, s3_condition_text()),
        ("transform_sls.txt", PromptVariant::SlsDetector, "Transform: AWS::Serverless-2016-10-31".to_string()),
    ]
}

pub fn golden_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn prompt_goldens() -> Check {
    for (name, variant, template) in golden_cases() {
        let actual = build_prompt(variant, &template).map_err(|e| e.to_string())?;
        let expected = std::fs::read_to_string(golden_path(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(expected == actual, || format!("{name} differs"))?;
    }
    sls_prompt_structure()?;
    basic_prompt_structure()
}

// Delimiters.

#[derive(Deserialize)]
struct DelimiterTable {
    cases: Vec<DelimiterCase>,
}

#[derive(Deserialize)]
pub struct DelimiterCase {
    pub name: String,
    pub raw: String,
    pub inner: String,
    pub missing_delimiters: bool,
}

pub fn delimiter_cases() -> Vec<DelimiterCase> {
    let text = std::fs::read_to_string(repo_root().join("fixtures/delimiters.json")).unwrap();
    serde_json::from_str::<DelimiterTable>(&text).unwrap().cases
}

pub fn delimiter_table() -> Check {
    let cases = delimiter_cases();
    let failed: Vec<&str> = cases
        .iter()
        .filter(|c| {
            let want = (c.inner.clone(), c.missing_delimiters.then_some(ExtractWarning::MissingDelimiters));
            extract_delimited(&c.raw) != want
        })
        .map(|c| c.name.as_str())
        .collect();
    ensure(cases.len() == 30, || format!("{} cases, expected 30", cases.len()))?;
    ensure(failed.is_empty(), || format!("failing: {failed:?}"))
}

// Injection.

pub const SEEDS: [u64; 3] = [1, 2, 3];

pub fn injection_round_trip() -> Check {
    let docs = clean_fixtures();
    ensure(docs.len() == 10, || format!("{} fixtures", docs.len()))?;
    for doc in &docs {
        for c in Subcategory::ALL {
            for seed in SEEDS {
                let ctx = format!("{} {c} seed {seed}", doc.origin);
                let out = inject(doc, c, seed).map_err(|e| format!("{ctx}: {e}"))?;
                let text = serialize(&out.mutated);
                ensure(text != serialize(doc), || format!("{ctx}: nothing changed"))?;
                let again = parse_template(&text).map_err(|e| format!("{ctx}: {e}"))?;
                ensure(again.root == out.mutated.root, || format!("{ctx}: reparse differs"))?;
                ensure(out.ground_truth.misconfigured.len() == 1, || format!("{ctx}: expected one label"))?;
                ensure(out.ground_truth.misconfigured[0].category == c.finding_category(), || format!("{ctx}: wrong category"))?;
                out.ground_truth.check_against(&out.mutated).map_err(|e| format!("{ctx}: {e}"))?;
                let violations = minimality_violations(doc, &out);
                ensure(violations.is_empty(), || format!("{ctx}: {violations:?}"))?;
                let twin = inject(doc, c, seed).map_err(|e| format!("{ctx}: {e}"))?;
                ensure(serialize(&twin.mutated) == text, || format!("{ctx}: template not reproducible"))?;
                ensure(twin.ground_truth.to_json() == out.ground_truth.to_json(), || format!("{ctx}: truth not reproducible"))?;
            }
        }
    }
    Ok(())
}

// Synthetic dataset.

pub fn replay_report() -> Result<EvalReport, String> {
    let dir = synthetic::dir();
    let manifest = DatasetManifest::load(&dir.join("manifest.json")).map_err(|e| e.to_string())?;
    let cache = ResponseCache::open(dir.join("cache.jsonl"), CacheMode::Replay).map_err(|e| e.to_string())?;
    let detector = LlmDetector::new(PromptVariant::SlsDetector, Gateway::new(ProviderConfig::default()), cache);
    run_eval(&manifest, &detector, DEFAULT_REPETITIONS, 0).map_err(|e| e.to_string())
}

/// Every key of `want` must be present in `got` with an equal value;
/// numbers compare within 1e-12.
fn subset_mismatches(want: &Value, got: &Value, at: &str, out: &mut Vec<String>) {
    match (want, got) {
        (Value::Object(w), Value::Object(g)) => {
            for (k, wv) in w {
                match g.get(k) {
                    Some(gv) => subset_mismatches(wv, gv, &format!("{at}.{k}"), out),
                    None => out.push(format!("{at}.{k}: missing")),
                }
            }
        }
        (Value::Array(w), Value::Array(g)) if w.len() == g.len() => {
            for (i, (wv, gv)) in w.iter().zip(g).enumerate() {
                subset_mismatches(wv, gv, &format!("{at}[{i}]"), out);
            }
        }
        (Value::Number(w), Value::Number(g)) if w.is_f64() || g.is_f64() => {
            if (w.as_f64().unwrap() - g.as_f64().unwrap()).abs() > 1e-12 {
                out.push(format!("{at}: want {w}, got {g}"));
            }
        }
        (w, g) if w == g => {}
        (w, g) => out.push(format!("{at}: want {w}, got {g}")),
    }
}

pub fn oracle_mismatches(report: &EvalReport) -> Vec<String> {
    let text = std::fs::read_to_string(synthetic::dir().join("expected_report.json")).unwrap();
    let want: Value = serde_json::from_str(&text).unwrap();
    let got = serde_json::to_value(report).unwrap();
    let mut out = Vec::new();
    subset_mismatches(&want, &got, "report", &mut out);
    out
}

pub fn mock_end_to_end() -> Check {
    let stale = synthetic::sync(&synthetic::load());
    ensure(stale.is_empty(), || format!("stale derived files {stale:?}"))?;
    let report = replay_report()?;
    ensure(report.failures.is_empty(), || format!("{:?}", report.failures))?;
    let mismatches = oracle_mismatches(&report);
    ensure(mismatches.is_empty(), || mismatches.join("; "))
}

// Motivating example.

pub const S3_CONDITION_CONDITION: &str = "Resources.BucketEventConsumer.Properties.Events.CreateMetaEvent.Condition";
pub const S3_CONDITION_FLAGGING: &str =
    "<START>\nConfiguration Entry Errors:\n- `Condition` in `CreateMetaEvent`: S3 event sources do not support conditions\n<END>";
pub const S3_CONDITION_EMPTY: &str = "<START>\nNo misconfigurations were found.\n<END>";

pub fn s3_condition_item() -> DatasetItem {
    let doc = fixture("s3_condition.yaml");
    let truth = GroundTruth {
        origin: doc.origin.clone(),
        misconfigured: vec![TruthEntry {
            path: S3_CONDITION_CONDITION.parse().unwrap(),
            category: FindingCategory::ConfigurationEntryError,
            note: None,
        }],
        note: None,
    };
    let params = doc.parameters();
    DatasetItem { doc, truth, cohort: Cohort::RealWorld, params }
}

/// Counts for the S3 condition fixture when the replayed model answer is `response`.
pub fn s3_condition_score(response: &str) -> Result<ConfusionCounts, String> {
    let item = s3_condition_item();
    let cfg = ProviderConfig::default();
    let gateway = Gateway::new(cfg.clone());
    let prompt = build_prompt(PromptVariant::SlsDetector, &item.doc.source_text).map_err(|e| e.to_string())?;
    let cache = ResponseCache::in_memory(CacheMode::Replay);
    cache
        .append(CacheRecord {
            request_id: gateway.request(prompt).request_id,
            model: cfg.model_name.clone(),
            temperature: cfg.temperature,
            prompt_sha: String::new(),
            response_text: response.to_string(),
            timestamp: String::new(),
        })
        .map_err(|e| e.to_string())?;
    let detector = LlmDetector::new(PromptVariant::SlsDetector, gateway, cache);
    let report = detector.detect(&item.doc).map_err(|e| e.to_string())?;
    Ok(score_file(&item, &report).map_err(|e| e.to_string())?.counts)
}

pub fn s3_condition_scoring() -> Check {
    let hit = s3_condition_score(S3_CONDITION_FLAGGING)?;
    ensure((hit.tp, hit.fp, hit.fn_) == (1, 0, 0), || format!("flagging response scored {hit:?}"))?;
    let miss = s3_condition_score(S3_CONDITION_EMPTY)?;
    ensure((miss.tp, miss.fp, miss.fn_) == (0, 0, 1), || format!("empty response scored {miss:?}"))
}

// Conservation.

/// Every scored file in `report` has `tp + fp + tn + fn = |params| + unmatched + stray`.
pub fn conserved(report: &EvalReport, items: &[DatasetItem]) -> Check {
    for run in &report.repetitions {
        for f in &run.files {
            let item = items.iter().find(|i| i.doc.origin == f.origin).ok_or_else(|| format!("unknown {}", f.origin))?;
            let stray = f.detected.iter().filter(|p| !item.params.contains(p)).count();
            let expected = item.params.len() + f.unmatched + stray;
            ensure(f.counts.total() == expected, || {
                format!("{} run {}: {} cells for {expected} slots", f.origin, run.run, f.counts.total())
            })?;
        }
    }
    Ok(())
}

pub fn conservation() -> Check {
    let report = replay_report()?;
    let dir = synthetic::dir();
    let items = DatasetManifest::load(&dir.join("manifest.json")).and_then(|m| m.load_items()).map_err(|e| e.to_string())?;
    conserved(&report, &items)?;
    let s3_condition = s3_condition_item();
    for response in [S3_CONDITION_FLAGGING, S3_CONDITION_EMPTY] {
        let c = s3_condition_score(response)?;
        ensure(c.total() == s3_condition.params.len(), || {
            format!("s3_condition: {} cells for {} parameters", c.total(), s3_condition.params.len())
        })?;
    }
    let held_out = planted::held_out_item();
    let outcome = score_file(&held_out, &planted::held_out_report(planted::rulebase())).map_err(|e| e.to_string())?;
    ensure(outcome.counts.total() == held_out.params.len() + outcome.unmatched, || "planted held-out file not conserved".into())
}
