//! A seeded 20-file corpus in which every function with a
//! `DeploymentPreference` also has an `AutoPublishAlias`, plus a held-out
//! file that drops the alias.

use std::sync::OnceLock;

use rand::rngs::ChaCha8Rng;
use rand::{RngExt, SeedableRng};
use samcheck::config::ConfigDocument;
use samcheck::eval::{score_file, Cohort, DatasetItem, GroundTruth, TruthEntry};
use samcheck::findings::{DetectionReport, FindingCategory};
use samcheck::miner::{detect_dd, mine_rulebase, RuleBase};
use serde_json::json;

pub const CORPUS_SIZE: usize = 20;
pub const SEED: u64 = 2024;
pub const ALPHA: f64 = 0.25;
pub const MIN_CONFIDENCE: f64 = 0.95;

pub const PLANTED_LEFT: &str = "E:AWS::Serverless::Function/Properties/DeploymentPreference";
pub const PLANTED_RIGHT: &str = "E:AWS::Serverless::Function/Properties/AutoPublishAlias";
pub const EXPECTED_PATH: &str = "Resources.Worker.Properties.DeploymentPreference";
/// Relative to the repository root.
pub const EXPECTED_REPORT: &str = "fixtures/planted/expected_report.json";

struct Shape {
    deploy: bool,
    runtime: &'static str,
    memory: Option<u32>,
    timeout: Option<u32>,
    sqs: bool,
}

fn render(s: &Shape, alias: bool) -> String {
    let mut t = String::from("AWSTemplateFormatVersion: '2010-09-09'\nTransform: AWS::Serverless-2016-10-31\nResources:\n");
    if s.sqs {
        t.push_str("  Jobs:\n    Type: AWS::SQS::Queue\n");
    }
    t.push_str("  Worker:\n    Type: AWS::Serverless::Function\n    Properties:\n");
    if s.deploy {
        t.push_str("      DeploymentPreference:\n        Type: AllAtOnce\n");
    }
    t.push_str(&format!("      Handler: app.handler\n      Runtime: {}\n      CodeUri: src/\n", s.runtime));
    if s.deploy && alias {
        t.push_str("      AutoPublishAlias: live\n");
    }
    if let Some(m) = s.memory {
        t.push_str(&format!("      MemorySize: {m}\n"));
    }
    if let Some(x) = s.timeout {
        t.push_str(&format!("      Timeout: {x}\n"));
    }
    if s.sqs {
        t.push_str(
            "      Events:\n        Work:\n          Type: SQS\n          Properties:\n            Queue: !GetAtt Jobs.Arn\n",
        );
    } else {
        t.push_str("      Events:\n        Hit:\n          Type: Api\n          Properties:\n            Path: /hit\n            Method: get\n");
    }
    t
}

fn shapes() -> Vec<Shape> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..CORPUS_SIZE)
        .map(|i| Shape {
            deploy: i % 2 == 0,
            runtime: ["python3.12", "nodejs20.x"][rng.random_range(0..2)],
            memory: [None, Some(128), Some(512)][rng.random_range(0..3)],
            timeout: [None, Some(3), Some(30)][rng.random_range(0..3)],
            sqs: rng.random_range(0..2) == 0,
        })
        .collect()
}

/// Corpus templates in generation order.
pub fn corpus_texts() -> Vec<String> {
    shapes().iter().map(|s| render(s, true)).collect()
}

/// The first deploying corpus file without its alias.
pub fn held_out_text() -> String {
    render(&shapes()[0], false)
}

pub fn corpus() -> Vec<ConfigDocument> {
    corpus_texts().iter().enumerate().map(|(i, t)| ConfigDocument::parse(t, format!("planted-{i:02}.yaml")).unwrap()).collect()
}

pub fn rulebase() -> &'static RuleBase {
    static RB: OnceLock<RuleBase> = OnceLock::new();
    RB.get_or_init(|| mine_rulebase(&corpus(), ALPHA, MIN_CONFIDENCE, "planted corpus").unwrap())
}

pub fn held_out_report(rb: &RuleBase) -> DetectionReport {
    detect_dd(&ConfigDocument::parse(&held_out_text(), "held-out.yaml").unwrap(), rb)
}

/// The held-out file labeled at the planted parameter.
pub fn held_out_item() -> DatasetItem {
    let doc = ConfigDocument::parse(&held_out_text(), "held-out.yaml").unwrap();
    let truth = GroundTruth {
        origin: "held-out.yaml".into(),
        misconfigured: vec![TruthEntry {
            path: EXPECTED_PATH.parse().unwrap(),
            category: FindingCategory::EntryDependencyError,
            note: Some("AutoPublishAlias removed".into()),
        }],
        note: None,
    };
    let params = doc.parameters();
    DatasetItem { doc, truth, cohort: Cohort::Injected, params }
}

/// Mining summary, held-out findings and their score, as committed.
pub fn expected_report_text() -> String {
    let rb = rulebase();
    let report = held_out_report(rb);
    let outcome = score_file(&held_out_item(), &report).unwrap();
    let value = json!({
        "corpus_size": rb.provenance.corpus_size,
        "support_threshold": rb.provenance.support_threshold,
        "frequent_itemsets": rb.provenance.frequent_itemsets,
        "rules": rb.rules.len(),
        "held_out": report,
        "score": outcome,
    });
    serde_json::to_string_pretty(&value).unwrap() + "\n"
}
