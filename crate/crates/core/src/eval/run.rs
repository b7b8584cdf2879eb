use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{classify, compute_metrics, Cohort, ConfusionCounts, DatasetItem, DatasetManifest, EvalError, Metrics};
use crate::config::ParameterPath;
use crate::detector::Detector;
use crate::findings::{DetectionReport, DetectorKind, FindingCategory};

pub const DEFAULT_REPETITIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileOutcome {
    pub origin: String,
    pub cohort: Cohort,
    pub counts: ConfusionCounts,
    pub unmatched: usize,
    pub detected: Vec<ParameterPath>,
    /// True positives whose finding category agrees with the label.
    pub per_category_tp: BTreeMap<FindingCategory, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileFailure {
    pub origin: String,
    pub run: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// 1-based.
    pub run: usize,
    pub files: Vec<FileOutcome>,
    pub totals: ConfusionCounts,
    pub metrics: Metrics,
    pub per_cohort: BTreeMap<Cohort, ConfusionCounts>,
    pub per_category_tp: BTreeMap<FindingCategory, usize>,
    pub failures: Vec<FileFailure>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MeanMetrics {
    /// Arithmetic mean of each metric over `runs`.
    pub fn of(runs: &[Metrics]) -> MeanMetrics {
        if runs.is_empty() {
            return MeanMetrics::default();
        }
        let n = runs.len() as f64;
        MeanMetrics {
            precision: runs.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: runs.iter().map(|m| m.recall).sum::<f64>() / n,
            f1: runs.iter().map(|m| m.f1).sum::<f64>() / n,
        }
    }
}

/// Scores pooled over all repetitions, the per-run reports, and the mean of
/// the per-run metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub detector: DetectorKind,
    pub seed: u64,
    pub per_file: BTreeMap<String, ConfusionCounts>,
    pub totals: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
    pub per_cohort: BTreeMap<Cohort, ConfusionCounts>,
    pub per_category_tp: BTreeMap<FindingCategory, usize>,
    pub repetitions: Vec<RunReport>,
    pub mean: MeanMetrics,
    pub failures: Vec<FileFailure>,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

/// Scores one detection report against its labeled item.
pub fn score_file(item: &DatasetItem, report: &DetectionReport) -> Result<FileOutcome, EvalError> {
    let detected = report.detected_paths();
    let unmatched = report.unmatched_count();
    let counts = classify(&detected, unmatched, &item.truth, &item.params)?;
    let stray = detected.iter().filter(|p| !item.params.contains(p)).count();
    assert_eq!(counts.total(), item.params.len() + unmatched + stray, "{}: accounting not conserved", item.doc.origin);
    let mut per_category_tp = BTreeMap::new();
    for entry in &item.truth.misconfigured {
        let agrees = report.findings.iter().any(|f| f.aligned_path.as_ref() == Some(&entry.path) && f.category == entry.category);
        if agrees {
            *per_category_tp.entry(entry.category).or_insert(0) += 1;
        }
    }
    Ok(FileOutcome {
        origin: item.doc.origin.clone(),
        cohort: item.cohort,
        counts,
        unmatched,
        detected,
        per_category_tp,
        warnings: report.warnings.clone(),
    })
}

fn detect_all(items: &[DatasetItem], detector: &dyn Detector) -> Vec<Result<DetectionReport, String>> {
    let slots: Vec<Mutex<Option<Result<DetectionReport, String>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = detector.parallelism().clamp(1, items.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let result = detector.detect(&item.doc).map_err(|e| e.to_string());
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every slot is filled")).collect()
}

fn add_to(map: &mut BTreeMap<FindingCategory, usize>, other: &BTreeMap<FindingCategory, usize>) {
    for (c, n) in other {
        *map.entry(*c).or_insert(0) += n;
    }
}

fn run_once(items: &[DatasetItem], detector: &dyn Detector, run: usize) -> Result<RunReport, EvalError> {
    let mut files = Vec::new();
    let mut failures = Vec::new();
    for (item, result) in items.iter().zip(detect_all(items, detector)) {
        match result {
            Ok(report) => files.push(score_file(item, &report)?),
            Err(message) => failures.push(FileFailure { origin: item.doc.origin.clone(), run, message }),
        }
    }
    let totals: ConfusionCounts = files.iter().map(|f| f.counts).sum();
    let mut per_cohort: BTreeMap<Cohort, ConfusionCounts> =
        Cohort::ALL.iter().map(|c| (*c, ConfusionCounts::default())).collect();
    let mut per_category_tp = BTreeMap::new();
    for f in &files {
        *per_cohort.get_mut(&f.cohort).unwrap() += f.counts;
        add_to(&mut per_category_tp, &f.per_category_tp);
    }
    Ok(RunReport { run, metrics: compute_metrics(&totals), files, totals, per_cohort, per_category_tp, failures })
}

/// Runs `detector` over every manifest entry `repetitions` times.
///
/// Files are scored in manifest order whatever order detection finishes
/// in. A file whose detection fails is left out of that run and listed in
/// `failures`.
pub fn run_eval(
    manifest: &DatasetManifest,
    detector: &dyn Detector,
    repetitions: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let items = manifest.load_items()?;
    run_eval_items(&items, detector, repetitions, seed)
}

pub fn run_eval_items(
    items: &[DatasetItem],
    detector: &dyn Detector,
    repetitions: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if items.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    if repetitions == 0 {
        return Err(EvalError::InvalidRepetitions);
    }
    let runs = (1..=repetitions).map(|r| run_once(items, detector, r)).collect::<Result<Vec<_>, _>>()?;
    let mut per_file: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
    let mut per_cohort: BTreeMap<Cohort, ConfusionCounts> = BTreeMap::new();
    let mut per_category_tp = BTreeMap::new();
    for run in &runs {
        for f in &run.files {
            *per_file.entry(f.origin.clone()).or_default() += f.counts;
        }
        for (c, counts) in &run.per_cohort {
            *per_cohort.entry(*c).or_default() += *counts;
        }
        add_to(&mut per_category_tp, &run.per_category_tp);
    }
    let totals: ConfusionCounts = per_file.values().copied().sum();
    let metrics = compute_metrics(&totals);
    let mean = MeanMetrics::of(&runs.iter().map(|r| r.metrics).collect::<Vec<_>>());
    let failures = runs.iter().flat_map(|r| r.failures.clone()).collect();
    Ok(EvalReport {
        detector: detector.kind(),
        seed,
        per_file,
        totals,
        precision: metrics.precision,
        recall: metrics.recall,
        f1: metrics.f1,
        degenerate: metrics.degenerate,
        per_cohort,
        per_category_tp,
        repetitions: runs,
        mean,
        failures,
        provenance: serde_json::Value::Null,
    })
}

fn pct(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

/// Plain-text summary: one row per repetition plus the mean, then the
/// cohort split and per-category true positives.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "detector: {}", report.detector.label());
    let _ = writeln!(
        out,
        "{:<12} {:>6} {:>6} {:>7} {:>6} {:>10} {:>10} {:>10}",
        "run", "TP", "FP", "TN", "FN", "precision", "recall", "F1"
    );
    for r in &report.repetitions {
        let c = r.totals;
        let m = r.metrics;
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>6} {:>7} {:>6} {:>10} {:>10} {:>10}",
            format!("repetition {}", r.run),
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            pct(m.precision),
            pct(m.recall),
            pct(m.f1)
        );
    }
    let m = report.mean;
    let _ = writeln!(
        out,
        "{:<12} {:>6} {:>6} {:>7} {:>6} {:>10} {:>10} {:>10}",
        "mean",
        "",
        "",
        "",
        "",
        pct(m.precision),
        pct(m.recall),
        pct(m.f1)
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<12} {:>6} {:>6} {:>7} {:>6}", "cohort", "TP", "FP", "TN", "FN");
    for (cohort, c) in &report.per_cohort {
        let _ = writeln!(out, "{:<12} {:>6} {:>6} {:>7} {:>6}", format!("{cohort:?}"), c.tp, c.fp, c.tn, c.fn_);
    }
    if !report.per_category_tp.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "true positives with matching category:");
        for (cat, n) in &report.per_category_tp {
            let _ = writeln!(out, "  {:<34} {n}", cat.heading());
        }
    }
    if !report.failures.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "failed files:");
        for f in &report.failures {
            let _ = writeln!(out, "  run {} {}: {}", f.run, f.origin, f.message);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::config::ConfigDocument;
    use crate::detector::DetectError;
    use crate::eval::{GroundTruth, TruthEntry};
    use crate::findings::Finding;
    use crate::gateway::GatewayError;

    /// Fixed findings per origin; origins without a script fail.
    struct Scripted {
        script: HashMap<String, Vec<Finding>>,
        workers: usize,
    }

    impl Detector for Scripted {
        fn kind(&self) -> DetectorKind {
            DetectorKind::SlsDetector
        }

        fn detect(&self, doc: &ConfigDocument) -> Result<DetectionReport, DetectError> {
            let findings = self.script.get(&doc.origin).ok_or(GatewayError::CacheMiss("x".into()))?;
            Ok(DetectionReport {
                origin: doc.origin.clone(),
                detector: DetectorKind::SlsDetector,
                findings: findings.clone(),
                raw_response: None,
                warnings: Vec::new(),
            })
        }

        fn parallelism(&self) -> usize {
            self.workers
        }
    }

    fn item(origin: &str, cohort: Cohort, labeled: &[(&str, FindingCategory)]) -> DatasetItem {
        let doc = ConfigDocument::parse(
            "Resources:\n  Fn:\n    Type: AWS::Serverless::Function\n    Properties:\n      Runtime: python3.6\n      MemorySize: 99999\n",
            origin,
        )
        .unwrap();
        let truth = GroundTruth {
            origin: origin.into(),
            misconfigured: labeled
                .iter()
                .map(|(p, c)| TruthEntry { path: p.parse().unwrap(), category: *c, note: None })
                .collect(),
            note: None,
        };
        let params = doc.parameters();
        DatasetItem { doc, truth, cohort, params }
    }

    fn finding(path: Option<&str>, category: FindingCategory) -> Finding {
        let mut f = Finding::new(category, "m", "");
        f.aligned_path = path.map(|p| p.parse().unwrap());
        f
    }

    const RUNTIME: &str = "Resources.Fn.Properties.Runtime@value";
    const MEMORY: &str = "Resources.Fn.Properties.MemorySize@value";

    fn dataset() -> (Vec<DatasetItem>, HashMap<String, Vec<Finding>>) {
        use FindingCategory::*;
        let items = vec![
            item("clean.yaml", Cohort::ErrorFree, &[]),
            item("real.yaml", Cohort::RealWorld, &[(RUNTIME, ConfigurationEntryValueError)]),
            item("inj.yaml", Cohort::Injected, &[(MEMORY, ConfigurationEntryValueError)]),
        ];
        let script = HashMap::from([
            ("clean.yaml".to_string(), vec![finding(None, Uncategorized)]),
            (
                "real.yaml".to_string(),
                vec![finding(Some(RUNTIME), ResourceTypeError), finding(Some(MEMORY), ConfigurationEntryValueError)],
            ),
            ("inj.yaml".to_string(), vec![finding(Some(MEMORY), ConfigurationEntryValueError)]),
        ]);
        (items, script)
    }

    #[test]
    fn totals_cohorts_and_categories() {
        let (items, script) = dataset();
        let report = run_eval_items(&items, &Scripted { script, workers: 3 }, 2, 0).unwrap();
        // 9 parameters per file.
        let run = &report.repetitions[0];
        assert_eq!(run.per_cohort[&Cohort::ErrorFree], ConfusionCounts { tp: 0, fp: 1, tn: 9, fn_: 0 });
        assert_eq!(run.per_cohort[&Cohort::RealWorld], ConfusionCounts { tp: 1, fp: 1, tn: 7, fn_: 0 });
        assert_eq!(run.per_cohort[&Cohort::Injected], ConfusionCounts { tp: 1, fp: 0, tn: 8, fn_: 0 });
        assert_eq!(run.totals, run.per_cohort.values().copied().sum());
        assert_eq!(run.per_category_tp, BTreeMap::from([(FindingCategory::ConfigurationEntryValueError, 1)]));
        assert_eq!(report.totals, ConfusionCounts { tp: 4, fp: 4, tn: 48, fn_: 0 });
        assert_eq!(report.totals, report.per_file.values().copied().sum());
        assert_eq!(report.mean.precision, run.metrics.precision);
        assert_eq!(report.precision, 0.5);
        let order: Vec<&str> = run.files.iter().map(|f| f.origin.as_str()).collect();
        assert_eq!(order, ["clean.yaml", "real.yaml", "inj.yaml"]);
    }

    #[test]
    fn failures_are_recorded_and_excluded() {
        let (items, mut script) = dataset();
        script.remove("real.yaml");
        let report = run_eval_items(&items, &Scripted { script, workers: 2 }, 1, 0).unwrap();
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].origin, "real.yaml");
        assert_eq!(report.per_file.len(), 2);
        assert!(render_table(&report).contains("failed files:"));
    }

    #[test]
    fn worker_count_does_not_change_the_report() {
        let (items, script) = dataset();
        let one = run_eval_items(&items, &Scripted { script: script.clone(), workers: 1 }, 1, 0).unwrap();
        let many = run_eval_items(&items, &Scripted { script, workers: 8 }, 1, 0).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn zero_repetitions_and_empty_input() {
        let (items, script) = dataset();
        let d = Scripted { script, workers: 1 };
        assert_eq!(run_eval_items(&items, &d, 0, 0).unwrap_err(), EvalError::InvalidRepetitions);
        assert_eq!(run_eval_items(&[], &d, 1, 0).unwrap_err(), EvalError::EmptyDataset);
    }

    #[test]
    fn mean_of_repeated_runs() {
        let runs: Vec<Metrics> =
            [(71.83, 91.88, 80.63), (70.78, 91.23, 79.72), (70.35, 84.74, 76.88), (75.28, 86.04, 80.30), (76.14, 87.01, 81.21)]
                .into_iter()
                .map(|(p, r, f)| Metrics { precision: p / 100.0, recall: r / 100.0, f1: f / 100.0, degenerate: false })
                .collect();
        let m = MeanMetrics::of(&runs);
        assert!((m.precision * 100.0 - 72.88).abs() < 0.01);
        assert!((m.recall * 100.0 - 88.18).abs() < 0.01);
        assert!((m.f1 * 100.0 - 79.75).abs() < 0.01);
    }
}
