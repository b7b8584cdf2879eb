use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use samcheck::config::ConfigDocument;
use samcheck::detector::{DdDetector, Detector, LlmDetector};
use samcheck::eval::{render_table, run_eval_items, DatasetManifest, EvalReport};
use samcheck::findings::{DetectionReport, DetectorKind, FindingCategory};
use samcheck::gateway::{CacheMode, Gateway, ResponseCache};
use samcheck::inject::{inject, Selector};
use samcheck::miner::{mine_rulebase, RuleBase};
use samcheck::prompt::{build_prompt, PromptVariant};
use serde::Serialize;
use serde_json::Value;

use crate::settings::CliConfig;

/// Exit status when evaluation finished but some files could not be scored.
pub const EXIT_FILE_FAILURES: u8 = 3;

/// Everything needed to re-run a command: the arguments as given and the
/// settings they resolved to.
#[derive(Debug, Clone, Serialize)]
pub struct Invocation {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub arguments: Vec<String>,
    pub settings: CliConfig,
}

impl Invocation {
    pub fn new(command: &'static str, settings: &CliConfig) -> Self {
        Invocation {
            tool: "samcheck",
            version: env!("CARGO_PKG_VERSION"),
            command,
            arguments: std::env::args_os().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
            settings: settings.clone(),
        }
    }

    fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("invocation serializes")
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    invocation: Value,
    #[serde(flatten)]
    body: &'a T,
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(value).expect("reports serialize") + "\n";
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_template(path: &Path) -> anyhow::Result<ConfigDocument> {
    ConfigDocument::from_file(path).with_context(|| format!("cannot load template {}", path.display()))
}

fn load_rulebase(path: &Path) -> anyhow::Result<RuleBase> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read rulebase {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed rulebase {}", path.display()))
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "template".to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn parse_variant(s: &str) -> Result<PromptVariant, String> {
    match s {
        "sls" => Ok(PromptVariant::SlsDetector),
        "basic" => Ok(PromptVariant::Basic),
        other => Err(format!("unknown prompt variant `{other}` (expected sls or basic)")),
    }
}

fn open_cache(cfg: &CliConfig) -> anyhow::Result<ResponseCache> {
    match (&cfg.cache, cfg.cache_mode) {
        (Some(path), mode) => Ok(ResponseCache::open(path, mode)?),
        (None, CacheMode::Passthrough) => Ok(ResponseCache::in_memory(CacheMode::Passthrough)),
        (None, mode) => bail!("cache mode {mode} needs --cache"),
    }
}

fn llm_detector(kind: DetectorKind, cfg: &CliConfig) -> anyhow::Result<LlmDetector> {
    let variant = match kind {
        DetectorKind::SlsDetector => PromptVariant::SlsDetector,
        DetectorKind::BasicLLM => PromptVariant::Basic,
        DetectorKind::DataDriven => unreachable!("dd is not prompt-based"),
    };
    Ok(LlmDetector::new(variant, Gateway::new(cfg.provider.clone()), open_cache(cfg)?))
}

fn progress(cfg: &CliConfig, message: impl FnOnce() -> String) {
    if cfg.verbosity > 0 {
        eprintln!("{}", message());
    }
}

/// Findings grouped by category in heading order, unmatched ones last
/// within each group.
pub fn summarize_detection(report: &DetectionReport) -> String {
    let mut groups: BTreeMap<FindingCategory, Vec<String>> = BTreeMap::new();
    for f in &report.findings {
        let line = match &f.aligned_path {
            Some(p) => format!("    {p}: {}", f.mention_text),
            None => format!("    (unmatched) {}", f.full_text()),
        };
        groups.entry(f.category).or_default().push(line);
    }
    let mut out = format!("{}: {} finding(s) by {}\n", report.origin, report.findings.len(), report.detector.label());
    for (category, mut lines) in groups {
        lines.sort_by_key(|l| l.starts_with("    (unmatched)"));
        out.push_str(&format!("  {} ({})\n", category.heading(), lines.len()));
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
    out
}

pub fn detect(template: &Path, kind: DetectorKind, rulebase: Option<&Path>, cfg: &CliConfig) -> anyhow::Result<ExitCode> {
    let doc = load_template(template)?;
    let detector: Box<dyn Detector> = match kind {
        DetectorKind::DataDriven => {
            let path = rulebase.context("detector dd needs --rulebase")?;
            Box::new(DdDetector::new(load_rulebase(path)?))
        }
        _ => Box::new(llm_detector(kind, cfg)?),
    };
    let report = detector.detect(&doc)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.{}.json", file_stem(template), kind.label())));
    write_json(&out, &Envelope { invocation: Invocation::new("detect", cfg).to_value(), body: &report })?;
    print!("{}", summarize_detection(&report));
    println!("report written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

/// YAML files under `dir`, recursively, in path order.
pub fn corpus_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).with_context(|| format!("cannot read directory {}", d.display()))? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if matches!(path.extension().and_then(|e| e.to_str()), Some("yaml" | "yml")) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Parses every corpus file; unparseable ones are skipped with a warning.
fn load_corpus(dir: &Path) -> anyhow::Result<Vec<ConfigDocument>> {
    let mut docs = Vec::new();
    for path in corpus_files(dir)? {
        match ConfigDocument::from_file(&path) {
            Ok(doc) => docs.push(doc),
            Err(e) => eprintln!("warning: skipping {}: {e}", path.display()),
        }
    }
    Ok(docs)
}

fn mine_corpus(docs: &[ConfigDocument], dir: &Path, alpha: f64, cfg: &CliConfig) -> anyhow::Result<RuleBase> {
    let rb = mine_rulebase(docs, alpha, cfg.min_confidence, dir.display().to_string())?;
    if rb.rules.is_empty() {
        eprintln!("warning: no rules at alpha {alpha} and min confidence {}", cfg.min_confidence);
    }
    Ok(rb)
}

pub fn mine(corpus: &Path, cfg: &CliConfig) -> anyhow::Result<ExitCode> {
    let docs = load_corpus(corpus)?;
    let rb = mine_corpus(&docs, corpus, cfg.alpha, cfg)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("rulebase.json"));
    write_json(&out, &Envelope { invocation: Invocation::new("mine", cfg).to_value(), body: &rb })?;
    println!("transactions: {}", rb.provenance.corpus_size);
    println!("support threshold: {}", rb.provenance.support_threshold);
    println!("frequent itemsets: {}", rb.provenance.frequent_itemsets);
    println!("rules: {}", rb.rules.len());
    println!("rulebase written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn inject_cmd(template: &Path, selector: Selector, cfg: &CliConfig) -> anyhow::Result<ExitCode> {
    let doc = load_template(template)?;
    let outcome = inject(&doc, selector, cfg.seed)?;
    let tag = format!("{}-{}", outcome.applied_rule.subcategory.name(), cfg.seed);
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let stem = file_stem(template);
    let yaml_path = dir.join(format!("{stem}.{tag}.yaml"));
    let truth_path = dir.join(format!("{stem}.{tag}.truth.json"));
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    std::fs::write(&yaml_path, &outcome.mutated.source_text).with_context(|| format!("cannot write {}", yaml_path.display()))?;
    write_json(&truth_path, &Envelope { invocation: Invocation::new("inject", cfg).to_value(), body: &outcome.ground_truth })?;
    println!(
        "injected {} at {}: {} -> {}",
        outcome.applied_rule.subcategory,
        outcome.site,
        outcome.original_value.as_deref().unwrap_or("(absent)"),
        outcome.injected_value.as_deref().unwrap_or("(removed)"),
    );
    println!("template written to {}", yaml_path.display());
    println!("ground truth written to {}", truth_path.display());
    Ok(ExitCode::SUCCESS)
}

pub struct EvalOptions<'a> {
    pub manifest: &'a Path,
    pub detector: DetectorKind,
    pub rulebase: Option<&'a Path>,
    pub corpus: Option<&'a Path>,
    pub sweep: Option<Vec<f64>>,
}

pub fn eval(opts: EvalOptions<'_>, cfg: &CliConfig) -> anyhow::Result<ExitCode> {
    let manifest = DatasetManifest::load(opts.manifest)?;
    let items = manifest.load_items()?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut failed = false;
    let mut emit = |report: EvalReport, name: String| -> anyhow::Result<()> {
        let path = dir.join(name);
        write_json(&path, &report)?;
        print!("{}", render_table(&report));
        println!("report written to {}", path.display());
        failed |= !report.failures.is_empty();
        Ok(())
    };
    match (opts.detector, opts.sweep) {
        (DetectorKind::DataDriven, Some(alphas)) => {
            let corpus = opts.corpus.context("--alpha-sweep needs --corpus to mine from")?;
            let docs = load_corpus(corpus)?;
            for alpha in alphas {
                let swept = CliConfig { alpha, ..cfg.clone() };
                progress(cfg, || format!("mining {} at alpha {alpha}", corpus.display()));
                let detector = DdDetector::new(mine_corpus(&docs, corpus, alpha, &swept)?);
                let mut report = run_eval_items(&items, &detector, swept.repetitions, swept.seed)?;
                report.provenance = Invocation::new("eval", &swept).to_value();
                println!("alpha {alpha}");
                emit(report, format!("eval-dd-alpha-{alpha}.json"))?;
            }
        }
        (_, Some(_)) => bail!("--alpha-sweep applies to detector dd only"),
        (kind, None) => {
            let detector: Box<dyn Detector> = match kind {
                DetectorKind::DataDriven => Box::new(DdDetector::new(match (opts.rulebase, opts.corpus) {
                    (Some(path), _) => load_rulebase(path)?,
                    (None, Some(corpus)) => mine_corpus(&load_corpus(corpus)?, corpus, cfg.alpha, cfg)?,
                    (None, None) => bail!("detector dd needs --rulebase or --corpus"),
                })),
                _ => Box::new(llm_detector(kind, cfg)?),
            };
            let mut report = run_eval_items(&items, detector.as_ref(), cfg.repetitions, cfg.seed)?;
            report.provenance = Invocation::new("eval", cfg).to_value();
            emit(report, format!("eval-{}.json", kind.label()))?;
        }
    }
    Ok(if failed { ExitCode::from(EXIT_FILE_FAILURES) } else { ExitCode::SUCCESS })
}

pub fn prompt_dump(template: &Path, variant: PromptVariant) -> anyhow::Result<ExitCode> {
    let doc = load_template(template)?;
    print!("{}", build_prompt(variant, &doc.source_text)?);
    Ok(ExitCode::SUCCESS)
}
