//! `samcheck`: detect, mine, inject, eval and prompt-dump over SAM templates.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use samcheck::findings::DetectorKind;
use samcheck::inject::Selector;
use samcheck::prompt::PromptVariant;

use commands::EvalOptions;
use settings::{CliConfig, GlobalArgs};

#[derive(Debug, Parser)]
#[command(name = "samcheck", version, about = "Misconfiguration detection for AWS SAM templates")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one detector on a template and write its findings.
    Detect {
        template: PathBuf,
        #[arg(long, default_value = "sls", value_name = "sls|basic|dd")]
        detector: DetectorKind,
        /// Mined rule base, required by dd.
        #[arg(long)]
        rulebase: Option<PathBuf>,
    },
    /// Mine an association-rule base from a directory of templates.
    Mine { corpus: PathBuf },
    /// Inject one misconfiguration and write the template with its ground truth.
    Inject {
        template: PathBuf,
        /// A subcategory name, or `random` for a seeded choice among eligible ones.
        #[arg(long, default_value = "random")]
        subcategory: Selector,
    },
    /// Score a detector against a labeled dataset manifest.
    Eval {
        manifest: PathBuf,
        #[arg(long, default_value = "sls", value_name = "sls|basic|dd")]
        detector: DetectorKind,
        /// Rule base for dd.
        #[arg(long)]
        rulebase: Option<PathBuf>,
        /// Corpus to mine dd rules from, instead of --rulebase.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Evaluate dd once per alpha; without values, 0.01,0.03,0.05,0.1.
        #[arg(long, num_args = 0.., value_delimiter = ',', default_missing_value = "0.01,0.03,0.05,0.1")]
        alpha_sweep: Option<Vec<f64>>,
    },
    /// Print the exact prompt the gateway would send for a template.
    PromptDump {
        template: PathBuf,
        #[arg(long, default_value = "sls", value_parser = commands::parse_variant, value_name = "sls|basic")]
        variant: PromptVariant,
    },
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let cfg = CliConfig::resolve(&cli.global)?;
    if cfg.verbosity > 1 {
        eprintln!("settings: {}", serde_json::to_string(&cfg).expect("settings serialize"));
    }
    match cli.command {
        Command::Detect { template, detector, rulebase } => commands::detect(&template, detector, rulebase.as_deref(), &cfg),
        Command::Mine { corpus } => commands::mine(&corpus, &cfg),
        Command::Inject { template, subcategory } => commands::inject_cmd(&template, subcategory, &cfg),
        Command::Eval { manifest, detector, rulebase, corpus, alpha_sweep } => commands::eval(
            EvalOptions {
                manifest: &manifest,
                detector,
                rulebase: rulebase.as_deref(),
                corpus: corpus.as_deref(),
                sweep: alpha_sweep,
            },
            &cfg,
        ),
        Command::PromptDump { template, variant } => commands::prompt_dump(&template, variant),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
