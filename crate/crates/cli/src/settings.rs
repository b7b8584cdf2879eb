//! Layered settings: command-line flags, then `SAMCHECK_*` environment
//! variables, then the config file, then built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use samcheck::eval::DEFAULT_REPETITIONS;
use samcheck::gateway::{CacheMode, ProviderConfig};
use samcheck::miner::{DEFAULT_ALPHA, DEFAULT_MIN_CONFIDENCE};
use serde::{Deserialize, Serialize};

/// Flags shared by every subcommand. Each one also reads an environment
/// variable, which clap consults only when the flag is absent.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML settings file; flags and environment variables override it.
    #[arg(long, global = true, env = "SAMCHECK_CONFIG")]
    pub config: Option<PathBuf>,

    /// Response cache file (JSON lines).
    #[arg(long, global = true, env = "SAMCHECK_CACHE")]
    pub cache: Option<PathBuf>,

    /// Cache behavior; defaults to replay with --cache and passthrough without.
    #[arg(long, global = true, env = "SAMCHECK_CACHE_MODE", value_name = "record|replay|passthrough")]
    pub cache_mode: Option<CacheMode>,

    #[arg(long, global = true, env = "SAMCHECK_SEED")]
    pub seed: Option<u64>,

    /// Minimum support as a fraction of the corpus, in (0, 1].
    #[arg(long, global = true, env = "SAMCHECK_ALPHA")]
    pub alpha: Option<f64>,

    #[arg(long, global = true, env = "SAMCHECK_MIN_CONFIDENCE")]
    pub min_confidence: Option<f64>,

    #[arg(long, global = true, env = "SAMCHECK_REPETITIONS")]
    pub repetitions: Option<usize>,

    /// Output location: a file for detect and mine, a directory for inject and eval.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Chat-completion endpoint URL.
    #[arg(long, global = true, env = "SAMCHECK_ENDPOINT")]
    pub endpoint: Option<String>,

    #[arg(long, global = true, env = "SAMCHECK_MODEL")]
    pub model: Option<String>,

    #[arg(long, global = true, env = "SAMCHECK_TEMPERATURE")]
    pub temperature: Option<f64>,

    #[arg(long, global = true, env = "SAMCHECK_MAX_TOKENS")]
    pub max_tokens: Option<u32>,

    /// Name of the environment variable holding the API key.
    #[arg(long, global = true, env = "SAMCHECK_API_KEY_ENV", value_name = "VAR")]
    pub api_key_env: Option<String>,

    /// Upper bound on concurrent provider requests.
    #[arg(long, global = true, env = "SAMCHECK_CONCURRENCY")]
    pub concurrency: Option<usize>,

    /// Repeat for more progress output on standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

/// Contents of the `--config` file. Relative paths resolve against the
/// file's directory.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub cache: Option<PathBuf>,
    pub cache_mode: Option<CacheMode>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub min_confidence: Option<f64>,
    pub repetitions: Option<usize>,
    #[serde(default)]
    pub provider: FileProvider,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileProvider {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub api_key_env: Option<String>,
    pub timeout_secs: Option<u64>,
    pub max_attempts: Option<u32>,
    pub backoff_base_ms: Option<u64>,
    pub concurrency: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut cfg: FileConfig = toml::from_str(&text).with_context(|| format!("malformed config file {}", path.display()))?;
        if let (Some(cache), Some(dir)) = (&cfg.cache, path.parent()) {
            if cache.is_relative() {
                cfg.cache = Some(dir.join(cache));
            }
        }
        Ok(cfg)
    }
}

/// Fully resolved settings. Serialized into every report; holds the name of
/// the key variable, never the key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliConfig {
    pub config_file: Option<PathBuf>,
    pub provider: ProviderConfig,
    pub cache: Option<PathBuf>,
    pub cache_mode: CacheMode,
    pub seed: u64,
    pub alpha: f64,
    pub min_confidence: f64,
    pub repetitions: usize,
    pub out: Option<PathBuf>,
    pub verbosity: u8,
}

impl CliConfig {
    pub fn resolve(args: &GlobalArgs) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Ok(Self::merge(args, file))
    }

    pub fn merge(args: &GlobalArgs, file: FileConfig) -> Self {
        let base = ProviderConfig::default();
        let fp = file.provider;
        let provider = ProviderConfig {
            endpoint_url: args.endpoint.clone().or(fp.endpoint).unwrap_or(base.endpoint_url),
            model_name: args.model.clone().or(fp.model).unwrap_or(base.model_name),
            temperature: args.temperature.or(fp.temperature).unwrap_or(base.temperature),
            max_output_tokens: args.max_tokens.or(fp.max_tokens).unwrap_or(base.max_output_tokens),
            credential_env_var: args.api_key_env.clone().or(fp.api_key_env).unwrap_or(base.credential_env_var),
            timeout_secs: fp.timeout_secs.unwrap_or(base.timeout_secs),
            retry: samcheck::gateway::RetryPolicy {
                max_attempts: fp.max_attempts.unwrap_or(base.retry.max_attempts),
                backoff_base_ms: fp.backoff_base_ms.unwrap_or(base.retry.backoff_base_ms),
            },
            concurrency: args.concurrency.or(fp.concurrency).unwrap_or(base.concurrency),
        };
        let cache = args.cache.clone().or(file.cache);
        let default_mode = if cache.is_some() { CacheMode::Replay } else { CacheMode::Passthrough };
        CliConfig {
            config_file: args.config.clone(),
            provider,
            cache_mode: args.cache_mode.or(file.cache_mode).unwrap_or(default_mode),
            cache,
            seed: args.seed.or(file.seed).unwrap_or(0),
            alpha: args.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
            min_confidence: args.min_confidence.or(file.min_confidence).unwrap_or(DEFAULT_MIN_CONFIDENCE),
            repetitions: args.repetitions.or(file.repetitions).unwrap_or(DEFAULT_REPETITIONS),
            out: args.out.clone(),
            verbosity: args.verbose,
        }
    }
}
