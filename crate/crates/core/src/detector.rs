//! Uniform handle over the three detectors.

use crate::config::ConfigDocument;
use crate::findings::{process_response, DetectionReport, DetectorKind};
use crate::gateway::{Gateway, GatewayError, ResponseCache};
use crate::miner::{detect_dd_with, DdOptions, RuleBase};
use crate::prompt::{build_prompt, PromptError, PromptVariant};

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

pub trait Detector: Send + Sync {
    fn kind(&self) -> DetectorKind;

    fn detect(&self, doc: &ConfigDocument) -> Result<DetectionReport, DetectError>;

    /// Upper bound on concurrent `detect` calls worth issuing.
    fn parallelism(&self) -> usize {
        1
    }
}

/// Prompted detection through the gateway and its response cache.
pub struct LlmDetector {
    pub variant: PromptVariant,
    pub gateway: Gateway,
    pub cache: ResponseCache,
}

impl LlmDetector {
    pub fn new(variant: PromptVariant, gateway: Gateway, cache: ResponseCache) -> Self {
        LlmDetector { variant, gateway, cache }
    }
}

impl Detector for LlmDetector {
    fn kind(&self) -> DetectorKind {
        match self.variant {
            PromptVariant::SlsDetector => DetectorKind::SlsDetector,
            PromptVariant::Basic => DetectorKind::BasicLLM,
        }
    }

    fn detect(&self, doc: &ConfigDocument) -> Result<DetectionReport, DetectError> {
        let prompt = build_prompt(self.variant, &doc.source_text)?;
        let response = self.gateway.complete(&self.gateway.request(prompt), &self.cache)?;
        Ok(process_response(&response.raw_text, doc, self.kind()))
    }

    fn parallelism(&self) -> usize {
        self.gateway.config().concurrency.max(1)
    }
}

pub struct DdDetector {
    pub rulebase: RuleBase,
    pub options: DdOptions,
}

impl DdDetector {
    pub fn new(rulebase: RuleBase) -> Self {
        DdDetector { rulebase, options: DdOptions::default() }
    }
}

impl Detector for DdDetector {
    fn kind(&self) -> DetectorKind {
        DetectorKind::DataDriven
    }

    fn detect(&self, doc: &ConfigDocument) -> Result<DetectionReport, DetectError> {
        Ok(detect_dd_with(doc, &self.rulebase, &self.options))
    }

    fn parallelism(&self) -> usize {
        std::thread::available_parallelism().map_or(1, usize::from)
    }
}
