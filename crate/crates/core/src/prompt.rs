//! Prompt construction for the constrained detector and the basic baseline.
//!
//! All wording lives in `prompts/*.txt`; this module only fixes the layout.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum PromptVariant {
    SlsDetector,
    Basic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    ResourceType,
    Entry,
    Value,
    EntryDependency,
    ValueDependency,
}

impl Dimension {
    pub const ALL: [Dimension; 5] =
        [Dimension::ResourceType, Dimension::Entry, Dimension::Value, Dimension::EntryDependency, Dimension::ValueDependency];

    pub fn heading(self) -> &'static str {
        match self {
            Dimension::ResourceType => "Resource Type Constraint",
            Dimension::Entry => "Entry Constraint",
            Dimension::Value => "Value Constraint",
            Dimension::EntryDependency => "Entry Dependency Constraint",
            Dimension::ValueDependency => "Value Dependency Constraint",
        }
    }

    fn asset(self) -> &'static str {
        match self {
            Dimension::ResourceType => include_str!("../prompts/resource_type.txt"),
            Dimension::Entry => include_str!("../prompts/entry.txt"),
            Dimension::Value => include_str!("../prompts/value.txt"),
            Dimension::EntryDependency => include_str!("../prompts/entry_dependency.txt"),
            Dimension::ValueDependency => include_str!("../prompts/value_dependency.txt"),
        }
    }
}

const ROLE: &str = include_str!("../prompts/role.txt");
const TASK: &str = include_str!("../prompts/task.txt");
const CONSTRAINTS_INTRO: &str = include_str!("../prompts/constraints_intro.txt");
const ENTRY_STEPS: &str = include_str!("../prompts/entry_steps.txt");
const CONTENT_DEMAND: &str = include_str!("../prompts/content_demand.txt");
const FORMAT_DEMAND: &str = include_str!("../prompts/format_demand.txt");

pub const START_MARKER: &str = "<START>";
pub const END_MARKER: &str = "<END>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintBlock {
    pub dimension: Dimension,
    pub instruction_text: String,
    /// Non-empty only for [`Dimension::Entry`], which has exactly three.
    pub cot_steps: Vec<String>,
}

impl ConstraintBlock {
    pub fn new(dimension: Dimension) -> Self {
        let cot_steps = match dimension {
            Dimension::Entry => ENTRY_STEPS.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect(),
            _ => Vec::new(),
        };
        ConstraintBlock { dimension, instruction_text: dimension.asset().trim_end().to_string(), cot_steps }
    }

    fn render(&self, out: &mut String) {
        out.push_str(self.dimension.heading());
        out.push_str(":\n");
        out.push_str(&self.instruction_text);
        out.push('\n');
        for (i, step) in self.cot_steps.iter().enumerate() {
            out.push_str(&format!("Step {}: {step}\n", i + 1));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSpec {
    pub variant: PromptVariant,
    pub config_text: String,
    pub constraint_blocks: Vec<ConstraintBlock>,
    pub response_demand: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("configuration text is empty")]
    EmptyConfig,
}

impl PromptSpec {
    pub fn new(variant: PromptVariant, config_text: &str) -> Result<Self, PromptError> {
        if config_text.trim().is_empty() {
            return Err(PromptError::EmptyConfig);
        }
        let (constraint_blocks, response_demand) = match variant {
            PromptVariant::SlsDetector => (
                Dimension::ALL.into_iter().map(ConstraintBlock::new).collect(),
                format!("{}\n{}", CONTENT_DEMAND.trim_end(), FORMAT_DEMAND.trim_end()),
            ),
            PromptVariant::Basic => (Vec::new(), FORMAT_DEMAND.trim_end().to_string()),
        };
        Ok(PromptSpec { variant, config_text: config_text.to_string(), constraint_blocks, response_demand })
    }

    /// Layout: configuration, role and task, constraint blocks, response demand.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.config_text.len() + 4096);
        out.push_str(&self.config_text);
        if !self.config_text.ends_with('\n') {
            out.push('\n');
        }
        out.push('\n');
        out.push_str(ROLE.trim_end());
        out.push(' ');
        out.push_str(TASK.trim_end());
        out.push_str("\n\n");
        if !self.constraint_blocks.is_empty() {
            out.push_str(CONSTRAINTS_INTRO.trim_end());
            out.push_str("\n\n");
            for block in &self.constraint_blocks {
                block.render(&mut out);
                out.push('\n');
            }
        }
        out.push_str(&self.response_demand);
        out.push('\n');
        out
    }
}

pub fn build_slsdetector_prompt(config_text: &str) -> Result<String, PromptError> {
    PromptSpec::new(PromptVariant::SlsDetector, config_text).map(|s| s.render())
}

pub fn build_basic_prompt(config_text: &str) -> Result<String, PromptError> {
    PromptSpec::new(PromptVariant::Basic, config_text).map(|s| s.render())
}

pub fn build_prompt(variant: PromptVariant, config_text: &str) -> Result<String, PromptError> {
    PromptSpec::new(variant, config_text).map(|s| s.render())
}
