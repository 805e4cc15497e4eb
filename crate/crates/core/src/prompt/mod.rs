//! Meta-prompt construction, the solution archive feeding it, and parsing of
//! model responses back into candidates.

mod archive;
mod parse;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::LatticeMap;

pub use archive::{ArchiveEntry, InsertOutcome, SolutionArchive, DEFAULT_CAPACITY};
pub use parse::{extract_blocks, parse_response, ParseMode, ParsedResponse, Reject, RejectReason};

pub const NO_CONTEXT_TEMPLATE: &str = include_str!("../../prompts/v1/no_context.txt");
pub const DETAILED_CONTEXT_TEMPLATE: &str = include_str!("../../prompts/v1/detailed_context.txt");

const PAIRS_SLOT: &str = "{solution_score_pairs}";
const BATCH_SLOT: &str = "{batch_size}";
const MAP_SLOT: &str = "{lattice_map}";

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("cannot build a meta-prompt from an empty archive")]
    EmptyArchive,
    #[error("batch size must be at least 1")]
    ZeroBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStrategy {
    NoContext,
    #[default]
    DetailedContext,
}

impl PromptStrategy {
    pub fn template(self) -> &'static str {
        match self {
            PromptStrategy::NoContext => NO_CONTEXT_TEMPLATE,
            PromptStrategy::DetailedContext => DETAILED_CONTEXT_TEMPLATE,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PromptStrategy::NoContext => "no_context",
            PromptStrategy::DetailedContext => "detailed_context",
        }
    }
}

impl fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PromptStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "no_context" | "nocontext" | "none" | "minimal" => Ok(PromptStrategy::NoContext),
            "detailed_context" | "detailed" | "detailedcontext" => Ok(PromptStrategy::DetailedContext),
            other => Err(format!("unknown prompt strategy {other:?} (expected detailed or no_context)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaPrompt {
    pub text: String,
    pub strategy: PromptStrategy,
    pub batch_size: usize,
    /// Number of solution/score pairs rendered into `text`.
    pub pairs: usize,
}

/// Score with at most two decimals, trailing zeros trimmed (66.60 -> 66.6).
pub fn format_score(score: f64) -> String {
    let s = format!("{score:.2}");
    let s = s.trim_end_matches('0');
    if let Some(stripped) = s.strip_suffix('.') {
        format!("{stripped}.0")
    } else {
        s.to_string()
    }
}

/// The solution/score region injected into a template.
pub fn render_pairs(strategy: PromptStrategy, archive: &SolutionArchive) -> String {
    let mut out = String::new();
    for entry in archive.entries() {
        out.push_str(&format!("<sol> {} <\\sol>\n", entry.solution));
        if strategy == PromptStrategy::DetailedContext {
            out.push_str(&format!(
                "kinf: {:.5}, ppf: {:.3}\n",
                entry.result.kinf, entry.result.ppf
            ));
        }
        out.push_str(&format!("score: {}\n\n", format_score(entry.result.score)));
    }
    out
}

/// Fill the strategy's template with the archive (ascending score) and batch size.
pub fn build_meta_prompt(
    strategy: PromptStrategy,
    archive: &SolutionArchive,
    batch_size: usize,
    map: &LatticeMap,
) -> Result<MetaPrompt, PromptError> {
    if archive.is_empty() {
        return Err(PromptError::EmptyArchive);
    }
    if batch_size == 0 {
        return Err(PromptError::ZeroBatch);
    }
    let text = strategy
        .template()
        .replace(MAP_SLOT, &map.render())
        .replace(BATCH_SLOT, &batch_size.to_string())
        .replace(PAIRS_SLOT, &render_pairs(strategy, archive));
    Ok(MetaPrompt {
        text,
        strategy,
        batch_size,
        pairs: archive.len(),
    })
}
