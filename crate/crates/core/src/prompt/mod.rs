//! Structured prompts for the five strategies, and parsing of the replies.
//!
//! ```
//! use formu_core::prompt::{build_prompt, Constraints, PromptStrategy};
//! use formu_core::FormulationInput;
//!
//! let input = FormulationInput {
//!     d50: 97.5, aspect_ratio: 1.0, roundness: 1.0, solubility: 0.45,
//!     diffusivity: 7.5e-10, true_density: 1.512, ssa: 1.07, vol_eq_size: 1.85,
//! };
//! let zs = build_prompt(PromptStrategy::Zs, &input, &[], &Constraints::default()).unwrap();
//! let cot = build_prompt(PromptStrategy::ZsCot, &input, &[], &Constraints::default()).unwrap();
//! assert_eq!(cot.rendered, format!("{}Do the step-by-step analysis\n", zs.rendered));
//! ```

mod build;
mod parse;
pub mod template;
mod validate;

use thiserror::Error;

pub use build::{
    build_inverse_prompt, build_prompt, extract_input, render_examples, render_input_block, Constraints,
    PromptBundle, PromptStrategy, Section, SectionKind, Task,
};
pub use parse::{parse_design_response, parse_profile_response, ClampedValue, ParseReport, ParsedProfile, TimeUnit};
pub use validate::{has_fatal, validate_profile, Finding, Rule, Severity, MAX_DROP_PP};

use crate::profile::ProfileError;
use crate::record::RecordError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PromptError {
    #[error("strategy {0} needs at least one example record")]
    MissingExamples(PromptStrategy),
    #[error("unknown strategy `{0}` (expected zs, zs_cot, fs, fs_cot or rag)")]
    UnknownStrategy(String),
    #[error("target profile needs at least two points")]
    EmptyTarget,
    #[error("invalid drug constants: {0}")]
    InvalidDrug(String),
    #[error("prompt has no input section")]
    NoInputSection,
    #[error("no JSON table with \"columns\" and \"data\" found in response")]
    NoTable,
    #[error("response table has an empty data array")]
    EmptyProfile,
    #[error("data row {index} is not a [time, released] pair of numbers")]
    BadRow { index: usize },
    #[error("duplicate time {time} hr in response")]
    DuplicateTime { time: f64 },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Record(#[from] RecordError),
}

impl PromptError {
    /// True for failures of the model's reply rather than of the request.
    pub fn is_parse_failure(&self) -> bool {
        matches!(
            self,
            PromptError::NoTable
                | PromptError::EmptyProfile
                | PromptError::BadRow { .. }
                | PromptError::DuplicateTime { .. }
                | PromptError::Profile(_)
        )
    }
}

#[cfg(test)]
mod tests;
