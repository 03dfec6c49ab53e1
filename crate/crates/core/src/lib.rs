//! Solid-dosage formulation toolkit.
//!
//! * [`dissolution`]: film-model dissolution of polydisperse powders.
//! * [`design`]: inverse design of particle size distributions.
//! * [`prompt`]: structured LLM prompts and response parsing.
//! * [`rag`]: formulation record store with weighted numeric retrieval.
//! * [`llm`]: chat-completions client with mock and replay backends.
//! * [`eval`]: MSE / R² metrics and the prompt-strategy benchmark.

pub mod design;
pub mod dissolution;
pub mod eval;
pub mod llm;
pub mod profile;
pub mod prompt;
pub mod rag;
pub mod record;

pub use dissolution::{
    derived_metrics, psd_from_lognormal, simulate_dissolution, DissolutionConditions,
    DissolutionError, DrugSubstance, ParticleMorphology, SizeDistribution,
};
pub use profile::{DissolutionProfile, ProfilePoint};
pub use record::{records_from_json, Feature, FormulationInput, FormulationRecord, Provenance, RecordError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/dissolution.md")]
    pub struct Dissolution;
    #[doc = include_str!("../../../book/src/design.md")]
    pub struct Design;
    #[doc = include_str!("../../../book/src/prompts.md")]
    pub struct Prompts;
    #[doc = include_str!("../../../book/src/retrieval.md")]
    pub struct Retrieval;
    #[doc = include_str!("../../../book/src/llm.md")]
    pub struct Llm;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub struct Evaluation;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
