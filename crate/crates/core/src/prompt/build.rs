use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::template::*;
use super::PromptError;
use crate::dissolution::DrugSubstance;
use crate::profile::{render_profile_json, DissolutionProfile};
use crate::record::{Feature, FormulationInput, FormulationRecord};

/// The five prompting strategies compared by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptStrategy {
    #[serde(rename = "ZS")]
    Zs,
    #[serde(rename = "ZS_CoT")]
    ZsCot,
    #[serde(rename = "FS")]
    Fs,
    #[serde(rename = "FS_CoT")]
    FsCot,
    #[serde(rename = "RAG")]
    Rag,
}

impl PromptStrategy {
    /// Report order.
    pub const ALL: [PromptStrategy; 5] = [
        PromptStrategy::Zs,
        PromptStrategy::ZsCot,
        PromptStrategy::Fs,
        PromptStrategy::FsCot,
        PromptStrategy::Rag,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PromptStrategy::Zs => "ZS",
            PromptStrategy::ZsCot => "ZS_CoT",
            PromptStrategy::Fs => "FS",
            PromptStrategy::FsCot => "FS_CoT",
            PromptStrategy::Rag => "RAG",
        }
    }

    pub fn is_cot(self) -> bool {
        matches!(self, PromptStrategy::ZsCot | PromptStrategy::FsCot)
    }

    pub fn needs_examples(self) -> bool {
        matches!(self, PromptStrategy::Fs | PromptStrategy::FsCot | PromptStrategy::Rag)
    }

    /// The strategy without the CoT line.
    pub fn base(self) -> PromptStrategy {
        match self {
            PromptStrategy::ZsCot => PromptStrategy::Zs,
            PromptStrategy::FsCot => PromptStrategy::Fs,
            other => other,
        }
    }
}

impl fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PromptStrategy {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        Ok(match key.as_str() {
            "zs" => PromptStrategy::Zs,
            "zscot" => PromptStrategy::ZsCot,
            "fs" => PromptStrategy::Fs,
            "fscot" => PromptStrategy::FsCot,
            "rag" => PromptStrategy::Rag,
            _ => return Err(PromptError::UnknownStrategy(s.to_owned())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Role,
    Background,
    Request,
    InputFormat,
    OutputFormat,
    Examples,
    Constraints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Predict,
    Design,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub header: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub strategy: PromptStrategy,
    pub task: Task,
    pub sections: Vec<Section>,
    pub rendered: String,
}

impl PromptBundle {
    fn assemble(strategy: PromptStrategy, task: Task, sections: Vec<Section>) -> Self {
        let mut rendered = sections
            .iter()
            .map(|s| format!("{}\n{}", s.header, s.body))
            .collect::<Vec<_>>()
            .join("\n\n");
        rendered.push('\n');
        if strategy.is_cot() {
            rendered.push_str(COT_INSTRUCTION);
            rendered.push('\n');
        }
        Self {
            strategy,
            task,
            sections,
            rendered,
        }
    }

    pub fn section(&self, kind: SectionKind) -> Option<&Section> {
        self.sections.iter().find(|s| s.kind == kind)
    }
}

/// Constraint list. The film-model block and the USP rule always come first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraints {
    /// Appended after the built-in items, numbered from 6.
    pub extra: Vec<String>,
}

impl Constraints {
    pub fn with_extra(extra: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            extra: extra.into_iter().map(Into::into).collect(),
        }
    }

    pub fn render(&self) -> String {
        let items = [NERNST_BRUNNER, USP_RULE]
            .into_iter()
            .chain(DEFAULT_GUARDRAILS)
            .map(str::to_owned)
            .chain(self.extra.iter().cloned());
        items
            .enumerate()
            .map(|(i, item)| format!("{}. {item}", i + 1))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// The `Input = { ... }` block for one formulation.
pub fn render_input_block(input: &FormulationInput) -> String {
    let mut out = String::from("{\n  Input = {\n");
    for feature in Feature::ALL {
        out.push_str(&input_line(feature, input.get(feature)));
    }
    out.push_str("  }\n}");
    out
}

fn input_line(feature: Feature, value: f64) -> String {
    // spacing and commas follow the established prompt layout
    let sep = if feature == Feature::Roundness { ": " } else { " : " };
    let comma = if feature == Feature::D50 { "" } else { "," };
    format!(
        "    \"{}\"{sep}{}{comma}\n",
        feature.prompt_key(),
        feature.format_value(value)
    )
}

/// Example blocks (`### Example1: ###` ...) for a list of records.
pub fn render_examples(records: &[FormulationRecord]) -> String {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            format!(
                "### Example{}: ###\n### Input : ###\n{}\n### Outout : ###\n{}",
                i + 1,
                render_input_block(&r.features),
                render_profile_json(&r.profile)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn examples_body(strategy: PromptStrategy, examples: &[FormulationRecord]) -> Result<String, PromptError> {
    if strategy.needs_examples() && examples.is_empty() {
        return Err(PromptError::MissingExamples(strategy));
    }
    Ok(match strategy.base() {
        PromptStrategy::Fs => format!("{FEW_SHOT_HEADING}\n{}", render_examples(examples)),
        PromptStrategy::Rag => format!("{RETRIEVED_HEADING}\n{}", render_examples(examples)),
        _ => NO_EXAMPLES.to_owned(),
    })
}

fn section(kind: SectionKind, header: &str, body: impl Into<String>) -> Section {
    Section {
        kind,
        header: header.to_owned(),
        body: body.into(),
    }
}

/// Forward (prediction) prompt. Zero-shot strategies ignore `examples`.
pub fn build_prompt(
    strategy: PromptStrategy,
    input: &FormulationInput,
    examples: &[FormulationRecord],
    constraints: &Constraints,
) -> Result<PromptBundle, PromptError> {
    input.validate()?;
    let sections = vec![
        section(SectionKind::Role, ROLE_HEADER, ROLE),
        section(SectionKind::Background, BACKGROUND_HEADER, BACKGROUND),
        section(SectionKind::Request, REQUEST_HEADER, REQUEST),
        section(SectionKind::InputFormat, INPUT_FORMAT_HEADER, render_input_block(input)),
        section(SectionKind::OutputFormat, OUTPUT_FORMAT_HEADER, OUTPUT_FORMAT),
        section(SectionKind::Examples, EXAMPLES_HEADER, examples_body(strategy, examples)?),
        section(SectionKind::Constraints, CONSTRAINTS_HEADER, constraints.render()),
    ];
    Ok(PromptBundle::assemble(strategy, Task::Predict, sections))
}

const DRUG_FEATURES: [Feature; 3] = [Feature::Solubility, Feature::Diffusivity, Feature::TrueDensity];

fn inverse_input_block(target: &DissolutionProfile, drug: &DrugSubstance) -> String {
    let mut out = String::from("{\n  Drug = {\n");
    let values = [drug.c_sat, drug.diffusivity, drug.true_density];
    for (feature, value) in DRUG_FEATURES.into_iter().zip(values) {
        out.push_str(&input_line(feature, value));
    }
    out.push_str("  }\n  Target = ");
    let table = render_profile_json(target);
    let mut lines = table.lines();
    out.push_str(lines.next().unwrap_or("{"));
    for line in lines {
        out.push_str("\n  ");
        out.push_str(line);
    }
    out.push_str("\n}");
    out
}

fn inverse_output_format() -> String {
    let mut out = format!("{INVERSE_OUTPUT_FORMAT_INTRO}\n\n{{\n");
    let fields: Vec<String> = Feature::ALL
        .iter()
        .map(|f| format!("  \"{}\" : <value in {}>", f.prompt_key(), f.unit()))
        .collect();
    out.push_str(&fields.join(",\n"));
    out.push_str("\n}");
    out
}

/// Inverse (design) prompt: the model is given a target curve and the drug
/// constants and asked for particle properties.
pub fn build_inverse_prompt(
    strategy: PromptStrategy,
    target: &DissolutionProfile,
    drug: &DrugSubstance,
    examples: &[FormulationRecord],
    constraints: &Constraints,
) -> Result<PromptBundle, PromptError> {
    if target.len() < 2 {
        return Err(PromptError::EmptyTarget);
    }
    target.check_well_formed()?;
    drug.validate().map_err(|e| PromptError::InvalidDrug(e.to_string()))?;
    let sections = vec![
        section(SectionKind::Role, ROLE_HEADER, ROLE),
        section(SectionKind::Background, BACKGROUND_HEADER, BACKGROUND),
        section(SectionKind::Request, REQUEST_HEADER, INVERSE_REQUEST),
        section(SectionKind::InputFormat, INPUT_FORMAT_HEADER, inverse_input_block(target, drug)),
        section(SectionKind::OutputFormat, OUTPUT_FORMAT_HEADER, inverse_output_format()),
        section(SectionKind::Examples, EXAMPLES_HEADER, examples_body(strategy, examples)?),
        section(SectionKind::Constraints, CONSTRAINTS_HEADER, constraints.render()),
    ];
    Ok(PromptBundle::assemble(strategy, Task::Design, sections))
}

/// Pulls the input block back out of a rendered forward prompt.
pub fn extract_input(prompt: &str) -> Result<FormulationInput, PromptError> {
    let start = prompt.find(INPUT_FORMAT_HEADER).ok_or(PromptError::NoInputSection)?;
    let rest = &prompt[start + INPUT_FORMAT_HEADER.len()..];
    let end = rest.find("\n### ").unwrap_or(rest.len());
    Ok(FormulationInput::from_prompt_block(&rest[..end])?)
}
