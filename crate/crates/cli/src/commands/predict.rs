use std::path::PathBuf;

use clap::Args;
use formu_core::llm::MOCK_BINS;
use formu_core::profile::{render_profile_json, to_csv};
use formu_core::prompt::{build_prompt, parse_profile_response, validate_profile, Constraints, PromptStrategy};
use formu_core::rag::RecordStore;
use formu_core::FormulationRecord;
use serde_json::json;

use crate::args::{InputArgs, LlmArgs, UNITS};
use crate::config::AppConfig;
use crate::error::{CliError, CliResult};
use crate::io::{read_records, RunDir};
use crate::Global;

#[derive(Debug, Args)]
#[command(after_help = UNITS)]
pub struct PredictArgs {
    /// zs, zs_cot, fs, fs_cot or rag.
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: PromptStrategy,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub llm: LlmArgs,
    /// Example records for fs / fs_cot. Default: the configured fixtures file.
    #[arg(long, value_name = "FILE")]
    pub examples: Option<PathBuf>,
    /// Records retrieved from the store for rag.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Extra constraint lines appended to the prompt.
    #[arg(long = "constraint", value_name = "TEXT")]
    pub constraints: Vec<String>,
}

pub fn parse_strategy(s: &str) -> Result<PromptStrategy, String> {
    s.parse().map_err(|e: formu_core::prompt::PromptError| e.to_string())
}

fn examples(args: &PredictArgs, cfg: &AppConfig, input: &formu_core::FormulationInput) -> CliResult<Vec<FormulationRecord>> {
    match args.strategy {
        PromptStrategy::Zs | PromptStrategy::ZsCot => Ok(Vec::new()),
        PromptStrategy::Fs | PromptStrategy::FsCot => {
            read_records(args.examples.as_ref().unwrap_or(&cfg.fixtures_path))
        }
        PromptStrategy::Rag => {
            let mut store = RecordStore::open(cfg.store_path()).map_err(CliError::usage)?;
            let weights = store.weights().map_err(|e| {
                CliError::Usage(format!("{}: {e}", cfg.store_path().display()))
            })?;
            let hits = store.retrieve(input, args.k, &weights).map_err(CliError::usage)?;
            Ok(hits.into_iter().map(|h| h.record.clone()).collect())
        }
    }
}

pub fn run(args: &PredictArgs, mut cfg: AppConfig, global: &Global) -> CliResult<()> {
    args.llm.apply(&mut cfg);
    cfg.validate()?;
    let input = args.input.resolve(formu_core::llm::MOCK_GEO_SIGMA, MOCK_BINS)?;
    let examples = examples(args, &cfg, &input)?;
    let bundle = build_prompt(args.strategy, &input, &examples, &Constraints::with_extra(args.constraints.clone()))
        .map_err(CliError::usage)?;

    let run = RunDir::create(&cfg.output_dir, "predict", global.run_name.as_deref())?;
    run.write("prompt.txt", &bundle.rendered)?;
    let client = args.llm.client(&cfg, run.file("transcripts.jsonl"))?;
    let completion = client.complete(&bundle)?;
    run.write("response.txt", &completion.text)?;
    let parsed = parse_profile_response(&completion.text).map_err(|e| {
        CliError::ParseFailed(format!("could not read a release table from the response: {e}"))
    })?;
    let findings = validate_profile(&parsed.profile);
    let report = json!({
        "strategy": args.strategy,
        "backend": completion.transcript.backend,
        "parse": parsed.report,
        "findings": findings,
        "examples": examples.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(),
    });
    run.write("parse_report.json", serde_json::to_string_pretty(&report).expect("json"))?;
    let csv = to_csv(&parsed.profile);
    run.write("profile.csv", &csv)?;
    run.write("profile.json", render_profile_json(&parsed.profile))?;
    print!("{csv}");
    for f in &findings {
        eprintln!("{:?}: {}", f.severity, f.message);
    }
    eprintln!("wrote {}", run.path.display());
    Ok(())
}
