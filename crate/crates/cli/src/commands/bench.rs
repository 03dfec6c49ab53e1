use std::path::PathBuf;

use clap::Args;
use formu_core::eval::{run_benchmark, BenchmarkOptions, ExampleSource};
use formu_core::prompt::{Constraints, PromptStrategy};

use crate::args::{LlmArgs, UNITS};
use crate::commands::predict::parse_strategy;
use crate::config::AppConfig;
use crate::error::{CliError, CliResult};
use crate::io::{read_records, RunDir};
use crate::Global;

#[derive(Debug, Args)]
#[command(after_help = UNITS)]
pub struct BenchArgs {
    /// Records with measured profiles. Default: the configured fixtures file.
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
    /// Strategies to run, comma separated. Default: all five.
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    pub strategies: Vec<PromptStrategy>,
    /// Records retrieved per RAG prompt.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Example pool for fs / fs_cot / rag. Default: leave-one-out over the dataset.
    #[arg(long, value_name = "FILE")]
    pub examples: Option<PathBuf>,
    /// Extra constraint lines appended to every prompt.
    #[arg(long = "constraint", value_name = "TEXT")]
    pub constraints: Vec<String>,
    #[command(flatten)]
    pub llm: LlmArgs,
}

pub fn run(args: &BenchArgs, mut cfg: AppConfig, global: &Global) -> CliResult<()> {
    args.llm.apply(&mut cfg);
    cfg.validate()?;
    let dataset = read_records(args.dataset.as_ref().unwrap_or(&cfg.fixtures_path))?;
    let examples = match &args.examples {
        Some(path) => ExampleSource::Pool(read_records(path)?),
        None => ExampleSource::LeaveOneOut,
    };
    let opts = BenchmarkOptions {
        strategies: if args.strategies.is_empty() {
            PromptStrategy::ALL.to_vec()
        } else {
            args.strategies.clone()
        },
        k: args.k,
        examples,
        constraints: Constraints::with_extra(args.constraints.clone()),
    };
    let run = RunDir::create(&cfg.output_dir, "bench", global.run_name.as_deref())?;
    let client = args.llm.client(&cfg, run.file("transcripts.jsonl"))?;
    let report = run_benchmark(&dataset, &client, &opts).map_err(CliError::usage)?;

    let text = report.to_text();
    run.write("report.txt", &text)?;
    run.write("report.csv", report.to_csv())?;
    run.write("report.json", report.to_json())?;
    run.write("residuals.csv", report.residuals_csv())?;
    for record in &dataset {
        let name: String = record
            .id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        run.write(&format!("plots/{name}.svg"), report.overlay_svg(record))?;
    }
    print!("{text}");
    eprintln!("wrote {}", run.path.display());
    if report.all_transport_failed() {
        return Err(CliError::Transport("every request failed in transport".into()));
    }
    if report.nothing_evaluable() {
        let msg = "no strategy produced an evaluable profile".to_string();
        return Err(if report.rows.iter().any(|r| r.parse_failures > 0) {
            CliError::ParseFailed(msg)
        } else {
            CliError::Usage(msg)
        });
    }
    Ok(())
}
