//! Prompt-strategy benchmark over a record set.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{align_profiles, mse, r_squared, MetricError};
use super::report::{EvalReport, StrategyRow};
use crate::dissolution::{derived_metrics, simulate_dissolution, DissolutionConditions, DissolutionError};
use crate::llm::{LlmClient, LlmError};
use crate::profile::DissolutionProfile;
use crate::prompt::{build_prompt, parse_profile_response, Constraints, PromptError, PromptStrategy};
use crate::rag::RecordStore;
use crate::record::{FormulationInput, FormulationRecord, Provenance};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("the dataset is empty")]
    EmptyDataset,
    #[error("no strategies selected")]
    NoStrategies,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("duplicate record id `{0}` in the dataset")]
    DuplicateId(String),
    #[error("invalid record: {0}")]
    Record(#[from] crate::record::RecordError),
}

/// Where few-shot and RAG examples come from. The record under evaluation is
/// always excluded by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum ExampleSource {
    /// The other records of the dataset.
    #[default]
    LeaveOneOut,
    Pool(Vec<FormulationRecord>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOptions {
    pub strategies: Vec<PromptStrategy>,
    /// Records retrieved per RAG prompt.
    pub k: usize,
    pub examples: ExampleSource,
    pub constraints: Constraints,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            strategies: PromptStrategy::ALL.to_vec(),
            k: 3,
            examples: ExampleSource::LeaveOneOut,
            constraints: Constraints::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Evaluated,
    /// The reply could not be turned into a profile.
    ParseFailure,
    /// Transport exhausted its retries.
    TransportFailure,
    /// Any other backend error (rejected request, replay miss, ...).
    BackendFailure,
    /// The prompt could not be built, e.g. no examples left for few-shot.
    Skipped,
    /// The parsed curve does not overlap the reference.
    AlignmentFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    /// hr
    pub time: f64,
    pub reference: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordResult {
    pub strategy: PromptStrategy,
    pub record_id: String,
    pub status: RecordStatus,
    pub mse: Option<f64>,
    pub r2: Option<f64>,
    pub message: Option<String>,
    /// Parsed curve, when parsing succeeded.
    pub predicted: Option<DissolutionProfile>,
    pub residuals: Vec<ResidualPoint>,
    /// The parser had to repair the reply (unit conversion, clamping, ...).
    pub repaired: bool,
}

impl RecordResult {
    fn failed(strategy: PromptStrategy, record: &FormulationRecord, status: RecordStatus, message: String) -> Self {
        Self {
            strategy,
            record_id: record.id.clone(),
            status,
            mse: None,
            r2: None,
            message: Some(message),
            predicted: None,
            residuals: Vec::new(),
            repaired: false,
        }
    }
}

fn example_pool<'a>(dataset: &'a [FormulationRecord], source: &'a ExampleSource, exclude: &str) -> Vec<FormulationRecord> {
    let pool = match source {
        ExampleSource::LeaveOneOut => dataset,
        ExampleSource::Pool(records) => records.as_slice(),
    };
    pool.iter().filter(|r| r.id != exclude).cloned().collect()
}

fn examples_for(
    strategy: PromptStrategy,
    record: &FormulationRecord,
    dataset: &[FormulationRecord],
    opts: &BenchmarkOptions,
) -> Result<Vec<FormulationRecord>, String> {
    if !strategy.needs_examples() {
        return Ok(Vec::new());
    }
    let pool = example_pool(dataset, &opts.examples, &record.id);
    if strategy != PromptStrategy::Rag {
        return Ok(pool);
    }
    if pool.is_empty() {
        return Ok(pool);
    }
    let mut store = RecordStore::in_memory();
    for r in pool {
        store.ingest(r, true).map_err(|e| e.to_string())?;
    }
    let weights = store.weights().map_err(|e| e.to_string())?;
    let hits = store
        .retrieve(&record.features, opts.k, &weights)
        .map_err(|e| e.to_string())?;
    Ok(hits.into_iter().map(|h| h.record.clone()).collect())
}

fn evaluate_one(
    strategy: PromptStrategy,
    record: &FormulationRecord,
    dataset: &[FormulationRecord],
    client: &LlmClient,
    opts: &BenchmarkOptions,
) -> RecordResult {
    let examples = match examples_for(strategy, record, dataset, opts) {
        Ok(e) => e,
        Err(msg) => return RecordResult::failed(strategy, record, RecordStatus::Skipped, msg),
    };
    let bundle = match build_prompt(strategy, &record.features, &examples, &opts.constraints) {
        Ok(b) => b,
        Err(e) => return RecordResult::failed(strategy, record, RecordStatus::Skipped, e.to_string()),
    };
    let completion = match client.complete(&bundle) {
        Ok(c) => c,
        Err(e) => {
            let status = match e {
                LlmError::Transport { .. } => RecordStatus::TransportFailure,
                _ => RecordStatus::BackendFailure,
            };
            return RecordResult::failed(strategy, record, status, e.to_string());
        }
    };
    let parsed = match parse_profile_response(&completion.text) {
        Ok(p) => p,
        Err(e) => {
            let status = if e.is_parse_failure() || matches!(e, PromptError::Profile(_)) {
                RecordStatus::ParseFailure
            } else {
                RecordStatus::BackendFailure
            };
            return RecordResult::failed(strategy, record, status, e.to_string());
        }
    };
    let repaired = parsed.report.repaired();
    let mut result = RecordResult {
        strategy,
        record_id: record.id.clone(),
        status: RecordStatus::Evaluated,
        mse: None,
        r2: None,
        message: None,
        predicted: Some(parsed.profile.clone()),
        residuals: Vec::new(),
        repaired,
    };
    let pair = match align_profiles(&record.profile, &parsed.profile) {
        Ok(p) => p,
        Err(e) => {
            result.status = RecordStatus::AlignmentFailure;
            result.message = Some(e.to_string());
            return result;
        }
    };
    result.mse = Some(mse(&pair));
    match r_squared(&pair) {
        Ok(r2) => result.r2 = Some(r2),
        Err(MetricError::DegenerateReference) => result.message = Some("reference has zero variance; R² omitted".into()),
        Err(e) => result.message = Some(e.to_string()),
    }
    result.residuals = pair
        .grid
        .iter()
        .zip(pair.y.iter().zip(&pair.y_hat))
        .map(|(&time, (&reference, &predicted))| ResidualPoint {
            time,
            reference,
            predicted,
        })
        .collect();
    result
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize(strategy: PromptStrategy, results: &[RecordResult]) -> StrategyRow {
    let count = |status| results.iter().filter(|r| r.status == status).count();
    let evaluated: Vec<&RecordResult> = results.iter().filter(|r| r.mse.is_some()).collect();
    let mut notes = Vec::new();
    let parse_failures = count(RecordStatus::ParseFailure);
    let transport_failures = count(RecordStatus::TransportFailure);
    let backend_failures = count(RecordStatus::BackendFailure);
    let skipped = count(RecordStatus::Skipped);
    let unaligned = count(RecordStatus::AlignmentFailure);
    for (n, what) in [
        (parse_failures, "parse failure"),
        (transport_failures, "transport failure"),
        (backend_failures, "backend failure"),
        (skipped, "skipped"),
        (unaligned, "no overlap with reference"),
    ] {
        if n > 0 {
            notes.push(format!("{n} {what}"));
        }
    }
    let repaired = evaluated.iter().filter(|r| r.repaired).count();
    if repaired > 0 {
        notes.push(format!("{repaired} repaired by parser"));
    }
    let r2_missing = evaluated.iter().filter(|r| r.r2.is_none()).count();
    if r2_missing > 0 {
        notes.push(format!("{r2_missing} without R²"));
    }
    if evaluated.is_empty() {
        notes.push("unevaluable".into());
    }
    StrategyRow {
        strategy,
        mse: mean(evaluated.iter().filter_map(|r| r.mse)),
        r2: mean(evaluated.iter().filter_map(|r| r.r2)),
        n: evaluated.len(),
        attempted: results.len(),
        parse_failures,
        transport_failures,
        backend_failures,
        skipped,
        notes,
    }
}

/// Runs every selected strategy over every record and aggregates the
/// per-record MSE and R² by unweighted mean. Rows come out in the canonical
/// strategy order whatever order `opts.strategies` lists them in.
///
/// Requests fan out over `client.config().max_inflight` worker threads.
/// Failures are recorded per record and never abort the run.
pub fn run_benchmark(
    dataset: &[FormulationRecord],
    client: &LlmClient,
    opts: &BenchmarkOptions,
) -> Result<EvalReport, BenchError> {
    if dataset.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    if opts.k == 0 {
        return Err(BenchError::ZeroK);
    }
    let strategies: Vec<PromptStrategy> = PromptStrategy::ALL
        .into_iter()
        .filter(|s| opts.strategies.contains(s))
        .collect();
    if strategies.is_empty() {
        return Err(BenchError::NoStrategies);
    }
    let mut seen = std::collections::HashSet::new();
    for r in dataset {
        r.validate()?;
        if !seen.insert(r.id.as_str()) {
            return Err(BenchError::DuplicateId(r.id.clone()));
        }
    }

    let jobs: Vec<(PromptStrategy, &FormulationRecord)> = strategies
        .iter()
        .flat_map(|&s| dataset.iter().map(move |r| (s, r)))
        .collect();
    let slots: Vec<Mutex<Option<RecordResult>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = client.config().max_inflight.clamp(1, jobs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(strategy, record)) = jobs.get(i) else { break };
                let result = evaluate_one(strategy, record, dataset, client, opts);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    let records: Vec<RecordResult> = slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every job ran"))
        .collect();
    let rows = strategies
        .iter()
        .map(|&s| {
            let mine: Vec<RecordResult> = records.iter().filter(|r| r.strategy == s).cloned().collect();
            summarize(s, &mine)
        })
        .collect();
    Ok(EvalReport { rows, records })
}

/// Builds a record whose curve comes from the simulator, with SSA and
/// volume-equivalent size replaced by the values the log-normal PSD implies.
pub fn simulate_record(
    id: impl Into<String>,
    mut input: FormulationInput,
    conditions: &DissolutionConditions,
    geo_sigma: f64,
    n_bins: usize,
    grid: &[f64],
) -> Result<FormulationRecord, DissolutionError> {
    let morph = input.morphology()?;
    let psd = input.size_distribution(geo_sigma, n_bins)?;
    let drug = input.drug();
    let metrics = derived_metrics(&psd, &morph, &drug);
    input.ssa = metrics.ssa;
    input.vol_eq_size = metrics.vol_eq_size;
    let profile = simulate_dissolution(&drug, &morph, &psd, conditions, grid)?;
    Ok(FormulationRecord {
        id: id.into(),
        features: input,
        profile,
        provenance: Provenance::Simulated,
        source: format!("simulated, log-normal PSD with geometric sigma {geo_sigma}"),
    })
}
