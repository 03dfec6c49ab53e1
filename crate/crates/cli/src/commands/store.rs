use std::path::PathBuf;

use clap::{Args, Subcommand};
use formu_core::rag::{IngestOutcome, RecordStore};
use formu_core::Feature;

use crate::args::UNITS;
use crate::config::AppConfig;
use crate::error::{CliError, CliResult};
use crate::io::read_records;

#[derive(Debug, Args)]
#[command(after_help = UNITS)]
pub struct StoreArgs {
    #[command(subcommand)]
    pub command: StoreCommand,
}

#[derive(Debug, Subcommand)]
pub enum StoreCommand {
    /// Add records from a JSON file (array or single record, canonical or prompt-style keys).
    #[command(after_help = UNITS)]
    Ingest {
        file: PathBuf,
        /// Replace records whose id already exists.
        #[arg(long)]
        overwrite: bool,
    },
    /// Print every record.
    #[command(after_help = UNITS)]
    List,
    /// Rank records against a (partial) query; only the given features count.
    #[command(after_help = UNITS)]
    Retrieve(RetrieveArgs),
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// µm
    #[arg(long)]
    pub d50: Option<f64>,
    #[arg(long)]
    pub aspect_ratio: Option<f64>,
    #[arg(long)]
    pub roundness: Option<f64>,
    /// mg/mL
    #[arg(long)]
    pub solubility: Option<f64>,
    /// m²/s
    #[arg(long)]
    pub diffusivity: Option<f64>,
    /// g/mL
    #[arg(long)]
    pub true_density: Option<f64>,
    /// m²/g
    #[arg(long)]
    pub ssa: Option<f64>,
    /// µm
    #[arg(long)]
    pub vol_eq_size: Option<f64>,
}

impl RetrieveArgs {
    fn query(&self) -> Vec<(Feature, f64)> {
        [
            (Feature::D50, self.d50),
            (Feature::AspectRatio, self.aspect_ratio),
            (Feature::Roundness, self.roundness),
            (Feature::Solubility, self.solubility),
            (Feature::Diffusivity, self.diffusivity),
            (Feature::TrueDensity, self.true_density),
            (Feature::Ssa, self.ssa),
            (Feature::VolEqSize, self.vol_eq_size),
        ]
        .into_iter()
        .filter_map(|(f, v)| v.map(|v| (f, v)))
        .collect()
    }
}

pub fn run(args: &StoreArgs, cfg: AppConfig) -> CliResult<()> {
    let path = cfg.store_path();
    let mut store = RecordStore::open(&path).map_err(CliError::usage)?;
    match &args.command {
        StoreCommand::Ingest { file, overwrite } => {
            let records = read_records(file)?;
            let (mut added, mut replaced) = (0, 0);
            for record in records {
                let id = record.id.clone();
                match store.ingest(record, *overwrite).map_err(|e| match e {
                    formu_core::rag::StoreError::Io { .. } => CliError::Io(e.to_string()),
                    other => CliError::Usage(other.to_string()),
                })? {
                    IngestOutcome::Added => added += 1,
                    IngestOutcome::Replaced => replaced += 1,
                }
                println!("{id}");
            }
            eprintln!("{added} added, {replaced} replaced, {} in {}", store.len(), path.display());
        }
        StoreCommand::List => {
            println!("id\td50_um\taspect_ratio\troundness\tsolubility_mg_ml\tdiffusivity_m2_s\ttrue_density_g_ml\tssa_m2_g\tvol_eq_size_um\tprovenance");
            for r in store.records() {
                let f = &r.features;
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{:e}\t{}\t{}\t{}\t{:?}",
                    r.id,
                    f.d50,
                    f.aspect_ratio,
                    f.roundness,
                    f.solubility,
                    f.diffusivity,
                    f.true_density,
                    f.ssa,
                    f.vol_eq_size,
                    r.provenance
                );
            }
        }
        StoreCommand::Retrieve(q) => {
            let query = q.query();
            if query.is_empty() {
                return Err(CliError::Usage("give at least one feature, e.g. --d50 50".into()));
            }
            let weights = store.weights().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let hits = store.retrieve_features(&query, q.k, &weights).map_err(CliError::usage)?;
            println!("rank\tid\td50_um\tdistance\tscore");
            for (i, h) in hits.iter().enumerate() {
                println!(
                    "{}\t{}\t{}\t{:.6}\t{:.6}",
                    i + 1,
                    h.record.id,
                    h.record.features.d50,
                    h.distance,
                    h.score
                );
            }
        }
    }
    Ok(())
}
