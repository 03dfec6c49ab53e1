use std::path::PathBuf;

use clap::{Args, ValueEnum};
use formu_core::design::{design_psd, design_report, DesignBounds, DesignSpec, Parameterization};
use formu_core::eval::overlay_svg;
use formu_core::profile::{fmt_num, to_csv};
use formu_core::{derived_metrics, DrugSubstance, ParticleMorphology};
use serde_json::json;

use crate::args::{ConditionArgs, UNITS};
use crate::config::AppConfig;
use crate::error::{CliError, CliResult};
use crate::io::{read_profile, RunDir};
use crate::Global;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Param {
    /// Search (D50, geometric sigma) of a log-normal PSD.
    Lognormal,
    /// Fit the mass fractions of fixed geometric size bins.
    Bins,
}

#[derive(Debug, Args)]
#[command(after_help = UNITS)]
pub struct DesignArgs {
    /// Target profile: CSV `time_hr,released_pct` or JSON (pairs, table or record).
    #[arg(long, value_name = "FILE")]
    pub target: PathBuf,
    #[arg(long, value_enum, default_value = "lognormal")]
    pub param: Param,
    /// Free bins to fit (with --param bins).
    #[arg(long, default_value_t = 20)]
    pub free_bins: usize,
    /// Start D50, µm. Default: geometric midpoint of the D50 bounds.
    #[arg(long)]
    pub start_d50: Option<f64>,
    /// Start geometric sigma. Default 1.5, clamped into the bounds.
    #[arg(long)]
    pub start_sigma: Option<f64>,
    /// Lower D50 bound, µm.
    #[arg(long, default_value_t = 1.0)]
    pub d50_min: f64,
    /// Upper D50 bound, µm.
    #[arg(long, default_value_t = 1000.0)]
    pub d50_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub sigma_max: f64,
    /// Smallest free-bin size, µm.
    #[arg(long, default_value_t = 1.0)]
    pub size_min: f64,
    /// Largest free-bin size, µm.
    #[arg(long, default_value_t = 1000.0)]
    pub size_max: f64,
    /// Optimizer starts (the first is the given start point).
    #[arg(long, default_value_t = 4)]
    pub starts: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    /// Roughness penalty weight for free bins.
    #[arg(long, default_value_t = 1e-2)]
    pub regularization: f64,
    /// Size classes of the forward model for log-normal candidates.
    #[arg(long, default_value_t = 50)]
    pub model_bins: usize,
    /// Solubility, mg/mL. Default: hydrochlorothiazide.
    #[arg(long)]
    pub solubility: Option<f64>,
    /// Diffusion coefficient, m²/s. Default: hydrochlorothiazide.
    #[arg(long)]
    pub diffusivity: Option<f64>,
    /// True density, g/mL. Default: hydrochlorothiazide.
    #[arg(long)]
    pub true_density: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub aspect_ratio: f64,
    #[arg(long, default_value_t = 1.0)]
    pub roundness: f64,
    #[command(flatten)]
    pub conditions: ConditionArgs,
}

pub fn run(args: &DesignArgs, mut cfg: AppConfig, global: &Global) -> CliResult<()> {
    args.conditions.apply(&mut cfg);
    cfg.validate()?;
    let target = read_profile(&args.target)?;
    let base = DrugSubstance::hydrochlorothiazide();
    let drug = DrugSubstance::new(
        base.name,
        args.solubility.unwrap_or(base.c_sat),
        args.diffusivity.unwrap_or(base.diffusivity),
        args.true_density.unwrap_or(base.true_density),
    )
    .map_err(CliError::usage)?;
    let morph = ParticleMorphology::from_shape(args.aspect_ratio, args.roundness).map_err(CliError::usage)?;
    let bounds = DesignBounds {
        d50: (args.d50_min, args.d50_max),
        geo_sigma: (args.sigma_min, args.sigma_max),
        size_range: (args.size_min, args.size_max),
    };
    let parameterization = match args.param {
        Param::Lognormal => Parameterization::LogNormal {
            d50: args.start_d50.unwrap_or_else(|| (args.d50_min * args.d50_max).sqrt()),
            geo_sigma: args
                .start_sigma
                .unwrap_or_else(|| 1.5f64.max(args.sigma_min).min(args.sigma_max)),
        },
        Param::Bins => Parameterization::FreeBins { n: args.free_bins },
    };
    let mut spec = DesignSpec::new(target, drug, morph, cfg.conditions.clone(), parameterization);
    spec.bounds = bounds;
    spec.starts = args.starts;
    spec.seed = cfg.seed;
    spec.max_iterations = args.max_iterations;
    spec.regularization_weight = args.regularization;
    spec.n_bins = args.model_bins;
    let result = design_psd(&spec).map_err(CliError::usage)?;

    let report = design_report(&result, &spec);
    let metrics = derived_metrics(&result.psd, &spec.morph, &spec.drug);
    let run = RunDir::create(&cfg.output_dir, "design", global.run_name.as_deref())?;
    let doc = json!({
        "designed_d50": result.psd.d50(),
        "ssa": metrics.ssa,
        "vol_eq_size": metrics.vol_eq_size,
        "result": result,
        "spec": spec,
    });
    run.write("design.json", serde_json::to_string_pretty(&doc).expect("json"))?;
    run.write("design_report.txt", &report)?;
    run.write("achieved.csv", to_csv(&result.achieved))?;
    let mut psd = String::from("size_um,mass_fraction\n");
    for b in result.psd.bins() {
        psd.push_str(&format!("{},{}\n", fmt_num(b.size), fmt_num(b.mass_fraction)));
    }
    run.write("psd.csv", psd)?;
    run.write(
        "design.svg",
        overlay_svg("inverse design", &[("Target", &spec.target), ("Designed", &result.achieved)]),
    )?;
    print!("{report}");
    eprintln!("wrote {}", run.path.display());
    Ok(())
}
