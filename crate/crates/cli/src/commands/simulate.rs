use clap::Args;
use formu_core::eval::overlay_svg;
use formu_core::profile::{render_profile_json, standard_grid, to_csv};
use formu_core::simulate_dissolution;

use crate::args::{parse_grid, ConditionArgs, InputArgs, UNITS};
use crate::config::AppConfig;
use crate::error::{CliError, CliResult};
use crate::io::{input_to_json, RunDir};
use crate::Global;

#[derive(Debug, Args)]
#[command(after_help = UNITS)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub conditions: ConditionArgs,
    /// Geometric standard deviation of the log-normal PSD around D50.
    #[arg(long, default_value_t = 1.5)]
    pub geo_sigma: f64,
    /// Number of size classes.
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Output times, hr, comma separated. Default 0,0.25,0.5,0.75,1,2,3,4,5,6.
    #[arg(long, value_name = "T1,T2,...")]
    pub grid: Option<String>,
    /// Also write profile.svg.
    #[arg(long)]
    pub svg: bool,
}

pub fn run(args: &SimulateArgs, mut cfg: AppConfig, global: &Global) -> CliResult<()> {
    args.conditions.apply(&mut cfg);
    cfg.validate()?;
    let input = args.input.resolve(args.geo_sigma, args.bins)?;
    let grid = match &args.grid {
        Some(text) => parse_grid(text).map_err(|e| CliError::Usage(format!("--grid {e}")))?,
        None => standard_grid(),
    };
    let morph = input.morphology().map_err(CliError::usage)?;
    let psd = input.size_distribution(args.geo_sigma, args.bins).map_err(CliError::usage)?;
    let profile = simulate_dissolution(&input.drug(), &morph, &psd, &cfg.conditions, &grid).map_err(CliError::usage)?;

    let run = RunDir::create(&cfg.output_dir, "simulate", global.run_name.as_deref())?;
    let csv = to_csv(&profile);
    run.write("input.json", input_to_json(&input))?;
    run.write("profile.csv", &csv)?;
    run.write("profile.json", render_profile_json(&profile))?;
    if args.svg {
        run.write("profile.svg", overlay_svg(&format!("D50 {} um", input.d50), &[("Simulated", &profile)]))?;
    }
    print!("{csv}");
    eprintln!("wrote {}", run.path.display());
    Ok(())
}
