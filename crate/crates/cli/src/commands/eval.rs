use std::path::PathBuf;

use clap::Args;
use formu_core::eval::{align_profiles, mse, overlay_svg, r_squared};
use formu_core::profile::fmt_num;
use serde_json::json;

use crate::args::UNITS;
use crate::config::AppConfig;
use crate::error::{CliError, CliResult};
use crate::io::{read_profile, RunDir};
use crate::Global;

#[derive(Debug, Args)]
#[command(after_help = UNITS)]
pub struct EvalArgs {
    /// Reference (measured) profile: CSV `time_hr,released_pct` or JSON.
    pub reference: PathBuf,
    /// Predicted profile, same formats. Interpolated onto the reference times.
    pub predicted: PathBuf,
}

pub fn run(args: &EvalArgs, cfg: AppConfig, global: &Global) -> CliResult<()> {
    let reference = read_profile(&args.reference)?;
    let predicted = read_profile(&args.predicted)?;
    let pair = align_profiles(&reference, &predicted).map_err(CliError::usage)?;
    let mse = mse(&pair);
    let r2 = r_squared(&pair).map_err(CliError::usage)?;
    let run = RunDir::create(&cfg.output_dir, "eval", global.run_name.as_deref())?;
    let metrics = json!({
        "mse": mse,
        "r2": r2,
        "n": pair.n(),
        "reference": args.reference,
        "predicted": args.predicted,
    });
    run.write("metrics.json", serde_json::to_string_pretty(&metrics).expect("json"))?;
    let mut residuals = String::from("time_hr,reference_pct,predicted_pct,residual_pct\n");
    for ((t, y), y_hat) in pair.grid.iter().zip(&pair.y).zip(&pair.y_hat) {
        residuals.push_str(&format!("{},{},{},{}\n", fmt_num(*t), fmt_num(*y), fmt_num(*y_hat), fmt_num(y - y_hat)));
    }
    run.write("residuals.csv", residuals)?;
    run.write("overlay.svg", overlay_svg("comparison", &[("Reference", &reference), ("Predicted", &predicted)]))?;
    println!("mse (%^2): {}\nr2: {}\nn: {}", fmt_num(mse), fmt_num(r2), pair.n());
    eprintln!("wrote {}", run.path.display());
    Ok(())
}
