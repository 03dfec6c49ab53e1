//! Profile comparison metrics and the prompt-strategy benchmark.

mod bench;
mod metrics;
mod plot;
mod report;

pub use bench::{
    run_benchmark, simulate_record, BenchError, BenchmarkOptions, ExampleSource, RecordResult, RecordStatus,
    ResidualPoint,
};
pub use metrics::{align_profiles, mse, profile_mse, r_squared, AlignedPair, MetricError};
pub use plot::overlay_svg;
pub use report::{EvalReport, StrategyRow};
