//! Benchmark report and its text, CSV and JSON renderings.

use serde::{Deserialize, Serialize};

use super::bench::RecordResult;
use super::plot::overlay_svg;
use crate::record::FormulationRecord;
use crate::profile::fmt_num;
use crate::prompt::PromptStrategy;

/// One row per strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub strategy: PromptStrategy,
    /// Mean per-record MSE, %². `None` when nothing could be evaluated.
    pub mse: Option<f64>,
    /// Mean per-record R².
    pub r2: Option<f64>,
    /// Records that produced metrics.
    pub n: usize,
    pub attempted: usize,
    pub parse_failures: usize,
    pub transport_failures: usize,
    pub backend_failures: usize,
    pub skipped: usize,
    pub notes: Vec<String>,
}

impl StrategyRow {
    pub fn evaluable(&self) -> bool {
        self.n > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<StrategyRow>,
    pub records: Vec<RecordResult>,
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.decimals$}"))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

impl EvalReport {
    pub fn row(&self, strategy: PromptStrategy) -> Option<&StrategyRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    /// Every attempted completion failed in transport.
    pub fn all_transport_failed(&self) -> bool {
        !self.records.is_empty()
            && self
                .records
                .iter()
                .all(|r| r.status == super::bench::RecordStatus::TransportFailure)
    }

    /// No strategy produced a single parsed, aligned curve.
    pub fn nothing_evaluable(&self) -> bool {
        self.rows.iter().all(|r| !r.evaluable())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<8} {:>12} {:>9} {:>7}  {}\n",
            "Strategy", "MSE (%^2)", "R^2", "n", "notes"
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{:<8} {:>12} {:>9} {:>7}  {}\n",
                row.strategy.label(),
                opt(row.mse, 4),
                opt(row.r2, 4),
                format!("{}/{}", row.n, row.attempted),
                row.notes.join("; ")
            ));
        }
        out
    }

    /// Full-precision summary, one line per strategy.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "strategy,mse,r2,n,attempted,parse_failures,transport_failures,backend_failures,skipped,notes\n",
        );
        for row in &self.rows {
            let num = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                row.strategy.label(),
                num(row.mse),
                num(row.r2),
                row.n,
                row.attempted,
                row.parse_failures,
                row.transport_failures,
                row.backend_failures,
                row.skipped,
                csv_field(&row.notes.join("; "))
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-point residuals of every evaluated record.
    pub fn residuals_csv(&self) -> String {
        let mut out = String::from("strategy,record_id,time_hr,reference_pct,predicted_pct,residual_pct\n");
        for r in &self.records {
            for p in &r.residuals {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.strategy.label(),
                    csv_field(&r.record_id),
                    fmt_num(p.time),
                    fmt_num(p.reference),
                    fmt_num(p.predicted),
                    fmt_num(p.reference - p.predicted)
                ));
            }
        }
        out
    }

    /// Reference curve of `record` with every strategy's parsed prediction.
    pub fn overlay_svg(&self, record: &FormulationRecord) -> String {
        let mut curves = vec![("Reference", &record.profile)];
        for r in self.records.iter().filter(|r| r.record_id == record.id) {
            if let Some(p) = &r.predicted {
                curves.push((r.strategy.label(), p));
            }
        }
        overlay_svg(&record.id, &curves)
    }
}
