use serde::{Deserialize, Serialize};

use crate::profile::DissolutionProfile;

/// Largest drop between consecutive points tolerated before flagging.
pub const MAX_DROP_PP: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    InitialCondition,
    Range,
    UspRelease,
    Decrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Fatal,
    Advisory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub rule: Rule,
    pub severity: Severity,
    pub message: String,
}

/// Checks a release curve against the dissolution-profile rules. Initial
/// condition and range problems are fatal; the USP 85%-in-one-hour rule and
/// drops larger than [`MAX_DROP_PP`] are advisory.
pub fn validate_profile(profile: &DissolutionProfile) -> Vec<Finding> {
    let mut findings = Vec::new();
    let points = profile.points();
    let first = points[0];
    if first.time != 0.0 || first.released != 0.0 {
        findings.push(Finding {
            rule: Rule::InitialCondition,
            severity: Severity::Fatal,
            message: format!("first point is ({}, {}), expected (0, 0)", first.time, first.released),
        });
    }
    for p in points.iter().filter(|p| !(0.0..=100.0).contains(&p.released)) {
        findings.push(Finding {
            rule: Rule::Range,
            severity: Severity::Fatal,
            message: format!("{}% at {} hr is outside [0, 100]", p.released, p.time),
        });
    }
    if !points.iter().any(|p| p.time <= 1.0 && p.released >= 85.0) {
        let by_one_hour = profile.interpolate(1.0).map_or_else(
            || "no data at or before 1 hr".to_owned(),
            |v| format!("{v:.1}% released at 1 hr"),
        );
        findings.push(Finding {
            rule: Rule::UspRelease,
            severity: Severity::Advisory,
            message: format!("less than 85% released within 60 min ({by_one_hour})"),
        });
    }
    for w in points.windows(2) {
        let drop = w[0].released - w[1].released;
        if drop > MAX_DROP_PP {
            findings.push(Finding {
                rule: Rule::Decrease,
                severity: Severity::Advisory,
                message: format!(
                    "release falls by {drop:.2} pp between {} and {} hr",
                    w[0].time, w[1].time
                ),
            });
        }
    }
    findings
}

pub fn has_fatal(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Fatal)
}
