//! Dissolution profiles: percent drug released as a function of time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default reporting grid in hours: 0, 15, 30, 45 min then hourly up to 6 hr.
pub const STANDARD_GRID_HR: [f64; 10] = [0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];

pub fn standard_grid() -> Vec<f64> {
    STANDARD_GRID_HR.to_vec()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("profile has no points")]
    Empty,
    #[error("non-finite value at point {index}")]
    NonFinite { index: usize },
    #[error("times must be strictly increasing (point {index} at {time} hr)")]
    NotIncreasing { index: usize, time: f64 },
    #[error("duplicate time {time} hr")]
    DuplicateTime { time: f64 },
    #[error("first point must be (0, 0), found ({time}, {released})")]
    InitialCondition { time: f64, released: f64 },
    #[error("released value {released}% at {time} hr is outside [0, 100]")]
    OutOfRange { time: f64, released: f64 },
}

/// One sample of a release curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    /// Hours.
    pub time: f64,
    /// Percent of dose released.
    pub released: f64,
}

impl ProfilePoint {
    pub fn new(time: f64, released: f64) -> Self {
        Self { time, released }
    }
}

/// A release curve with strictly increasing times.
///
/// Construction only guarantees ordering and finiteness. Whether the curve is a
/// well-formed dissolution profile (starts at `(0, 0)`, stays inside
/// `[0, 100]`) is checked by [`DissolutionProfile::check_well_formed`], since
/// parsed LLM output is allowed to violate those rules and gets reported rather
/// than rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct DissolutionProfile {
    points: Vec<ProfilePoint>,
}

impl DissolutionProfile {
    pub fn new(points: Vec<ProfilePoint>) -> Result<Self, ProfileError> {
        if points.is_empty() {
            return Err(ProfileError::Empty);
        }
        for (index, p) in points.iter().enumerate() {
            if !p.time.is_finite() || !p.released.is_finite() {
                return Err(ProfileError::NonFinite { index });
            }
            if index > 0 && p.time <= points[index - 1].time {
                return Err(ProfileError::NotIncreasing { index, time: p.time });
            }
        }
        Ok(Self { points })
    }

    /// Sorts by time first; equal times are rejected.
    pub fn from_unordered(mut points: Vec<ProfilePoint>) -> Result<Self, ProfileError> {
        points.sort_by(|a, b| a.time.total_cmp(&b.time));
        if let Some(w) = points.windows(2).find(|w| w[0].time == w[1].time) {
            return Err(ProfileError::DuplicateTime { time: w[0].time });
        }
        Self::new(points)
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, ProfileError> {
        Self::new(pairs.iter().map(|&(t, r)| ProfilePoint::new(t, r)).collect())
    }

    /// Strict constructor: ordering plus the `(0, 0)` start and `[0, 100]` range.
    pub fn well_formed(points: Vec<ProfilePoint>) -> Result<Self, ProfileError> {
        let profile = Self::new(points)?;
        profile.check_well_formed()?;
        Ok(profile)
    }

    pub fn check_well_formed(&self) -> Result<(), ProfileError> {
        let first = self.points[0];
        if first.time != 0.0 || first.released != 0.0 {
            return Err(ProfileError::InitialCondition {
                time: first.time,
                released: first.released,
            });
        }
        if let Some(p) = self
            .points
            .iter()
            .find(|p| !(0.0..=100.0).contains(&p.released))
        {
            return Err(ProfileError::OutOfRange {
                time: p.time,
                released: p.released,
            });
        }
        Ok(())
    }

    pub fn points(&self) -> &[ProfilePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.time).collect()
    }

    pub fn released(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.released).collect()
    }

    pub fn start_time(&self) -> f64 {
        self.points[0].time
    }

    pub fn end_time(&self) -> f64 {
        self.points[self.points.len() - 1].time
    }

    /// Linear interpolation inside the sampled range, `None` outside it.
    pub fn interpolate(&self, time: f64) -> Option<f64> {
        if time < self.start_time() || time > self.end_time() {
            return None;
        }
        let upper = self.points.partition_point(|p| p.time < time);
        let hi = self.points[upper];
        if hi.time == time || upper == 0 {
            return Some(hi.released);
        }
        let lo = self.points[upper - 1];
        let w = (time - lo.time) / (hi.time - lo.time);
        Some(lo.released + w * (hi.released - lo.released))
    }

    /// Like [`interpolate`](Self::interpolate) but holds the end values outside the range.
    pub fn interpolate_clamped(&self, time: f64) -> f64 {
        let t = time.clamp(self.start_time(), self.end_time());
        self.interpolate(t).unwrap_or(self.points[0].released)
    }

    /// First time at which the linearly interpolated curve reaches `level` percent.
    pub fn time_to_reach(&self, level: f64) -> Option<f64> {
        let first = self.points[0];
        if first.released >= level {
            return Some(first.time);
        }
        self.points.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            (b.released >= level && a.released < level).then(|| {
                a.time + (level - a.released) / (b.released - a.released) * (b.time - a.time)
            })
        })
    }
}

impl TryFrom<Vec<(f64, f64)>> for DissolutionProfile {
    type Error = ProfileError;

    fn try_from(pairs: Vec<(f64, f64)>) -> Result<Self, Self::Error> {
        Self::from_pairs(&pairs)
    }
}

impl From<DissolutionProfile> for Vec<(f64, f64)> {
    fn from(profile: DissolutionProfile) -> Self {
        profile.points.iter().map(|p| (p.time, p.released)).collect()
    }
}

/// Formats a float with the shortest round-trip representation.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Renders the `{"columns": ..., "data": ...}` release table used by prompts
/// and by the offline backend.
pub fn render_profile_json(profile: &DissolutionProfile) -> String {
    let mut out = String::from("{\n  \"columns\": [\"Time (hr)\", \"Drug Released (%)\"],\n  \"data\": [\n");
    let n = profile.len();
    for (i, p) in profile.points().iter().enumerate() {
        out.push_str(&format!("    [{}, {}]", fmt_num(p.time), fmt_num(p.released)));
        out.push_str(if i + 1 < n { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}");
    out
}

/// Profile CSV with header `time_hr,released_pct`.
pub fn to_csv(profile: &DissolutionProfile) -> String {
    let mut out = String::from("time_hr,released_pct\n");
    for p in profile.points() {
        out.push_str(&format!("{},{}\n", fmt_num(p.time), fmt_num(p.released)));
    }
    out
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("missing header `time_hr,released_pct`")]
    Header,
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

pub fn from_csv(text: &str) -> Result<DissolutionProfile, CsvError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == "time_hr,released_pct" => {}
        _ => return Err(CsvError::Header),
    }
    let mut points = Vec::new();
    for (i, line) in lines {
        let mut cols = line.split(',').map(str::trim);
        let mut field = |name: &str| -> Result<f64, CsvError> {
            cols.next()
                .ok_or_else(|| CsvError::Line { line: i + 1, message: format!("missing {name}") })?
                .parse::<f64>()
                .map_err(|e| CsvError::Line { line: i + 1, message: format!("{name}: {e}") })
        };
        let t = field("time_hr")?;
        let r = field("released_pct")?;
        points.push(ProfilePoint::new(t, r));
    }
    Ok(DissolutionProfile::from_unordered(points)?)
}
