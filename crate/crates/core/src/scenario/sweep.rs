//! Parameter sweeps over a script, one run per value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::runner::{run_script, RunError};
use super::script::ScenarioScript;
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    ArtificialLatency,
    RobotSpeed,
    HandSpeed,
    TableSize,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 4] = [
        SweepParameter::ArtificialLatency,
        SweepParameter::RobotSpeed,
        SweepParameter::HandSpeed,
        SweepParameter::TableSize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::ArtificialLatency => "artificial-latency",
            SweepParameter::RobotSpeed => "robot-speed",
            SweepParameter::HandSpeed => "hand-speed",
            SweepParameter::TableSize => "table-size",
        }
    }

    /// Copy of `script` with this parameter set to `value`
    /// (milliseconds for latency, m/s for speeds, meters for table size).
    pub fn apply(self, script: &ScenarioScript, value: f64) -> ScenarioScript {
        let mut s = script.clone();
        let p = &mut s.parameters;
        match self {
            SweepParameter::ArtificialLatency => p.artificial_latency = value.round() as i64,
            SweepParameter::RobotSpeed => p.robot_speed = Some(value),
            SweepParameter::HandSpeed => p.hand_speed = value,
            SweepParameter::TableSize => p.table_size = Some(value),
        }
        s
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown sweep parameter {0:?}")]
pub struct UnknownParameter(pub String);

impl FromStr for SweepParameter {
    type Err = UnknownParameter;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s || p.as_str().replace('-', "_") == s)
            .ok_or_else(|| UnknownParameter(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: String,
    pub parameter: SweepParameter,
    pub value: f64,
    pub illusion_breaks: u64,
    pub setdown_breaks: u64,
    pub moves: usize,
    pub min_slack_ms: Option<f64>,
    pub mean_slack_ms: Option<f64>,
    pub reassignments: u64,
    pub infeasible_plans: u64,
    pub speed_violations: u64,
    pub clearance_violations: u64,
    pub final_digest: String,
}

/// Runs `script` once per value; rows come back in `values` order.
pub fn sweep(
    script: &ScenarioScript,
    parameter: SweepParameter,
    values: &[f64],
    exec: Execution,
) -> Result<Vec<SweepRow>, RunError> {
    par::map(exec, values, |&v| {
        let report = run_script(&parameter.apply(script, v))?;
        let m = &report.metrics;
        Ok(SweepRow {
            scenario: report.name.clone(),
            parameter,
            value: v,
            illusion_breaks: m.illusion_breaks,
            setdown_breaks: m.setdown_breaks,
            moves: m.moves,
            min_slack_ms: m.min_slack_ms,
            mean_slack_ms: m.mean_slack_ms,
            reassignments: m.reassignments,
            infeasible_plans: m.infeasible_plans,
            speed_violations: m.speed_violations,
            clearance_violations: m.clearance_violations,
            final_digest: report.final_digest.clone(),
        })
    })
    .into_iter()
    .collect()
}

pub fn write_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Smallest swept value from which every larger value has zero breaks.
pub fn zero_break_threshold(rows: &[SweepRow]) -> Option<f64> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut threshold = None;
    for r in sorted.iter().rev() {
        if r.illusion_breaks > 0 {
            break;
        }
        threshold = Some(r.value);
    }
    threshold
}
