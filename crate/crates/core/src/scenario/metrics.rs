use serde::{Deserialize, Serialize};

use crate::model::{Millis, ObjectId, Pose2D, ProxyId, SiteId, UserId};

/// One remote set-down as seen by one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub object: ObjectId,
    pub site: SiteId,
    pub proxy: Option<ProxyId>,
    pub from: Pose2D,
    pub to: Pose2D,
    /// Proxy pose when the remote grasp arrived.
    pub proxy_start: Option<Pose2D>,
    pub grasp_at: Millis,
    pub release_at: Millis,
    pub display_at: Millis,
    pub settled_at: Option<Millis>,
    /// Display time minus the time the proxy came to rest on the set-down pose.
    pub slack_ms: Option<f64>,
    pub illusion_break: bool,
}

impl MoveRecord {
    pub fn distance(&self) -> f64 {
        self.from.distance(&self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub label: String,
    pub at: Millis,
    pub site: SiteId,
    pub object: ObjectId,
    pub pose: Pose2D,
    pub nearest_anchor: Option<usize>,
    pub expect_anchor: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceRecord {
    pub object: ObjectId,
    pub at: Millis,
    /// Earliest attempt since the previous check.
    pub expected: Option<UserId>,
    /// Holder per site at check time.
    pub holders: Vec<(SiteId, Option<UserId>)>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuiescentRecord {
    pub object: ObjectId,
    pub at: Millis,
    /// Largest proxy offset from the shared pose over all sites, meters.
    pub max_offset: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelayMetrics {
    pub accepted: u64,
    pub delivered: u64,
    pub latency_p50: Millis,
    pub latency_p95: Millis,
    pub latency_max: Millis,
}

impl RelayMetrics {
    pub fn from_latencies(accepted: u64, delivered: u64, latencies: &[Millis]) -> Self {
        let mut l = latencies.to_vec();
        l.sort_unstable();
        let pct = |q: f64| -> Millis {
            if l.is_empty() {
                0
            } else {
                l[((l.len() - 1) as f64 * q).round() as usize]
            }
        };
        Self {
            accepted,
            delivered,
            latency_p50: pct(0.5),
            latency_p95: pct(0.95),
            latency_max: l.last().copied().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub ticks: u64,
    pub sim_time: Millis,
    pub moves: usize,
    pub min_slack_ms: Option<f64>,
    pub mean_slack_ms: Option<f64>,
    /// Set-downs displayed before the proxy arrived, grasps with no proxy in
    /// place, touches of absent proxies and uncovered wall touches.
    pub illusion_breaks: u64,
    pub setdown_breaks: u64,
    pub grasp_misses: u64,
    pub touches: u64,
    pub touch_misses: u64,
    pub reassignments: u64,
    pub replans: u64,
    pub infeasible_plans: u64,
    pub blocked_plans: u64,
    pub gestures: u64,
    pub gestures_without_target: u64,
    pub checkpoints_matched: u64,
    pub checkpoints_expected: u64,
    pub speed_violations: u64,
    pub clearance_violations: u64,
    pub quiescent_checks: u64,
    pub quiescent_failures: u64,
    pub races: u64,
    pub races_correct: u64,
    pub coverage_checks: u64,
    pub coverage_failures: u64,
    pub relay: RelayMetrics,
}

impl RunMetrics {
    pub fn gesture_accuracy(&self) -> Option<f64> {
        (self.checkpoints_expected > 0)
            .then(|| self.checkpoints_matched as f64 / self.checkpoints_expected as f64)
    }

    pub(crate) fn summarize_slack(&mut self, moves: &[MoveRecord]) {
        self.moves = moves.len();
        let slacks: Vec<f64> = moves.iter().filter_map(|m| m.slack_ms).collect();
        self.min_slack_ms = slacks.iter().copied().reduce(f64::min);
        self.mean_slack_ms =
            (!slacks.is_empty()).then(|| slacks.iter().sum::<f64>() / slacks.len() as f64);
    }
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub metrics: RunMetrics,
    pub moves: Vec<MoveRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub races: Vec<RaceRecord>,
    pub quiescent: Vec<QuiescentRecord>,
    /// Canonical digest of every site's final world state.
    pub final_digest: String,
    /// Rolling digest over the state after every tick.
    pub trace_digest: String,
}

/// The part of a report pinned as a golden file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Golden {
    pub name: String,
    pub metrics: RunMetrics,
    pub final_digest: String,
    pub trace_digest: String,
}

impl From<&RunReport> for Golden {
    fn from(r: &RunReport) -> Self {
        Self {
            name: r.name.clone(),
            metrics: r.metrics.clone(),
            final_digest: r.final_digest.clone(),
            trace_digest: r.trace_digest.clone(),
        }
    }
}
