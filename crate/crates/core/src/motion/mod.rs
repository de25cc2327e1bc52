//! Simulated differential-drive proxies: turn-in-place plus straight segments,
//! prioritized clearance-aware planning, and deadline admission.

mod execute;
mod grid;
mod planner;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::model::{Millis, Pose2D, ProxyId, Vec2};

pub use execute::{execute_tick, PlanCursor, Step};
pub use planner::{plan_path, timed_plan, Obstacle, PlanError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Tabletop,
    Floor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicProfile {
    pub profile: ProfileKind,
    /// m/s
    pub max_linear_speed: f64,
    /// rad/s
    pub max_angular_speed: f64,
    /// m
    pub footprint_radius: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("kinematic limits must be positive: {0:?}")]
pub struct InvalidProfile(pub KinematicProfile);

impl KinematicProfile {
    /// Desk-scale robot: 0.25 m/s, π rad/s, 5 cm footprint.
    pub fn tabletop() -> Self {
        Self {
            profile: ProfileKind::Tabletop,
            max_linear_speed: 0.25,
            max_angular_speed: PI,
            footprint_radius: 0.05,
        }
    }

    /// Floor robot carrying a wall section: 0.3 m/s, π/2 rad/s, 20 cm footprint.
    pub fn floor() -> Self {
        Self {
            profile: ProfileKind::Floor,
            max_linear_speed: 0.3,
            max_angular_speed: PI / 2.0,
            footprint_radius: 0.2,
        }
    }

    pub fn for_kind(kind: ProfileKind) -> Self {
        match kind {
            ProfileKind::Tabletop => Self::tabletop(),
            ProfileKind::Floor => Self::floor(),
        }
    }

    pub fn validate(&self) -> Result<(), InvalidProfile> {
        let ok = [
            self.max_linear_speed,
            self.max_angular_speed,
            self.footprint_radius,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(InvalidProfile(*self))
        }
    }
}

/// A timed path for one proxy.
///
/// Each waypoint carries the heading held while driving the segment that ends
/// at it (the travel direction, or its reverse when backing up is the smaller
/// turn). After the last waypoint the proxy turns in place to `goal.heading`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPlan {
    pub proxy_id: ProxyId,
    pub start: Pose2D,
    pub waypoints: Vec<Pose2D>,
    pub goal: Pose2D,
    pub start_time: Millis,
    /// Arrival deadline in session milliseconds (fractional).
    pub deadline: Option<f64>,
    /// Upper bound on arrival under the kinematic model, session milliseconds.
    pub estimated_arrival: f64,
}

impl MotionPlan {
    pub fn duration_ms(&self) -> f64 {
        self.estimated_arrival - self.start_time as f64
    }

    /// Deadline minus estimated arrival, when a deadline is set.
    pub fn slack_ms(&self) -> Option<f64> {
        self.deadline.map(|d| d - self.estimated_arrival)
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty() && self.start.heading_error(&self.goal) == 0.0
    }

    pub fn path_length(&self) -> f64 {
        let mut prev = self.start.vec();
        let mut total = 0.0;
        for wp in &self.waypoints {
            total += (wp.vec() - prev).norm();
            prev = wp.vec();
        }
        total
    }

    /// Positions from the start through every waypoint, for UI export.
    pub fn polyline(&self) -> Vec<[f64; 2]> {
        std::iter::once(&self.start)
            .chain(self.waypoints.iter())
            .map(|p| [p.x, p.y])
            .collect()
    }

    /// Positions still to be swept from `pose` given execution progress.
    pub fn remaining_polyline(&self, pose: &Pose2D, cursor: PlanCursor) -> Vec<Vec2> {
        let mut pts = vec![pose.vec()];
        let next = cursor.phase / 2;
        pts.extend(self.waypoints.iter().skip(next).map(|w| w.vec()));
        pts
    }
}
