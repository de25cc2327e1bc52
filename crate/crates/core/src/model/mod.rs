//! Shared domain types, geometry, time base and the deterministic world state.

mod geometry;
mod ids;
mod workspace;
mod world;

use serde::{Deserialize, Serialize};

pub use geometry::{
    angle_diff, distance, normalize_angle, point_segment_distance, Pose2D, Vec2,
};
pub use ids::{BindingId, ObjectId, ProxyId, SiteId, UserId};
pub use workspace::{Workspace, WorkspaceError, WorkspaceKind};
pub use world::{advance_tick, ActivePlan, BODY_SUFFIX, Grasp, ProxyMotion, TickReport, WorldError, WorldState};

use crate::motion::KinematicProfile;

/// Session-relative milliseconds on the single authoritative site clock.
pub type Millis = i64;

/// Simulation tick (100 Hz).
pub const TICK_MS: Millis = 10;
/// Positional arrival/engagement tolerance in meters.
pub const ENGAGE_POSITION_TOL: f64 = 0.01;
/// Heading arrival/engagement tolerance in radians.
pub const ENGAGE_HEADING_TOL: f64 = 0.1;

/// True when two poses agree within the engagement tolerances.
pub fn collocated(a: &Pose2D, b: &Pose2D) -> bool {
    distance(a, b) <= ENGAGE_POSITION_TOL && a.heading_error(b) <= ENGAGE_HEADING_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedFrame {
    pub subject_id: String,
    pub pose: Pose2D,
    pub timestamp: Millis,
}

impl TrackedFrame {
    pub fn new(subject_id: impl Into<String>, pose: Pose2D, timestamp: Millis) -> Self {
        Self {
            subject_id: subject_id.into(),
            pose,
            timestamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VisualKind {
    Mug,
    Building,
    Controller,
    Wall,
    TileMarker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualObject {
    pub id: ObjectId,
    pub pose: Pose2D,
    pub held_by: Option<UserId>,
    pub visual_kind: VisualKind,
}

impl VirtualObject {
    pub fn new(id: impl Into<ObjectId>, pose: Pose2D, visual_kind: VisualKind) -> Self {
        Self {
            id: id.into(),
            pose,
            held_by: None,
            visual_kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyState {
    Idle,
    Repositioning,
    Engaged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotProxy {
    pub id: ProxyId,
    pub site: SiteId,
    pub profile: KinematicProfile,
    pub pose: Pose2D,
    pub state: ProxyState,
    /// Set while a user physically holds this proxy; its pose then comes from tracking.
    pub carrying: Option<ObjectId>,
    pub engaged_since: Option<Millis>,
    /// When the proxy last came to rest (plan finished or set down by a user).
    #[serde(default)]
    pub settled_since: Option<Millis>,
}

impl RobotProxy {
    pub fn new(
        id: impl Into<ProxyId>,
        site: impl Into<SiteId>,
        profile: KinematicProfile,
        pose: Pose2D,
    ) -> Self {
        Self {
            id: id.into(),
            site: site.into(),
            profile,
            pose,
            state: ProxyState::Idle,
            carrying: None,
            engaged_since: None,
            settled_since: None,
        }
    }

    pub fn max_linear_speed(&self) -> f64 {
        self.profile.max_linear_speed
    }

    pub fn max_angular_speed(&self) -> f64 {
        self.profile.max_angular_speed
    }
}

/// A tracked participant: wrist/hand pose plus body pose (position and facing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: UserId,
    pub site: SiteId,
    pub hand: Pose2D,
    pub body: Pose2D,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collocation_uses_both_tolerances() {
        let a = Pose2D::new(0.5, 0.5, 0.0);
        assert!(collocated(&a, &Pose2D::new(0.509, 0.5, 0.09)));
        assert!(!collocated(&a, &Pose2D::new(0.512, 0.5, 0.0)));
        assert!(!collocated(&a, &Pose2D::new(0.5, 0.5, 0.11)));
    }
}
