//! Set-down prediction, artificial-latency display buffering and deadline-driven
//! remote catch-up.

mod delay;
mod predict;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Millis, Pose2D, ProxyId, WorldState};
use crate::motion::{plan_path, MotionPlan, Obstacle, PlanError};

pub use delay::DelayBuffer;
pub use predict::{predict_setdown, rolling_deadline, Predictor};

/// Default artificial latency applied to the remote visual stream.
pub const DEFAULT_ARTIFICIAL_LATENCY: Millis = 1500;
/// Minimum spacing between replans of one proxy.
pub const REPLAN_INTERVAL: Millis = 100;
/// Scripted hand speed used for pre-release deadline estimates (m/s).
pub const DEFAULT_HAND_SPEED: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionSource {
    SnapAnchor,
    ReleaseEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetargetTask {
    pub proxy_id: ProxyId,
    pub predicted_goal: Pose2D,
    /// Session milliseconds; fractional when derived from hand travel time.
    pub deadline: f64,
    pub prediction_source: PredictionSource,
    pub revision: u32,
}

/// Plans `proxy` toward the task goal under the task deadline.
///
/// A deadline the kinematics cannot meet comes back as
/// [`PlanError::DeadlineInfeasible`] carrying the best plan and the deficit;
/// callers drive that plan anyway and record the miss.
pub fn schedule_remote_catch_up(
    task: &RetargetTask,
    world: &WorldState,
    now: Millis,
) -> Result<MotionPlan, PlanError> {
    let proxy = world.proxies.get(&task.proxy_id).ok_or(PlanError::Blocked)?;
    let others = obstacles(world, &task.proxy_id);
    plan_path(
        proxy,
        task.predicted_goal,
        &others,
        Some(task.deadline),
        now,
        &world.workspace,
    )
}

/// Obstacles for planning `proxy`: every other proxy at its site, plus the
/// remaining corridor of any lower-id proxy that is already executing a plan.
pub fn obstacles(world: &WorldState, proxy: &ProxyId) -> Vec<Obstacle> {
    let Some(me) = world.proxies.get(proxy) else {
        return Vec::new();
    };
    world
        .proxies
        .values()
        .filter(|o| o.id != *proxy && o.site == me.site)
        .map(|o| {
            let mut ob = Obstacle::parked(o.pose.vec(), o.profile.footprint_radius);
            if o.id < *proxy {
                if let Some(active) = world.plans.get(&o.id) {
                    ob.corridor = active.plan.remaining_polyline(&o.pose, active.cursor);
                }
            }
            ob
        })
        .collect()
}

/// Allows at most one replan per proxy every [`REPLAN_INTERVAL`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplanLimiter {
    last: BTreeMap<ProxyId, Millis>,
}

impl ReplanLimiter {
    pub fn allow(&mut self, proxy: &ProxyId, now: Millis) -> bool {
        match self.last.get(proxy) {
            Some(&t) if now - t < REPLAN_INTERVAL => false,
            _ => {
                self.last.insert(proxy.clone(), now);
                true
            }
        }
    }
}

/// Analytic slack of a straight remote mirror move: hand travel plus latency
/// minus robot turn and travel time, all in milliseconds.
pub fn analytic_slack_ms(d: f64, hand_speed: f64, robot_speed: f64, turn_s: f64, latency: Millis) -> f64 {
    (d / hand_speed - turn_s - d / robot_speed) * 1000.0 + latency as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RobotProxy, Workspace};
    use crate::motion::KinematicProfile;

    fn world() -> WorldState {
        let mut w = WorldState::new(Workspace::tabletop_default());
        w.add_proxy(RobotProxy::new(
            "pb",
            "b",
            KinematicProfile::tabletop(),
            Pose2D::new(0.15, 0.15, std::f64::consts::FRAC_PI_4),
        ));
        w
    }

    fn task(goal: Pose2D, deadline: f64) -> RetargetTask {
        RetargetTask {
            proxy_id: ProxyId::new("pb"),
            predicted_goal: goal,
            deadline,
            prediction_source: PredictionSource::SnapAnchor,
            revision: 1,
        }
    }

    #[test]
    fn diagonal_catch_up_leaves_expected_slack() {
        // Hand 1 -> 9 at 0.3 m/s takes 2.828 s; displayed 1.5 s later.
        let d = 0.6 * std::f64::consts::SQRT_2;
        let deadline = (d / 0.3) * 1000.0 + 1500.0;
        let goal = Pose2D::new(0.75, 0.75, std::f64::consts::FRAC_PI_4);
        let plan = schedule_remote_catch_up(&task(goal, deadline), &world(), 0).unwrap();
        assert!((plan.estimated_arrival - 3394.11).abs() < 0.01);
        assert!((plan.slack_ms().unwrap() - 934.31).abs() < 0.01);
    }

    #[test]
    fn zero_latency_is_infeasible() {
        let d = 0.6 * std::f64::consts::SQRT_2;
        let goal = Pose2D::new(0.75, 0.75, std::f64::consts::FRAC_PI_4);
        let err = schedule_remote_catch_up(&task(goal, d / 0.3 * 1000.0), &world(), 0).unwrap_err();
        match err {
            PlanError::DeadlineInfeasible { deficit_ms, .. } => {
                assert!((deficit_ms - 565.69).abs() < 0.01)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn replans_are_rate_limited() {
        let mut l = ReplanLimiter::default();
        let p = ProxyId::new("pb");
        assert!(l.allow(&p, 0));
        assert!(!l.allow(&p, 90));
        assert!(l.allow(&p, 100));
        assert!(l.allow(&ProxyId::new("other"), 100));
    }

    #[test]
    fn slack_formula_worst_vertical_move() {
        // Two tiles vertically: quarter turns out and back cost 1 s.
        let s = analytic_slack_ms(0.6, 0.3, 0.25, 1.0, 1500);
        assert!((s - 100.0).abs() < 1e-9);
    }
}
