use serde::{Deserialize, Serialize};

use super::{KinematicProfile, MotionPlan};
use crate::model::{angle_diff, Millis, Pose2D, Vec2};

/// Absorbs accumulated rounding so a phase that ends on a tick boundary
/// completes in that tick instead of leaving a sub-nanometer remainder.
const PHASE_EPS_S: f64 = 1e-9;

/// Execution progress through a plan's phases.
///
/// Phase `2i` turns to `waypoints[i].heading`, phase `2i + 1` drives to
/// `waypoints[i]`, phase `2n` turns to the goal heading, phase `2n + 1` is done.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlanCursor {
    pub phase: usize,
}

impl PlanCursor {
    pub fn is_done(&self, plan: &MotionPlan) -> bool {
        self.phase > 2 * plan.waypoints.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub pose: Pose2D,
    pub cursor: PlanCursor,
    pub finished: bool,
}

/// Integrates one tick of motion along `plan` starting from `pose`.
///
/// Leftover time after finishing a phase carries into the next one, so a tick
/// can end a turn and start driving. Each phase is bounded by the profile's
/// speed limits, hence per tick `|Δposition| <= v·dt` and `|Δheading| <= ω·dt`.
pub fn execute_tick(
    pose: Pose2D,
    profile: &KinematicProfile,
    plan: &MotionPlan,
    cursor: PlanCursor,
    dt: Millis,
) -> Step {
    let mut budget = dt as f64 / 1000.0;
    let mut pose = pose;
    let mut phase = cursor.phase;
    let n = plan.waypoints.len();
    let v = profile.max_linear_speed;
    let w = profile.max_angular_speed;

    while phase <= 2 * n && budget > 0.0 {
        let is_turn = phase % 2 == 0;
        if is_turn {
            let target = if phase / 2 < n {
                plan.waypoints[phase / 2].heading
            } else {
                plan.goal.heading
            };
            let diff = angle_diff(target, pose.heading);
            let need = diff.abs() / w;
            if need <= budget + PHASE_EPS_S {
                pose = Pose2D::new(pose.x, pose.y, target);
                budget = (budget - need).max(0.0);
                phase += 1;
            } else {
                pose = Pose2D::new(pose.x, pose.y, pose.heading + diff.signum() * w * budget);
                budget = 0.0;
            }
        } else {
            let wp = plan.waypoints[phase / 2];
            let delta = wp.vec() - pose.vec();
            let remaining = delta.norm();
            let need = remaining / v;
            if need <= budget + PHASE_EPS_S {
                pose = Pose2D::new(wp.x, wp.y, pose.heading);
                budget = (budget - need).max(0.0);
                phase += 1;
            } else {
                let step = v * budget;
                let p = pose.vec() + delta.scale(step / remaining);
                pose = Pose2D::from_vec(Vec2::new(p.x, p.y), pose.heading);
                budget = 0.0;
            }
        }
    }

    // Snap exactly onto the goal once every phase completed.
    let finished = phase > 2 * n;
    if finished {
        pose = plan.goal;
    }
    Step {
        pose,
        cursor: PlanCursor { phase },
        finished,
    }
}
