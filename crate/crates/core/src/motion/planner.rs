use serde::{Deserialize, Serialize};

use super::{grid, MotionPlan};
use crate::model::{
    angle_diff, normalize_angle, point_segment_distance, Millis, Pose2D, RobotProxy, Vec2,
    Workspace,
};

/// Another proxy the planner must keep clear of: its current footprint and,
/// for higher-priority proxies, the remainder of its active plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
    /// Remaining swept polyline (empty when only the current position matters).
    pub corridor: Vec<Vec2>,
}

impl Obstacle {
    pub fn parked(center: Vec2, radius: f64) -> Self {
        Self {
            center,
            radius,
            corridor: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("goal ({x:.3}, {y:.3}) lies outside the workspace")]
    GoalOutOfBounds { x: f64, y: f64 },
    #[error("plan arrives {deficit_ms:.1} ms after its deadline")]
    DeadlineInfeasible {
        /// The best plan found, usable as a best-effort fallback.
        plan: Box<MotionPlan>,
        deficit_ms: f64,
    },
    #[error("no collision-free route found")]
    Blocked,
}

const CLEARANCE_TOL: f64 = 1e-9;
const DETOUR_SCALES: [f64; 6] = [1.05, 1.2, 1.5, 2.0, 3.0, 4.5];

/// Plans a route for `proxy` to `goal`.
///
/// Tries the straight segment first, then a single detour waypoint beside the
/// first blocking obstacle, then a coarse grid search. Every segment keeps at
/// least `own radius + obstacle radius` from each obstacle center and corridor.
/// `estimated_arrival` is the sum of all in-place turns over ω plus path length
/// over v.
pub fn plan_path(
    proxy: &RobotProxy,
    goal: Pose2D,
    others: &[Obstacle],
    deadline: Option<f64>,
    now: Millis,
    workspace: &Workspace,
) -> Result<MotionPlan, PlanError> {
    if !goal.is_finite() || !workspace.contains(&goal) {
        return Err(PlanError::GoalOutOfBounds {
            x: goal.x,
            y: goal.y,
        });
    }
    let radius = proxy.profile.footprint_radius;
    let start = proxy.pose.vec();
    let target = goal.vec();

    let route = if segment_clear(start, target, radius, others) {
        Some(vec![target])
    } else {
        detour(proxy, goal, radius, others, workspace)
            .or_else(|| grid::search(start, target, radius, others, workspace))
    };
    let route = route.ok_or(PlanError::Blocked)?;
    let plan = timed_plan(proxy, &route, goal, now, deadline);
    match deadline {
        Some(d) if plan.estimated_arrival > d + 1e-6 => {
            let deficit_ms = plan.estimated_arrival - d;
            Err(PlanError::DeadlineInfeasible {
                plan: Box::new(plan),
                deficit_ms,
            })
        }
        _ => Ok(plan),
    }
}

/// Builds the timed plan for a positional route (excluding the start point).
pub fn timed_plan(
    proxy: &RobotProxy,
    route: &[Vec2],
    goal: Pose2D,
    now: Millis,
    deadline: Option<f64>,
) -> MotionPlan {
    let profile = &proxy.profile;
    let mut heading = proxy.pose.heading;
    let mut prev = proxy.pose.vec();
    let mut turn = 0.0;
    let mut length = 0.0;
    let mut waypoints = Vec::with_capacity(route.len());
    for &p in route {
        let delta = p - prev;
        let len = delta.norm();
        if len <= 1e-12 {
            continue;
        }
        let forward = delta.angle();
        let backward = normalize_angle(forward + std::f64::consts::PI);
        let df = angle_diff(forward, heading).abs();
        let db = angle_diff(backward, heading).abs();
        let drive = if db < df { backward } else { forward };
        turn += df.min(db);
        length += len;
        heading = drive;
        prev = p;
        waypoints.push(Pose2D::new(p.x, p.y, drive));
    }
    // Land exactly on the goal position.
    if let Some(last) = waypoints.last_mut() {
        *last = Pose2D::new(goal.x, goal.y, last.heading);
    }
    turn += angle_diff(goal.heading, heading).abs();
    let seconds = turn / profile.max_angular_speed + length / profile.max_linear_speed;
    MotionPlan {
        proxy_id: proxy.id.clone(),
        start: proxy.pose,
        waypoints,
        goal,
        start_time: now,
        deadline,
        estimated_arrival: now as f64 + seconds * 1000.0,
    }
}

/// Whether moving from `a` to `b` keeps clearance from every obstacle.
///
/// An obstacle already closer than the required clearance at `a` is held to
/// its current distance instead, so a proxy can always back away.
pub(crate) fn segment_clear(a: Vec2, b: Vec2, radius: f64, others: &[Obstacle]) -> bool {
    others.iter().all(|o| {
        let required = radius + o.radius;
        let here = (o.center - a).norm();
        let allowed = required.min(here) - CLEARANCE_TOL;
        if point_segment_distance(o.center, a, b) < allowed {
            return false;
        }
        o.corridor.windows(2).all(|w| {
            let here = point_segment_distance(a, w[0], w[1]);
            let allowed = required.min(here) - CLEARANCE_TOL;
            segment_distance(a, b, w[0], w[1]) >= allowed
        })
    })
}

pub(crate) fn point_clear(p: Vec2, radius: f64, others: &[Obstacle]) -> bool {
    others.iter().all(|o| {
        let required = radius + o.radius;
        (o.center - p).norm() >= required - CLEARANCE_TOL
            && o
                .corridor
                .windows(2)
                .all(|w| point_segment_distance(p, w[0], w[1]) >= required - CLEARANCE_TOL)
    })
}

fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0
}

pub(crate) fn segment_distance(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Single-waypoint detour past the first obstacle blocking the straight line.
fn detour(
    proxy: &RobotProxy,
    goal: Pose2D,
    radius: f64,
    others: &[Obstacle],
    workspace: &Workspace,
) -> Option<Vec<Vec2>> {
    let start = proxy.pose.vec();
    let target = goal.vec();
    let dir = (target - start).normalized()?;
    let normal = dir.perp();

    // Blocking obstacle centers, plus corridor points, ordered along the path.
    let mut blockers: Vec<(f64, Vec2, f64)> = Vec::new();
    for o in others {
        let required = radius + o.radius;
        if point_segment_distance(o.center, start, target) < required {
            blockers.push(((o.center - start).dot(dir), o.center, required));
        }
        for w in o.corridor.windows(2) {
            if segment_distance(start, target, w[0], w[1]) < required {
                for p in [w[0], w[1]] {
                    blockers.push(((p - start).dot(dir), p, required));
                }
            }
        }
    }
    blockers.sort_by(|a, b| a.0.total_cmp(&b.0));
    let &(_, center, required) = blockers.first()?;

    let mut best: Option<(f64, Vec<Vec2>)> = None;
    for scale in DETOUR_SCALES {
        for side in [1.0, -1.0] {
            let wp = center + normal.scale(side * required * scale);
            let pose = Pose2D::at(wp.x, wp.y);
            if !workspace.contains(&pose) {
                continue;
            }
            if !segment_clear(start, wp, radius, others) || !segment_clear(wp, target, radius, others)
            {
                continue;
            }
            let route = vec![wp, target];
            let plan = timed_plan(proxy, &route, goal, 0, None);
            let cost = plan.estimated_arrival;
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, route));
            }
        }
        if best.is_some() {
            break;
        }
    }
    best.map(|(_, r)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::KinematicProfile;

    fn proxy(x: f64, y: f64, heading: f64) -> RobotProxy {
        RobotProxy::new("p2", "a", KinematicProfile::tabletop(), Pose2D::new(x, y, heading))
    }

    #[test]
    fn straight_diagonal_plan_time() {
        // Heading already toward the goal and goal heading matching: no turns.
        let h = std::f64::consts::FRAC_PI_4;
        let p = proxy(0.15, 0.15, h);
        let ws = Workspace::tabletop_default();
        let plan = plan_path(&p, Pose2D::new(0.75, 0.75, h), &[], None, 0, &ws).unwrap();
        assert_eq!(plan.waypoints.len(), 1);
        // 0.6·√2 / 0.25 s, computed independently.
        let expected_ms = (0.6f64 * 0.6 * 2.0).sqrt() / 0.25 * 1000.0;
        assert!((plan.estimated_arrival - expected_ms).abs() < 1e-6);
        assert!((expected_ms - 3394.11).abs() < 0.01);
    }

    #[test]
    fn turn_time_added_for_misaligned_heading() {
        let p = proxy(0.15, 0.15, 0.0);
        let ws = Workspace::tabletop_default();
        let plan = plan_path(&p, Pose2D::new(0.75, 0.75, 0.0), &[], None, 0, &ws).unwrap();
        // π/4 out and π/4 back at π rad/s is 0.5 s.
        let expected_ms = 500.0 + (0.72f64).sqrt() / 0.25 * 1000.0;
        assert!((plan.estimated_arrival - expected_ms).abs() < 1e-6);
    }

    #[test]
    fn reverse_driving_avoids_half_turns() {
        let p = proxy(0.75, 0.15, 0.0);
        let ws = Workspace::tabletop_default();
        let plan = plan_path(&p, Pose2D::new(0.15, 0.15, 0.0), &[], None, 0, &ws).unwrap();
        assert!((plan.estimated_arrival - 2400.0).abs() < 1e-6);
        assert!((plan.waypoints[0].heading.abs() - 0.0).abs() < 1e-12);
    }

    #[test]
    fn goal_equal_to_current_pose_gives_empty_plan() {
        let p = proxy(0.45, 0.45, 0.0);
        let ws = Workspace::tabletop_default();
        let plan = plan_path(&p, p.pose, &[], None, 1234, &ws).unwrap();
        assert!(plan.waypoints.is_empty());
        assert_eq!(plan.estimated_arrival, 1234.0);
    }

    #[test]
    fn out_of_bounds_goal_rejected() {
        let p = proxy(0.45, 0.45, 0.0);
        let ws = Workspace::tabletop_default();
        assert!(matches!(
            plan_path(&p, Pose2D::at(1.2, 0.3), &[], None, 0, &ws),
            Err(PlanError::GoalOutOfBounds { .. })
        ));
    }

    #[test]
    fn parked_proxy_forces_single_detour() {
        let p = proxy(0.15, 0.45, 0.0);
        let ws = Workspace::tabletop_default();
        let parked = Obstacle::parked(Vec2::new(0.45, 0.45), 0.05);
        let goal = Pose2D::at(0.75, 0.45);
        let plan = plan_path(&p, goal, std::slice::from_ref(&parked), None, 0, &ws).unwrap();
        assert_eq!(plan.waypoints.len(), 2, "{:?}", plan.waypoints);
        let straight_ms = 0.6 / 0.25 * 1000.0;
        assert!(plan.estimated_arrival > straight_ms);
        // Every swept segment clears 2 · footprint radius from the parked proxy.
        let pts = plan.polyline();
        for w in pts.windows(2) {
            let d = point_segment_distance(
                parked.center,
                Vec2::new(w[0][0], w[0][1]),
                Vec2::new(w[1][0], w[1][1]),
            );
            assert!(d >= 0.1 - 1e-9, "clearance {d}");
        }
    }

    #[test]
    fn infeasible_deadline_returns_best_effort_plan() {
        let p = proxy(0.15, 0.15, 0.0);
        let ws = Workspace::tabletop_default();
        let err = plan_path(&p, Pose2D::at(0.75, 0.15), &[], Some(1000.0), 0, &ws).unwrap_err();
        match err {
            PlanError::DeadlineInfeasible { plan, deficit_ms } => {
                assert!((deficit_ms - 1400.0).abs() < 1e-6);
                assert_eq!(plan.waypoints.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn walled_in_goal_is_blocked() {
        let p = proxy(0.15, 0.15, 0.0);
        let ws = Workspace::tabletop_default();
        // Goal sits on top of another proxy.
        let parked = Obstacle::parked(Vec2::new(0.75, 0.75), 0.05);
        assert_eq!(
            plan_path(&p, Pose2D::at(0.75, 0.76), &[parked], None, 0, &ws),
            Err(PlanError::Blocked)
        );
    }
}
