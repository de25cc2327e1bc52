use super::{GestureEvent, GestureKind};
use crate::model::{distance, ObjectId, Pose2D, TrackedFrame, Vec2, VirtualObject, Workspace};

/// Half-angle of the selection cone around the user's facing (60° aperture).
pub const CONE_HALF_ANGLE: f64 = std::f64::consts::PI / 6.0;
/// Anchors within this perpendicular distance of a ray count as lying on it.
pub const RAY_TOLERANCE: f64 = 0.05;
/// Slide distance on anchor-free workspaces.
const FREE_SLIDE: f64 = 0.3;
/// Keeps anchor-free goals this far inside the bounds.
const EDGE_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GestureError {
    #[error("no object inside the gesture cone")]
    NoTarget,
}

fn in_cone(body: &Pose2D, facing: Vec2, object: &Pose2D) -> bool {
    let to = object.vec() - body.vec();
    match to.normalized() {
        Some(dir) => dir.dot(facing).clamp(-1.0, 1.0).acos() <= CONE_HALF_ANGLE + 1e-9,
        None => true,
    }
}

/// Distance from `p` to the ray starting at `origin` along unit `dir`.
fn ray_distance(origin: Vec2, dir: Vec2, p: Vec2) -> f64 {
    let rel = p - origin;
    let along = rel.dot(dir);
    if along <= 0.0 {
        rel.norm()
    } else {
        rel.cross(dir).abs()
    }
}

/// Anchors on the ray from `from` along `dir`, with their distance along it.
fn anchors_on_ray(anchors: &[Pose2D], from: Vec2, dir: Vec2) -> impl Iterator<Item = (f64, &Pose2D)> {
    anchors.iter().filter_map(move |a| {
        let rel = a.vec() - from;
        let along = rel.dot(dir);
        (along > 1e-6 && rel.cross(dir).abs() <= RAY_TOLERANCE).then_some((along, a))
    })
}

fn min_by_key<'a, T>(items: impl Iterator<Item = (f64, &'a ObjectId, T)>) -> Option<T> {
    let mut best: Option<(f64, &ObjectId, T)> = None;
    for (k, id, v) in items {
        let better = match &best {
            None => true,
            Some((bk, bid, _)) => k < *bk || (k == *bk && id < *bid),
        };
        if better {
            best = Some((k, id, v));
        }
    }
    best.map(|(_, _, v)| v)
}

/// Farthest in-bounds point from `from` along `dir`, kept off the edges.
fn ray_exit(workspace: &Workspace, from: Vec2, dir: Vec2) -> Vec2 {
    let lo = Vec2::new(EDGE_MARGIN, EDGE_MARGIN);
    let hi = Vec2::new(workspace.width - EDGE_MARGIN, workspace.depth - EDGE_MARGIN);
    let mut t = f64::INFINITY;
    for (p, d, l, h) in [(from.x, dir.x, lo.x, hi.x), (from.y, dir.y, lo.y, hi.y)] {
        if d > 1e-12 {
            t = t.min((h - p) / d);
        } else if d < -1e-12 {
            t = t.min((l - p) / d);
        }
    }
    let t = if t.is_finite() { t.max(0.0) } else { 0.0 };
    from + dir.scale(t)
}

fn snap_or_stay(workspace: &Workspace, object: &Pose2D) -> Pose2D {
    workspace
        .nearest_anchor(object)
        .map(|(_, a)| a)
        .unwrap_or(*object)
}

/// Chooses the commanded object and its goal for a gesture.
///
/// Candidates are objects within the cone around the user's facing, seen from
/// the body position in `user`. Push takes the candidate nearest the user to
/// the farthest anchor along the gesture direction; pull takes the candidate
/// nearest the facing ray to the anchor nearest the user; slide takes the
/// candidate nearest the wrist to the next anchor along the lateral direction.
/// Without a qualifying anchor the object keeps its own anchor.
pub fn resolve_target<'a>(
    event: &GestureEvent,
    user: &TrackedFrame,
    objects: impl IntoIterator<Item = &'a VirtualObject>,
    workspace: &Workspace,
) -> Result<(ObjectId, Pose2D), GestureError> {
    let body = user.pose;
    let facing = Vec2::from_angle(body.heading);
    let candidates: Vec<&VirtualObject> = objects
        .into_iter()
        .filter(|o| in_cone(&body, facing, &o.pose))
        .collect();
    let anchors = &workspace.anchor_points;
    let dir = event.direction;

    let chosen = match event.kind {
        GestureKind::Push => min_by_key(
            candidates
                .iter()
                .map(|o| (distance(&o.pose, &body), &o.id, *o)),
        ),
        GestureKind::Pull => min_by_key(
            candidates
                .iter()
                .map(|o| (ray_distance(body.vec(), facing, o.pose.vec()), &o.id, *o)),
        ),
        GestureKind::Slide => min_by_key(
            candidates
                .iter()
                .map(|o| (distance(&o.pose, &event.origin), &o.id, *o)),
        ),
    }
    .ok_or(GestureError::NoTarget)?;

    let from = chosen.pose.vec();
    let goal = if anchors.is_empty() {
        let p = match event.kind {
            GestureKind::Push => ray_exit(workspace, from, dir),
            GestureKind::Pull => workspace.clamp(body.with_heading(0.0)).vec(),
            GestureKind::Slide => {
                let far = ray_exit(workspace, from, dir);
                if (far - from).norm() > FREE_SLIDE {
                    from + dir.scale(FREE_SLIDE)
                } else {
                    far
                }
            }
        };
        Pose2D::from_vec(p, chosen.pose.heading)
    } else {
        let picked = match event.kind {
            GestureKind::Push => anchors_on_ray(anchors, from, dir)
                .fold(None, |best: Option<(f64, &Pose2D)>, (d, a)| match best {
                    Some((bd, _)) if bd >= d => best,
                    _ => Some((d, a)),
                })
                .map(|(_, a)| *a),
            GestureKind::Pull => workspace.nearest_anchor(&body).map(|(_, a)| a),
            GestureKind::Slide => anchors_on_ray(anchors, from, dir)
                .fold(None, |best: Option<(f64, &Pose2D)>, (d, a)| match best {
                    Some((bd, _)) if bd <= d => best,
                    _ => Some((d, a)),
                })
                .map(|(_, a)| *a),
        };
        picked.unwrap_or_else(|| snap_or_stay(workspace, &chosen.pose))
    };
    Ok((chosen.id.clone(), goal))
}
