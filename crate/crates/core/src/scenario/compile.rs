//! Expands a script into a time-ordered action list.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::script::{EventKind, PoseRef, ScenarioScript, ScriptError};
use crate::gesture::GestureKind;
use crate::model::{Millis, ObjectId, Pose2D, UserId, Workspace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Action {
    HandFrame { user: UserId, pose: Pose2D },
    BodyFrame { user: UserId, pose: Pose2D },
    Grasp { user: UserId, object: ObjectId },
    Release { user: UserId, object: ObjectId },
    Aim { user: UserId, object: ObjectId, pose: Pose2D },
    Place { object: ObjectId, pose: Pose2D },
    Gesture { user: UserId, kind: GestureKind },
    Touch { user: UserId, object: ObjectId },
    CheckQuiescent { object: ObjectId },
    CheckRace { object: ObjectId },
    Checkpoint { label: String, object: ObjectId, expect_anchor: Option<usize> },
}

impl Action {
    pub fn is_frame(&self) -> bool {
        matches!(self, Action::HandFrame { .. } | Action::BodyFrame { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedAction {
    pub time: Millis,
    pub action: Action,
}

/// Resolves pose references against the unscaled workspace, then scales.
#[derive(Debug, Clone)]
pub struct Resolver {
    base: Workspace,
    scale: f64,
}

impl Resolver {
    pub fn new(script: &ScenarioScript) -> Self {
        Self {
            base: script.parameters.base_workspace(),
            scale: script.parameters.scale(),
        }
    }

    pub fn resolve(&self, r: &PoseRef) -> Pose2D {
        let p = r.resolve(&self.base).expect("validated pose reference");
        Pose2D::new(p.x * self.scale, p.y * self.scale, p.heading)
    }
}

/// Frames for a straight hand motion starting after `t0`, one per `dt`;
/// the last frame lands exactly on `to`. Returns the end time.
pub fn straight_frames(
    user: &UserId,
    from: Pose2D,
    to: Pose2D,
    speed: f64,
    t0: Millis,
    dt: Millis,
    out: &mut Vec<TimedAction>,
) -> Millis {
    let d = from.distance(&to);
    if d <= 1e-12 {
        return t0;
    }
    let duration = d / speed * 1000.0;
    let n = (duration / dt as f64 - 1e-9).ceil().max(1.0) as i64;
    for k in 1..=n {
        let s = ((k * dt) as f64 / duration).min(1.0);
        let pose = if k == n {
            to
        } else {
            Pose2D::new(
                from.x + (to.x - from.x) * s,
                from.y + (to.y - from.y) * s,
                to.heading,
            )
        };
        out.push(TimedAction {
            time: t0 + k * dt,
            action: Action::HandFrame {
                user: user.clone(),
                pose,
            },
        });
    }
    t0 + n * dt
}

/// Validates the script and produces its timeline, sorted by time with script
/// order preserved among equal times.
pub fn compile(script: &ScenarioScript) -> Result<Vec<TimedAction>, ScriptError> {
    script.validate()?;
    let p = &script.parameters;
    let r = Resolver::new(script);
    let mut hands: BTreeMap<UserId, Pose2D> = script
        .users
        .iter()
        .map(|u| (u.id.clone(), r.resolve(&u.hand)))
        .collect();
    let mut out = Vec::new();
    let mut cursor: Millis = 0;
    for e in &script.events {
        let start = match (e.at, e.after) {
            (Some(at), _) => at,
            (None, after) => cursor + after.unwrap_or(0),
        };
        let mut end = start;
        let mut push = |action: Action| {
            out.push(TimedAction {
                time: start,
                action,
            })
        };
        match &e.kind {
            EventKind::Grasp { user, object } => push(Action::Grasp {
                user: user.clone(),
                object: object.clone(),
            }),
            EventKind::Release { user, object } => push(Action::Release {
                user: user.clone(),
                object: object.clone(),
            }),
            EventKind::Aim { user, object, pose } => push(Action::Aim {
                user: user.clone(),
                object: object.clone(),
                pose: r.resolve(pose),
            }),
            EventKind::HandFrame { user, pose } => {
                let pose = r.resolve(pose);
                hands.insert(user.clone(), pose);
                push(Action::HandFrame {
                    user: user.clone(),
                    pose,
                });
            }
            EventKind::Body { user, pose } => push(Action::BodyFrame {
                user: user.clone(),
                pose: r.resolve(pose),
            }),
            EventKind::Place { object, pose } => push(Action::Place {
                object: object.clone(),
                pose: r.resolve(pose),
            }),
            EventKind::GestureInjection { user, kind } => push(Action::Gesture {
                user: user.clone(),
                kind: *kind,
            }),
            EventKind::Touch { user, object } => push(Action::Touch {
                user: user.clone(),
                object: object.clone(),
            }),
            EventKind::CheckQuiescent { object } => push(Action::CheckQuiescent {
                object: object.clone(),
            }),
            EventKind::CheckRace { object } => push(Action::CheckRace {
                object: object.clone(),
            }),
            EventKind::Checkpoint {
                label,
                object,
                expect_anchor,
            } => push(Action::Checkpoint {
                label: label.clone(),
                object: object.clone(),
                expect_anchor: *expect_anchor,
            }),
            EventKind::Move { user, to, speed } => {
                let from = hands[user];
                let to = r.resolve(to);
                let v = speed.unwrap_or(p.hand_speed);
                end = straight_frames(user, from, to, v, start, p.dt, &mut out);
                hands.insert(user.clone(), to);
            }
            EventKind::HandPath {
                user,
                points,
                speed,
            } => {
                let v = speed.unwrap_or(p.hand_speed);
                for pt in points {
                    let from = hands[user];
                    let to = r.resolve(pt);
                    end = straight_frames(user, from, to, v, end, p.dt, &mut out);
                    hands.insert(user.clone(), to);
                }
            }
        }
        cursor = end;
    }
    // Stable: equal times keep script order.
    out.sort_by_key(|a| a.time);
    for a in &mut out {
        a.time = a.time.max(p.dt);
    }
    Ok(out)
}
