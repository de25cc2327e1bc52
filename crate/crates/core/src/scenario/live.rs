//! Interactive session driven by browser commands.

use serde::Deserialize;

use super::compile::{straight_frames, Action, TimedAction};
use super::library;
use super::runner::{RunError, Runner};
use super::script::{ScenarioScript, ScriptError};
use crate::model::{Millis, ObjectId, Pose2D, UserId, Workspace};
use crate::relay::{ScenarioEvent, UiCommand, UiCommandKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UiError {
    #[error("{0:?} needs a payload")]
    MissingPayload(UiCommandKind),
    #[error("{0:?} needs a target object")]
    MissingTarget(UiCommandKind),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("latency must be non-negative, got {0}")]
    NegativeLatency(Millis),
    #[error("unknown layer {0:?}")]
    UnknownLayer(String),
}

#[derive(Deserialize)]
struct LayerToggle {
    layer: String,
    visible: bool,
}

/// A running scenario with one interactive user. Commands become timeline
/// actions; drags are clamped to the workspace and replayed at hand speed.
#[derive(Debug, Clone)]
pub struct LiveSession {
    runner: Runner,
    user: UserId,
    hand_speed: f64,
    workspace: Workspace,
    physical_layer: bool,
    held: Option<ObjectId>,
    /// Hand pose at the end of the queued drags, and when they end.
    queued_hand: Pose2D,
    drag_until: Millis,
}

impl LiveSession {
    /// Runs `script` without an end; `user` is the one the browser controls.
    pub fn new(script: &ScenarioScript, user: UserId) -> Result<Self, ScriptError> {
        let mut runner = Runner::new(script)?;
        runner.run_forever();
        let queued_hand = runner.hand(&user).ok_or_else(|| ScriptError {
            violations: vec![format!("unknown user {user}")],
        })?;
        Ok(Self {
            hand_speed: script.parameters.hand_speed,
            workspace: script.parameters.workspace(),
            runner,
            user,
            physical_layer: true,
            held: None,
            queued_hand,
            drag_until: 0,
        })
    }

    /// The two-site tic-tac-toe table with no scripted moves; the browser plays alice.
    pub fn tictactoe() -> Self {
        let mut s = library::tictactoe();
        s.events.clear();
        Self::new(&s, UserId::new("alice")).expect("built-in script is valid")
    }

    pub fn runner(&self) -> &Runner {
        &self.runner
    }

    pub fn physical_layer(&self) -> bool {
        self.physical_layer
    }

    pub fn step(&mut self) -> Result<(), RunError> {
        self.runner.step()
    }

    fn next_tick(&self) -> Millis {
        self.runner.now() + self.runner.dt()
    }

    fn object(&self, cmd: &UiCommand) -> Result<(ObjectId, Pose2D), UiError> {
        let id = cmd.target.clone().ok_or(UiError::MissingTarget(cmd.kind))?;
        let site = self.runner.user_site(&self.user).expect("session user");
        let object = ObjectId::new(id.as_str());
        self.runner.sites()[site]
            .world
            .objects
            .get(&object)
            .map(|o| (object, o.pose))
            .ok_or(UiError::UnknownObject(id))
    }

    pub fn apply(&mut self, cmd: &UiCommand) -> Result<(), UiError> {
        let t = self.next_tick().max(self.drag_until);
        let user = self.user.clone();
        match cmd.kind {
            UiCommandKind::Grasp => {
                let (object, pose) = self.object(cmd)?;
                self.queued_hand = pose;
                self.held = Some(object.clone());
                self.runner.inject([
                    TimedAction {
                        time: t,
                        action: Action::HandFrame {
                            user: user.clone(),
                            pose,
                        },
                    },
                    TimedAction {
                        time: t,
                        action: Action::Grasp { user, object },
                    },
                ]);
                self.drag_until = t;
            }
            UiCommandKind::Drag => {
                let to = cmd.pose().ok_or(UiError::MissingPayload(cmd.kind))?;
                let to = self.workspace.clamp(to);
                let mut frames = Vec::new();
                let start = self.drag_until.max(self.runner.now());
                // The drag's end point is the user's intended set-down.
                if let Some(object) = self.held.clone() {
                    self.runner.inject([TimedAction {
                        time: start,
                        action: Action::Aim {
                            user: user.clone(),
                            object,
                            pose: to,
                        },
                    }]);
                }
                let end = straight_frames(&user, self.queued_hand, to, self.hand_speed, start, self.runner.dt(), &mut frames);
                self.runner.inject(frames);
                self.queued_hand = to;
                self.drag_until = end;
            }
            UiCommandKind::Release => {
                let (object, _) = self.object(cmd)?;
                self.held = None;
                self.runner.inject([TimedAction {
                    time: t,
                    action: Action::Release { user, object },
                }]);
            }
            UiCommandKind::Gesture => {
                let kind = cmd.gesture().ok_or(UiError::MissingPayload(cmd.kind))?;
                self.runner.inject([TimedAction {
                    time: self.next_tick(),
                    action: Action::Gesture { user, kind },
                }]);
            }
            UiCommandKind::SetLatency => {
                let ms = cmd.millis().ok_or(UiError::MissingPayload(cmd.kind))?;
                if ms < 0 {
                    return Err(UiError::NegativeLatency(ms));
                }
                self.runner.set_artificial_latency(ms);
            }
            UiCommandKind::ToggleLayer => {
                let toggle: LayerToggle = serde_json::from_value(cmd.payload.clone())
                    .map_err(|_| UiError::MissingPayload(cmd.kind))?;
                match toggle.layer.as_str() {
                    "physical" => self.physical_layer = toggle.visible,
                    _ => return Err(UiError::UnknownLayer(toggle.layer)),
                }
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> ScenarioEvent {
        ScenarioEvent::WorldSnapshot {
            snapshot: self.runner.view(self.physical_layer),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn cmd(v: serde_json::Value) -> UiCommand {
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn drag_is_speed_limited_and_clamped() {
        let mut s = LiveSession::tictactoe();
        s.apply(&cmd(json!({"kind": "grasp", "target": "ctrl", "client_ts": 0}))).unwrap();
        s.apply(&cmd(json!({"kind": "drag", "payload": {"x": 2.0, "y": 0.15}, "client_ts": 1}))).unwrap();
        s.apply(&cmd(json!({"kind": "release", "target": "ctrl", "client_ts": 2}))).unwrap();
        // 0.75 m at 0.3 m/s.
        for _ in 0..300 {
            s.step().unwrap();
        }
        let a = &s.runner().sites()[&"a".into()].world;
        let ctrl = &a.objects[&ObjectId::new("ctrl")];
        assert_eq!(ctrl.pose.x, 0.9);
        assert!(ctrl.held_by.is_none());
    }

    #[test]
    fn bad_commands_are_rejected() {
        let mut s = LiveSession::tictactoe();
        assert_eq!(
            s.apply(&cmd(json!({"kind": "grasp", "target": "nope", "client_ts": 0}))),
            Err(UiError::UnknownObject("nope".into()))
        );
        assert!(s.apply(&cmd(json!({"kind": "set-latency", "payload": -1, "client_ts": 0}))).is_err());
        s.apply(&cmd(json!({"kind": "toggle-layer", "payload": {"layer": "physical", "visible": false}, "client_ts": 0})))
            .unwrap();
        let ScenarioEvent::WorldSnapshot { snapshot } = s.snapshot() else {
            unreachable!()
        };
        assert!(snapshot["sites"]["a"].get("proxies").is_none());
    }

    #[test]
    fn click_without_drag_issues_no_retarget() {
        let mut s = LiveSession::tictactoe();
        s.apply(&cmd(json!({"kind": "grasp", "target": "ctrl", "client_ts": 0}))).unwrap();
        s.apply(&cmd(json!({"kind": "release", "target": "ctrl", "client_ts": 0}))).unwrap();
        for _ in 0..300 {
            s.step().unwrap();
        }
        let r = s.runner().report();
        assert_eq!(r.metrics.replans, 0);
        assert_eq!(r.metrics.illusion_breaks, 0);
        assert!(s.runner().sites().values().all(|a| a.world.plans.is_empty()));
    }
}
