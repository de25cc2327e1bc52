//! Payload schemas for the five message types.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::message::{MsgType, RelayMessage};
use crate::gesture::{GestureEvent, GestureKind};
use crate::mapping::BindingKind;
use crate::model::{BindingId, Grasp, Millis, ObjectId, Pose2D, ProxyId, SiteId, TrackedFrame, UserId};
use crate::retarget::RetargetTask;

/// Change of the proxy serving a binding at one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingEvent {
    pub binding_id: BindingId,
    pub kind: BindingKind,
    pub site: SiteId,
    pub active_proxy: Option<ProxyId>,
    pub target: Option<ObjectId>,
    pub released: Option<ProxyId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetargetStatus {
    Planned,
    /// The deadline cannot be met; the best plan runs anyway.
    Infeasible,
    /// A set-down displayed before its proxy was in place.
    IllusionBreak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetargetEvent {
    pub task: RetargetTask,
    pub status: RetargetStatus,
    pub estimated_arrival: f64,
    pub slack_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioEvent {
    Grasp {
        object: ObjectId,
        user: UserId,
        site: SiteId,
        at: Millis,
    },
    Release {
        object: ObjectId,
        user: UserId,
        pose: Pose2D,
        at: Millis,
    },
    /// The holder's intended set-down pose, announced at grasp time.
    Aim {
        object: ObjectId,
        user: UserId,
        pose: Pose2D,
        at: Millis,
    },
    GraspResolved {
        object: ObjectId,
        winner: Grasp,
        loser: Grasp,
    },
    Gesture { event: GestureEvent },
    /// Full session view for observers such as the browser sandbox.
    WorldSnapshot { snapshot: Value },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UiCommandKind {
    Grasp,
    Drag,
    Release,
    Gesture,
    SetLatency,
    ToggleLayer,
}

/// A browser user's action. `payload` is a pose for grasp/drag/release, a
/// gesture kind for gesture, milliseconds for set-latency and
/// `{"layer": .., "visible": ..}` for toggle-layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UiCommand {
    pub kind: UiCommandKind,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub payload: Value,
    pub client_ts: Millis,
}

impl UiCommand {
    pub fn pose(&self) -> Option<Pose2D> {
        serde_json::from_value(self.payload.clone()).ok()
    }

    pub fn millis(&self) -> Option<Millis> {
        self.payload.as_i64()
    }

    pub fn gesture(&self) -> Option<GestureKind> {
        serde_json::from_value(self.payload.clone()).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Frame(TrackedFrame),
    Binding(BindingEvent),
    Retarget(RetargetEvent),
    ScenarioEvent(ScenarioEvent),
    UiCommand(UiCommand),
}

impl Payload {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Payload::Frame(_) => MsgType::Frame,
            Payload::Binding(_) => MsgType::Binding,
            Payload::Retarget(_) => MsgType::Retarget,
            Payload::ScenarioEvent(_) => MsgType::ScenarioEvent,
            Payload::UiCommand(_) => MsgType::UiCommand,
        }
    }

    pub fn to_value(&self) -> Value {
        let v = match self {
            Payload::Frame(x) => serde_json::to_value(x),
            Payload::Binding(x) => serde_json::to_value(x),
            Payload::Retarget(x) => serde_json::to_value(x),
            Payload::ScenarioEvent(x) => serde_json::to_value(x),
            Payload::UiCommand(x) => serde_json::to_value(x),
        };
        v.expect("payload types serialize")
    }

    /// Decodes a message payload against the schema of its type.
    pub fn decode(message: &RelayMessage) -> Result<Payload, serde_json::Error> {
        let v = message.payload.clone();
        Ok(match message.msg_type {
            MsgType::Frame => Payload::Frame(serde_json::from_value(v)?),
            MsgType::Binding => Payload::Binding(serde_json::from_value(v)?),
            MsgType::Retarget => Payload::Retarget(serde_json::from_value(v)?),
            MsgType::ScenarioEvent => Payload::ScenarioEvent(serde_json::from_value(v)?),
            MsgType::UiCommand => Payload::UiCommand(serde_json::from_value(v)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn payloads_roundtrip_through_messages() {
        let p = Payload::ScenarioEvent(ScenarioEvent::Aim {
            object: ObjectId::new("ctrl"),
            user: UserId::new("alice"),
            pose: Pose2D::at(0.75, 0.75),
            at: 1000,
        });
        let m = RelayMessage {
            namespace: "tictactoe".into(),
            emitter_id: "site-a".into(),
            msg_type: p.msg_type(),
            seq: 1,
            sent_at: 1000,
            payload: p.to_value(),
        };
        assert_eq!(Payload::decode(&m).unwrap(), p);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let m = RelayMessage {
            namespace: "ns".into(),
            emitter_id: "e".into(),
            msg_type: MsgType::Frame,
            seq: 1,
            sent_at: 0,
            payload: json!({"kind": "grasp"}),
        };
        assert!(Payload::decode(&m).is_err());
    }

    #[test]
    fn ui_command_accessors() {
        let c: UiCommand = serde_json::from_value(json!({
            "kind": "drag", "target": "ctrl", "payload": {"x": 0.3, "y": 0.4}, "client_ts": 5
        }))
        .unwrap();
        assert_eq!(c.pose(), Some(Pose2D::at(0.3, 0.4)));
        let c: UiCommand =
            serde_json::from_value(json!({"kind": "set-latency", "payload": 0, "client_ts": 6})).unwrap();
        assert_eq!(c.millis(), Some(0));
    }
}
