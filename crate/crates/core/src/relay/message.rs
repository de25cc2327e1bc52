use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{Millis, SiteId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MsgType {
    Frame,
    Binding,
    Retarget,
    ScenarioEvent,
    UiCommand,
}

impl MsgType {
    pub const ALL: [MsgType; 5] = [
        MsgType::Frame,
        MsgType::Binding,
        MsgType::Retarget,
        MsgType::ScenarioEvent,
        MsgType::UiCommand,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MsgType::Frame => "frame",
            MsgType::Binding => "binding",
            MsgType::Retarget => "retarget",
            MsgType::ScenarioEvent => "scenario-event",
            MsgType::UiCommand => "ui-command",
        }
    }
}

/// Namespaced, per-emitter sequenced envelope. The relay routes on
/// `namespace` and `msg_type` only; `payload` is opaque to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayMessage {
    pub namespace: String,
    pub emitter_id: String,
    pub msg_type: MsgType,
    pub seq: u64,
    pub sent_at: Millis,
    pub payload: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Emitter,
    Sink,
    Both,
}

impl Role {
    pub fn emits(self) -> bool {
        matches!(self, Role::Emitter | Role::Both)
    }

    pub fn sinks(self) -> bool {
        matches!(self, Role::Sink | Role::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientRegistration {
    pub client_id: String,
    pub namespaces: BTreeSet<String>,
    pub role: Role,
    pub site: SiteId,
}

/// Frames a client sends to the relay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum ClientFrame {
    Register { registration: ClientRegistration },
    Publish { message: RelayMessage },
    Unregister,
}

/// Frames the relay sends to a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum ServerFrame {
    /// Registration accepted; `next_seq` is the next sequence number per namespace.
    Registered {
        client_id: String,
        next_seq: BTreeMap<String, u64>,
    },
    /// Retained last-known messages, sent to sinks before any live delivery.
    Snapshot { messages: Vec<RelayMessage> },
    Deliver { message: RelayMessage },
    Ack { namespace: String, seq: u64 },
    /// The session must re-sync: publish `expected_seq` next.
    Fault {
        namespace: String,
        expected_seq: u64,
        reason: String,
    },
    /// The request was refused; the session (if any) is unchanged.
    Rejected { reason: String },
}
