//! Namespaced publish/subscribe relay: message model, wire framing and a
//! deterministic sans-IO hub shared by the in-process runner and the TCP server.

pub mod codec;
mod hub;
mod message;
pub mod payload;

pub use hub::{Delivery, Hub, HubConfig, HubError, HubStats, LatencySpec, Registered};
pub use message::{ClientFrame, ClientRegistration, MsgType, RelayMessage, Role, ServerFrame};
pub use payload::{
    BindingEvent, Payload, RetargetEvent, RetargetStatus, ScenarioEvent, UiCommand, UiCommandKind,
};

impl From<HubError> for ServerFrame {
    fn from(e: HubError) -> Self {
        match e {
            HubError::SequenceFault {
                namespace,
                expected,
                ..
            } => ServerFrame::Fault {
                reason: format!("sequence gap, expected {expected}"),
                namespace,
                expected_seq: expected,
            },
            other => ServerFrame::Rejected {
                reason: other.to_string(),
            },
        }
    }
}
