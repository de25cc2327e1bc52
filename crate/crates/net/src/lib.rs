//! Networked relay: a shared in-process relay, the length-prefixed TCP
//! transport, a client, and the websocket bridge used by browser sessions.

mod bridge;
mod client;
mod connection;
mod relay;
mod tcp;

pub use bridge::{router, run_live, BridgeState, LiveConfig};
pub use client::{ClientError, RelayClient, RelayReceiver, RelaySender};
pub use connection::Connection;
pub use relay::{LatencyTable, Relay, Session};
pub use tcp::{serve, serve_connection};
