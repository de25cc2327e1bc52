//! Websocket bridge for browser sessions. Each socket is an ordinary relay
//! client whose frames travel as canonical-JSON text messages, the same bodies
//! the TCP transport length-prefixes.

use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use proxysync_core::model::SiteId;
use proxysync_core::relay::codec;
use proxysync_core::relay::{
    ClientFrame, ClientRegistration, MsgType, Payload, RelayMessage, Role, ServerFrame,
};
use proxysync_core::scenario::LiveSession;

use crate::connection::Connection;
use crate::relay::Relay;

#[derive(Clone)]
pub struct BridgeState {
    pub relay: Relay,
}

/// `/ws` upgrades to a relay session; `/` answers a plain health line.
pub fn router(relay: Relay) -> Router {
    Router::new()
        .route("/", get(|| async { "proxysync stream-ui bridge; connect to /ws\n" }))
        .route("/ws", get(upgrade))
        .with_state(BridgeState { relay })
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<BridgeState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| bridge(socket, state.relay))
}

fn text(frame: &ServerFrame) -> Message {
    let body = codec::encode_body(frame).expect("server frames serialize");
    Message::Text(String::from_utf8(body).expect("canonical JSON is UTF-8").into())
}

async fn bridge(mut socket: WebSocket, relay: Relay) {
    let mut conn = Connection::new(relay);
    while !conn.closed() {
        tokio::select! {
            incoming = socket.recv() => {
                let Some(Ok(msg)) = incoming else { break };
                let parsed = match &msg {
                    Message::Text(t) => serde_json::from_str::<ClientFrame>(t.as_str()),
                    Message::Binary(b) => serde_json::from_slice::<ClientFrame>(b),
                    Message::Close(_) => break,
                    _ => continue,
                };
                let replies = match parsed {
                    Ok(frame) => conn.handle(frame),
                    Err(e) => vec![conn.malformed(e)],
                };
                for r in &replies {
                    if socket.send(text(r)).await.is_err() {
                        return;
                    }
                }
            }
            Some(frame) = conn.next_outbound() => {
                if socket.send(text(&frame)).await.is_err() {
                    return;
                }
            }
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub namespace: String,
    pub client_id: String,
    pub site: SiteId,
    /// Wall-clock period of one simulation tick.
    pub tick: Duration,
    /// Publish a world snapshot every this many ticks.
    pub snapshot_every: u32,
}

impl LiveConfig {
    pub fn new(namespace: impl Into<String>) -> Self {
        Self {
            namespace: namespace.into(),
            client_id: "sim".into(),
            site: SiteId::new("a"),
            tick: Duration::from_millis(10),
            snapshot_every: 5,
        }
    }
}

/// Drives a live session from relay traffic: `ui-command` messages in the
/// namespace are applied, the simulation ticks in real time, and world
/// snapshots are published as `scenario-event` messages.
pub async fn run_live(relay: Relay, mut live: LiveSession, config: LiveConfig) -> Result<(), String> {
    let mut session = relay
        .register(ClientRegistration {
            client_id: config.client_id.clone(),
            namespaces: [config.namespace.clone()].into(),
            role: Role::Both,
            site: config.site.clone(),
        })
        .map_err(|e| e.to_string())?;
    let mut seq = 1;
    let mut publish = |session: &crate::relay::Session, payload: Payload, sent_at| {
        let reply = session.publish(RelayMessage {
            namespace: config.namespace.clone(),
            emitter_id: config.client_id.clone(),
            msg_type: payload.msg_type(),
            seq,
            sent_at,
            payload: payload.to_value(),
        });
        match reply {
            ServerFrame::Ack { .. } => seq += 1,
            ServerFrame::Fault { expected_seq, .. } => seq = expected_seq,
            other => tracing::warn!(?other, "snapshot not accepted"),
        }
    };
    publish(&session, Payload::ScenarioEvent(live.snapshot()), relay.now());
    let mut ticker = tokio::time::interval(config.tick);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let mut ticks: u32 = 0;
    loop {
        ticker.tick().await;
        while let Some(frame) = session.try_recv() {
            let ServerFrame::Deliver { message } = frame else { continue };
            if message.msg_type != MsgType::UiCommand {
                continue;
            }
            match Payload::decode(&message) {
                Ok(Payload::UiCommand(cmd)) => {
                    if let Err(e) = live.apply(&cmd) {
                        tracing::warn!(from = %message.emitter_id, error = %e, "ui command refused");
                    }
                }
                Ok(_) => {}
                Err(e) => tracing::warn!(from = %message.emitter_id, error = %e, "bad ui command"),
            }
        }
        live.step().map_err(|e| e.to_string())?;
        ticks += 1;
        if ticks % config.snapshot_every.max(1) == 0 {
            publish(&session, Payload::ScenarioEvent(live.snapshot()), relay.now());
        }
    }
}
