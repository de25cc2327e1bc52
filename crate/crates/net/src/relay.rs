use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use proxysync_core::model::Millis;
use proxysync_core::relay::{
    ClientRegistration, Hub, HubConfig, HubError, LatencySpec, RelayMessage, ServerFrame,
};
use tokio::sync::{mpsc, Notify};
use tokio::time::Instant;

/// Per-namespace latency injection, as read from a JSON file of the form
/// `{"tictactoe": {"delay": 1500, "jitter": 0}}`.
pub type LatencyTable = BTreeMap<String, LatencySpec>;

struct Inner {
    hub: Hub,
    outboxes: HashMap<String, mpsc::UnboundedSender<ServerFrame>>,
}

impl Inner {
    /// Moves every due message into the outboxes. Runs under the lock, so
    /// per-session channel order is delivery order.
    fn pump(&mut self, now: Millis) {
        for d in self.hub.poll(now) {
            if let Some(tx) = self.outboxes.get(&d.to) {
                // A closed receiver means the session is being dropped.
                let _ = tx.send(ServerFrame::Deliver { message: d.message });
            }
        }
    }
}

/// A relay hub shared by every transport in the process, on a wall clock
/// that starts when the relay is created.
#[derive(Clone)]
pub struct Relay {
    inner: Arc<Mutex<Inner>>,
    wake: Arc<Notify>,
    epoch: Instant,
}

impl Relay {
    pub fn new(config: HubConfig) -> Self {
        Self {
            inner: Arc::new(Mutex::new(Inner {
                hub: Hub::new(config),
                outboxes: HashMap::new(),
            })),
            wake: Arc::new(Notify::new()),
            epoch: Instant::now(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Milliseconds since the relay started.
    pub fn now(&self) -> Millis {
        self.epoch.elapsed().as_millis() as Millis
    }

    pub fn inject_latency(&self, namespace: &str, delay: Millis, jitter: Millis) -> Result<(), HubError> {
        self.lock().hub.inject_latency(namespace, delay, jitter)
    }

    pub fn apply_latency_table(&self, table: &LatencyTable) -> Result<(), HubError> {
        for (ns, spec) in table {
            self.inject_latency(ns, spec.delay, spec.jitter)?;
        }
        Ok(())
    }

    pub fn load_latency_table(path: &Path) -> std::io::Result<LatencyTable> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    pub fn stats(&self) -> proxysync_core::relay::HubStats {
        self.lock().hub.stats().clone()
    }

    /// Opens a session. The first frames on it are `Registered` and, for
    /// sinks, the retained `Snapshot`; both are queued before the session
    /// can see any live delivery.
    pub fn register(&self, reg: ClientRegistration) -> Result<Session, HubError> {
        let (tx, rx) = mpsc::unbounded_channel();
        let client_id = reg.client_id.clone();
        let sinks = reg.role.sinks();
        let mut inner = self.lock();
        let r = inner.hub.register(reg)?;
        let _ = tx.send(ServerFrame::Registered {
            client_id: client_id.clone(),
            next_seq: r.next_seq,
        });
        if sinks {
            let _ = tx.send(ServerFrame::Snapshot { messages: r.snapshot });
        }
        inner.outboxes.insert(client_id.clone(), tx);
        drop(inner);
        Ok(Session {
            client_id,
            relay: self.clone(),
            frames: rx,
        })
    }

    fn unregister(&self, client: &str) {
        let mut inner = self.lock();
        inner.hub.unregister(client);
        inner.outboxes.remove(client);
    }

    fn publish(&self, client: &str, message: RelayMessage) -> ServerFrame {
        let now = self.now();
        let namespace = message.namespace.clone();
        let seq = message.seq;
        let mut inner = self.lock();
        match inner.hub.publish(client, message, now) {
            Ok(due) => {
                if due <= now {
                    inner.pump(now);
                } else {
                    self.wake.notify_one();
                }
                ServerFrame::Ack { namespace, seq }
            }
            Err(e) => e.into(),
        }
    }

    /// Delivers messages held back by injected latency. Runs until the
    /// task is dropped.
    pub async fn run_delivery(self) {
        loop {
            let next = {
                let mut inner = self.lock();
                inner.pump(self.now());
                inner.hub.next_due()
            };
            let wait = match next {
                Some(due) => Duration::from_millis((due - self.now()).clamp(0, 50) as u64),
                None => Duration::from_millis(50),
            };
            tokio::select! {
                _ = tokio::time::sleep(wait) => {}
                _ = self.wake.notified() => {}
            }
        }
    }

    /// Spawns [`Relay::run_delivery`] on the current runtime.
    pub fn spawn_delivery(&self) -> tokio::task::JoinHandle<()> {
        tokio::spawn(self.clone().run_delivery())
    }
}

/// One registered client. Dropping it unregisters the client.
pub struct Session {
    client_id: String,
    relay: Relay,
    frames: mpsc::UnboundedReceiver<ServerFrame>,
}

impl Session {
    pub fn client_id(&self) -> &str {
        &self.client_id
    }

    /// Returns the relay's answer: `Ack`, `Fault` or `Rejected`.
    pub fn publish(&self, message: RelayMessage) -> ServerFrame {
        self.relay.publish(&self.client_id, message)
    }

    pub async fn recv(&mut self) -> Option<ServerFrame> {
        self.frames.recv().await
    }

    pub fn try_recv(&mut self) -> Option<ServerFrame> {
        self.frames.try_recv().ok()
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.relay.unregister(&self.client_id);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proxysync_core::model::SiteId;
    use proxysync_core::relay::{MsgType, Role};
    use serde_json::json;

    fn reg(id: &str, role: Role) -> ClientRegistration {
        ClientRegistration {
            client_id: id.into(),
            namespaces: ["ns".to_string()].into(),
            role,
            site: SiteId::new("a"),
        }
    }

    fn msg(from: &str, seq: u64) -> RelayMessage {
        RelayMessage {
            namespace: "ns".into(),
            emitter_id: from.into(),
            msg_type: MsgType::Frame,
            seq,
            sent_at: 0,
            payload: json!({}),
        }
    }

    #[tokio::test]
    async fn snapshot_precedes_live_and_drop_unregisters() {
        let relay = Relay::new(HubConfig::default());
        let a = relay.register(reg("a", Role::Emitter)).unwrap();
        assert!(matches!(a.publish(msg("a", 1)), ServerFrame::Ack { seq: 1, .. }));
        let mut s = relay.register(reg("s", Role::Sink)).unwrap();
        assert!(matches!(s.recv().await, Some(ServerFrame::Registered { .. })));
        match s.recv().await {
            Some(ServerFrame::Snapshot { messages }) => assert_eq!(messages.len(), 1),
            f => panic!("{f:?}"),
        }
        a.publish(msg("a", 2));
        assert!(matches!(s.recv().await, Some(ServerFrame::Deliver { message }) if message.seq == 2));
        drop(s);
        assert!(relay.register(reg("s", Role::Sink)).is_ok());
    }

    #[tokio::test]
    async fn delayed_messages_arrive_through_the_delivery_task() {
        let relay = Relay::new(HubConfig::default());
        relay.inject_latency("ns", 30, 0).unwrap();
        let _task = relay.spawn_delivery();
        let a = relay.register(reg("a", Role::Emitter)).unwrap();
        let mut s = relay.register(reg("s", Role::Sink)).unwrap();
        s.recv().await;
        s.recv().await;
        let t0 = Instant::now();
        a.publish(msg("a", 1));
        assert!(matches!(s.recv().await, Some(ServerFrame::Deliver { .. })));
        assert!(t0.elapsed() >= Duration::from_millis(25));
    }
}
