use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::message::{ClientRegistration, MsgType, RelayMessage};
use crate::model::Millis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HubConfig {
    /// Keep the last message per (namespace, emitter, type) for late joiners.
    pub retention: bool,
    /// Deliver messages back to their originator.
    pub echo: bool,
    /// Seed for latency jitter.
    pub seed: u64,
}

impl Default for HubConfig {
    fn default() -> Self {
        Self {
            retention: true,
            echo: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencySpec {
    pub delay: Millis,
    pub jitter: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HubError {
    #[error("client id must not be empty")]
    EmptyClientId,
    #[error("client {0} is already connected")]
    DuplicateClient(String),
    #[error("registration needs at least one namespace")]
    NoNamespaces,
    #[error("client {0} is not registered")]
    NotRegistered(String),
    #[error("client {client} is not an emitter")]
    NotEmitter { client: String },
    #[error("client {client} never registered namespace {namespace}")]
    UnknownNamespace { client: String, namespace: String },
    #[error("message emitter {found} does not match session {client}")]
    EmitterMismatch { client: String, found: String },
    #[error("sequence gap in {namespace}: expected {expected}, got {got}")]
    SequenceFault {
        namespace: String,
        expected: u64,
        got: u64,
    },
    #[error("latency values must be non-negative")]
    InvalidLatency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registered {
    pub next_seq: BTreeMap<String, u64>,
    pub snapshot: Vec<RelayMessage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delivery {
    pub to: String,
    pub message: RelayMessage,
    pub delivered_at: Millis,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HubStats {
    pub accepted: u64,
    pub delivered: u64,
    /// Delivery minus send time, one entry per accepted message.
    pub latencies: Vec<Millis>,
}

#[derive(Debug, Clone)]
struct Pending {
    due: Millis,
    order: u64,
    message: RelayMessage,
    origin: String,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        (self.due, self.order) == (other.due, other.order)
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.due, self.order).cmp(&(other.due, other.order))
    }
}

type StreamKey = (String, String);

/// Deterministic relay core without I/O: sessions, sequencing, retention,
/// latency injection and fan-out. Time is supplied by the caller.
#[derive(Debug, Clone)]
pub struct Hub {
    config: HubConfig,
    sessions: BTreeMap<String, ClientRegistration>,
    last_seq: BTreeMap<StreamKey, u64>,
    last_due: BTreeMap<StreamKey, Millis>,
    retained: BTreeMap<(String, String, MsgType), RelayMessage>,
    latency: BTreeMap<String, LatencySpec>,
    pending: BinaryHeap<Reverse<Pending>>,
    order: u64,
    rng: ChaCha8Rng,
    stats: HubStats,
}

impl Hub {
    pub fn new(config: HubConfig) -> Self {
        Self {
            config,
            sessions: BTreeMap::new(),
            last_seq: BTreeMap::new(),
            last_due: BTreeMap::new(),
            retained: BTreeMap::new(),
            latency: BTreeMap::new(),
            pending: BinaryHeap::new(),
            order: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            stats: HubStats::default(),
        }
    }

    pub fn config(&self) -> &HubConfig {
        &self.config
    }

    pub fn stats(&self) -> &HubStats {
        &self.stats
    }

    pub fn is_registered(&self, client: &str) -> bool {
        self.sessions.contains_key(client)
    }

    pub fn session(&self, client: &str) -> Option<&ClientRegistration> {
        self.sessions.get(client)
    }

    /// Registers a session. Sinks get the retained snapshot of their
    /// namespaces, ordered by namespace, emitter and sequence.
    pub fn register(&mut self, reg: ClientRegistration) -> Result<Registered, HubError> {
        if reg.client_id.is_empty() {
            return Err(HubError::EmptyClientId);
        }
        if reg.namespaces.is_empty() || reg.namespaces.iter().any(|n| n.is_empty()) {
            return Err(HubError::NoNamespaces);
        }
        if self.sessions.contains_key(&reg.client_id) {
            return Err(HubError::DuplicateClient(reg.client_id));
        }
        let next_seq = reg
            .namespaces
            .iter()
            .map(|ns| {
                let last = self
                    .last_seq
                    .get(&(ns.clone(), reg.client_id.clone()))
                    .copied()
                    .unwrap_or(0);
                (ns.clone(), last + 1)
            })
            .collect();
        let mut snapshot: Vec<RelayMessage> = if reg.role.sinks() {
            self.retained
                .values()
                .filter(|m| reg.namespaces.contains(&m.namespace))
                .filter(|m| self.config.echo || m.emitter_id != reg.client_id)
                .cloned()
                .collect()
        } else {
            Vec::new()
        };
        snapshot.sort_by(|a, b| {
            (&a.namespace, &a.emitter_id, a.seq).cmp(&(&b.namespace, &b.emitter_id, b.seq))
        });
        self.sessions.insert(reg.client_id.clone(), reg);
        Ok(Registered { next_seq, snapshot })
    }

    pub fn unregister(&mut self, client: &str) -> bool {
        self.sessions.remove(client).is_some()
    }

    pub fn inject_latency(&mut self, namespace: &str, delay: Millis, jitter: Millis) -> Result<(), HubError> {
        if delay < 0 || jitter < 0 {
            return Err(HubError::InvalidLatency);
        }
        self.latency
            .insert(namespace.to_owned(), LatencySpec { delay, jitter });
        Ok(())
    }

    pub fn latency(&self, namespace: &str) -> LatencySpec {
        self.latency.get(namespace).copied().unwrap_or_default()
    }

    /// Accepts a message for delivery once its injected latency elapses.
    /// Returns the time it becomes deliverable.
    pub fn publish(&mut self, client: &str, message: RelayMessage, now: Millis) -> Result<Millis, HubError> {
        let reg = self
            .sessions
            .get(client)
            .ok_or_else(|| HubError::NotRegistered(client.to_owned()))?;
        if !reg.role.emits() {
            return Err(HubError::NotEmitter {
                client: client.to_owned(),
            });
        }
        if !reg.namespaces.contains(&message.namespace) {
            return Err(HubError::UnknownNamespace {
                client: client.to_owned(),
                namespace: message.namespace,
            });
        }
        if message.emitter_id != client {
            return Err(HubError::EmitterMismatch {
                client: client.to_owned(),
                found: message.emitter_id,
            });
        }
        let key = (message.namespace.clone(), client.to_owned());
        let expected = self.last_seq.get(&key).copied().unwrap_or(0) + 1;
        if message.seq != expected {
            return Err(HubError::SequenceFault {
                namespace: message.namespace,
                expected,
                got: message.seq,
            });
        }
        self.last_seq.insert(key.clone(), message.seq);

        let spec = self.latency(&message.namespace);
        let jitter = if spec.jitter > 0 {
            self.rng.random_range(-spec.jitter..=spec.jitter)
        } else {
            0
        };
        let floor = self.last_due.get(&key).copied().unwrap_or(Millis::MIN);
        let due = (now + spec.delay + jitter).max(now).max(floor);
        self.last_due.insert(key, due);

        self.order += 1;
        self.stats.accepted += 1;
        self.stats.latencies.push(due - message.sent_at);
        self.pending.push(Reverse(Pending {
            due,
            order: self.order,
            message,
            origin: client.to_owned(),
        }));
        Ok(due)
    }

    /// Earliest pending delivery time.
    pub fn next_due(&self) -> Option<Millis> {
        self.pending.peek().map(|Reverse(p)| p.due)
    }

    /// Fans out every message due by `now` to the sinks connected at that
    /// moment, in (due, acceptance) order.
    pub fn poll(&mut self, now: Millis) -> Vec<Delivery> {
        let mut out = Vec::new();
        while self.pending.peek().is_some_and(|Reverse(p)| p.due <= now) {
            let Reverse(p) = self.pending.pop().expect("peeked");
            for (id, reg) in &self.sessions {
                if !reg.role.sinks() || !reg.namespaces.contains(&p.message.namespace) {
                    continue;
                }
                if !self.config.echo && *id == p.origin {
                    continue;
                }
                out.push(Delivery {
                    to: id.clone(),
                    message: p.message.clone(),
                    delivered_at: p.due,
                });
                self.stats.delivered += 1;
            }
            if self.config.retention {
                let m = &p.message;
                self.retained.insert(
                    (m.namespace.clone(), m.emitter_id.clone(), m.msg_type),
                    p.message,
                );
            }
        }
        out
    }
}
