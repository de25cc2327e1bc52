use proxysync_core::relay::{ClientFrame, ServerFrame};

use crate::relay::{Relay, Session};

/// Transport-independent protocol state of one client connection.
pub struct Connection {
    relay: Relay,
    session: Option<Session>,
    closed: bool,
}

impl Connection {
    pub fn new(relay: Relay) -> Self {
        Self {
            relay,
            session: None,
            closed: false,
        }
    }

    pub fn client_id(&self) -> Option<&str> {
        self.session.as_ref().map(|s| s.client_id())
    }

    /// True once the client asked to leave or broke the protocol.
    pub fn closed(&self) -> bool {
        self.closed
    }

    /// Handles one client frame and returns the immediate replies.
    /// Registration replies arrive through [`Connection::next_outbound`].
    pub fn handle(&mut self, frame: ClientFrame) -> Vec<ServerFrame> {
        match frame {
            ClientFrame::Register { registration } => {
                if self.session.is_some() {
                    return vec![ServerFrame::Rejected {
                        reason: "connection is already registered".into(),
                    }];
                }
                match self.relay.register(registration) {
                    Ok(s) => {
                        self.session = Some(s);
                        vec![]
                    }
                    Err(e) => vec![e.into()],
                }
            }
            ClientFrame::Publish { message } => match &self.session {
                Some(s) => vec![s.publish(message)],
                None => vec![ServerFrame::Rejected {
                    reason: "register before publishing".into(),
                }],
            },
            ClientFrame::Unregister => {
                self.session = None;
                self.closed = true;
                vec![]
            }
        }
    }

    /// Rejects an undecodable frame and marks the connection for closing.
    pub fn malformed(&mut self, reason: impl std::fmt::Display) -> ServerFrame {
        self.session = None;
        self.closed = true;
        ServerFrame::Rejected {
            reason: format!("protocol error: {reason}"),
        }
    }

    /// Next frame queued for this client. Pending forever before registration.
    pub async fn next_outbound(&mut self) -> Option<ServerFrame> {
        match &mut self.session {
            Some(s) => s.recv().await,
            None => std::future::pending().await,
        }
    }
}
