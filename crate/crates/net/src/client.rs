use std::collections::BTreeMap;

use proxysync_core::model::Millis;
use proxysync_core::relay::codec::{self, CodecError, FrameDecoder};
use proxysync_core::relay::{
    ClientFrame, ClientRegistration, MsgType, Payload, RelayMessage, ServerFrame,
};
use serde_json::Value;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::{TcpStream, ToSocketAddrs};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("relay refused registration: {0}")]
    Refused(String),
    #[error("relay closed the connection")]
    Closed,
    #[error("unexpected frame during registration: {0:?}")]
    Unexpected(Box<ServerFrame>),
}

/// Publishing half. Sequence numbers are assigned per namespace.
pub struct RelaySender {
    client_id: String,
    write: OwnedWriteHalf,
    next_seq: BTreeMap<String, u64>,
}

impl RelaySender {
    pub fn client_id(&self) -> &str {
        &self.client_id
    }

    /// Publishes a raw payload and returns its sequence number.
    pub async fn publish(
        &mut self,
        namespace: &str,
        msg_type: MsgType,
        payload: Value,
        sent_at: Millis,
    ) -> Result<u64, ClientError> {
        let seq = self.next_seq.get(namespace).copied().unwrap_or(1);
        let message = RelayMessage {
            namespace: namespace.to_owned(),
            emitter_id: self.client_id.clone(),
            msg_type,
            seq,
            sent_at,
            payload,
        };
        self.send(&ClientFrame::Publish { message }).await?;
        self.next_seq.insert(namespace.to_owned(), seq + 1);
        Ok(seq)
    }

    pub async fn publish_payload(
        &mut self,
        namespace: &str,
        payload: &Payload,
        sent_at: Millis,
    ) -> Result<u64, ClientError> {
        self.publish(namespace, payload.msg_type(), payload.to_value(), sent_at)
            .await
    }

    /// Resumes numbering after a `Fault`.
    pub fn resync(&mut self, namespace: &str, expected_seq: u64) {
        self.next_seq.insert(namespace.to_owned(), expected_seq);
    }

    pub async fn send(&mut self, frame: &ClientFrame) -> Result<(), ClientError> {
        let bytes = codec::encode(frame)?;
        self.write.write_all(&bytes).await?;
        Ok(())
    }

    pub async fn unregister(mut self) -> Result<(), ClientError> {
        self.send(&ClientFrame::Unregister).await?;
        self.write.shutdown().await?;
        Ok(())
    }
}

/// Receiving half.
pub struct RelayReceiver {
    read: OwnedReadHalf,
    decoder: FrameDecoder,
    buf: Vec<u8>,
}

impl RelayReceiver {
    /// Next frame from the relay, or `None` once the connection closes.
    pub async fn next(&mut self) -> Result<Option<ServerFrame>, ClientError> {
        loop {
            if let Some(f) = self.decoder.next_frame()? {
                return Ok(Some(f));
            }
            let n = self.read.read(&mut self.buf).await?;
            if n == 0 {
                return Ok(None);
            }
            self.decoder.extend(&self.buf[..n]);
        }
    }
}

/// A registered relay client over TCP.
pub struct RelayClient {
    pub sender: RelaySender,
    pub receiver: RelayReceiver,
    /// Retained messages received at registration (empty for emitters).
    pub snapshot: Vec<RelayMessage>,
}

impl RelayClient {
    /// Connects, registers and waits for the registration answer and, for
    /// sinks, the snapshot.
    pub async fn connect(addr: impl ToSocketAddrs, registration: ClientRegistration) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr).await?;
        stream.set_nodelay(true)?;
        let (read, write) = stream.into_split();
        let sinks = registration.role.sinks();
        let client_id = registration.client_id.clone();
        let mut sender = RelaySender {
            client_id,
            write,
            next_seq: BTreeMap::new(),
        };
        let mut receiver = RelayReceiver {
            read,
            decoder: FrameDecoder::new(),
            buf: vec![0; 64 * 1024],
        };
        sender.send(&ClientFrame::Register { registration }).await?;
        match receiver.next().await?.ok_or(ClientError::Closed)? {
            ServerFrame::Registered { next_seq, .. } => sender.next_seq = next_seq,
            ServerFrame::Rejected { reason } => return Err(ClientError::Refused(reason)),
            other => return Err(ClientError::Unexpected(Box::new(other))),
        }
        let mut snapshot = Vec::new();
        if sinks {
            match receiver.next().await?.ok_or(ClientError::Closed)? {
                ServerFrame::Snapshot { messages } => snapshot = messages,
                other => return Err(ClientError::Unexpected(Box::new(other))),
            }
        }
        Ok(Self {
            sender,
            receiver,
            snapshot,
        })
    }

    pub fn split(self) -> (RelaySender, RelayReceiver) {
        (self.sender, self.receiver)
    }
}
