use proxysync_core::relay::codec::{self, FrameDecoder};
use proxysync_core::relay::{ClientFrame, ServerFrame};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};

use crate::connection::Connection;
use crate::relay::Relay;

/// Accepts relay clients until the listener fails.
pub async fn serve(listener: TcpListener, relay: Relay) -> std::io::Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        let relay = relay.clone();
        tokio::spawn(async move {
            if let Err(e) = serve_connection(stream, relay).await {
                tracing::debug!(%peer, error = %e, "connection ended");
            }
        });
    }
}

async fn write_frame(stream: &mut TcpStream, frame: &ServerFrame) -> std::io::Result<()> {
    let bytes = codec::encode(frame).map_err(std::io::Error::other)?;
    stream.write_all(&bytes).await
}

/// Runs the relay protocol over one length-prefixed stream.
pub async fn serve_connection(mut stream: TcpStream, relay: Relay) -> std::io::Result<()> {
    stream.set_nodelay(true)?;
    let mut conn = Connection::new(relay);
    let mut decoder = FrameDecoder::new();
    let mut buf = vec![0u8; 64 * 1024];
    while !conn.closed() {
        tokio::select! {
            n = stream.read(&mut buf) => {
                let n = n?;
                if n == 0 {
                    break;
                }
                decoder.extend(&buf[..n]);
                loop {
                    match decoder.next_frame::<ClientFrame>() {
                        Ok(Some(frame)) => {
                            for reply in conn.handle(frame) {
                                write_frame(&mut stream, &reply).await?;
                            }
                        }
                        Ok(None) => break,
                        Err(e) => {
                            let reply = conn.malformed(e);
                            write_frame(&mut stream, &reply).await?;
                            break;
                        }
                    }
                    if conn.closed() {
                        break;
                    }
                }
            }
            Some(frame) = conn.next_outbound() => {
                write_frame(&mut stream, &frame).await?;
            }
        }
    }
    stream.shutdown().await.ok();
    Ok(())
}
