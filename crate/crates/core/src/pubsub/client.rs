use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::Mutex;
use std::thread::JoinHandle;
use std::time::Duration;

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError};

use super::{validate_payload, validate_topic, BrokerFrame, ClientFrame, Message, PubSubError, Result};

const ACK_TIMEOUT: Duration = Duration::from_secs(10);

/// Connection to a broker. Requests are serialized internally; messages
/// arrive on a separate queue read with [`Client::recv_timeout`].
pub struct Client {
    writer: Mutex<TcpStream>,
    acks: Receiver<BrokerFrame>,
    messages: Receiver<Message>,
    reader: Option<JoinHandle<()>>,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr).map_err(|e| PubSubError::Io(e.to_string()))?;
        let _ = stream.set_nodelay(true);
        let read_half = stream.try_clone().map_err(|e| PubSubError::Io(e.to_string()))?;
        let (ack_tx, acks) = unbounded();
        let (msg_tx, messages) = unbounded();
        let reader = std::thread::spawn(move || {
            for line in BufReader::new(read_half).lines() {
                let Ok(line) = line else { break };
                match BrokerFrame::parse(&line) {
                    Ok(BrokerFrame::Msg { topic, payload }) => {
                        let _ = msg_tx.send(Message { topic, payload });
                    }
                    Ok(other) => {
                        let _ = ack_tx.send(other);
                    }
                    Err(e) => log::warn!("ignoring broker frame: {e}"),
                }
            }
        });
        Ok(Self {
            writer: Mutex::new(stream),
            acks,
            messages,
            reader: Some(reader),
        })
    }

    fn request(&self, frame: ClientFrame) -> Result<BrokerFrame> {
        let mut w = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        w.write_all(frame.encode().as_bytes()).map_err(|e| PubSubError::Io(e.to_string()))?;
        match self.acks.recv_timeout(ACK_TIMEOUT) {
            Ok(BrokerFrame::Err(reason)) => Err(PubSubError::Rejected(reason)),
            Ok(f) => Ok(f),
            Err(RecvTimeoutError::Timeout) => Err(PubSubError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(PubSubError::Disconnected),
        }
    }

    /// Returns once the broker has registered the subscription.
    pub fn subscribe(&self, topic: &str) -> Result<()> {
        validate_topic(topic)?;
        self.expect_ok(ClientFrame::Sub(topic.to_string()))
    }

    /// Returns once the broker has routed the message.
    pub fn publish(&self, topic: &str, payload: &str) -> Result<()> {
        validate_topic(topic)?;
        validate_payload(payload)?;
        self.expect_ok(ClientFrame::Pub {
            topic: topic.to_string(),
            payload: payload.to_string(),
        })
    }

    pub fn ping(&self) -> Result<()> {
        match self.request(ClientFrame::Ping)? {
            BrokerFrame::Pong => Ok(()),
            other => Err(PubSubError::Protocol(format!("expected PONG, got {other:?}"))),
        }
    }

    fn expect_ok(&self, frame: ClientFrame) -> Result<()> {
        match self.request(frame)? {
            BrokerFrame::Ok => Ok(()),
            other => Err(PubSubError::Protocol(format!("expected OK, got {other:?}"))),
        }
    }

    pub fn recv_timeout(&self, timeout: Duration) -> Option<Message> {
        self.messages.recv_timeout(timeout).ok()
    }

    pub fn try_recv(&self) -> Option<Message> {
        self.messages.try_recv().ok()
    }
}

impl Drop for Client {
    fn drop(&mut self) {
        let w = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let _ = w.shutdown(Shutdown::Both);
        drop(w);
        if let Some(r) = self.reader.take() {
            let _ = r.join();
        }
    }
}
