//! Topic-based publish/subscribe over a newline-framed TCP text protocol.
//!
//! ```text
//! client -> broker   SUB <topic> | PUB <topic> <payload> | PING
//! broker -> client   OK | ERR <reason> | MSG <topic> <payload> | PONG
//! ```
//!
//! Topics match by exact bytes. Nothing is retained. Every client has a
//! bounded outbound queue; when it is full the oldest undelivered message
//! is dropped and counted.

mod broker;
mod client;
mod protocol;
mod state;

pub use broker::{start_broker, BrokerHandle, BrokerStats, DEFAULT_BIND, DEFAULT_QUEUE_CAPACITY};
pub use client::Client;
pub use protocol::{BrokerFrame, ClientFrame};
pub use state::{BrokerState, ClientId};

pub const MAX_TOPIC_BYTES: usize = 255;
pub const MAX_PAYLOAD_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PubSubError {
    #[error("malformed topic {0:?}")]
    InvalidTopic(String),
    #[error("payload of {0} bytes exceeds the 64 KiB limit")]
    PayloadTooLarge(usize),
    #[error("payload contains a newline")]
    PayloadNewline,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("broker replied ERR {0}")]
    Rejected(String),
    #[error("cannot bind {addr}: {message}")]
    Bind { addr: String, message: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("connection closed")]
    Disconnected,
    #[error("timed out waiting for the broker")]
    Timeout,
}

pub type Result<T> = std::result::Result<T, PubSubError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub topic: String,
    pub payload: String,
}

/// 1 to 255 bytes, no whitespace.
pub fn validate_topic(topic: &str) -> Result<()> {
    if topic.is_empty() || topic.len() > MAX_TOPIC_BYTES || topic.chars().any(char::is_whitespace) {
        return Err(PubSubError::InvalidTopic(topic.chars().take(40).collect()));
    }
    Ok(())
}

pub fn validate_payload(payload: &str) -> Result<()> {
    if payload.len() > MAX_PAYLOAD_BYTES {
        return Err(PubSubError::PayloadTooLarge(payload.len()));
    }
    if payload.contains(['\n', '\r']) {
        return Err(PubSubError::PayloadNewline);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topic_rules() {
        assert!(validate_topic("debris/stats").is_ok());
        assert!(validate_topic("").is_err());
        assert!(validate_topic("a b").is_err());
        assert!(validate_topic(&"x".repeat(255)).is_ok());
        assert!(validate_topic(&"x".repeat(256)).is_err());
    }

    #[test]
    fn payload_rules() {
        assert!(validate_payload("{\"frame\": 1}").is_ok());
        assert_eq!(validate_payload("a\nb"), Err(PubSubError::PayloadNewline));
        assert!(validate_payload(&"x".repeat(MAX_PAYLOAD_BYTES)).is_ok());
        assert!(validate_payload(&"x".repeat(MAX_PAYLOAD_BYTES + 1)).is_err());
    }
}
