use serde::{Deserialize, Serialize};

use crate::pubsub::{Client, PubSubError};

/// Per-frame stats message.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub frame: usize,
    #[serde(rename = "count")]
    pub entity_count: usize,
    pub inference_ms: f64,
    /// Mean duration of every track seen so far, open or closed.
    pub avg_duration_s: f64,
}

impl FrameStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frame stats serialize")
    }
}

/// Best-effort telemetry output. `publish` never blocks the caller for
/// long and reports failure instead of raising it.
pub trait TelemetrySink {
    fn publish(&mut self, topic: &str, payload: &str) -> bool;

    /// Messages that could not be delivered.
    fn drops(&self) -> u64;
}

/// Discards everything, counting messages.
#[derive(Debug, Default)]
pub struct NullSink {
    pub published: u64,
}

impl TelemetrySink for NullSink {
    fn publish(&mut self, _topic: &str, _payload: &str) -> bool {
        self.published += 1;
        true
    }

    fn drops(&self) -> u64 {
        0
    }
}

/// Keeps every message in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub messages: Vec<(String, String)>,
}

impl MemorySink {
    pub fn on_topic<'a>(&'a self, topic: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.messages.iter().filter(move |(t, _)| t == topic).map(|(_, p)| p.as_str())
    }
}

impl TelemetrySink for MemorySink {
    fn publish(&mut self, topic: &str, payload: &str) -> bool {
        self.messages.push((topic.to_string(), payload.to_string()));
        true
    }

    fn drops(&self) -> u64 {
        0
    }
}

/// Publishes to a broker. After a disconnect every further message is
/// counted as dropped and the pipeline carries on.
pub struct BrokerSink {
    client: Option<Client>,
    drops: u64,
}

impl BrokerSink {
    pub fn connect(addr: &str) -> Result<Self, PubSubError> {
        Ok(Self {
            client: Some(Client::connect(addr)?),
            drops: 0,
        })
    }

    pub fn is_connected(&self) -> bool {
        self.client.is_some()
    }
}

impl TelemetrySink for BrokerSink {
    fn publish(&mut self, topic: &str, payload: &str) -> bool {
        let Some(client) = &self.client else {
            self.drops += 1;
            return false;
        };
        match client.publish(topic, payload) {
            Ok(()) => true,
            Err(e) => {
                self.drops += 1;
                if matches!(e, PubSubError::Disconnected | PubSubError::Io(_) | PubSubError::Timeout) {
                    log::error!("telemetry broker lost: {e}");
                    self.client = None;
                } else {
                    log::debug!("telemetry message rejected: {e}");
                }
                false
            }
        }
    }

    fn drops(&self) -> u64 {
        self.drops
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pubsub::start_broker;
    use std::time::Duration;

    #[test]
    fn stats_json_uses_wire_names() {
        let s = FrameStats {
            frame: 3,
            entity_count: 2,
            inference_ms: 1.5,
            avg_duration_s: 0.25,
        };
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v, serde_json::json!({"frame": 3, "count": 2, "inference_ms": 1.5, "avg_duration_s": 0.25}));
    }

    #[test]
    fn broker_sink_counts_drops_after_shutdown() {
        let broker = start_broker("127.0.0.1:0", 16).unwrap();
        let addr = broker.local_addr().to_string();
        let sub = Client::connect(&addr).unwrap();
        sub.subscribe("t").unwrap();
        let mut sink = BrokerSink::connect(&addr).unwrap();
        assert!(sink.publish("t", "one"));
        assert_eq!(sub.recv_timeout(Duration::from_secs(5)).unwrap().payload, "one");
        drop(sub);
        broker.shutdown();
        let mut sent = 0;
        for _ in 0..5 {
            sent += usize::from(sink.publish("t", "x"));
        }
        assert_eq!(sent, 0);
        assert_eq!(sink.drops(), 5);
        assert!(!sink.is_connected());
    }
}
