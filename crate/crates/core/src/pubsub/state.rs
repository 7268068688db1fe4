use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::BrokerFrame;

pub type ClientId = u64;

#[derive(Debug, Default)]
struct Outbound {
    frames: VecDeque<BrokerFrame>,
    /// Number of `Msg` frames currently queued.
    messages: usize,
    drops: u64,
}

/// Routing table and per-client outbound queues, without any I/O.
///
/// Message frames are bounded by `capacity` per client and the oldest one
/// is dropped on overflow. Replies to a client's own requests are never
/// dropped.
#[derive(Debug)]
pub struct BrokerState {
    capacity: usize,
    next_id: ClientId,
    subscriptions: BTreeMap<String, BTreeSet<ClientId>>,
    clients: BTreeMap<ClientId, Outbound>,
    routed: u64,
}

impl BrokerState {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            next_id: 0,
            subscriptions: BTreeMap::new(),
            clients: BTreeMap::new(),
            routed: 0,
        }
    }

    pub fn connect(&mut self) -> ClientId {
        let id = self.next_id;
        self.next_id += 1;
        self.clients.insert(id, Outbound::default());
        id
    }

    /// Forgets the client and every subscription it held.
    pub fn disconnect(&mut self, id: ClientId) {
        self.clients.remove(&id);
        self.subscriptions.retain(|_, subs| {
            subs.remove(&id);
            !subs.is_empty()
        });
    }

    pub fn is_connected(&self, id: ClientId) -> bool {
        self.clients.contains_key(&id)
    }

    /// Idempotent. Returns false for unknown clients.
    pub fn subscribe(&mut self, id: ClientId, topic: &str) -> bool {
        if !self.clients.contains_key(&id) {
            return false;
        }
        self.subscriptions.entry(topic.to_string()).or_default().insert(id);
        true
    }

    /// Queues the message for every exact-topic subscriber and returns the
    /// delivery set.
    pub fn route(&mut self, topic: &str, payload: &str) -> Vec<ClientId> {
        let targets: Vec<ClientId> = self
            .subscriptions
            .get(topic)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        for id in &targets {
            let q = self.clients.get_mut(id).expect("subscribers are connected");
            if q.messages >= self.capacity {
                let oldest = q
                    .frames
                    .iter()
                    .position(|f| matches!(f, BrokerFrame::Msg { .. }))
                    .expect("message count is positive");
                q.frames.remove(oldest);
                q.messages -= 1;
                q.drops += 1;
            }
            q.frames.push_back(BrokerFrame::Msg {
                topic: topic.to_string(),
                payload: payload.to_string(),
            });
            q.messages += 1;
        }
        self.routed += 1;
        targets
    }

    pub fn reply(&mut self, id: ClientId, frame: BrokerFrame) {
        if let Some(q) = self.clients.get_mut(&id) {
            q.frames.push_back(frame);
        }
    }

    pub fn pop(&mut self, id: ClientId) -> Option<BrokerFrame> {
        let q = self.clients.get_mut(&id)?;
        let f = q.frames.pop_front()?;
        if matches!(f, BrokerFrame::Msg { .. }) {
            q.messages -= 1;
        }
        Some(f)
    }

    pub fn queued(&self, id: ClientId) -> usize {
        self.clients.get(&id).map_or(0, |q| q.frames.len())
    }

    pub fn drops(&self, id: ClientId) -> u64 {
        self.clients.get(&id).map_or(0, |q| q.drops)
    }

    pub fn total_drops(&self) -> u64 {
        self.clients.values().map(|q| q.drops).sum()
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    /// Number of (topic, client) subscription pairs.
    pub fn subscription_count(&self) -> usize {
        self.subscriptions.values().map(BTreeSet::len).sum()
    }

    pub fn routed(&self) -> u64 {
        self.routed
    }
}
