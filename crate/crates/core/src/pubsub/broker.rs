use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;

use serde::Serialize;

use super::{BrokerFrame, BrokerState, ClientFrame, ClientId, PubSubError, Result};

pub const DEFAULT_BIND: &str = "127.0.0.1:1883";
pub const DEFAULT_QUEUE_CAPACITY: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BrokerStats {
    pub clients: usize,
    pub subscriptions: usize,
    pub messages_routed: u64,
    pub drops: u64,
}

struct Inner {
    state: BrokerState,
    /// Wakes the writer thread of each client.
    signals: HashMap<ClientId, Arc<Condvar>>,
    streams: HashMap<ClientId, TcpStream>,
    stopping: bool,
}

struct Shared {
    inner: Mutex<Inner>,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }
}

/// A running broker. Dropping the handle shuts it down.
pub struct BrokerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    stop: Arc<AtomicBool>,
    acceptor: Option<JoinHandle<Vec<JoinHandle<()>>>>,
}

/// Binds and serves in background threads, one reader and one writer per
/// connection.
pub fn start_broker(bind_address: &str, queue_capacity: usize) -> Result<BrokerHandle> {
    let listener = TcpListener::bind(bind_address).map_err(|e| PubSubError::Bind {
        addr: bind_address.to_string(),
        message: e.to_string(),
    })?;
    let addr = listener.local_addr().map_err(|e| PubSubError::Io(e.to_string()))?;
    let shared = Arc::new(Shared {
        inner: Mutex::new(Inner {
            state: BrokerState::new(queue_capacity),
            signals: HashMap::new(),
            streams: HashMap::new(),
            stopping: false,
        }),
    });
    let stop = Arc::new(AtomicBool::new(false));
    let acceptor = {
        let shared = Arc::clone(&shared);
        let stop = Arc::clone(&stop);
        std::thread::Builder::new()
            .name("broker-accept".into())
            .spawn(move || accept_loop(listener, shared, stop))
            .map_err(|e| PubSubError::Io(e.to_string()))?
    };
    log::info!("broker listening on {addr}");
    Ok(BrokerHandle {
        addr,
        shared,
        stop,
        acceptor: Some(acceptor),
    })
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, stop: Arc<AtomicBool>) -> Vec<JoinHandle<()>> {
    let mut threads = Vec::new();
    for conn in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let stream = match conn {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let _ = stream.set_nodelay(true);
        let (read_half, write_half, keep) = match (stream.try_clone(), stream.try_clone()) {
            (Ok(r), Ok(k)) => (r, stream, k),
            _ => continue,
        };
        let signal = Arc::new(Condvar::new());
        let id = {
            let mut g = shared.lock();
            let id = g.state.connect();
            g.signals.insert(id, Arc::clone(&signal));
            g.streams.insert(id, keep);
            id
        };
        log::debug!("client {id} connected");
        let s1 = Arc::clone(&shared);
        let s2 = Arc::clone(&shared);
        threads.push(std::thread::spawn(move || serve_reads(id, read_half, &s1)));
        threads.push(std::thread::spawn(move || serve_writes(id, write_half, &s2, &signal)));
        threads.retain(|t| !t.is_finished());
    }
    threads
}

fn serve_reads(id: ClientId, stream: TcpStream, shared: &Shared) {
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let Ok(line) = line else { break };
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let mut g = shared.lock();
        let mut wake = vec![id];
        match ClientFrame::parse(line) {
            Ok(ClientFrame::Ping) => g.state.reply(id, BrokerFrame::Pong),
            Ok(ClientFrame::Sub(topic)) => {
                g.state.subscribe(id, &topic);
                g.state.reply(id, BrokerFrame::Ok);
            }
            Ok(ClientFrame::Pub { topic, payload }) => {
                wake.extend(g.state.route(&topic, &payload));
                g.state.reply(id, BrokerFrame::Ok);
            }
            Err(e) => g.state.reply(id, BrokerFrame::Err(e.to_string())),
        }
        for w in wake {
            if let Some(c) = g.signals.get(&w) {
                c.notify_one();
            }
        }
    }
    let mut g = shared.lock();
    g.state.disconnect(id);
    g.streams.remove(&id);
    if let Some(c) = g.signals.remove(&id) {
        c.notify_one();
    }
    log::debug!("client {id} disconnected");
}

fn serve_writes(id: ClientId, stream: TcpStream, shared: &Shared, signal: &Condvar) {
    let mut out = BufWriter::new(stream);
    let mut batch = String::new();
    loop {
        {
            let mut g = shared.lock();
            while g.state.queued(id) == 0 && g.state.is_connected(id) && !g.stopping {
                g = signal.wait(g).unwrap_or_else(|p| p.into_inner());
            }
            while let Some(f) = g.state.pop(id) {
                batch.push_str(&f.encode());
            }
            if batch.is_empty() {
                // Disconnected or stopping with nothing left to send.
                break;
            }
        }
        if out.write_all(batch.as_bytes()).and_then(|_| out.flush()).is_err() {
            break;
        }
        batch.clear();
    }
    let _ = out.get_ref().shutdown(Shutdown::Write);
}

impl BrokerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stats(&self) -> BrokerStats {
        let g = self.shared.lock();
        BrokerStats {
            clients: g.state.client_count(),
            subscriptions: g.state.subscription_count(),
            messages_routed: g.state.routed(),
            drops: g.state.total_drops(),
        }
    }

    /// Stops accepting, flushes every queue to its client, then closes all
    /// connections and joins the worker threads.
    pub fn shutdown(mut self) -> BrokerStats {
        self.stop_and_join();
        self.stats()
    }

    fn stop_and_join(&mut self) {
        let Some(acceptor) = self.acceptor.take() else { return };
        self.stop.store(true, Ordering::SeqCst);
        // Unblock accept().
        let _ = TcpStream::connect(self.addr);
        let threads = acceptor.join().unwrap_or_default();
        {
            let mut g = self.shared.lock();
            g.stopping = true;
            for c in g.signals.values() {
                c.notify_one();
            }
            for s in g.streams.values() {
                let _ = s.shutdown(Shutdown::Read);
            }
        }
        for t in threads {
            let _ = t.join();
        }
    }
}

impl Drop for BrokerHandle {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}
