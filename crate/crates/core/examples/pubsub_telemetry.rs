//! A broker on an ephemeral port, two subscribers on different topics and
//! one publisher.

use std::time::Duration;

use debris_edge::pubsub::{start_broker, Client};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let broker = start_broker("127.0.0.1:0", 64)?;
    let addr = broker.local_addr();
    println!("broker on {addr}");

    let stats_sub = Client::connect(addr)?;
    stats_sub.subscribe("debris/stats")?;
    let det_sub = Client::connect(addr)?;
    det_sub.subscribe("debris/detections")?;

    let publisher = Client::connect(addr)?;
    for frame in 0..3 {
        publisher.publish("debris/stats", &format!(r#"{{"frame":{frame},"count":1}}"#))?;
        publisher.publish("debris/detections", &format!(r#"{{"frame":{frame},"x":10,"y":12,"w":8,"h":8}}"#))?;
    }
    for (name, client) in [("stats", &stats_sub), ("detections", &det_sub)] {
        while let Some(msg) = client.recv_timeout(Duration::from_millis(500)) {
            println!("{name} <- {} {}", msg.topic, msg.payload);
        }
    }
    let stats = broker.shutdown();
    println!("routed {} messages, {} drops", stats.messages_routed, stats.drops);
    Ok(())
}
