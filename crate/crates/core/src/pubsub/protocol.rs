use super::{validate_payload, validate_topic, PubSubError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientFrame {
    Sub(String),
    Pub { topic: String, payload: String },
    Ping,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BrokerFrame {
    Ok,
    Err(String),
    Msg { topic: String, payload: String },
    Pong,
}

/// Splits `"<topic> <payload>"`; the payload may be empty or contain spaces.
fn topic_and_payload(rest: &str) -> Result<(String, String)> {
    let (topic, payload) = rest.split_once(' ').unwrap_or((rest, ""));
    validate_topic(topic)?;
    validate_payload(payload)?;
    Ok((topic.to_string(), payload.to_string()))
}

impl ClientFrame {
    /// Parses one line without its terminator.
    pub fn parse(line: &str) -> Result<Self> {
        if line == "PING" {
            return Ok(ClientFrame::Ping);
        }
        if let Some(topic) = line.strip_prefix("SUB ") {
            validate_topic(topic)?;
            return Ok(ClientFrame::Sub(topic.to_string()));
        }
        if let Some(rest) = line.strip_prefix("PUB ") {
            let (topic, payload) = topic_and_payload(rest)?;
            return Ok(ClientFrame::Pub { topic, payload });
        }
        Err(PubSubError::Protocol(format!(
            "unknown command {:?}",
            line.split(' ').next().unwrap_or("")
        )))
    }

    pub fn encode(&self) -> String {
        match self {
            ClientFrame::Sub(t) => format!("SUB {t}\n"),
            ClientFrame::Pub { topic, payload } => format!("PUB {topic} {payload}\n"),
            ClientFrame::Ping => "PING\n".into(),
        }
    }
}

impl BrokerFrame {
    pub fn parse(line: &str) -> Result<Self> {
        match line {
            "OK" => return Ok(BrokerFrame::Ok),
            "PONG" => return Ok(BrokerFrame::Pong),
            _ => {}
        }
        if let Some(reason) = line.strip_prefix("ERR ") {
            return Ok(BrokerFrame::Err(reason.to_string()));
        }
        if let Some(rest) = line.strip_prefix("MSG ") {
            let (topic, payload) = topic_and_payload(rest)?;
            return Ok(BrokerFrame::Msg { topic, payload });
        }
        Err(PubSubError::Protocol(format!("unexpected broker frame {:?}", line)))
    }

    pub fn encode(&self) -> String {
        match self {
            BrokerFrame::Ok => "OK\n".into(),
            BrokerFrame::Err(r) => format!("ERR {}\n", r.replace(['\n', '\r'], " ")),
            BrokerFrame::Msg { topic, payload } => format!("MSG {topic} {payload}\n"),
            BrokerFrame::Pong => "PONG\n".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_frames_round_trip() {
        for f in [
            ClientFrame::Sub("a/b".into()),
            ClientFrame::Pub {
                topic: "a/b".into(),
                payload: "{\"x\": 1, \"y\": 2}".into(),
            },
            ClientFrame::Pub {
                topic: "t".into(),
                payload: String::new(),
            },
            ClientFrame::Ping,
        ] {
            let line = f.encode();
            assert!(line.ends_with('\n'));
            assert_eq!(ClientFrame::parse(line.trim_end_matches('\n')).unwrap(), f);
        }
    }

    #[test]
    fn broker_frames_round_trip() {
        for f in [
            BrokerFrame::Ok,
            BrokerFrame::Pong,
            BrokerFrame::Err("bad topic".into()),
            BrokerFrame::Msg {
                topic: "x".into(),
                payload: "hello world".into(),
            },
        ] {
            assert_eq!(BrokerFrame::parse(f.encode().trim_end()).unwrap(), f);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(ClientFrame::parse("HELLO").is_err());
        assert!(ClientFrame::parse("SUB ").is_err());
        assert!(ClientFrame::parse("SUB a b").is_err());
        assert!(BrokerFrame::parse("MAYBE").is_err());
    }
}
