use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::SimTime;

pub const LOG_VERSION: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogError {
    #[error("bad log header: {0}")]
    BadHeader(String),
    #[error("line {line}: expected seq {expected}, found {found}")]
    Gap {
        line: usize,
        expected: u64,
        found: u64,
    },
    #[error("line {line}: time {t} precedes the previous event at {previous}")]
    NotMonotonic {
        line: usize,
        t: SimTime,
        previous: SimTime,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// One recorded state transition. `body` serializes to a `kind` tag plus a
/// `payload` object.
#[derive(Clone, Debug, PartialEq)]
pub struct Event<E> {
    pub seq: u64,
    pub t: SimTime,
    pub body: E,
}

/// Append-only, seed-stamped event record serialized as JSON Lines.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog<E> {
    seed: u64,
    events: Vec<Event<E>>,
}

impl<E: Serialize + DeserializeOwned> EventLog<E> {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            events: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn events(&self) -> &[Event<E>] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_time(&self) -> SimTime {
        self.events.last().map_or(SimTime::ZERO, |e| e.t)
    }

    /// Appends an event. Panics if `t` precedes the last event.
    pub fn append(&mut self, t: SimTime, body: E) -> &Event<E> {
        assert!(
            t >= self.last_time(),
            "event log time must not go backwards"
        );
        let seq = self.events.len() as u64;
        self.events.push(Event { seq, t, body });
        self.events.last().expect("just pushed")
    }

    pub fn extend(&mut self, events: Vec<Event<E>>) {
        for e in events {
            assert_eq!(
                e.seq,
                self.events.len() as u64,
                "appended events must stay dense"
            );
            assert!(
                e.t >= self.last_time(),
                "event log time must not go backwards"
            );
            self.events.push(e);
        }
    }

    /// Drops every event with `seq >= len`.
    pub(crate) fn truncate(&mut self, len: usize) {
        self.events.truncate(len);
    }

    pub fn header_line(&self) -> String {
        format!("{{\"seed\":{},\"version\":{}}}", self.seed, LOG_VERSION)
    }

    pub fn event_line(event: &Event<E>) -> String {
        let tagged = serde_json::to_value(&event.body).expect("event bodies serialize");
        let kind = tagged.get("kind").expect("event bodies carry a kind tag");
        let payload = tagged.get("payload").cloned().unwrap_or_else(|| json!({}));
        format!(
            "{{\"seq\":{},\"t\":{},\"kind\":{},\"payload\":{}}}",
            event.seq, event.t, kind, payload
        )
    }

    /// Lines for every event with `seq >= since`, each newline-terminated.
    pub fn lines_since(&self, since: u64) -> String {
        let mut out = String::new();
        for e in self.events.iter().skip(since as usize) {
            out.push_str(&Self::event_line(e));
            out.push('\n');
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = self.header_line();
        out.push('\n');
        out.push_str(&self.lines_since(0));
        out
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| LogError::BadHeader("empty log".into()))?;
        let seed = parse_header(header)?;
        let mut log = EventLog::new(seed);
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let event = parse_event::<E>(line, line_no)?;
            let expected = log.events.len() as u64;
            if event.seq != expected {
                return Err(LogError::Gap {
                    line: line_no,
                    expected,
                    found: event.seq,
                });
            }
            if event.t < log.last_time() {
                return Err(LogError::NotMonotonic {
                    line: line_no,
                    t: event.t,
                    previous: log.last_time(),
                });
            }
            log.events.push(event);
        }
        Ok(log)
    }
}

fn parse_header(line: &str) -> Result<u64, LogError> {
    let v: Value = serde_json::from_str(line).map_err(|e| LogError::BadHeader(e.to_string()))?;
    let obj = v
        .as_object()
        .filter(|o| o.len() == 2)
        .ok_or_else(|| LogError::BadHeader("expected {\"seed\":int,\"version\":1}".into()))?;
    let seed = obj
        .get("seed")
        .and_then(Value::as_u64)
        .ok_or_else(|| LogError::BadHeader("missing integer seed".into()))?;
    match obj.get("version").and_then(Value::as_u64) {
        Some(LOG_VERSION) => Ok(seed),
        other => Err(LogError::BadHeader(format!(
            "unsupported version {other:?}"
        ))),
    }
}

fn parse_event<E: DeserializeOwned>(line: &str, line_no: usize) -> Result<Event<E>, LogError> {
    let malformed = |message: String| LogError::Malformed {
        line: line_no,
        message,
    };
    let v: Value = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    let obj = v
        .as_object()
        .ok_or_else(|| malformed("expected an object".into()))?;
    if obj.len() != 4 {
        return Err(malformed(
            "expected exactly seq, t, kind and payload".into(),
        ));
    }
    let seq = obj
        .get("seq")
        .and_then(Value::as_u64)
        .ok_or_else(|| malformed("missing integer seq".into()))?;
    let t = obj
        .get("t")
        .and_then(Value::as_f64)
        .filter(|t| *t >= 0.0)
        .map(SimTime::from_secs_f64)
        .ok_or_else(|| malformed("missing non-negative time".into()))?;
    let (Some(kind), Some(payload)) = (obj.get("kind"), obj.get("payload")) else {
        return Err(malformed("missing kind or payload".into()));
    };
    let body = serde_json::from_value(json!({"kind": kind, "payload": payload}))
        .map_err(|e| malformed(format!("bad {kind} event: {e}")))?;
    Ok(Event { seq, t, body })
}

#[cfg(test)]
mod tests {
    use serde::Deserialize;

    use super::*;

    #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
    #[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
    enum Toy {
        Ping { n: u32 },
        Note { text: String },
    }

    fn sample() -> EventLog<Toy> {
        let mut log = EventLog::new(42);
        log.append(SimTime::ZERO, Toy::Ping { n: 1 });
        log.append(
            SimTime::from_micros(1_500_000),
            Toy::Note { text: "hi".into() },
        );
        log
    }

    #[test]
    fn line_format() {
        let text = sample().to_jsonl();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], r#"{"seed":42,"version":1}"#);
        assert_eq!(
            lines[1],
            r#"{"seq":0,"t":0.000000,"kind":"ping","payload":{"n":1}}"#
        );
        assert_eq!(
            lines[2],
            r#"{"seq":1,"t":1.500000,"kind":"note","payload":{"text":"hi"}}"#
        );
    }

    #[test]
    fn parse_inverts_serialization() {
        let log = sample();
        let text = log.to_jsonl();
        let back = EventLog::<Toy>::parse(&text).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn header_only_log_is_empty() {
        let log = EventLog::<Toy>::parse("{\"seed\":7,\"version\":1}\n").unwrap();
        assert!(log.is_empty());
        assert_eq!(log.seed(), 7);
    }

    #[test]
    fn rejects_gaps_bad_headers_and_time_travel() {
        let gap = "{\"seed\":1,\"version\":1}\n{\"seq\":1,\"t\":0.0,\"kind\":\"ping\",\"payload\":{\"n\":1}}\n";
        assert!(matches!(
            EventLog::<Toy>::parse(gap),
            Err(LogError::Gap { .. })
        ));
        assert!(matches!(
            EventLog::<Toy>::parse("{\"seed\":1,\"version\":2}\n"),
            Err(LogError::BadHeader(_))
        ));
        let back = "{\"seed\":1,\"version\":1}\n\
            {\"seq\":0,\"t\":2.0,\"kind\":\"ping\",\"payload\":{\"n\":1}}\n\
            {\"seq\":1,\"t\":1.0,\"kind\":\"ping\",\"payload\":{\"n\":1}}\n";
        assert!(matches!(
            EventLog::<Toy>::parse(back),
            Err(LogError::NotMonotonic { .. })
        ));
        let unknown =
            "{\"seed\":1,\"version\":1}\n{\"seq\":0,\"t\":0.0,\"kind\":\"nope\",\"payload\":{}}\n";
        assert!(matches!(
            EventLog::<Toy>::parse(unknown),
            Err(LogError::Malformed { .. })
        ));
    }
}
