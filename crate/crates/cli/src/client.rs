//! `call` and `tail`: a headless caller and subscriber.

use std::io::Write;
use std::sync::mpsc::RecvTimeoutError;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use simlive_core::des::StopSignal;
use simlive_core::endpoint::{ClientError, ClientSession, Payload};

#[derive(Debug, thiserror::Error)]
pub enum ArgsError {
    #[error("arguments are not JSON: {0}")]
    Syntax(#[from] serde_json::Error),
}

/// A JSON array becomes positional arguments, an object keyword arguments,
/// anything else a single positional argument.
pub fn parse_args(text: Option<&str>) -> Result<Payload, ArgsError> {
    let Some(text) = text else {
        return Ok(Payload::empty());
    };
    Ok(match serde_json::from_str(text)? {
        Value::Array(args) => Payload::args(args),
        Value::Object(kwargs) => Payload::kwargs(kwargs),
        v => Payload::args(vec![v]),
    })
}

/// The printed form of a payload: a lone argument as is, several as an
/// array, keyword arguments as `{"args", "kwargs"}`.
pub fn payload_json(p: &Payload) -> Value {
    if !p.kwargs.is_empty() {
        return json!({"args": p.args, "kwargs": p.kwargs});
    }
    match p.args.as_slice() {
        [one] => one.clone(),
        args => Value::Array(args.to_vec()),
    }
}

pub fn call(url: &str, procedure: &str, args: Payload) -> Result<Value, ClientError> {
    let session = ClientSession::connect(url)?;
    let result = session.call(procedure, args);
    let _ = session.close();
    result.map(|p| payload_json(&p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Count(u64),
    Duration(Duration),
    Forever,
}

/// Writes one JSON line per event until the limit is reached, `stop` is
/// raised or the router closes the session. Returns the number of lines.
pub fn tail(
    url: &str,
    topic: &str,
    limit: Limit,
    stop: &StopSignal,
    out: &mut impl Write,
) -> Result<u64, ClientError> {
    let session = ClientSession::connect(url)?;
    let sub = session.subscribe(topic)?;
    let deadline = match limit {
        Limit::Duration(d) => Some(Instant::now() + d),
        _ => None,
    };
    let mut written = 0;
    while !stop.is_stopped() && limit != Limit::Count(written) {
        let mut wait = Duration::from_millis(100);
        if let Some(d) = deadline {
            match d.checked_duration_since(Instant::now()) {
                Some(left) => wait = wait.min(left),
                None => break,
            }
        }
        match sub.events.recv_timeout(wait) {
            Ok(ev) => {
                let _ = writeln!(out, "{}", payload_json(&ev.payload));
                let _ = out.flush();
                written += 1;
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => return Err(ClientError::Closed),
        }
    }
    if session.is_open() {
        session.unsubscribe(sub.id)?;
        session.close()?;
    }
    Ok(written)
}
