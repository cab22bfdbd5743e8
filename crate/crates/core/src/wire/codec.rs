use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::Value;

use super::{Dict, Id, MessageType, Uri, WampMessage};

/// Frames longer than this are rejected without parsing.
pub const MAX_FRAME_LEN: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("invalid message: {0}")]
    InvalidMessage(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("unsupported message type {0}")]
    UnsupportedMessageType(u64),
}

fn malformed(msg: impl Into<String>) -> DecodeError {
    DecodeError::MalformedFrame(msg.into())
}

fn errorable(t: MessageType) -> bool {
    matches!(
        t,
        MessageType::Subscribe | MessageType::Unsubscribe | MessageType::Call
    )
}

fn check_payload(args: &Option<Vec<Value>>, kwargs: &Option<Dict>) -> Result<(), EncodeError> {
    if kwargs.is_some() && args.is_none() {
        return Err(EncodeError::InvalidMessage("kwargs present without args"));
    }
    Ok(())
}

/// Serialises a message to its canonical JSON text.
pub fn encode(msg: &WampMessage) -> Result<String, EncodeError> {
    match msg {
        WampMessage::Error {
            request_type,
            args,
            kwargs,
            ..
        } => {
            if !errorable(*request_type) {
                return Err(EncodeError::InvalidMessage(
                    "ERROR request type must be SUBSCRIBE, UNSUBSCRIBE or CALL",
                ));
            }
            check_payload(args, kwargs)?;
        }
        WampMessage::Event { args, kwargs, .. }
        | WampMessage::Call { args, kwargs, .. }
        | WampMessage::Result { args, kwargs, .. } => check_payload(args, kwargs)?,
        _ => {}
    }
    Ok(serde_json::to_string(msg).expect("JSON values always serialise"))
}

struct Payload<'a>(&'a Option<Vec<Value>>, &'a Option<Dict>);

impl Payload<'_> {
    fn len(&self) -> usize {
        usize::from(self.0.is_some()) + usize::from(self.1.is_some())
    }

    fn write<S: SerializeSeq>(&self, seq: &mut S) -> Result<(), S::Error> {
        if let Some(args) = self.0 {
            seq.serialize_element(args)?;
        }
        if let Some(kwargs) = self.1 {
            seq.serialize_element(kwargs)?;
        }
        Ok(())
    }
}

impl Serialize for WampMessage {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let code = self.message_type().code();
        match self {
            WampMessage::Hello { realm, details } => {
                let mut seq = serializer.serialize_seq(Some(3))?;
                seq.serialize_element(&code)?;
                seq.serialize_element(realm.as_str())?;
                seq.serialize_element(details)?;
                seq.end()
            }
            WampMessage::Welcome { session, details } => {
                let mut seq = serializer.serialize_seq(Some(3))?;
                seq.serialize_element(&code)?;
                seq.serialize_element(&session.get())?;
                seq.serialize_element(details)?;
                seq.end()
            }
            WampMessage::Abort { details, reason } | WampMessage::Goodbye { details, reason } => {
                let mut seq = serializer.serialize_seq(Some(3))?;
                seq.serialize_element(&code)?;
                seq.serialize_element(details)?;
                seq.serialize_element(reason.as_str())?;
                seq.end()
            }
            WampMessage::Error {
                request_type,
                request,
                details,
                error,
                args,
                kwargs,
            } => {
                let payload = Payload(args, kwargs);
                let mut seq = serializer.serialize_seq(Some(5 + payload.len()))?;
                seq.serialize_element(&code)?;
                seq.serialize_element(&request_type.code())?;
                seq.serialize_element(&request.get())?;
                seq.serialize_element(details)?;
                seq.serialize_element(error.as_str())?;
                payload.write(&mut seq)?;
                seq.end()
            }
            WampMessage::Subscribe {
                request,
                options,
                topic,
            } => {
                let mut seq = serializer.serialize_seq(Some(4))?;
                seq.serialize_element(&code)?;
                seq.serialize_element(&request.get())?;
                seq.serialize_element(options)?;
                seq.serialize_element(topic.as_str())?;
                seq.end()
            }
            WampMessage::Subscribed {
                request,
                subscription,
            }
            | WampMessage::Unsubscribe {
                request,
                subscription,
            } => {
                let mut seq = serializer.serialize_seq(Some(3))?;
                seq.serialize_element(&code)?;
                seq.serialize_element(&request.get())?;
                seq.serialize_element(&subscription.get())?;
                seq.end()
            }
            WampMessage::Unsubscribed { request } => {
                let mut seq = serializer.serialize_seq(Some(2))?;
                seq.serialize_element(&code)?;
                seq.serialize_element(&request.get())?;
                seq.end()
            }
            WampMessage::Event {
                subscription,
                publication,
                details,
                args,
                kwargs,
            } => {
                let payload = Payload(args, kwargs);
                let mut seq = serializer.serialize_seq(Some(4 + payload.len()))?;
                seq.serialize_element(&code)?;
                seq.serialize_element(&subscription.get())?;
                seq.serialize_element(&publication.get())?;
                seq.serialize_element(details)?;
                payload.write(&mut seq)?;
                seq.end()
            }
            WampMessage::Call {
                request,
                options,
                procedure,
                args,
                kwargs,
            } => {
                let payload = Payload(args, kwargs);
                let mut seq = serializer.serialize_seq(Some(4 + payload.len()))?;
                seq.serialize_element(&code)?;
                seq.serialize_element(&request.get())?;
                seq.serialize_element(options)?;
                seq.serialize_element(procedure.as_str())?;
                payload.write(&mut seq)?;
                seq.end()
            }
            WampMessage::Result {
                request,
                details,
                args,
                kwargs,
            } => {
                let payload = Payload(args, kwargs);
                let mut seq = serializer.serialize_seq(Some(3 + payload.len()))?;
                seq.serialize_element(&code)?;
                seq.serialize_element(&request.get())?;
                seq.serialize_element(details)?;
                payload.write(&mut seq)?;
                seq.end()
            }
        }
    }
}

/// Decodes raw frame bytes; non-UTF-8 input is a malformed frame.
pub fn decode_bytes(bytes: &[u8]) -> Result<WampMessage, DecodeError> {
    if bytes.len() > MAX_FRAME_LEN {
        return Err(malformed("frame exceeds 1 MiB"));
    }
    let text = std::str::from_utf8(bytes).map_err(|_| malformed("frame is not UTF-8"))?;
    decode(text)
}

/// Parses one text frame into a message of the supported subset.
pub fn decode(text: &str) -> Result<WampMessage, DecodeError> {
    if text.len() > MAX_FRAME_LEN {
        return Err(malformed("frame exceeds 1 MiB"));
    }
    let value: Value =
        serde_json::from_str(text).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
    let Value::Array(items) = value else {
        return Err(malformed("frame is not a JSON array"));
    };
    let code = items
        .first()
        .ok_or_else(|| malformed("empty array"))?
        .as_u64()
        .ok_or_else(|| malformed("message type is not an unsigned integer"))?;
    let ty = MessageType::from_code(code).ok_or(DecodeError::UnsupportedMessageType(code))?;
    Fields::new(ty, items).parse()
}

struct Fields {
    ty: MessageType,
    items: std::vec::IntoIter<Value>,
    len: usize,
}

impl Fields {
    fn new(ty: MessageType, items: Vec<Value>) -> Self {
        let len = items.len();
        let mut items = items.into_iter();
        items.next();
        Fields { ty, items, len }
    }

    fn arity(&self, min: usize, max: usize) -> Result<(), DecodeError> {
        if (min..=max).contains(&self.len) {
            Ok(())
        } else {
            Err(malformed(format!(
                "{:?} expects {min}..={max} elements, got {}",
                self.ty, self.len
            )))
        }
    }

    fn next(&mut self) -> Value {
        self.items.next().expect("arity checked")
    }

    fn id(&mut self, what: &str) -> Result<Id, DecodeError> {
        let v = self.next();
        let n = v
            .as_u64()
            .ok_or_else(|| malformed(format!("{what} must be an integer")))?;
        Id::new(n).map_err(|e| malformed(format!("{what}: {e}")))
    }

    fn dict(&mut self, what: &str) -> Result<Dict, DecodeError> {
        match self.next() {
            Value::Object(map) => Ok(map),
            _ => Err(malformed(format!("{what} must be an object"))),
        }
    }

    fn uri(&mut self, what: &str) -> Result<Uri, DecodeError> {
        match self.next() {
            Value::String(s) => Uri::new(s).map_err(|e| malformed(format!("{what}: {e}"))),
            _ => Err(malformed(format!("{what} must be a string"))),
        }
    }

    fn args(&mut self) -> Result<Option<Vec<Value>>, DecodeError> {
        match self.items.next() {
            None => Ok(None),
            Some(Value::Array(a)) => Ok(Some(a)),
            // Autobahn writes `null` here when only kwargs follow.
            Some(Value::Null) if self.items.len() == 1 => Ok(Some(Vec::new())),
            Some(_) => Err(malformed("arguments must be an array")),
        }
    }

    fn kwargs(&mut self) -> Result<Option<Dict>, DecodeError> {
        match self.items.next() {
            None => Ok(None),
            Some(Value::Object(m)) => Ok(Some(m)),
            Some(_) => Err(malformed("keyword arguments must be an object")),
        }
    }

    fn parse(mut self) -> Result<WampMessage, DecodeError> {
        Ok(match self.ty {
            MessageType::Hello => {
                self.arity(3, 3)?;
                WampMessage::Hello {
                    realm: self.uri("realm")?,
                    details: self.dict("details")?,
                }
            }
            MessageType::Welcome => {
                self.arity(3, 3)?;
                WampMessage::Welcome {
                    session: self.id("session")?,
                    details: self.dict("details")?,
                }
            }
            MessageType::Abort => {
                self.arity(3, 3)?;
                WampMessage::Abort {
                    details: self.dict("details")?,
                    reason: self.uri("reason")?,
                }
            }
            MessageType::Goodbye => {
                self.arity(3, 3)?;
                WampMessage::Goodbye {
                    details: self.dict("details")?,
                    reason: self.uri("reason")?,
                }
            }
            MessageType::Error => {
                self.arity(5, 7)?;
                let code = self
                    .next()
                    .as_u64()
                    .ok_or_else(|| malformed("request type must be an integer"))?;
                let request_type = MessageType::from_code(code)
                    .filter(|t| errorable(*t))
                    .ok_or_else(|| malformed(format!("ERROR for request type {code}")))?;
                WampMessage::Error {
                    request_type,
                    request: self.id("request")?,
                    details: self.dict("details")?,
                    error: self.uri("error")?,
                    args: self.args()?,
                    kwargs: self.kwargs()?,
                }
            }
            MessageType::Subscribe => {
                self.arity(4, 4)?;
                WampMessage::Subscribe {
                    request: self.id("request")?,
                    options: self.dict("options")?,
                    topic: self.uri("topic")?,
                }
            }
            MessageType::Subscribed => {
                self.arity(3, 3)?;
                WampMessage::Subscribed {
                    request: self.id("request")?,
                    subscription: self.id("subscription")?,
                }
            }
            MessageType::Unsubscribe => {
                self.arity(3, 3)?;
                WampMessage::Unsubscribe {
                    request: self.id("request")?,
                    subscription: self.id("subscription")?,
                }
            }
            MessageType::Unsubscribed => {
                self.arity(2, 2)?;
                WampMessage::Unsubscribed {
                    request: self.id("request")?,
                }
            }
            MessageType::Event => {
                self.arity(4, 6)?;
                WampMessage::Event {
                    subscription: self.id("subscription")?,
                    publication: self.id("publication")?,
                    details: self.dict("details")?,
                    args: self.args()?,
                    kwargs: self.kwargs()?,
                }
            }
            MessageType::Call => {
                self.arity(4, 6)?;
                WampMessage::Call {
                    request: self.id("request")?,
                    options: self.dict("options")?,
                    procedure: self.uri("procedure")?,
                    args: self.args()?,
                    kwargs: self.kwargs()?,
                }
            }
            MessageType::Result => {
                self.arity(3, 5)?;
                WampMessage::Result {
                    request: self.id("request")?,
                    details: self.dict("details")?,
                    args: self.args()?,
                    kwargs: self.kwargs()?,
                }
            }
        })
    }
}
