use std::fmt;

use serde_json::Value;

use super::Id;

/// String-keyed JSON map; keys keep insertion order.
pub type Dict = serde_json::Map<String, Value>;

/// A dot-separated lowercase URI such as `stats.power`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Uri(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid uri {0:?}")]
pub struct UriError(pub String);

impl Uri {
    pub fn new(s: impl Into<String>) -> Result<Self, UriError> {
        let s = s.into();
        if Self::is_valid(&s) {
            Ok(Uri(s))
        } else {
            Err(UriError(s))
        }
    }

    /// `[a-z0-9_]+(\.[a-z0-9_]+)*`
    pub fn is_valid(s: &str) -> bool {
        !s.is_empty()
            && s.split('.').all(|part| {
                !part.is_empty()
                    && part
                        .bytes()
                        .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
            })
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Uri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for Uri {
    type Err = UriError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Uri::new(s)
    }
}

impl AsRef<str> for Uri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Numeric message codes of the supported subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum MessageType {
    Hello = 1,
    Welcome = 2,
    Abort = 3,
    Goodbye = 6,
    Error = 8,
    Subscribe = 32,
    Subscribed = 33,
    Unsubscribe = 34,
    Unsubscribed = 35,
    Event = 36,
    Call = 48,
    Result = 50,
}

impl MessageType {
    pub const ALL: [MessageType; 12] = [
        MessageType::Hello,
        MessageType::Welcome,
        MessageType::Abort,
        MessageType::Goodbye,
        MessageType::Error,
        MessageType::Subscribe,
        MessageType::Subscribed,
        MessageType::Unsubscribe,
        MessageType::Unsubscribed,
        MessageType::Event,
        MessageType::Call,
        MessageType::Result,
    ];

    pub fn code(self) -> u64 {
        self as u64
    }

    pub fn from_code(code: u64) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.code() == code)
    }
}

/// One message of the supported WAMP subset.
///
/// `args`/`kwargs` are `None` when absent on the wire. `kwargs` may only be
/// present together with `args` (possibly empty), mirroring the array layout.
#[derive(Debug, Clone, PartialEq)]
pub enum WampMessage {
    Hello {
        realm: Uri,
        details: Dict,
    },
    Welcome {
        session: Id,
        details: Dict,
    },
    Abort {
        details: Dict,
        reason: Uri,
    },
    Goodbye {
        details: Dict,
        reason: Uri,
    },
    Error {
        request_type: MessageType,
        request: Id,
        details: Dict,
        error: Uri,
        args: Option<Vec<Value>>,
        kwargs: Option<Dict>,
    },
    Subscribe {
        request: Id,
        options: Dict,
        topic: Uri,
    },
    Subscribed {
        request: Id,
        subscription: Id,
    },
    Unsubscribe {
        request: Id,
        subscription: Id,
    },
    Unsubscribed {
        request: Id,
    },
    Event {
        subscription: Id,
        publication: Id,
        details: Dict,
        args: Option<Vec<Value>>,
        kwargs: Option<Dict>,
    },
    Call {
        request: Id,
        options: Dict,
        procedure: Uri,
        args: Option<Vec<Value>>,
        kwargs: Option<Dict>,
    },
    Result {
        request: Id,
        details: Dict,
        args: Option<Vec<Value>>,
        kwargs: Option<Dict>,
    },
}

impl WampMessage {
    pub fn message_type(&self) -> MessageType {
        match self {
            WampMessage::Hello { .. } => MessageType::Hello,
            WampMessage::Welcome { .. } => MessageType::Welcome,
            WampMessage::Abort { .. } => MessageType::Abort,
            WampMessage::Goodbye { .. } => MessageType::Goodbye,
            WampMessage::Error { .. } => MessageType::Error,
            WampMessage::Subscribe { .. } => MessageType::Subscribe,
            WampMessage::Subscribed { .. } => MessageType::Subscribed,
            WampMessage::Unsubscribe { .. } => MessageType::Unsubscribe,
            WampMessage::Unsubscribed { .. } => MessageType::Unsubscribed,
            WampMessage::Event { .. } => MessageType::Event,
            WampMessage::Call { .. } => MessageType::Call,
            WampMessage::Result { .. } => MessageType::Result,
        }
    }

    pub fn abort(reason: &str) -> Self {
        WampMessage::Abort {
            details: Dict::new(),
            reason: Uri::new(reason).expect("static reason uri"),
        }
    }

    pub fn goodbye(reason: &str) -> Self {
        WampMessage::Goodbye {
            details: Dict::new(),
            reason: Uri::new(reason).expect("static reason uri"),
        }
    }
}
