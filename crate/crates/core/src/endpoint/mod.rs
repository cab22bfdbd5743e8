//! The embedded WAMP router each simulation hosts, its WebSocket server,
//! and the client peer used by the CLI and tests.

mod client;
mod outbox;
mod router;
mod server;

use serde_json::Value;

use crate::wire::Dict;

pub use client::{ClientError, ClientOptions, ClientSession, EventMessage, Subscription};
pub use outbox::{Outbox, Outgoing};
pub use router::{
    CallError, ConnId, DuplicateRegistration, Handler, InvalidProcedureUri, Invocation,
    RegisterError, Responder, Router, INVALID_ARGUMENT,
};
pub use server::{EndpointError, Server};

/// Positional and keyword arguments of a call, result or event.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Payload {
    pub args: Vec<Value>,
    pub kwargs: Dict,
}

impl Payload {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn args(args: Vec<Value>) -> Self {
        Payload {
            args,
            kwargs: Dict::new(),
        }
    }

    pub fn kwargs(kwargs: Dict) -> Self {
        Payload {
            args: Vec::new(),
            kwargs,
        }
    }

    /// Wire form: empty trailing fields are omitted, an empty argument list
    /// is kept only when keyword arguments follow.
    pub fn into_wire(self) -> (Option<Vec<Value>>, Option<Dict>) {
        match (self.args.is_empty(), self.kwargs.is_empty()) {
            (true, true) => (None, None),
            (false, true) => (Some(self.args), None),
            _ => (Some(self.args), Some(self.kwargs)),
        }
    }

    pub fn from_wire(args: Option<Vec<Value>>, kwargs: Option<Dict>) -> Self {
        Payload {
            args: args.unwrap_or_default(),
            kwargs: kwargs.unwrap_or_default(),
        }
    }
}
