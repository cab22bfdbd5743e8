//! WAMP basic-profile subset spoken between a simulation endpoint and its
//! clients: twelve message types, JSON serialisation, and the router-side
//! session lifecycle.
//!
//! Frames are JSON arrays whose first element is the numeric message code,
//! carried in WebSocket text frames negotiated with the `wamp.2.json`
//! subprotocol.

mod codec;
mod ids;
mod message;
mod session;

pub use codec::{decode, decode_bytes, encode, DecodeError, EncodeError, MAX_FRAME_LEN};
pub use ids::{Id, IdError, IdGenerator, MAX_ID};
pub use message::{Dict, MessageType, Uri, UriError, WampMessage};
pub use session::{
    session_step, Phase, ProtocolViolation, SessionAction, SessionState, Transition,
};

/// WebSocket subprotocol offered and accepted during the upgrade.
pub const SUBPROTOCOL: &str = "wamp.2.json";

/// Well-known error and close reasons.
pub mod reason {
    pub const GOODBYE_AND_OUT: &str = "wamp.close.goodbye_and_out";
    pub const SYSTEM_SHUTDOWN: &str = "wamp.close.system_shutdown";
    pub const CLOSE_REALM: &str = "wamp.close.close_realm";
    pub const PROTOCOL_VIOLATION: &str = "wamp.error.protocol_violation";
    pub const NO_SUCH_PROCEDURE: &str = "wamp.error.no_such_procedure";
    pub const NO_SUCH_SUBSCRIPTION: &str = "wamp.error.no_such_subscription";
}
