use serde_json::json;

use super::{reason, Dict, Id, IdGenerator, WampMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    AwaitingHello,
    Established,
    Closing,
    Closed,
}

/// Router-side view of one peer session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionState {
    pub phase: Phase,
    pub session: Option<Id>,
    /// Accepted but not used for routing; a single realm is served.
    pub realm: Option<String>,
}

impl Default for SessionState {
    fn default() -> Self {
        Self::new()
    }
}

impl SessionState {
    pub fn new() -> Self {
        SessionState {
            phase: Phase::AwaitingHello,
            session: None,
            realm: None,
        }
    }
}

/// Instruction for the transport driving a session.
#[derive(Debug, Clone, PartialEq)]
pub enum SessionAction {
    Send(WampMessage),
    /// Hand the message to the router (subscribe, unsubscribe, call).
    Deliver(WampMessage),
    Close,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: SessionState,
    pub actions: Vec<SessionAction>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("protocol violation: {0}")]
pub struct ProtocolViolation(pub String);

impl ProtocolViolation {
    /// The transition a router performs on a violation: ABORT then close.
    pub fn transition(&self, state: &SessionState) -> Transition {
        Transition {
            state: SessionState {
                phase: Phase::Closed,
                ..state.clone()
            },
            actions: vec![
                SessionAction::Send(WampMessage::abort(reason::PROTOCOL_VIOLATION)),
                SessionAction::Close,
            ],
        }
    }
}

fn welcome_details() -> Dict {
    let mut details = Dict::new();
    details.insert("roles".into(), json!({ "broker": {}, "dealer": {} }));
    details
}

/// Router-side handshake/teardown transition.
///
/// `ids` is consulted only when a session id is assigned, so the result is a
/// function of `(state, incoming, ids)`.
pub fn session_step(
    state: &SessionState,
    incoming: WampMessage,
    ids: &mut IdGenerator,
) -> Result<Transition, ProtocolViolation> {
    use WampMessage as M;
    let violation = |what: &str| {
        Err(ProtocolViolation(format!(
            "{:?} not allowed in {:?}",
            what, state.phase
        )))
    };
    match (state.phase, incoming) {
        (Phase::Closed, m) => violation(&format!("{:?}", m.message_type())),
        (Phase::AwaitingHello, M::Hello { realm, .. }) => {
            let session = ids.new_id();
            Ok(Transition {
                state: SessionState {
                    phase: Phase::Established,
                    session: Some(session),
                    realm: Some(realm.as_str().to_owned()),
                },
                actions: vec![SessionAction::Send(M::Welcome {
                    session,
                    details: welcome_details(),
                })],
            })
        }
        (_, M::Abort { .. }) => Ok(Transition {
            state: SessionState {
                phase: Phase::Closed,
                ..state.clone()
            },
            actions: vec![SessionAction::Close],
        }),
        (Phase::AwaitingHello, m) => violation(&format!("{:?}", m.message_type())),
        (Phase::Established, M::Goodbye { .. }) => Ok(Transition {
            state: SessionState {
                phase: Phase::Closing,
                ..state.clone()
            },
            actions: vec![
                SessionAction::Send(M::goodbye(reason::GOODBYE_AND_OUT)),
                SessionAction::Close,
            ],
        }),
        (
            Phase::Established,
            m @ (M::Subscribe { .. } | M::Unsubscribe { .. } | M::Call { .. }),
        ) => Ok(Transition {
            state: state.clone(),
            actions: vec![SessionAction::Deliver(m)],
        }),
        (Phase::Established, m) => violation(&format!("{:?}", m.message_type())),
        // We sent GOODBYE first; the peer's reply completes the close.
        (Phase::Closing, M::Goodbye { .. }) => Ok(Transition {
            state: SessionState {
                phase: Phase::Closed,
                ..state.clone()
            },
            actions: vec![SessionAction::Close],
        }),
        (Phase::Closing, _) => Ok(Transition {
            state: state.clone(),
            actions: vec![],
        }),
    }
}
