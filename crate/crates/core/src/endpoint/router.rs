use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use serde_json::Value;

use crate::wire::{
    decode, encode, reason, session_step, Dict, Id, IdGenerator, MessageType, Phase,
    ProtocolViolation, SessionAction, SessionState, Uri, WampMessage,
};

use super::{Outbox, Payload};

/// Transport-level identity of one connection.
pub type ConnId = u64;

/// What a procedure receives.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Invocation {
    pub procedure: String,
    pub args: Vec<Value>,
    pub kwargs: Dict,
}

/// A domain error returned to the caller as an ERROR message.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{uri}: {message}")]
pub struct CallError {
    pub uri: String,
    pub message: String,
}

impl CallError {
    pub fn new(uri: &str, message: impl Into<String>) -> Self {
        CallError {
            uri: uri.to_owned(),
            message: message.into(),
        }
    }

    pub fn invalid_argument(message: impl Into<String>) -> Self {
        Self::new(INVALID_ARGUMENT, message)
    }
}

/// Completes one CALL. Dropping it unanswered reports a runtime error so
/// the caller is never left waiting.
#[derive(Debug)]
pub struct Responder {
    outbox: Arc<Outbox>,
    request: Id,
    answered: bool,
}

impl Responder {
    pub fn request(&self) -> Id {
        self.request
    }

    pub fn respond(mut self, result: Result<Payload, CallError>) {
        self.answered = true;
        let msg = match result {
            Ok(p) => {
                let (args, kwargs) = p.into_wire();
                WampMessage::Result {
                    request: self.request,
                    details: Dict::new(),
                    args,
                    kwargs,
                }
            }
            Err(e) => error_reply(MessageType::Call, self.request, &e.uri, vec![Value::String(e.message)]),
        };
        send(&self.outbox, &msg);
    }
}

impl Drop for Responder {
    fn drop(&mut self) {
        if !self.answered {
            let msg = error_reply(MessageType::Call, self.request, RUNTIME_ERROR, Vec::new());
            send(&self.outbox, &msg);
        }
    }
}

const RUNTIME_ERROR: &str = "wamp.error.runtime_error";
/// Raised by handlers that reject their arguments.
pub const INVALID_ARGUMENT: &str = "sim.error.invalid_argument";

pub type Handler = Arc<dyn Fn(Invocation, Responder) + Send + Sync>;

type SubscriptionListener = Arc<dyn Fn(&str, usize) + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("procedure {0:?} is already registered")]
pub struct DuplicateRegistration(pub String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid procedure uri {0:?}")]
pub struct InvalidProcedureUri(pub String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegisterError {
    #[error(transparent)]
    Duplicate(#[from] DuplicateRegistration),
    #[error(transparent)]
    InvalidUri(#[from] InvalidProcedureUri),
}

struct Session {
    state: SessionState,
    outbox: Arc<Outbox>,
    /// topic → subscription id held by this session
    topics: BTreeMap<String, Id>,
}

#[derive(Default)]
struct Registry {
    /// topic → (subscriber connection → subscription id)
    topics: BTreeMap<String, BTreeMap<ConnId, Id>>,
}

impl Registry {
    fn count(&self, topic: &str) -> usize {
        self.topics.get(topic).map_or(0, BTreeMap::len)
    }
}

struct State {
    sessions: HashMap<ConnId, Session>,
    registry: Registry,
    ids: IdGenerator,
    next_subscription: u64,
}

/// The in-process WAMP router: sessions, subscriptions and procedures.
///
/// Transports feed it text frames through [`Router::receive`] and drain the
/// per-connection [`Outbox`] returned by [`Router::open`].
pub struct Router {
    state: Mutex<State>,
    procedures: Mutex<BTreeMap<String, Handler>>,
    listeners: Mutex<Vec<SubscriptionListener>>,
    next_conn: AtomicU64,
}

impl std::fmt::Debug for Router {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Router").finish_non_exhaustive()
    }
}

fn send(outbox: &Outbox, msg: &WampMessage) {
    match encode(msg) {
        Ok(text) if matches!(msg, WampMessage::Event { .. }) => outbox.push_event(text),
        Ok(text) => outbox.push_reply(text),
        Err(e) => log::error!("dropping unencodable {:?}: {e}", msg.message_type()),
    }
}

fn error_reply(request_type: MessageType, request: Id, uri: &str, args: Vec<Value>) -> WampMessage {
    let error = Uri::new(uri).unwrap_or_else(|_| Uri::new(RUNTIME_ERROR).expect("static uri"));
    WampMessage::Error {
        request_type,
        request,
        details: Dict::new(),
        error,
        args: (!args.is_empty()).then_some(args),
        kwargs: None,
    }
}

impl Default for Router {
    fn default() -> Self {
        Self::new()
    }
}

impl Router {
    pub fn new() -> Self {
        Self::with_seed(rand::random())
    }

    /// Session and publication ids are drawn from a stream with this seed.
    pub fn with_seed(seed: u64) -> Self {
        Router {
            state: Mutex::new(State {
                sessions: HashMap::new(),
                registry: Registry::default(),
                ids: IdGenerator::from_seed(seed),
                next_subscription: 1,
            }),
            procedures: Mutex::new(BTreeMap::new()),
            listeners: Mutex::new(Vec::new()),
            next_conn: AtomicU64::new(1),
        }
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Registers a procedure; allowed at any time.
    pub fn register(&self, uri: &str, handler: Handler) -> Result<(), RegisterError> {
        if !Uri::is_valid(uri) {
            return Err(InvalidProcedureUri(uri.to_owned()).into());
        }
        let mut procs = self.procedures.lock().unwrap_or_else(|e| e.into_inner());
        if procs.contains_key(uri) {
            return Err(DuplicateRegistration(uri.to_owned()).into());
        }
        procs.insert(uri.to_owned(), handler);
        Ok(())
    }

    /// Registers a handler that answers on the calling thread.
    pub fn register_fn<F>(&self, uri: &str, f: F) -> Result<(), RegisterError>
    where
        F: Fn(Invocation) -> Result<Payload, CallError> + Send + Sync + 'static,
    {
        self.register(uri, Arc::new(move |inv, responder: Responder| responder.respond(f(inv))))
    }

    pub fn unregister(&self, uri: &str) -> bool {
        let mut procs = self.procedures.lock().unwrap_or_else(|e| e.into_inner());
        procs.remove(uri).is_some()
    }

    pub fn procedures(&self) -> Vec<String> {
        let procs = self.procedures.lock().unwrap_or_else(|e| e.into_inner());
        procs.keys().cloned().collect()
    }

    /// Called with `(topic, subscriber_count)` after every change.
    pub fn on_subscription_change(&self, f: impl Fn(&str, usize) + Send + Sync + 'static) {
        self.listeners
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(Arc::new(f));
    }

    fn notify(&self, changes: Vec<(String, usize)>) {
        if changes.is_empty() {
            return;
        }
        let listeners = self.listeners.lock().unwrap_or_else(|e| e.into_inner()).clone();
        for (topic, count) in changes {
            for l in &listeners {
                l(&topic, count);
            }
        }
    }

    /// A new transport connection awaiting HELLO.
    pub fn open(&self) -> (ConnId, Arc<Outbox>) {
        let conn = self.next_conn.fetch_add(1, Ordering::Relaxed);
        let outbox = Arc::new(Outbox::new());
        self.lock().sessions.insert(
            conn,
            Session {
                state: SessionState::new(),
                outbox: outbox.clone(),
                topics: BTreeMap::new(),
            },
        );
        (conn, outbox)
    }

    /// The transport went away.
    pub fn disconnect(&self, conn: ConnId) {
        let changes = {
            let mut st = self.lock();
            Self::remove_session(&mut st, conn)
        };
        self.notify(changes);
    }

    fn remove_session(st: &mut State, conn: ConnId) -> Vec<(String, usize)> {
        let Some(session) = st.sessions.remove(&conn) else {
            return Vec::new();
        };
        session
            .topics
            .into_keys()
            .map(|topic| {
                if let Some(subs) = st.registry.topics.get_mut(&topic) {
                    subs.remove(&conn);
                }
                let n = st.registry.count(&topic);
                (topic, n)
            })
            .collect()
    }

    pub fn session_count(&self) -> usize {
        self.lock().sessions.len()
    }

    pub fn subscriber_count(&self, topic: &str) -> usize {
        self.lock().registry.count(topic)
    }

    /// Handles one inbound text frame.
    pub fn receive(&self, conn: ConnId, text: &str) {
        match decode(text) {
            Ok(msg) => self.receive_message(conn, msg),
            Err(e) => {
                log::debug!("connection {conn}: {e}");
                self.violate(conn, ProtocolViolation(e.to_string()));
            }
        }
    }

    /// A frame that is not text (binary payloads are not part of the protocol).
    pub fn receive_invalid(&self, conn: ConnId, what: &str) {
        self.violate(conn, ProtocolViolation(what.to_owned()));
    }

    fn violate(&self, conn: ConnId, v: ProtocolViolation) {
        let changes = {
            let mut st = self.lock();
            let Some(session) = st.sessions.get(&conn) else {
                return;
            };
            let t = v.transition(&session.state);
            let outbox = session.outbox.clone();
            Self::perform(&mut st, conn, &outbox, t.actions)
        };
        self.notify(changes);
    }

    /// Sends and closes; returns subscription changes caused by closing.
    fn perform(
        st: &mut State,
        conn: ConnId,
        outbox: &Outbox,
        actions: Vec<SessionAction>,
    ) -> Vec<(String, usize)> {
        let mut changes = Vec::new();
        for a in actions {
            match a {
                SessionAction::Send(m) => send(outbox, &m),
                SessionAction::Close => {
                    outbox.push_close();
                    changes.extend(Self::remove_session(st, conn));
                }
                SessionAction::Deliver(_) => unreachable!("deliveries are routed by the caller"),
            }
        }
        changes
    }

    pub fn receive_message(&self, conn: ConnId, msg: WampMessage) {
        let mut deliveries = Vec::new();
        let mut changes = Vec::new();
        let outbox;
        {
            let mut st = self.lock();
            let st = &mut *st;
            let Some(session) = st.sessions.get(&conn) else {
                return;
            };
            outbox = session.outbox.clone();
            let state = session.state.clone();
            if state.phase == Phase::Closing && !matches!(msg, WampMessage::Goodbye { .. } | WampMessage::Abort { .. }) {
                return;
            }
            let t = match session_step(&state, msg, &mut st.ids) {
                Ok(t) => t,
                Err(v) => v.transition(&state),
            };
            if let Some(s) = st.sessions.get_mut(&conn) {
                s.state = t.state;
            }
            let mut rest = Vec::new();
            for a in t.actions {
                match a {
                    SessionAction::Deliver(m) => deliveries.push(m),
                    other => rest.push(other),
                }
            }
            changes.extend(Self::perform(st, conn, &outbox, rest));
            for m in std::mem::take(&mut deliveries) {
                match m {
                    WampMessage::Subscribe { request, topic, .. } => {
                        let (sub, change) = Self::subscribe(st, conn, topic.as_str());
                        changes.extend(change);
                        send(&outbox, &WampMessage::Subscribed { request, subscription: sub });
                    }
                    WampMessage::Unsubscribe { request, subscription } => {
                        match Self::unsubscribe(st, conn, subscription) {
                            Some(change) => {
                                changes.push(change);
                                send(&outbox, &WampMessage::Unsubscribed { request });
                            }
                            None => send(
                                &outbox,
                                &error_reply(
                                    MessageType::Unsubscribe,
                                    request,
                                    reason::NO_SUCH_SUBSCRIPTION,
                                    Vec::new(),
                                ),
                            ),
                        }
                    }
                    call @ WampMessage::Call { .. } => deliveries.push(call),
                    _ => unreachable!("session_step delivers only subscribe, unsubscribe and call"),
                }
            }
        }
        self.notify(changes);
        for call in deliveries {
            if let WampMessage::Call {
                request,
                procedure,
                args,
                kwargs,
                ..
            } = call
            {
                self.dispatch(&outbox, request, procedure, args, kwargs);
            }
        }
    }

    fn subscribe(st: &mut State, conn: ConnId, topic: &str) -> (Id, Option<(String, usize)>) {
        let session = st.sessions.get_mut(&conn).expect("live session");
        if let Some(&id) = session.topics.get(topic) {
            return (id, None);
        }
        let id = Id::new(st.next_subscription).expect("subscription ids stay below 2^53");
        st.next_subscription += 1;
        session.topics.insert(topic.to_owned(), id);
        st.registry
            .topics
            .entry(topic.to_owned())
            .or_default()
            .insert(conn, id);
        (id, Some((topic.to_owned(), st.registry.count(topic))))
    }

    fn unsubscribe(st: &mut State, conn: ConnId, subscription: Id) -> Option<(String, usize)> {
        let session = st.sessions.get_mut(&conn).expect("live session");
        let topic = session
            .topics
            .iter()
            .find(|(_, &id)| id == subscription)
            .map(|(t, _)| t.clone())?;
        session.topics.remove(&topic);
        if let Some(subs) = st.registry.topics.get_mut(&topic) {
            subs.remove(&conn);
        }
        let n = st.registry.count(&topic);
        Some((topic, n))
    }

    fn dispatch(
        &self,
        outbox: &Arc<Outbox>,
        request: Id,
        procedure: Uri,
        args: Option<Vec<Value>>,
        kwargs: Option<Dict>,
    ) {
        let handler = self
            .procedures
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(procedure.as_str())
            .cloned();
        let Some(handler) = handler else {
            send(
                outbox,
                &error_reply(MessageType::Call, request, reason::NO_SUCH_PROCEDURE, Vec::new()),
            );
            return;
        };
        let responder = Responder {
            outbox: outbox.clone(),
            request,
            answered: false,
        };
        handler(
            Invocation {
                procedure: procedure.as_str().to_owned(),
                args: args.unwrap_or_default(),
                kwargs: kwargs.unwrap_or_default(),
            },
            responder,
        );
    }

    /// Sends one EVENT per subscriber, all with the same publication id.
    /// Returns how many sessions it was queued to.
    pub fn publish(&self, topic: &str, payload: Payload) -> usize {
        let (args, kwargs) = payload.into_wire();
        let mut st = self.lock();
        let st = &mut *st;
        let Some(subs) = st.registry.topics.get(topic).filter(|s| !s.is_empty()) else {
            return 0;
        };
        let publication = st.ids.new_id();
        let mut n = 0;
        for (conn, &subscription) in subs {
            if let Some(session) = st.sessions.get(conn) {
                send(
                    &session.outbox,
                    &WampMessage::Event {
                        subscription,
                        publication,
                        details: Dict::new(),
                        args: args.clone(),
                        kwargs: kwargs.clone(),
                    },
                );
                n += 1;
            }
        }
        n
    }

    /// Says GOODBYE to every open session and closes it.
    pub fn shutdown(&self) {
        let changes = {
            let mut st = self.lock();
            let conns: Vec<ConnId> = st.sessions.keys().copied().collect();
            let mut changes = Vec::new();
            for conn in conns {
                let s = &st.sessions[&conn];
                if s.state.phase == Phase::Established {
                    send(&s.outbox, &WampMessage::goodbye(reason::SYSTEM_SHUTDOWN));
                }
                s.outbox.push_close();
                changes.extend(Self::remove_session(&mut st, conn));
            }
            changes
        };
        self.notify(changes);
    }
}
