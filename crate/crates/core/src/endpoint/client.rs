use std::collections::HashMap;
use std::io;
use std::net::TcpStream;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde_json::Value;
use tungstenite::client::IntoClientRequest;
use tungstenite::http::HeaderValue;
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Error as WsError, Message, WebSocket};

use crate::wire::{
    decode, encode, reason, Dict, Id, MessageType, Uri, WampMessage, SUBPROTOCOL,
};

use super::server::ws_config;
use super::Payload;

const POLL: Duration = Duration::from_millis(2);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClientError {
    #[error("cannot connect to {url}: {reason}")]
    ConnectFailed { url: String, reason: String },
    #[error("session rejected: {0}")]
    Aborted(String),
    #[error("no reply within {0:?}")]
    CallTimeout(Duration),
    #[error("remote error {uri}")]
    RemoteError {
        uri: String,
        args: Vec<Value>,
        kwargs: Dict,
    },
    #[error("session closed")]
    Closed,
    #[error("invalid uri {0:?}")]
    InvalidUri(String),
}

#[derive(Debug, Clone)]
pub struct ClientOptions {
    pub realm: String,
    pub call_timeout: Duration,
}

impl Default for ClientOptions {
    fn default() -> Self {
        ClientOptions {
            realm: "realm1".into(),
            call_timeout: Duration::from_secs(5),
        }
    }
}

/// One EVENT as seen by a subscriber.
#[derive(Debug, Clone, PartialEq)]
pub struct EventMessage {
    pub subscription: Id,
    pub publication: Id,
    pub details: Dict,
    pub payload: Payload,
}

/// A live subscription; events arrive on `events` in wire order.
#[derive(Debug)]
pub struct Subscription {
    pub id: Id,
    pub topic: String,
    pub events: Receiver<EventMessage>,
}

type Reply = Result<WampMessage, ClientError>;

struct Pending {
    reply: Sender<Reply>,
    /// Attached by the IO thread before the SUBSCRIBED is handed over, so no
    /// event can slip past.
    sink: Option<Sender<EventMessage>>,
}

#[derive(Default)]
struct Shared {
    pending: Mutex<HashMap<u64, Pending>>,
    sinks: Mutex<HashMap<Id, Vec<Sender<EventMessage>>>>,
    /// ABORT or GOODBYE received, or transport gone.
    closed: AtomicBool,
    goodbye: Mutex<Option<Sender<()>>>,
}

impl Shared {
    fn fail_all(&self) {
        self.closed.store(true, Ordering::SeqCst);
        for (_, p) in self.pending.lock().unwrap_or_else(|e| e.into_inner()).drain() {
            let _ = p.reply.send(Err(ClientError::Closed));
        }
        self.sinks.lock().unwrap_or_else(|e| e.into_inner()).clear();
    }
}

enum Outbound {
    Text(String),
    Close,
}

/// Caller/subscriber side of a WAMP session.
///
/// Methods may be used from several threads at once; replies are matched
/// to requests by id.
pub struct ClientSession {
    tx: Sender<Outbound>,
    shared: Arc<Shared>,
    session: Id,
    welcome: Dict,
    next_request: AtomicU64,
    call_timeout: Duration,
    io: Option<JoinHandle<()>>,
}

impl std::fmt::Debug for ClientSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClientSession")
            .field("session", &self.session)
            .finish_non_exhaustive()
    }
}

fn is_timeout(e: &WsError) -> bool {
    matches!(e, WsError::Io(io) if matches!(io.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut))
}

impl ClientSession {
    pub fn connect(url: &str) -> Result<Self, ClientError> {
        Self::connect_with(url, ClientOptions::default())
    }

    pub fn connect_with(url: &str, options: ClientOptions) -> Result<Self, ClientError> {
        let failed = |reason: String| ClientError::ConnectFailed {
            url: url.to_owned(),
            reason,
        };
        let mut request = url.into_client_request().map_err(|e| failed(e.to_string()))?;
        request
            .headers_mut()
            .insert("Sec-WebSocket-Protocol", HeaderValue::from_static(SUBPROTOCOL));
        let (mut ws, _) = tungstenite::client::connect_with_config(request, Some(ws_config()), 3)
            .map_err(|e| failed(e.to_string()))?;
        if let MaybeTlsStream::Plain(s) = ws.get_mut() {
            s.set_read_timeout(Some(options.call_timeout))
                .map_err(|e| failed(e.to_string()))?;
            let _ = s.set_nodelay(true);
        }
        let realm = Uri::new(options.realm.clone()).map_err(|_| ClientError::InvalidUri(options.realm.clone()))?;
        let mut details = Dict::new();
        details.insert(
            "roles".into(),
            serde_json::json!({ "caller": {}, "subscriber": {} }),
        );
        let hello = encode(&WampMessage::Hello { realm, details }).expect("valid hello");
        ws.send(Message::text(hello)).map_err(|e| failed(e.to_string()))?;
        let (session, welcome) = loop {
            let frame = match ws.read() {
                Ok(Message::Text(t)) => t,
                Ok(_) => continue,
                Err(e) if is_timeout(&e) => return Err(ClientError::CallTimeout(options.call_timeout)),
                Err(e) => return Err(failed(e.to_string())),
            };
            match decode(frame.as_str()) {
                Ok(WampMessage::Welcome { session, details }) => break (session, details),
                Ok(WampMessage::Abort { reason, .. }) => {
                    return Err(ClientError::Aborted(reason.as_str().to_owned()))
                }
                Ok(other) => return Err(failed(format!("unexpected {:?}", other.message_type()))),
                Err(e) => return Err(failed(e.to_string())),
            }
        };
        if let MaybeTlsStream::Plain(s) = ws.get_mut() {
            s.set_read_timeout(Some(POLL)).map_err(|e| failed(e.to_string()))?;
        }
        let shared = Arc::new(Shared::default());
        let (tx, rx) = mpsc::channel();
        let io = {
            let shared = shared.clone();
            let tx = tx.clone();
            thread::Builder::new()
                .name("wamp-client".into())
                .spawn(move || io_loop(ws, rx, tx, shared))
                .map_err(|e| failed(e.to_string()))?
        };
        Ok(ClientSession {
            tx,
            shared,
            session,
            welcome,
            next_request: AtomicU64::new(1),
            call_timeout: options.call_timeout,
            io: Some(io),
        })
    }

    pub fn session_id(&self) -> Id {
        self.session
    }

    pub fn welcome_details(&self) -> &Dict {
        &self.welcome
    }

    pub fn is_open(&self) -> bool {
        !self.shared.closed.load(Ordering::SeqCst)
    }

    fn request_id(&self) -> Id {
        Id::new(self.next_request.fetch_add(1, Ordering::Relaxed)).expect("request ids stay below 2^53")
    }

    fn roundtrip(
        &self,
        request: Id,
        msg: WampMessage,
        sink: Option<Sender<EventMessage>>,
    ) -> Result<WampMessage, ClientError> {
        if !self.is_open() {
            return Err(ClientError::Closed);
        }
        let (reply_tx, reply_rx) = mpsc::channel();
        self.shared
            .pending
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(
                request.get(),
                Pending {
                    reply: reply_tx,
                    sink,
                },
            );
        let text = encode(&msg).expect("client messages are well formed");
        if self.tx.send(Outbound::Text(text)).is_err() {
            return Err(ClientError::Closed);
        }
        let reply = match reply_rx.recv_timeout(self.call_timeout) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => Err(ClientError::CallTimeout(self.call_timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(ClientError::Closed),
        };
        self.shared
            .pending
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .remove(&request.get());
        match reply? {
            WampMessage::Error {
                error, args, kwargs, ..
            } => Err(ClientError::RemoteError {
                uri: error.as_str().to_owned(),
                args: args.unwrap_or_default(),
                kwargs: kwargs.unwrap_or_default(),
            }),
            other => Ok(other),
        }
    }

    /// Calls a procedure and waits for its RESULT.
    pub fn call(&self, procedure: &str, payload: Payload) -> Result<Payload, ClientError> {
        let procedure = Uri::new(procedure).map_err(|_| ClientError::InvalidUri(procedure.to_owned()))?;
        let request = self.request_id();
        let (args, kwargs) = payload.into_wire();
        match self.roundtrip(
            request,
            WampMessage::Call {
                request,
                options: Dict::new(),
                procedure,
                args,
                kwargs,
            },
            None,
        )? {
            WampMessage::Result { args, kwargs, .. } => Ok(Payload::from_wire(args, kwargs)),
            _ => unreachable!("only RESULT or ERROR answer a CALL"),
        }
    }

    pub fn subscribe(&self, topic: &str) -> Result<Subscription, ClientError> {
        let uri = Uri::new(topic).map_err(|_| ClientError::InvalidUri(topic.to_owned()))?;
        let request = self.request_id();
        let (tx, rx) = mpsc::channel();
        let reply = self.roundtrip(
            request,
            WampMessage::Subscribe {
                request,
                options: Dict::new(),
                topic: uri,
            },
            Some(tx),
        )?;
        let WampMessage::Subscribed { subscription, .. } = reply else {
            unreachable!("only SUBSCRIBED or ERROR answer a SUBSCRIBE")
        };
        Ok(Subscription {
            id: subscription,
            topic: topic.to_owned(),
            events: rx,
        })
    }

    pub fn unsubscribe(&self, subscription: Id) -> Result<(), ClientError> {
        let request = self.request_id();
        self.roundtrip(request, WampMessage::Unsubscribe { request, subscription }, None)?;
        self.shared
            .sinks
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .remove(&subscription);
        Ok(())
    }

    /// Writes a frame as is, bypassing encoding. Used to probe the router
    /// with malformed input.
    pub fn send_raw(&self, text: String) -> Result<(), ClientError> {
        self.tx.send(Outbound::Text(text)).map_err(|_| ClientError::Closed)
    }

    /// Waits until the router has closed the session.
    pub fn wait_closed(&self, timeout: Duration) -> bool {
        let deadline = std::time::Instant::now() + timeout;
        while std::time::Instant::now() < deadline {
            if !self.is_open() {
                return true;
            }
            thread::sleep(POLL);
        }
        !self.is_open()
    }

    /// GOODBYE handshake, then closes the transport.
    pub fn close(mut self) -> Result<(), ClientError> {
        self.shutdown(true)
    }

    fn shutdown(&mut self, graceful: bool) -> Result<(), ClientError> {
        let Some(io) = self.io.take() else {
            return Ok(());
        };
        let mut result = Ok(());
        if graceful && self.is_open() {
            let (tx, rx) = mpsc::channel();
            *self.shared.goodbye.lock().unwrap_or_else(|e| e.into_inner()) = Some(tx);
            let bye = encode(&WampMessage::goodbye(reason::CLOSE_REALM)).expect("valid goodbye");
            let _ = self.tx.send(Outbound::Text(bye));
            if rx.recv_timeout(self.call_timeout).is_err() && self.is_open() {
                result = Err(ClientError::CallTimeout(self.call_timeout));
            }
        }
        let _ = self.tx.send(Outbound::Close);
        let _ = io.join();
        result
    }
}

impl Drop for ClientSession {
    fn drop(&mut self) {
        let _ = self.shutdown(false);
    }
}

fn io_loop(
    mut ws: WebSocket<MaybeTlsStream<TcpStream>>,
    rx: Receiver<Outbound>,
    tx: Sender<Outbound>,
    shared: Arc<Shared>,
) {
    'outer: loop {
        loop {
            match rx.try_recv() {
                Ok(Outbound::Text(t)) => {
                    if ws.write(Message::text(t)).is_err() {
                        break 'outer;
                    }
                }
                Ok(Outbound::Close) | Err(mpsc::TryRecvError::Disconnected) => {
                    let _ = ws.close(None);
                    let _ = ws.flush();
                    // Give the peer a moment to acknowledge the close.
                    for _ in 0..100 {
                        match ws.read() {
                            Err(e) if is_timeout(&e) => {}
                            Err(_) => break,
                            Ok(_) => {}
                        }
                    }
                    break 'outer;
                }
                Err(mpsc::TryRecvError::Empty) => break,
            }
        }
        if let Err(e) = ws.flush() {
            if !is_timeout(&e) {
                break;
            }
        }
        match ws.read() {
            Ok(Message::Text(text)) => handle_incoming(text.as_str(), &shared, &tx),
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(_) => break,
        }
    }
    shared.fail_all();
}

fn handle_incoming(text: &str, shared: &Shared, tx: &Sender<Outbound>) {
    let msg = match decode(text) {
        Ok(m) => m,
        Err(e) => {
            log::warn!("ignoring undecodable frame from router: {e}");
            return;
        }
    };
    let request = match &msg {
        WampMessage::Result { request, .. }
        | WampMessage::Subscribed { request, .. }
        | WampMessage::Unsubscribed { request } => Some(*request),
        WampMessage::Error {
            request,
            request_type: MessageType::Call | MessageType::Subscribe | MessageType::Unsubscribe,
            ..
        } => Some(*request),
        _ => None,
    };
    if let Some(request) = request {
        let waiter = shared
            .pending
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .remove(&request.get());
        match waiter {
            Some(w) => {
                if let (WampMessage::Subscribed { subscription, .. }, Some(sink)) = (&msg, w.sink) {
                    shared
                        .sinks
                        .lock()
                        .unwrap_or_else(|e| e.into_inner())
                        .entry(*subscription)
                        .or_default()
                        .push(sink);
                }
                let _ = w.reply.send(Ok(msg));
            }
            None => log::debug!("reply for unknown request {request}"),
        }
        return;
    }
    match msg {
        WampMessage::Event {
            subscription,
            publication,
            details,
            args,
            kwargs,
        } => {
            let mut sinks = shared.sinks.lock().unwrap_or_else(|e| e.into_inner());
            if let Some(list) = sinks.get_mut(&subscription) {
                let event = EventMessage {
                    subscription,
                    publication,
                    details,
                    payload: Payload::from_wire(args, kwargs),
                };
                list.retain(|s| s.send(event.clone()).is_ok());
            }
        }
        WampMessage::Goodbye { .. } => {
            let ours = shared.goodbye.lock().unwrap_or_else(|e| e.into_inner()).take();
            match ours {
                // The router answered our GOODBYE.
                Some(done) => {
                    let _ = done.send(());
                }
                None => {
                    let bye = encode(&WampMessage::goodbye(reason::GOODBYE_AND_OUT)).expect("valid goodbye");
                    let _ = tx.send(Outbound::Text(bye));
                }
            }
            shared.fail_all();
        }
        WampMessage::Abort { reason, .. } => {
            log::warn!("session aborted: {}", reason.as_str());
            shared.fail_all();
        }
        other => log::debug!("ignoring {:?}", other.message_type()),
    }
}
