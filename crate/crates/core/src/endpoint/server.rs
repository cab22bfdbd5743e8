use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tungstenite::handshake::server::{ErrorResponse, Request, Response};
use tungstenite::http::{HeaderValue, StatusCode};
use tungstenite::protocol::WebSocketConfig;
use tungstenite::{Error as WsError, Message, WebSocket};

use crate::wire::SUBPROTOCOL;

use super::{ConnId, Outbox, Outgoing, Router};

const POLL: Duration = Duration::from_millis(2);
const ACCEPT_POLL: Duration = Duration::from_millis(10);
const CLOSE_GRACE: Duration = Duration::from_millis(500);

#[derive(Debug, thiserror::Error)]
pub enum EndpointError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("cannot listen on {addr}: {source}")]
    BindFailure {
        addr: String,
        #[source]
        source: io::Error,
    },
}

pub(crate) fn ws_config() -> WebSocketConfig {
    // Leave room above the 1 MiB protocol limit so oversized frames reach
    // the decoder and earn a proper ABORT.
    WebSocketConfig::default()
        .max_message_size(Some(4 << 20))
        .max_frame_size(Some(4 << 20))
}

/// A running WebSocket listener feeding one [`Router`].
pub struct Server {
    addr: SocketAddr,
    router: Arc<Router>,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
    connections: Arc<Mutex<Vec<JoinHandle<()>>>>,
}

impl std::fmt::Debug for Server {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Server").field("addr", &self.addr).finish_non_exhaustive()
    }
}

impl Server {
    /// Listens on `host:port`; port 0 picks a free port.
    pub fn bind(host: &str, port: u16, router: Arc<Router>) -> Result<Server, EndpointError> {
        let spec = format!("{host}:{port}");
        let failure = |source| EndpointError::BindFailure {
            addr: spec.clone(),
            source,
        };
        let addrs: Vec<SocketAddr> = spec.to_socket_addrs().map_err(failure)?.collect();
        let listener = match TcpListener::bind(&addrs[..]) {
            Ok(l) => l,
            Err(e) if e.kind() == io::ErrorKind::AddrInUse => return Err(EndpointError::PortInUse(port)),
            Err(e) => return Err(failure(e)),
        };
        listener.set_nonblocking(true).map_err(failure)?;
        let addr = listener.local_addr().map_err(failure)?;
        let stop = Arc::new(AtomicBool::new(false));
        let connections = Arc::new(Mutex::new(Vec::new()));
        let accept = {
            let (router, stop, connections) = (router.clone(), stop.clone(), connections.clone());
            thread::Builder::new()
                .name(format!("ws-accept-{}", addr.port()))
                .spawn(move || accept_loop(listener, router, stop, connections))
                .map_err(failure)?
        };
        log::info!("listening on ws://{addr}");
        Ok(Server {
            addr,
            router,
            stop,
            accept: Some(accept),
            connections,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("ws://{}", self.addr)
    }

    pub fn router(&self) -> &Arc<Router> {
        &self.router
    }

    /// Sends GOODBYE to all sessions, closes them and releases the port.
    pub fn shutdown(mut self) {
        self.stop_all();
    }

    fn stop_all(&mut self) {
        let Some(accept) = self.accept.take() else {
            return;
        };
        self.stop.store(true, Ordering::SeqCst);
        let _ = accept.join();
        self.router.shutdown();
        let handles: Vec<_> = self
            .connections
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .drain(..)
            .collect();
        for h in handles {
            let _ = h.join();
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.stop_all();
    }
}

fn accept_loop(
    listener: TcpListener,
    router: Arc<Router>,
    stop: Arc<AtomicBool>,
    connections: Arc<Mutex<Vec<JoinHandle<()>>>>,
) {
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let router = router.clone();
                let spawned = thread::Builder::new()
                    .name(format!("ws-{peer}"))
                    .spawn(move || serve_connection(stream, router));
                match spawned {
                    Ok(h) => {
                        let mut conns = connections.lock().unwrap_or_else(|e| e.into_inner());
                        conns.retain(|h| !h.is_finished());
                        conns.push(h);
                    }
                    Err(e) => log::warn!("cannot spawn connection thread: {e}"),
                }
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
            Err(e) => {
                log::warn!("accept failed: {e}");
                thread::sleep(ACCEPT_POLL);
            }
        }
    }
}

// The handshake callback fixes this signature.
#[allow(clippy::result_large_err)]
fn negotiate(req: &Request, mut resp: Response) -> Result<Response, ErrorResponse> {
    let offered: Vec<String> = req
        .headers()
        .get_all("Sec-WebSocket-Protocol")
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(',').map(|p| p.trim().to_owned()))
        .collect();
    if offered.is_empty() {
        return Ok(resp);
    }
    if offered.iter().any(|p| p == SUBPROTOCOL) {
        resp.headers_mut()
            .insert("Sec-WebSocket-Protocol", HeaderValue::from_static(SUBPROTOCOL));
        Ok(resp)
    } else {
        let mut err = ErrorResponse::new(Some(format!("only {SUBPROTOCOL} is supported")));
        *err.status_mut() = StatusCode::BAD_REQUEST;
        Err(err)
    }
}

fn is_timeout(e: &WsError) -> bool {
    matches!(e, WsError::Io(io) if matches!(io.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut))
}

fn serve_connection(stream: TcpStream, router: Arc<Router>) {
    let _ = stream.set_nonblocking(false);
    let _ = stream.set_nodelay(true);
    let mut ws = match tungstenite::accept_hdr_with_config(stream, negotiate, Some(ws_config())) {
        Ok(ws) => ws,
        Err(e) => {
            log::debug!("handshake failed: {e}");
            return;
        }
    };
    if let Err(e) = ws.get_mut().set_read_timeout(Some(POLL)) {
        log::warn!("cannot set read timeout: {e}");
        return;
    }
    let (conn, outbox) = router.open();
    log::debug!("connection {conn} open");
    run_session(&mut ws, &router, conn, &outbox);
    router.disconnect(conn);
    log::debug!("connection {conn} closed");
}

fn run_session(ws: &mut WebSocket<TcpStream>, router: &Router, conn: ConnId, outbox: &Outbox) {
    loop {
        let mut closing = false;
        while let Some(item) = outbox.try_pop() {
            match item {
                Outgoing::Frame(text) => {
                    if ws.write(Message::text(text)).is_err() {
                        return;
                    }
                }
                Outgoing::Close => {
                    closing = true;
                    break;
                }
            }
        }
        if ws.flush().is_err() && !closing {
            return;
        }
        if closing {
            finish_close(ws);
            return;
        }
        match ws.read() {
            Ok(Message::Text(text)) => router.receive(conn, text.as_str()),
            Ok(Message::Binary(_)) => router.receive_invalid(conn, "binary frame"),
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(_) => return,
        }
    }
}

fn finish_close(ws: &mut WebSocket<TcpStream>) {
    let _ = ws.close(None);
    let deadline = Instant::now() + CLOSE_GRACE;
    while Instant::now() < deadline {
        match ws.read() {
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {
                let _ = ws.flush();
            }
            Err(_) => return,
        }
    }
}
