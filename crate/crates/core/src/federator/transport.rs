use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::Sender;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use super::node::Event;
use super::plan::NodeId;
use super::protocol::Frame;

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("node {node} unreachable at {endpoint} after {attempts} attempt(s): {last}")]
    Unreachable {
        node: NodeId,
        endpoint: String,
        attempts: u32,
        last: String,
    },
    #[error("link to {0} is closed")]
    Closed(NodeId),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Sending half of a connection to one peer.
pub trait Link: Send {
    fn send(&mut self, frame: &Frame) -> Result<(), TransportError>;
}

/// Connection attempts before a peer counts as unreachable.
#[derive(Clone, Copy, Debug)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub connect_timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 4,
            initial_backoff: Duration::from_millis(25),
            connect_timeout: Duration::from_millis(250),
        }
    }
}

/// Nodes in one process, addressed by id. Frames still travel as encoded
/// lines so both transports exercise the same protocol.
#[derive(Clone, Default)]
pub struct InProcNetwork {
    inboxes: Arc<Mutex<HashMap<NodeId, Sender<Event>>>>,
}

impl InProcNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&self, id: &str, inbox: Sender<Event>) {
        self.inboxes.lock().expect("network lock").insert(id.to_string(), inbox);
    }

    /// Opens a link from `from` to `to` and hands `to` the link back.
    pub fn connect(&self, from: &str, to: &str) -> Result<Box<dyn Link>, TransportError> {
        let inboxes = self.inboxes.lock().expect("network lock");
        let unreachable = |why: &str| TransportError::Unreachable {
            node: to.to_string(),
            endpoint: "inproc".into(),
            attempts: 1,
            last: why.into(),
        };
        let target = inboxes.get(to).ok_or_else(|| unreachable("not running"))?.clone();
        let origin = inboxes.get(from).ok_or_else(|| unreachable("caller not registered"))?.clone();
        let back = InProcLink {
            from: to.to_string(),
            inbox: origin,
        };
        target
            .send(Event::Connected {
                peer: from.to_string(),
                link: Box::new(back),
            })
            .map_err(|_| unreachable("stopped"))?;
        Ok(Box::new(InProcLink {
            from: from.to_string(),
            inbox: target,
        }))
    }
}

struct InProcLink {
    from: NodeId,
    inbox: Sender<Event>,
}

impl Link for InProcLink {
    fn send(&mut self, frame: &Frame) -> Result<(), TransportError> {
        self.inbox
            .send(Event::Line {
                peer: self.from.clone(),
                line: frame.encode(),
            })
            .map_err(|_| TransportError::Closed(self.from.clone()))
    }
}

struct TcpLink {
    peer: NodeId,
    out: BufWriter<TcpStream>,
}

impl Link for TcpLink {
    fn send(&mut self, frame: &Frame) -> Result<(), TransportError> {
        let mut line = frame.encode();
        line.push('\n');
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.flush())
            .map_err(|_| TransportError::Closed(self.peer.clone()))
    }
}

impl Drop for TcpLink {
    fn drop(&mut self) {
        let _ = self.out.flush();
        let _ = self.out.get_ref().shutdown(std::net::Shutdown::Both);
    }
}

/// Forwards every line from `stream` to `inbox` as coming from `peer`.
fn spawn_reader(peer: NodeId, stream: TcpStream, inbox: Sender<Event>) -> JoinHandle<()> {
    std::thread::spawn(move || {
        for line in BufReader::new(stream).lines() {
            let Ok(line) = line else { break };
            let event = Event::Line {
                peer: peer.clone(),
                line,
            };
            if inbox.send(event).is_err() {
                return;
            }
        }
        let _ = inbox.send(Event::Disconnected { peer });
    })
}

/// A listening socket feeding one node's inbox.
pub struct TcpAcceptor {
    pub addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl TcpAcceptor {
    /// Binds `addr` and accepts peers until dropped. Each peer must open
    /// with `HELLO <node>`.
    pub fn bind(addr: &str, inbox: Sender<Event>) -> Result<Self, TransportError> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let thread = std::thread::spawn(move || {
            while !flag.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let inbox = inbox.clone();
                        std::thread::spawn(move || handshake(stream, inbox));
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(Duration::from_millis(2));
                    }
                    Err(e) => {
                        log::warn!("accept failed: {e}");
                        std::thread::sleep(Duration::from_millis(10));
                    }
                }
            }
        });
        Ok(TcpAcceptor {
            addr,
            stop,
            thread: Some(thread),
        })
    }
}

impl Drop for TcpAcceptor {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn handshake(stream: TcpStream, inbox: Sender<Event>) {
    let _ = stream.set_nonblocking(false);
    let Ok(read_half) = stream.try_clone() else { return };
    let mut reader = BufReader::new(read_half);
    let mut first = String::new();
    if reader.read_line(&mut first).is_err() {
        return;
    }
    let peer = match Frame::decode(&first) {
        Ok(Frame::Hello { node }) => node,
        _ => {
            log::warn!("peer did not open with HELLO: {first:?}");
            return;
        }
    };
    let link = TcpLink {
        peer: peer.clone(),
        out: BufWriter::new(stream),
    };
    if inbox
        .send(Event::Connected {
            peer: peer.clone(),
            link: Box::new(link),
        })
        .is_err()
    {
        return;
    }
    for line in reader.lines() {
        let Ok(line) = line else { break };
        if inbox
            .send(Event::Line {
                peer: peer.clone(),
                line,
            })
            .is_err()
        {
            return;
        }
    }
    let _ = inbox.send(Event::Disconnected { peer });
}

/// Connects to `to` at `endpoint`, retrying with exponential backoff, and
/// introduces `from`. Replies arrive in `inbox`.
pub fn tcp_connect(
    from: &str,
    to: &str,
    endpoint: &str,
    inbox: Sender<Event>,
    retry: RetryPolicy,
) -> Result<Box<dyn Link>, TransportError> {
    let mut backoff = retry.initial_backoff;
    let mut last = String::from("no address");
    for attempt in 1..=retry.attempts.max(1) {
        let addrs: Vec<SocketAddr> = match endpoint.to_socket_addrs() {
            Ok(a) => a.collect(),
            Err(e) => {
                last = e.to_string();
                Vec::new()
            }
        };
        for a in &addrs {
            match TcpStream::connect_timeout(a, retry.connect_timeout) {
                Ok(stream) => {
                    let _ = stream.set_nodelay(true);
                    spawn_reader(to.to_string(), stream.try_clone()?, inbox);
                    let mut link = TcpLink {
                        peer: to.to_string(),
                        out: BufWriter::new(stream),
                    };
                    link.send(&Frame::Hello { node: from.to_string() })?;
                    return Ok(Box::new(link));
                }
                Err(e) => last = e.to_string(),
            }
        }
        if attempt < retry.attempts {
            log::debug!("connect to {to} at {endpoint} failed ({last}), retrying in {backoff:?}");
            std::thread::sleep(backoff);
            backoff *= 2;
        }
    }
    Err(TransportError::Unreachable {
        node: to.to_string(),
        endpoint: endpoint.to_string(),
        attempts: retry.attempts.max(1),
        last,
    })
}
