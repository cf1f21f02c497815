//! TCP backend. Each link owns a writer thread so that two parties sending
//! large frames to each other at the same time cannot block on full socket
//! buffers.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Sender};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::{decode_header, encode_frame, Endpoint, Link, Role, HEADER_LEN};
use crate::error::{Error, Result};
use crate::tag::ProtocolTag;

/// First byte sent by a data owner when it connects to a server.
pub const OWNER_HELLO: u8 = 0x80;

pub struct TcpLink {
    peer: Role,
    reader: BufReader<TcpStream>,
    tx: Option<Sender<Vec<u8>>>,
    writer: Option<JoinHandle<()>>,
}

impl TcpLink {
    pub fn new(stream: TcpStream, peer: Role) -> Result<Self> {
        stream.set_nodelay(true)?;
        let write_half = stream.try_clone()?;
        let (tx, rx) = channel::<Vec<u8>>();
        let writer = std::thread::spawn(move || {
            let mut w = BufWriter::new(write_half);
            while let Ok(frame) = rx.recv() {
                if w.write_all(&frame).is_err() {
                    return;
                }
                // flush only once the queue drains
                let mut ok = true;
                while let Ok(more) = rx.try_recv() {
                    if w.write_all(&more).is_err() {
                        ok = false;
                        break;
                    }
                }
                if !ok || w.flush().is_err() {
                    return;
                }
            }
            let _ = w.flush();
        });
        Ok(Self {
            peer,
            reader: BufReader::new(stream),
            tx: Some(tx),
            writer: Some(writer),
        })
    }
}

impl Link for TcpLink {
    fn send(&mut self, frame: Vec<u8>) -> Result<()> {
        self.tx
            .as_ref()
            .ok_or(Error::LinkClosed(self.peer))?
            .send(frame)
            .map_err(|_| Error::LinkClosed(self.peer))
    }

    fn recv(&mut self) -> Result<Vec<u8>> {
        read_raw_frame(&mut self.reader).map_err(|e| match e {
            Error::Io(_) => Error::LinkClosed(self.peer),
            other => other,
        })
    }
}

impl Drop for TcpLink {
    fn drop(&mut self) {
        self.tx.take();
        if let Some(w) = self.writer.take() {
            let _ = w.join();
        }
    }
}

fn read_raw_frame(r: &mut impl Read) -> Result<Vec<u8>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    let (len, _, _) = decode_header(&header)?;
    let mut frame = Vec::with_capacity(HEADER_LEN + len);
    frame.extend_from_slice(&header);
    frame.resize(HEADER_LEN + len, 0);
    r.read_exact(&mut frame[HEADER_LEN..])?;
    Ok(frame)
}

/// Writes one frame on a plain stream, e.g. between an owner and a server.
pub fn write_frame(w: &mut impl Write, tag: ProtocolTag, payload: &[u8]) -> Result<()> {
    w.write_all(&encode_frame(tag, 0, payload))?;
    w.flush()?;
    Ok(())
}

/// Reads one frame and checks its tag.
pub fn read_frame(r: &mut impl Read, expected: ProtocolTag) -> Result<Vec<u8>> {
    let mut frame = read_raw_frame(r)?;
    if frame[4] != expected as u8 {
        return Err(Error::Desync {
            expected,
            received: frame[4],
        });
    }
    frame.drain(..HEADER_LEN);
    Ok(frame)
}

/// Connects to `addr`, retrying until `timeout` elapses.
pub fn connect_retry(addr: &str, timeout: Duration) -> Result<TcpStream> {
    let deadline = Instant::now() + timeout;
    loop {
        let attempt = addr
            .to_socket_addrs()
            .map_err(Error::from)
            .and_then(|mut a| {
                a.next()
                    .ok_or_else(|| Error::InvalidArgument(format!("cannot resolve {addr}")))
            })
            .and_then(|sa| TcpStream::connect(sa).map_err(Error::from));
        match attempt {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() >= deadline => return Err(e),
            Err(_) => std::thread::sleep(Duration::from_millis(50)),
        }
    }
}

/// Connections accepted by a server, sorted by kind.
pub struct Accepted {
    pub servers: Vec<(Role, TcpStream)>,
    pub owners: Vec<TcpStream>,
}

/// Accepts until `servers` and `owners` connections have arrived, classifying
/// each by its first byte.
pub fn accept_classified(listener: &TcpListener, servers: &[Role], owners: usize) -> Result<Accepted> {
    let mut out = Accepted {
        servers: Vec::new(),
        owners: Vec::new(),
    };
    while out.servers.len() < servers.len() || out.owners.len() < owners {
        let (mut stream, _) = listener.accept()?;
        let mut hello = [0u8; 1];
        stream.read_exact(&mut hello)?;
        match hello[0] {
            OWNER_HELLO if out.owners.len() < owners => out.owners.push(stream),
            b => match Role::from_index(b as usize) {
                Some(r) if servers.contains(&r) && out.servers.iter().all(|(s, _)| *s != r) => {
                    out.servers.push((r, stream))
                }
                _ => return Err(Error::Malformed(format!("unexpected hello byte {b:#04x}"))),
            },
        }
    }
    Ok(out)
}

/// Servers with a lower index accept from servers with a higher index.
pub fn connects_to(role: Role) -> Vec<Role> {
    Role::ALL.iter().copied().filter(|r| *r < role).collect()
}

pub fn accepts_from(role: Role) -> Vec<Role> {
    Role::ALL.iter().copied().filter(|r| *r > role).collect()
}

/// Dials every lower-indexed server and announces `role`.
pub fn dial_servers(
    role: Role,
    addr_of: impl Fn(Role) -> Option<String>,
    timeout: Duration,
) -> Result<Vec<(Role, TcpStream)>> {
    let mut out = Vec::new();
    for peer in connects_to(role) {
        let addr = addr_of(peer).ok_or(Error::NoLink(peer))?;
        let mut s = connect_retry(&addr, timeout)?;
        s.write_all(&[role.index() as u8])?;
        out.push((peer, s));
    }
    Ok(out)
}

/// Builds an endpoint from established server-to-server streams.
pub fn endpoint(role: Role, streams: Vec<(Role, TcpStream)>) -> Result<Endpoint> {
    let mut links: Vec<(Role, Box<dyn Link>)> = Vec::new();
    for (peer, s) in streams {
        links.push((peer, Box::new(TcpLink::new(s, peer)?)));
    }
    Endpoint::new(role, links)
}

/// Builds a three-server TCP mesh on loopback, for tests and benchmarks.
pub fn loopback_mesh() -> Result<[Endpoint; 3]> {
    let listeners: Vec<TcpListener> = (0..2)
        .map(|_| TcpListener::bind("127.0.0.1:0"))
        .collect::<std::io::Result<_>>()?;
    let addrs: Vec<String> = listeners
        .iter()
        .map(|l| l.local_addr().map(|a| a.to_string()))
        .collect::<std::io::Result<_>>()?;
    let addr_of = |r: Role| addrs.get(r.index()).cloned();
    let timeout = Duration::from_secs(10);
    std::thread::scope(|scope| {
        let handles: Vec<_> = Role::ALL
            .iter()
            .map(|&role| {
                let listener = listeners.get(role.index());
                scope.spawn(move || -> Result<Endpoint> {
                    let mut streams = dial_servers(role, addr_of, timeout)?;
                    if let Some(l) = listener {
                        streams.extend(accept_classified(l, &accepts_from(role), 0)?.servers);
                    }
                    endpoint(role, streams)
                })
            })
            .collect();
        let mut eps = Vec::new();
        for (h, role) in handles.into_iter().zip(Role::ALL) {
            eps.push(h.join().map_err(|_| Error::PartyPanicked(role))??);
        }
        let [a, b, c]: [Endpoint; 3] = eps.try_into().ok().unwrap();
        Ok([a, b, c])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loopback_exchange() {
        let [mut a, mut b, mut c] = loopback_mesh().unwrap();
        let big = vec![7u8; 1 << 20];
        // simultaneous large sends in both directions
        std::thread::scope(|s| {
            let big2 = big.clone();
            let h = s.spawn(move || {
                b.send(Role::S0, &big2).unwrap();
                b.recv(Role::S0).unwrap()
            });
            a.send(Role::S1, &big).unwrap();
            assert_eq!(a.recv(Role::S1).unwrap().len(), big.len());
            assert_eq!(h.join().unwrap().len(), big.len());
        });
        c.send(Role::S0, b"hi").unwrap();
        assert_eq!(a.recv(Role::S2).unwrap(), b"hi");
    }
}
