//! Ordered point-to-point messaging between S0, S1 and S2.
//!
//! Every message travels as one frame:
//!
//! ```text
//! | length: u32 LE | tag: u8 | round stamp: u32 LE | payload (length bytes) |
//! ```
//!
//! The round stamp is a logical clock used for round accounting. A party sends
//! with stamp `r + 1`, where `r` is the highest stamp it has received inside the
//! current top-level invocation, so messages that could be sent in parallel
//! share a stamp. Correlated randomness dealt by the helper before any online
//! message (multiplication triples, modulus-conversion masks) is sent with
//! stamp 0 and does not count as a round. The clock resets whenever a party
//! enters a top-level scope.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::tag::ProtocolTag;

pub mod memory;
pub mod tcp;

pub const HEADER_LEN: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    S0,
    S1,
    S2,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::S0, Role::S1, Role::S2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Role> {
        Self::ALL.get(i).copied()
    }

    pub fn is_proxy(self) -> bool {
        self != Role::S2
    }

    /// The other proxy. Only meaningful for S0 and S1.
    pub fn other_proxy(self) -> Role {
        match self {
            Role::S0 => Role::S1,
            Role::S1 => Role::S0,
            Role::S2 => Role::S2,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.index())
    }
}

/// A bidirectional FIFO byte-frame channel.
pub trait Link: Send {
    fn send(&mut self, frame: Vec<u8>) -> Result<()>;
    /// Returns one whole frame, header included.
    fn recv(&mut self) -> Result<Vec<u8>>;
}

pub fn encode_frame(tag: ProtocolTag, stamp: u32, payload: &[u8]) -> Vec<u8> {
    let mut frame = Vec::with_capacity(HEADER_LEN + payload.len());
    frame.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    frame.push(tag as u8);
    frame.extend_from_slice(&stamp.to_le_bytes());
    frame.extend_from_slice(payload);
    frame
}

/// Parses a header into `(payload length, tag byte, stamp)`.
pub fn decode_header(header: &[u8]) -> Result<(usize, u8, u32)> {
    if header.len() < HEADER_LEN {
        return Err(Error::Malformed(format!("short header of {} bytes", header.len())));
    }
    let len = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
    let stamp = u32::from_le_bytes(header[5..9].try_into().unwrap());
    Ok((len, header[4], stamp))
}

/// Cost of one protocol invocation as observed by one party.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Invocation {
    pub rounds: u32,
    pub bytes_sent: u64,
    pub messages_sent: u64,
    /// Nesting depth; 0 for top-level invocations.
    pub depth: usize,
}

/// Per-session communication counters of one party.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    invocations: BTreeMap<ProtocolTag, Vec<Invocation>>,
    bytes_sent: [u64; 3],
    messages_sent: [u64; 3],
    top_level_rounds: u64,
}

impl Transcript {
    /// Rounds of the most recent invocation of `tag`.
    pub fn round_count(&self, tag: ProtocolTag) -> Result<u32> {
        self.invocations
            .get(&tag)
            .and_then(|v| v.last())
            .map(|i| i.rounds)
            .ok_or(Error::UnknownTag(tag))
    }

    pub fn invocations(&self, tag: ProtocolTag) -> &[Invocation] {
        self.invocations.get(&tag).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn tags(&self) -> impl Iterator<Item = ProtocolTag> + '_ {
        self.invocations.keys().copied()
    }

    pub fn bytes_sent_to(&self, peer: Role) -> u64 {
        self.bytes_sent[peer.index()]
    }

    pub fn messages_sent_to(&self, peer: Role) -> u64 {
        self.messages_sent[peer.index()]
    }

    pub fn total_bytes_sent(&self) -> u64 {
        self.bytes_sent.iter().sum()
    }

    /// Sum of the round counts of all top-level invocations.
    pub fn top_level_rounds(&self) -> u64 {
        self.top_level_rounds
    }

    /// Bytes per invocation of `tag`, summed over invocations.
    pub fn bytes_for(&self, tag: ProtocolTag) -> u64 {
        self.invocations(tag).iter().map(|i| i.bytes_sent).sum()
    }
}

struct Scope {
    tag: ProtocolTag,
    start: u32,
    bytes_start: u64,
    messages_start: u64,
}

/// One party's view of the three-party network.
pub struct Endpoint {
    role: Role,
    links: [Option<Box<dyn Link>>; 3],
    transcript: Transcript,
    scopes: Vec<Scope>,
    recv_clock: u32,
    send_clock: u32,
    bytes_total: u64,
    messages_total: u64,
}

impl Endpoint {
    pub fn new(role: Role, links: Vec<(Role, Box<dyn Link>)>) -> Result<Self> {
        let mut slots: [Option<Box<dyn Link>>; 3] = [None, None, None];
        for (peer, link) in links {
            if peer == role {
                return Err(Error::InvalidArgument(format!("{role} cannot link to itself")));
            }
            slots[peer.index()] = Some(link);
        }
        Ok(Self {
            role,
            links: slots,
            transcript: Transcript::default(),
            scopes: Vec::new(),
            recv_clock: 0,
            send_clock: 0,
            bytes_total: 0,
            messages_total: 0,
        })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn take_transcript(&mut self) -> Transcript {
        std::mem::take(&mut self.transcript)
    }

    fn clock(&self) -> u32 {
        self.recv_clock.max(self.send_clock)
    }

    fn current_tag(&self) -> ProtocolTag {
        self.scopes.last().map(|s| s.tag).unwrap_or(ProtocolTag::Setup)
    }

    /// Opens an accounting scope for one invocation of `tag`.
    pub fn begin(&mut self, tag: ProtocolTag) {
        if self.scopes.is_empty() {
            self.recv_clock = 0;
            self.send_clock = 0;
        }
        self.scopes.push(Scope {
            tag,
            start: self.clock(),
            bytes_start: self.bytes_total,
            messages_start: self.messages_total,
        });
    }

    /// Closes the innermost scope and records its cost.
    pub fn end(&mut self) -> Invocation {
        let scope = self.scopes.pop().expect("end() without begin()");
        let inv = Invocation {
            rounds: self.clock() - scope.start,
            bytes_sent: self.bytes_total - scope.bytes_start,
            messages_sent: self.messages_total - scope.messages_start,
            depth: self.scopes.len(),
        };
        if inv.depth == 0 {
            self.transcript.top_level_rounds += inv.rounds as u64;
        }
        self.transcript
            .invocations
            .entry(scope.tag)
            .or_default()
            .push(inv);
        inv
    }

    fn link(&mut self, peer: Role) -> Result<&mut Box<dyn Link>> {
        if peer == self.role {
            return Err(Error::InvalidArgument(format!("{peer} cannot message itself")));
        }
        self.links[peer.index()].as_mut().ok_or(Error::NoLink(peer))
    }

    fn send_stamped(&mut self, peer: Role, payload: &[u8], stamp: u32) -> Result<()> {
        let frame = encode_frame(self.current_tag(), stamp, payload);
        let len = frame.len() as u64;
        self.link(peer)?.send(frame)?;
        self.bytes_total += len;
        self.messages_total += 1;
        self.transcript.bytes_sent[peer.index()] += len;
        self.transcript.messages_sent[peer.index()] += 1;
        Ok(())
    }

    /// Sends an online message tagged with the current scope.
    pub fn send(&mut self, peer: Role, payload: &[u8]) -> Result<()> {
        let stamp = self.recv_clock + 1;
        self.send_stamped(peer, payload, stamp)?;
        self.send_clock = self.send_clock.max(stamp);
        Ok(())
    }

    /// Sends input-independent correlated randomness; not counted as a round.
    pub fn send_offline(&mut self, peer: Role, payload: &[u8]) -> Result<()> {
        self.send_stamped(peer, payload, 0)
    }

    /// Receives the next message from `peer`, which must belong to the current scope.
    pub fn recv(&mut self, peer: Role) -> Result<Vec<u8>> {
        let expected = self.current_tag();
        let mut frame = self.link(peer)?.recv()?;
        let (len, tag, stamp) = decode_header(&frame)?;
        if frame.len() != HEADER_LEN + len {
            return Err(Error::Malformed(format!(
                "frame of {} bytes announces {len} payload bytes",
                frame.len()
            )));
        }
        if tag != expected as u8 {
            return Err(Error::Desync {
                expected,
                received: tag,
            });
        }
        if stamp > 0 {
            self.recv_clock = self.recv_clock.max(stamp);
        }
        frame.drain(..HEADER_LEN);
        Ok(frame)
    }
}

/// Little-endian word codec for payloads.
pub mod codec {
    use crate::error::{Error, Result};

    pub fn words(values: &[u64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(values.len() * 8);
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn words_of(parts: &[&[u64]]) -> Vec<u8> {
        let n: usize = parts.iter().map(|p| p.len()).sum();
        let mut out = Vec::with_capacity(n * 8);
        for p in parts {
            for v in *p {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn parse_words(bytes: &[u8]) -> Result<Vec<u64>> {
        if !bytes.len().is_multiple_of(8) {
            return Err(Error::Malformed(format!(
                "payload of {} bytes is not a whole number of words",
                bytes.len()
            )));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// Parses exactly `n` words.
    pub fn expect_words(bytes: &[u8], n: usize) -> Result<Vec<u64>> {
        if bytes.len() != n * 8 {
            return Err(Error::Malformed(format!(
                "expected {n} words, got {} bytes",
                bytes.len()
            )));
        }
        parse_words(bytes)
    }

    pub fn expect_len(bytes: &[u8], n: usize) -> Result<()> {
        if bytes.len() != n {
            return Err(Error::Malformed(format!(
                "expected {n} bytes, got {}",
                bytes.len()
            )));
        }
        Ok(())
    }
}
