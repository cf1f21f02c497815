//! A party of a three-server session: transport endpoint plus randomness.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::random::{derive_key, PairStream, Seed, StreamOwner};
use crate::tag::ProtocolTag;
use crate::transport::memory::mesh;
use crate::transport::{Endpoint, Invocation, Role, Transcript};

pub struct Party {
    endpoint: Endpoint,
    common_seed: Option<Seed>,
    private_seed: Seed,
    session: u64,
    commons: HashMap<ProtocolTag, PairStream>,
    privates: HashMap<ProtocolTag, PairStream>,
    exec: Execution,
}

impl Party {
    /// Runs session setup. S0 derives the proxies' common seed from its own
    /// seed and sends it to S1 as 32 raw bytes.
    pub fn setup(mut endpoint: Endpoint, seed: &Seed, session: u64, exec: Execution) -> Result<Self> {
        let role = endpoint.role();
        let private_seed = derive_key(seed, &[b"party", &[role.index() as u8]]);
        let common_seed = match role {
            Role::S0 => {
                let common = derive_key(&private_seed, &[b"common", &session.to_le_bytes()]);
                endpoint.send(Role::S1, &common)?;
                Some(common)
            }
            Role::S1 => {
                let bytes = endpoint.recv(Role::S0)?;
                let common: Seed = bytes
                    .as_slice()
                    .try_into()
                    .map_err(|_| Error::Malformed(format!("seed of {} bytes", bytes.len())))?;
                Some(common)
            }
            Role::S2 => None,
        };
        Ok(Self {
            endpoint,
            common_seed,
            private_seed,
            session,
            commons: HashMap::new(),
            privates: HashMap::new(),
            exec,
        })
    }

    pub fn role(&self) -> Role {
        self.endpoint.role()
    }

    /// 0 for S0, 1 for S1. Meaningless for S2.
    pub fn index(&self) -> u64 {
        self.role().index() as u64
    }

    pub fn is_helper(&self) -> bool {
        self.role() == Role::S2
    }

    pub fn exec(&self) -> Execution {
        self.exec
    }

    pub fn session(&self) -> u64 {
        self.session
    }

    pub fn transcript(&self) -> &Transcript {
        self.endpoint.transcript()
    }

    pub fn endpoint_mut(&mut self) -> &mut Endpoint {
        &mut self.endpoint
    }

    /// The stream shared by S0 and S1 for protocol `tag`.
    pub fn common(&mut self, tag: ProtocolTag) -> Result<&mut PairStream> {
        let role = self.role();
        let seed = self.common_seed.ok_or(Error::WrongRole(role))?;
        let session = self.session;
        Ok(self
            .commons
            .entry(tag)
            .or_insert_with(|| PairStream::new(&seed, StreamOwner::Proxies, session, tag)))
    }

    /// This party's own stream for protocol `tag`.
    pub fn private(&mut self, tag: ProtocolTag) -> &mut PairStream {
        let seed = self.private_seed;
        let session = self.session;
        let role = self.role();
        self.privates
            .entry(tag)
            .or_insert_with(|| PairStream::new(&seed, StreamOwner::Private(role), session, tag))
    }

    pub fn send(&mut self, peer: Role, payload: &[u8]) -> Result<()> {
        self.endpoint.send(peer, payload)
    }

    pub fn send_offline(&mut self, peer: Role, payload: &[u8]) -> Result<()> {
        self.endpoint.send_offline(peer, payload)
    }

    pub fn recv(&mut self, peer: Role) -> Result<Vec<u8>> {
        self.endpoint.recv(peer)
    }

    /// Sends to the other proxy, then receives from it.
    pub fn exchange(&mut self, payload: &[u8]) -> Result<Vec<u8>> {
        let peer = self.role().other_proxy();
        if peer == self.role() {
            return Err(Error::WrongRole(self.role()));
        }
        self.send(peer, payload)?;
        self.recv(peer)
    }

    /// Runs `f` inside an accounting scope for `tag`.
    pub fn scoped<T>(&mut self, tag: ProtocolTag, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        self.endpoint.begin(tag);
        let out = f(self);
        self.endpoint.end();
        out
    }

    /// Like [`Party::scoped`], also returning the cost of the invocation.
    pub fn measured<T>(
        &mut self,
        tag: ProtocolTag,
        f: impl FnOnce(&mut Self) -> Result<T>,
    ) -> Result<(T, Invocation)> {
        self.endpoint.begin(tag);
        let out = f(self);
        let inv = self.endpoint.end();
        out.map(|v| (v, inv))
    }
}

/// Runs `f` for all three roles on the given endpoints, one thread each.
pub fn run_on<T, F>(endpoints: [Endpoint; 3], seed: &Seed, exec: Execution, f: F) -> Result<[T; 3]>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = std::thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> = endpoints
            .into_iter()
            .map(|ep| {
                let role = ep.role();
                let h = scope.spawn(move || {
                    let mut party = Party::setup(ep, seed, 0, exec)?;
                    f(&mut party)
                });
                (role, h)
            })
            .collect();
        handles
            .into_iter()
            .map(|(role, h)| h.join().unwrap_or(Err(Error::PartyPanicked(role))))
            .collect()
    });
    // report the root cause rather than the peers' closed links
    let mut first_err = None;
    let mut ok = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                let is_secondary = matches!(e, Error::LinkClosed(_));
                match &first_err {
                    None => first_err = Some(e),
                    Some(Error::LinkClosed(_)) if !is_secondary => first_err = Some(e),
                    _ => {}
                }
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(ok.try_into().ok().expect("three results"))
}

/// Runs `f` for all three roles over in-process channels.
pub fn run_local<T, F>(seed: &Seed, exec: Execution, f: F) -> Result<[T; 3]>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    run_on(mesh(), seed, exec, f)
}
