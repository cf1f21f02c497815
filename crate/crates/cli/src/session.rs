//! Server sessions: configuration handshake, evaluation and result delivery.

use std::collections::BTreeMap;
use std::net::{TcpListener, TcpStream};
use std::time::Duration;

use auc3pc_core::auc::{evaluate, AucShare, Metric};
use auc3pc_core::random::{PairStream, Seed};
use auc3pc_core::sort::{DeltaParam, LeakageReport, ShareList};
use auc3pc_core::transport::tcp::{self, OWNER_HELLO};
use auc3pc_core::transport::Transcript;
use auc3pc_core::{run_local, Execution, Party, ProtocolTag, Role};

use crate::dataset::OwnerDataset;
use crate::decode::{decode_result, AucValue};
use crate::error::{CliError, Result};
use crate::outsource::{decode_payload, outsource, Upload};

/// Public parameters every server must agree on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionConfig {
    pub metric: Metric,
    pub delta: DeltaParam,
    pub scale: u64,
    pub exec: Execution,
}

impl SessionConfig {
    pub fn new(metric: Metric, delta: usize, scale: u64) -> Result<Self> {
        let delta = DeltaParam::new(delta).map_err(|e| CliError::Config(e.to_string()))?;
        if scale == 0 {
            return Err(CliError::Config("precision must be positive".into()));
        }
        Ok(Self {
            metric,
            delta,
            scale,
            exec: Execution::default(),
        })
    }

    /// Checks that a session over `records` stays inside the ring.
    pub fn check_capacity(&self, records: u64) -> Result<()> {
        if records == 0 {
            return Err(CliError::Degenerate("no records were outsourced".into()));
        }
        let limit = 1u128 << 62;
        let m = records as u128;
        let upper = match self.metric {
            Metric::Auroc | Metric::AurocTie => 2 * m * m,
            Metric::Aupr => 2 * self.scale as u128 * m,
        };
        if upper >= limit || self.scale as u128 * m >= limit {
            return Err(CliError::Config(format!(
                "{records} records at precision {} exceed the ring capacity",
                self.scale
            )));
        }
        Ok(())
    }
}

/// Rejects pooled label sets for which the metric is undefined.
pub fn check_labels(metric: Metric, positives: usize, total: usize) -> Result<()> {
    if positives == 0 {
        return Err(CliError::Degenerate("no positive labels".into()));
    }
    if metric != Metric::Aupr && positives == total {
        return Err(CliError::Degenerate("no negative labels".into()));
    }
    Ok(())
}

/// What a server announces in the handshake.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Hello {
    metric: Metric,
    delta: usize,
    scale: u64,
    lengths: Option<Vec<u64>>,
}

impl Hello {
    fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.metric.code(), self.lengths.is_some() as u8];
        out.extend_from_slice(&(self.delta as u64).to_le_bytes());
        out.extend_from_slice(&self.scale.to_le_bytes());
        for l in self.lengths.iter().flatten() {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out
    }

    fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = || CliError::Payload(format!("handshake of {} bytes", bytes.len()));
        if bytes.len() < 18 || !(bytes.len() - 18).is_multiple_of(8) {
            return Err(bad());
        }
        let metric = Metric::from_code(bytes[0]).ok_or_else(bad)?;
        let words: Vec<u64> = bytes[2..]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let lengths = match bytes[1] {
            0 if words.len() == 2 => None,
            1 => Some(words[2..].to_vec()),
            _ => return Err(bad()),
        };
        Ok(Self {
            metric,
            delta: words[0] as usize,
            scale: words[1],
            lengths,
        })
    }

    fn check(&self, peer: Role, theirs: &Hello) -> Result<()> {
        let mismatch = |field, ours: String, other: String| {
            Err(CliError::ConfigMismatch {
                peer: peer.to_string(),
                field,
                ours,
                theirs: other,
            })
        };
        if self.metric != theirs.metric {
            return mismatch("metric", self.metric.to_string(), theirs.metric.to_string());
        }
        if self.delta != theirs.delta {
            return mismatch("delta", self.delta.to_string(), theirs.delta.to_string());
        }
        if self.scale != theirs.scale {
            return mismatch("precision", self.scale.to_string(), theirs.scale.to_string());
        }
        if let (Some(a), Some(b)) = (&self.lengths, &theirs.lengths) {
            if a != b {
                return mismatch("owner list lengths", format!("{a:?}"), format!("{b:?}"));
            }
        }
        Ok(())
    }
}

/// Exchanges handshakes with both peers and returns the agreed list lengths.
///
/// The outer error is a transport failure, the inner one a disagreement. Every
/// party sees both other handshakes, so a disagreement is detected by all.
fn negotiate(p: &mut Party, config: &SessionConfig, lengths: Option<Vec<u64>>) -> auc3pc_core::Result<Result<Vec<u64>>> {
    let ours = Hello {
        metric: config.metric,
        delta: config.delta.get(),
        scale: config.scale,
        lengths,
    };
    let me = p.role();
    let peers: Vec<Role> = Role::ALL.into_iter().filter(|r| *r != me).collect();
    let received = p.scoped(ProtocolTag::Hello, |p| {
        let bytes = ours.encode();
        for &peer in &peers {
            p.send(peer, &bytes)?;
        }
        peers.iter().map(|&peer| p.recv(peer)).collect::<auc3pc_core::Result<Vec<_>>>()
    })?;
    Ok((|| {
        let theirs: Vec<Hello> = received.iter().map(|b| Hello::decode(b)).collect::<Result<_>>()?;
        for (peer, hello) in peers.iter().zip(&theirs) {
            ours.check(*peer, hello)?;
        }
        if me == Role::S2 {
            theirs[0].check(peers[1], &theirs[1])?;
        }
        let lengths = ours
            .lengths
            .clone()
            .or_else(|| theirs[0].lengths.clone())
            .ok_or_else(|| CliError::Payload("no peer announced list lengths".into()))?;
        config.check_capacity(lengths.iter().sum())?;
        Ok(lengths)
    })())
}

/// Everything a server knows after its part of a session.
#[derive(Clone, Debug)]
pub struct ServerOutcome {
    pub role: Role,
    pub share: AucShare,
    pub lengths: Vec<u64>,
    pub report: LeakageReport,
    pub transcript: Transcript,
}

fn serve(
    p: &mut Party,
    config: &SessionConfig,
    uploads: &[Upload],
) -> auc3pc_core::Result<Result<ServerOutcome>> {
    let lengths = if p.is_helper() {
        None
    } else {
        Some(uploads.iter().map(|u| u.list.len() as u64).collect())
    };
    let lengths = match negotiate(p, config, lengths)? {
        Ok(l) => l,
        Err(e) => return Ok(Err(e)),
    };
    let lists: Vec<ShareList> = match p.role() {
        Role::S2 => lengths.iter().map(|&n| ShareList::placeholder(n as usize)).collect(),
        _ => uploads.iter().map(|u| u.list.clone()).collect(),
    };
    let mut report = LeakageReport::default();
    let share = evaluate(p, lists, config.metric, config.delta, config.scale, Some(&mut report))?;
    Ok(Ok(ServerOutcome {
        role: p.role(),
        share,
        lengths,
        report,
        transcript: p.transcript().clone(),
    }))
}

/// Result of an in-process session.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub metric: Metric,
    pub value: AucValue,
    pub servers: [ServerOutcome; 3],
}

/// Runs owners and all three servers in one process over in-memory links.
///
/// Payloads travel in their wire encoding, so the proxies see exactly what
/// they would receive over TCP.
pub fn simulate(config: &SessionConfig, datasets: &[OwnerDataset], seed: &Seed) -> Result<Simulation> {
    let positives = datasets.iter().map(OwnerDataset::positives).sum();
    let total = datasets.iter().map(OwnerDataset::len).sum();
    check_labels(config.metric, positives, total)?;
    let mut uploads: [Vec<Upload>; 2] = [Vec::new(), Vec::new()];
    for (id, d) in datasets.iter().enumerate() {
        let mut rng = PairStream::keyed(seed, &[b"owner".as_slice(), &(id as u32).to_le_bytes()].concat());
        let payloads = outsource(d, id as u32, config.scale, &mut rng)?;
        for (slot, bytes) in uploads.iter_mut().zip(&payloads) {
            slot.push(decode_payload(bytes)?);
        }
    }
    let outcomes = run_local(seed, config.exec, |p| {
        let mine: &[Upload] = match p.role() {
            Role::S2 => &[],
            r => &uploads[r.index()],
        };
        serve(p, config, mine)
    })?;
    let [a, b, c] = outcomes;
    let servers = [a?, b?, c?];
    let value = decode_result(servers[0].share.share, servers[1].share.share, config.scale)?;
    Ok(Simulation {
        metric: config.metric,
        value,
        servers,
    })
}

/// Network settings of one server process.
pub struct ServerNet {
    /// Listening socket; required for S0 and S1.
    pub listener: Option<TcpListener>,
    /// Addresses of the servers this one dials.
    pub peers: BTreeMap<Role, String>,
    /// Number of data owners that will connect; proxies only.
    pub owners: usize,
    pub timeout: Duration,
}

fn collect_uploads(streams: &mut [TcpStream], scale: u64) -> Result<Vec<Upload>> {
    let mut uploads = Vec::with_capacity(streams.len());
    for s in streams.iter_mut() {
        let u = decode_payload(&tcp::read_frame(s, ProtocolTag::Outsource)?)?;
        if u.scale != scale {
            return Err(CliError::ConfigMismatch {
                peer: format!("owner {}", u.owner_id),
                field: "precision",
                ours: scale.to_string(),
                theirs: u.scale.to_string(),
            });
        }
        uploads.push(u);
    }
    let mut order: Vec<usize> = (0..uploads.len()).collect();
    order.sort_by_key(|&k| uploads[k].owner_id);
    if order.windows(2).any(|w| uploads[w[0]].owner_id == uploads[w[1]].owner_id) {
        return Err(CliError::Payload("two owners share one id".into()));
    }
    Ok(order.into_iter().map(|k| uploads[k].clone()).collect())
}

/// Runs one server of a distributed session until the result is delivered.
pub fn run_server(role: Role, config: &SessionConfig, net: ServerNet, seed: &Seed) -> Result<ServerOutcome> {
    let owners = if role.is_proxy() { net.owners } else { 0 };
    if role.is_proxy() && owners == 0 {
        return Err(CliError::Config(format!("{role} needs at least one owner")));
    }
    let mut streams = tcp::dial_servers(role, |r| net.peers.get(&r).cloned(), net.timeout)?;
    let accepts = tcp::accepts_from(role);
    let mut owner_streams = Vec::new();
    if !accepts.is_empty() || owners > 0 {
        let listener = net
            .listener
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("{role} needs a listening address")))?;
        let accepted = tcp::accept_classified(listener, &accepts, owners)?;
        streams.extend(accepted.servers);
        owner_streams = accepted.owners;
    }
    let uploads = collect_uploads(&mut owner_streams, config.scale)?;
    let endpoint = tcp::endpoint(role, streams)?;
    let mut party = Party::setup(endpoint, seed, 0, config.exec)?;
    let outcome = serve(&mut party, config, &uploads)??;
    let mut result = outcome.share.share.to_le_bytes().to_vec();
    result.extend_from_slice(&config.scale.to_le_bytes());
    result.push(config.metric.code());
    for s in owner_streams.iter_mut() {
        tcp::write_frame(s, ProtocolTag::Result, &result)?;
    }
    Ok(outcome)
}

/// What an owner learns at the end of a session.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OwnerOutcome {
    pub metric: Metric,
    pub value: AucValue,
}

/// Shares `dataset` with the two proxies and waits for both result shares.
pub fn run_owner(
    dataset: &OwnerDataset,
    owner_id: u32,
    scale: u64,
    proxies: [&str; 2],
    seed: &Seed,
    timeout: Duration,
) -> Result<OwnerOutcome> {
    use std::io::Write;

    let mut rng = PairStream::keyed(seed, &[b"owner".as_slice(), &owner_id.to_le_bytes()].concat());
    let payloads = outsource(dataset, owner_id, scale, &mut rng)?;
    let mut streams = Vec::with_capacity(2);
    for (addr, payload) in proxies.iter().zip(&payloads) {
        let mut s = tcp::connect_retry(addr, timeout)?;
        s.write_all(&[OWNER_HELLO])?;
        tcp::write_frame(&mut s, ProtocolTag::Outsource, payload)?;
        streams.push(s);
    }
    let mut parts = Vec::with_capacity(2);
    for s in streams.iter_mut() {
        let bytes = tcp::read_frame(s, ProtocolTag::Result)?;
        if bytes.len() != 17 {
            return Err(CliError::Payload(format!("result of {} bytes", bytes.len())));
        }
        let share = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"));
        let their_scale = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let metric = Metric::from_code(bytes[16]).ok_or_else(|| CliError::Payload("unknown metric code".into()))?;
        if their_scale != scale {
            return Err(CliError::ConfigMismatch {
                peer: "proxy".into(),
                field: "precision",
                ours: scale.to_string(),
                theirs: their_scale.to_string(),
            });
        }
        parts.push((share, metric));
    }
    if parts[0].1 != parts[1].1 {
        return Err(CliError::Payload("proxies report different metrics".into()));
    }
    Ok(OwnerOutcome {
        metric: parts[0].1,
        value: decode_result(parts[0].0, parts[1].0, scale)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hello_roundtrip() {
        let h = Hello {
            metric: Metric::Aupr,
            delta: 5,
            scale: 10_000,
            lengths: Some(vec![3, 0, 7]),
        };
        assert_eq!(Hello::decode(&h.encode()).unwrap(), h);
        let helper = Hello { lengths: None, ..h.clone() };
        assert_eq!(Hello::decode(&helper.encode()).unwrap(), helper);
        assert!(Hello::decode(&[0; 5]).is_err());
    }

    #[test]
    fn capacity_limits() {
        let c = SessionConfig::new(Metric::Aupr, 1, 10_000).unwrap();
        assert!(c.check_capacity(1_000_000).is_ok());
        assert!(c.check_capacity(0).is_err());
        let c = SessionConfig::new(Metric::Aupr, 1, 1 << 40).unwrap();
        assert!(c.check_capacity(1 << 22).is_err());
        assert!(SessionConfig::new(Metric::Auroc, 2, 100).is_err());
        assert!(SessionConfig::new(Metric::Auroc, 1, 0).is_err());
    }

    #[test]
    fn label_checks() {
        assert!(check_labels(Metric::Auroc, 0, 4).is_err());
        assert!(check_labels(Metric::AurocTie, 4, 4).is_err());
        assert!(check_labels(Metric::Aupr, 4, 4).is_ok());
        assert!(check_labels(Metric::Auroc, 1, 4).is_ok());
    }
}
