//! Command-line front end.

use std::collections::BTreeMap;
use std::net::TcpListener;
use std::path::PathBuf;
use std::time::Duration;

use auc3pc_core::auc::Metric;
use auc3pc_core::random::Seed;
use auc3pc_core::{Execution, Role};
use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::dataset::{ingest_csv, OwnerDataset};
use crate::error::{CliError, Result};
use crate::session::{run_owner, run_server, simulate, ServerNet, SessionConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Owner,
    S0,
    S1,
    S2,
    /// Owners and all servers in one process.
    Sim,
}

impl RoleArg {
    fn server(self) -> Option<Role> {
        match self {
            RoleArg::S0 => Some(Role::S0),
            RoleArg::S1 => Some(Role::S1),
            RoleArg::S2 => Some(Role::S2),
            _ => None,
        }
    }
}

/// Privacy-preserving AUROC and AUPR over data split among several owners.
#[derive(Debug, Parser)]
#[command(name = "auc3pc", version)]
pub struct Args {
    #[arg(long, value_enum)]
    pub role: RoleArg,

    /// auroc, auroc-tie or aupr. Not needed by owners.
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<Metric>,

    /// Odd number of consecutive merge steps per shuffle.
    #[arg(long, default_value_t = 1)]
    pub delta: usize,

    /// Fixed-point scale of confidences and results.
    #[arg(long, default_value_t = auc3pc_core::auc::DEFAULT_SCALE)]
    pub precision: u64,

    /// CSV of `pcv,label` records. Repeat for several owners in sim mode.
    #[arg(long)]
    pub input: Vec<PathBuf>,

    /// 32-byte seed as 64 hex digits; random when absent.
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<Seed>,

    /// Address to accept connections on (S0 and S1).
    #[arg(long)]
    pub listen: Option<String>,

    /// Peer address as ROLE=ADDR, e.g. s0=127.0.0.1:7000.
    #[arg(long, value_parser = parse_connect)]
    pub connect: Vec<(Role, String)>,

    /// Number of owners a proxy waits for.
    #[arg(long, default_value_t = 1)]
    pub owners: usize,

    #[arg(long, default_value_t = 0)]
    pub owner_id: u32,

    /// Writes the merge leakage report to this file.
    #[arg(long)]
    pub leakage_report: Option<PathBuf>,

    /// Seconds to keep retrying connections.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,

    /// Disables data-parallel execution.
    #[arg(long)]
    pub sequential: bool,
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    s.parse().map_err(|e: auc3pc_core::Error| e.to_string())
}

pub fn parse_seed(s: &str) -> std::result::Result<Seed, String> {
    let bytes = hex::decode(s).map_err(|e| e.to_string())?;
    bytes
        .try_into()
        .map_err(|b: Vec<u8>| format!("seed has {} bytes, expected 32", b.len()))
}

fn parse_connect(s: &str) -> std::result::Result<(Role, String), String> {
    let (role, addr) = s.split_once('=').ok_or("expected ROLE=ADDR")?;
    let role = match role.to_ascii_lowercase().as_str() {
        "s0" => Role::S0,
        "s1" => Role::S1,
        "s2" => Role::S2,
        other => return Err(format!("unknown server {other:?}")),
    };
    Ok((role, addr.to_string()))
}

/// The JSON line printed on success.
#[derive(Debug, Serialize, PartialEq)]
pub struct Report {
    pub role: String,
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    pub scale: u64,
    pub leakage_report: Option<String>,
}

fn fresh_seed() -> Seed {
    rand::random()
}

fn config(args: &Args) -> Result<SessionConfig> {
    let metric = args
        .metric
        .ok_or_else(|| CliError::Config("--metric is required".into()))?;
    let mut c = SessionConfig::new(metric, args.delta, args.precision)?;
    if args.sequential {
        c.exec = Execution::Sequential;
    }
    Ok(c)
}

fn write_report(args: &Args, text: &str) -> Result<Option<String>> {
    match &args.leakage_report {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(Some(path.display().to_string()))
        }
        None => Ok(None),
    }
}

fn datasets(args: &Args) -> Result<Vec<OwnerDataset>> {
    if args.input.is_empty() {
        return Err(CliError::Config("--input is required".into()));
    }
    args.input.iter().map(|p| ingest_csv(p)).collect()
}

pub fn run(args: &Args) -> Result<Report> {
    let seed = args.seed.unwrap_or_else(fresh_seed);
    let timeout = Duration::from_secs(args.timeout);
    match args.role {
        RoleArg::Sim => {
            let c = config(args)?;
            let sim = simulate(&c, &datasets(args)?, &seed)?;
            Ok(Report {
                role: "sim".into(),
                metric: sim.metric.to_string(),
                value: Some(sim.value.to_string()),
                scale: c.scale,
                leakage_report: write_report(args, &sim.servers[0].report.render())?,
            })
        }
        RoleArg::Owner => {
            let data = match datasets(args)?.as_slice() {
                [one] => one.clone(),
                _ => return Err(CliError::Config("an owner takes exactly one --input".into())),
            };
            let peers: BTreeMap<Role, String> = args.connect.iter().cloned().collect();
            let addr = |r: Role| {
                peers
                    .get(&r)
                    .map(String::as_str)
                    .ok_or_else(|| CliError::Config(format!("--connect {r}=ADDR is required")))
            };
            let out = run_owner(&data, args.owner_id, args.precision, [addr(Role::S0)?, addr(Role::S1)?], &seed, timeout)?;
            Ok(Report {
                role: "owner".into(),
                metric: out.metric.to_string(),
                value: Some(out.value.to_string()),
                scale: out.value.scale,
                leakage_report: None,
            })
        }
        server => {
            let role = server.server().expect("server role");
            let c = config(args)?;
            let listener = args.listen.as_deref().map(TcpListener::bind).transpose()?;
            let net = ServerNet {
                listener,
                peers: args.connect.iter().cloned().collect(),
                owners: args.owners,
                timeout,
            };
            let out = run_server(role, &c, net, &seed)?;
            Ok(Report {
                role: role.to_string().to_lowercase(),
                metric: c.metric.to_string(),
                value: None,
                scale: c.scale,
                leakage_report: write_report(args, &out.report.render())?,
            })
        }
    }
}
