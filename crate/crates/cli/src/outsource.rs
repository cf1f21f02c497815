//! Owner-side secret sharing and the owner-to-proxy wire format.
//!
//! A payload is `owner_id: u32`, `scale: u64`, `count: u64`, then `count`
//! pairs of `(confidence share, label share)`, all little endian.

use auc3pc_core::random::PairStream;
use auc3pc_core::sort::ShareList;

use crate::dataset::OwnerDataset;
use crate::error::{CliError, Result};

const HEADER: usize = 20;

/// One owner's shared list as received by a proxy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Upload {
    pub owner_id: u32,
    pub scale: u64,
    pub list: ShareList,
}

/// Encodes, sorts and shares `dataset`, returning the payloads for S0 and S1.
pub fn outsource(dataset: &OwnerDataset, owner_id: u32, scale: u64, rng: &mut PairStream) -> Result<[Vec<u8>; 2]> {
    let records = dataset.encode(scale);
    let con: Vec<u64> = records.iter().map(|r| r.0).collect();
    let label: Vec<u64> = records.iter().map(|r| r.1).collect();
    let [a, b] = ShareList::deal(&con, &label, rng)?;
    Ok([encode_payload(owner_id, scale, &a), encode_payload(owner_id, scale, &b)])
}

pub fn encode_payload(owner_id: u32, scale: u64, list: &ShareList) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 16 * list.len());
    out.extend_from_slice(&owner_id.to_le_bytes());
    out.extend_from_slice(&scale.to_le_bytes());
    out.extend_from_slice(&(list.len() as u64).to_le_bytes());
    for (c, l) in list.con.iter().zip(&list.label) {
        out.extend_from_slice(&c.to_le_bytes());
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

pub fn decode_payload(bytes: &[u8]) -> Result<Upload> {
    if bytes.len() < HEADER {
        return Err(CliError::Payload(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let owner_id = u32::from_le_bytes(bytes[..4].try_into().expect("4 bytes"));
    let scale = word(4);
    let count = word(12);
    let expected = count
        .checked_mul(16)
        .and_then(|b| b.checked_add(HEADER as u64))
        .ok_or_else(|| CliError::Payload(format!("record count {count} overflows")))?;
    if bytes.len() as u64 != expected {
        return Err(CliError::Payload(format!(
            "{count} records need {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let n = count as usize;
    let mut con = Vec::with_capacity(n);
    let mut label = Vec::with_capacity(n);
    for k in 0..n {
        con.push(word(HEADER + 16 * k));
        label.push(word(HEADER + 16 * k + 8));
    }
    Ok(Upload {
        owner_id,
        scale,
        list: ShareList::new(con, label)?,
    })
}
