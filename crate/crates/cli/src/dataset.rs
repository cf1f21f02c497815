//! Data-owner input: one `pcv,label` record per line.
//!
//! Blank lines and lines starting with `#` are skipped, as is a first line
//! whose fields are not numeric (a header). Confidences are decimal numbers in
//! `[0, 1]` parsed exactly; labels are `0` or `1`.

use std::fmt;
use std::path::Path;

use auc3pc_core::oracle::{fixed_point, PlainSample};
use num_rational::Ratio;

use crate::error::{CliError, Result};

const MAX_FRACTION_DIGITS: usize = 18;

/// Why one input line was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordError {
    FieldCount(usize),
    Number(String),
    PcvRange(String),
    Label(String),
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordError::FieldCount(n) => write!(f, "expected 2 fields, found {n}"),
            RecordError::Number(s) => write!(f, "`{s}` is not a decimal number"),
            RecordError::PcvRange(s) => write!(f, "confidence {s} is outside [0, 1]"),
            RecordError::Label(s) => write!(f, "label `{s}` is not 0 or 1"),
        }
    }
}

/// One owner's plain records, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OwnerDataset {
    pub records: Vec<PlainSample>,
}

impl OwnerDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.records.iter().filter(|r| r.label).count()
    }

    /// Fixed-point `(confidence, label)` pairs sorted by descending confidence.
    pub fn encode(&self, scale: u64) -> Vec<(u64, u64)> {
        let mut out: Vec<(u64, u64)> = self
            .records
            .iter()
            .map(|r| (fixed_point(r.pcv, scale), r.label as u64))
            .collect();
        out.sort_by_key(|r| std::cmp::Reverse(r.0));
        out
    }
}

pub fn ingest_csv(path: &Path) -> Result<OwnerDataset> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text).map_err(|e| match e {
        CliError::Record { line, reason, .. } => CliError::Record {
            file: path.display().to_string(),
            line,
            reason,
        },
        CliError::EmptyDataset(_) => CliError::EmptyDataset(path.display().to_string()),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<OwnerDataset> {
    let mut records = Vec::new();
    let mut seen_content = false;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let first = !seen_content;
        seen_content = true;
        match parse_record(line) {
            Ok(r) => records.push(r),
            Err(RecordError::Number(_)) if first && looks_like_header(line) => {}
            Err(reason) => {
                return Err(CliError::Record {
                    file: String::from("<input>"),
                    line: k + 1,
                    reason,
                })
            }
        }
    }
    if records.is_empty() {
        return Err(CliError::EmptyDataset(String::from("<input>")));
    }
    Ok(OwnerDataset { records })
}

fn looks_like_header(line: &str) -> bool {
    line.split(',')
        .all(|f| f.trim().chars().next().is_some_and(|c| c.is_ascii_alphabetic()))
}

fn parse_record(line: &str) -> std::result::Result<PlainSample, RecordError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 2 {
        return Err(RecordError::FieldCount(fields.len()));
    }
    let pcv = parse_decimal(fields[0])?;
    if pcv > Ratio::from_integer(1) {
        return Err(RecordError::PcvRange(fields[0].to_string()));
    }
    let label = match fields[1] {
        "0" => false,
        "1" => true,
        other => return Err(RecordError::Label(other.to_string())),
    };
    Ok(PlainSample::new(pcv, label))
}

/// Exact value of a non-negative decimal literal such as `0.25`, `.5` or `1`.
pub fn parse_decimal(s: &str) -> std::result::Result<Ratio<u64>, RecordError> {
    let bad = || RecordError::Number(s.to_string());
    if s.starts_with('-') {
        return Err(RecordError::PcvRange(s.to_string()));
    }
    let body = s.strip_prefix('+').unwrap_or(s);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let frac = frac.trim_end_matches('0');
    if frac.len() > MAX_FRACTION_DIGITS {
        return Err(bad());
    }
    let int = int.trim_start_matches('0');
    if int.len() > 1 {
        return Err(RecordError::PcvRange(s.to_string()));
    }
    let denom = 10u64.pow(frac.len() as u32);
    let whole: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let part: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let numer = whole
        .checked_mul(denom)
        .and_then(|w| w.checked_add(part))
        .ok_or_else(|| RecordError::PcvRange(s.to_string()))?;
    Ok(Ratio::new(numer, denom))
}
