//! Exact plaintext reference computations.

use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::party::run_local;
use crate::primitives::{mul, private_compare, SharedVec};
use crate::protocols::{compare, divide, modulus_conversion, mux};
use crate::random::{PairStream, StreamOwner};
use crate::ring::{zp, Ring, K};
use crate::tag::ProtocolTag;
use crate::transport::Role;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlainSample {
    pub pcv: Ratio<u64>,
    pub label: bool,
}

impl PlainSample {
    pub fn new(pcv: Ratio<u64>, label: bool) -> Self {
        Self { pcv, label }
    }

    /// A sample whose confidence is `numer / scale`.
    pub fn scaled(numer: u64, scale: u64, label: bool) -> Self {
        Self {
            pcv: Ratio::new(numer, scale),
            label,
        }
    }
}

fn big(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Stable descending sort by confidence.
pub fn sort_descending(samples: &[PlainSample]) -> Vec<PlainSample> {
    let mut v = samples.to_vec();
    v.sort_by_key(|s| std::cmp::Reverse(s.pcv));
    v
}

fn class_counts(samples: &[PlainSample]) -> (u64, u64) {
    let pos = samples.iter().filter(|s| s.label).count() as u64;
    (pos, samples.len() as u64 - pos)
}

fn require_both_classes(samples: &[PlainSample]) -> Result<(u64, u64)> {
    let (pos, neg) = class_counts(samples);
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidArgument("both classes must be present".into()));
    }
    Ok((pos, neg))
}

/// `(TP, FP)` at the last record of every run of equal confidences.
fn group_ends(sorted: &[PlainSample]) -> Vec<(u64, u64, u64)> {
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    for (j, s) in sorted.iter().enumerate() {
        if s.label {
            tp += 1;
        } else {
            fp += 1;
        }
        if j + 1 == sorted.len() || sorted[j + 1].pcv != s.pcv {
            out.push((tp, fp, j as u64 + 1));
        }
    }
    out
}

/// ROC area as a sum of rectangles, in the given order. Requires distinct confidences.
pub fn plain_auroc_no_tie(samples: &[PlainSample]) -> Result<BigRational> {
    let (pos, neg) = require_both_classes(samples)?;
    let sorted = sort_descending(samples);
    if sorted.windows(2).any(|w| w[0].pcv == w[1].pcv) {
        return Err(Error::InvalidArgument("confidences are not distinct".into()));
    }
    Ok(ordered_rectangles(&sorted, pos, neg))
}

/// Rectangle rule over records exactly as ordered, ignoring ties.
pub fn plain_auroc_ordered(samples: &[PlainSample]) -> Result<BigRational> {
    let (pos, neg) = require_both_classes(samples)?;
    Ok(ordered_rectangles(samples, pos, neg))
}

fn ordered_rectangles(samples: &[PlainSample], pos: u64, neg: u64) -> BigRational {
    let mut tp = 0u64;
    let mut n = 0u64;
    for s in samples {
        if s.label {
            tp += 1;
        } else {
            n += tp;
        }
    }
    BigRational::new(BigInt::from(n), BigInt::from(pos) * BigInt::from(neg))
}

/// ROC area with one trapezoid per run of tied confidences.
pub fn plain_auroc_tie(samples: &[PlainSample]) -> Result<BigRational> {
    let (pos, neg) = require_both_classes(samples)?;
    let sorted = sort_descending(samples);
    let mut area = BigRational::zero();
    let (mut ptp, mut pfp) = (0u64, 0u64);
    for (tp, fp, _) in group_ends(&sorted) {
        area += (big(ptp) + big(tp)) * big(fp - pfp) / big(2);
        ptp = tp;
        pfp = fp;
    }
    Ok(area / (big(pos) * big(neg)))
}

/// Precision-recall area with one trapezoid per run of tied confidences,
/// starting from recall 0 and precision 1.
pub fn plain_aupr(samples: &[PlainSample]) -> Result<BigRational> {
    let (pos, _) = class_counts(samples);
    if pos == 0 {
        return Err(Error::InvalidArgument("no positive samples".into()));
    }
    let sorted = sort_descending(samples);
    let mut area = BigRational::zero();
    let mut prev_precision = BigRational::one();
    let mut prev_tp = 0u64;
    for (tp, _, rank) in group_ends(&sorted) {
        let precision = BigRational::new(BigInt::from(tp), BigInt::from(rank));
        area += (&prev_precision + &precision) * big(tp - prev_tp) / big(2);
        prev_precision = precision;
        prev_tp = tp;
    }
    Ok(area / big(pos))
}

/// `floor(r * scale)` for a non-negative rational.
pub fn floor_scaled(r: &BigRational, scale: u64) -> u64 {
    (r * big(scale))
        .floor()
        .to_integer()
        .to_u64()
        .expect("non-negative value in range")
}

/// `round(pcv * scale)`, halves rounding up.
pub fn fixed_point(pcv: Ratio<u64>, scale: u64) -> u64 {
    let r = BigRational::new(BigInt::from(*pcv.numer()), BigInt::from(*pcv.denom())) * big(scale);
    let twice = (r * big(2) + big(1)) / big(2);
    twice.floor().to_integer().to_u64().expect("in range")
}

/// Absolute distance between a fixed-point value and an exact rational, in units of `1/scale`.
pub fn distance_in_ulps(value: u64, scale: u64, exact: &BigRational) -> BigRational {
    (big(value) - exact * big(scale)).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolId {
    Mul,
    Mux,
    PrivateCompare,
    ModulusConversion,
    Compare,
    Divide,
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProtocolId::Mul => "mul",
            ProtocolId::Mux => "mux",
            ProtocolId::PrivateCompare => "private_compare",
            ProtocolId::ModulusConversion => "modulus_conversion",
            ProtocolId::Compare => "compare",
            ProtocolId::Divide => "divide",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub protocol: ProtocolId,
    pub instances: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.instances > 0
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} instances, {} failures", self.protocol, self.instances, self.failures)?;
        if let Some(e) = &self.first_failure {
            write!(f, " (first: {e})")?;
        }
        Ok(())
    }
}

const BATCH: usize = 1 << 16;

/// A batch of plain inputs and the expected plain outputs.
struct Batch {
    a: Vec<u64>,
    b: Vec<u64>,
    c: Vec<u64>,
}

fn domain(protocol: ProtocolId, bound: u64) -> Result<Vec<Batch>> {
    if bound == 0 {
        return Err(Error::InvalidArgument("empty domain".into()));
    }
    let mut batches = Vec::new();
    let mut cur = Batch {
        a: Vec::new(),
        b: Vec::new(),
        c: Vec::new(),
    };
    let mut push = |a: u64, b: u64, c: u64, batches: &mut Vec<Batch>| {
        cur.a.push(a);
        cur.b.push(b);
        cur.c.push(c);
        if cur.a.len() == BATCH {
            batches.push(std::mem::replace(
                &mut cur,
                Batch {
                    a: Vec::new(),
                    b: Vec::new(),
                    c: Vec::new(),
                },
            ));
        }
    };
    match protocol {
        ProtocolId::Mul | ProtocolId::Compare | ProtocolId::PrivateCompare => {
            for x in 0..bound {
                for y in 0..bound {
                    push(x, y, 0, &mut batches);
                }
            }
        }
        ProtocolId::Mux => {
            for x in 0..bound {
                for y in 0..bound {
                    push(x, y, 0, &mut batches);
                    push(x, y, 1, &mut batches);
                }
            }
        }
        ProtocolId::ModulusConversion => {
            for x in 0..bound.min(K) {
                push(x, 0, 0, &mut batches);
                push(K - 1 - x, 0, 0, &mut batches);
            }
        }
        ProtocolId::Divide => {
            for x in 1..=bound {
                for y in 1..=bound {
                    push(x, y, 0, &mut batches);
                }
            }
        }
    }
    if !cur.a.is_empty() {
        batches.push(cur);
    }
    Ok(batches)
}

const CHECK_SCALE: u64 = 10_000;

/// Runs `protocol` on every input of a small domain under random sharings and
/// compares the reconstructed outputs with plain semantics.
///
/// Domains: pairs in `[0, bound)^2` for mul, compare and private compare
/// (with both values of the common bit alternating), the same pairs with both
/// selection bits for mux, `[0, bound)` and `[K - bound, K)` for modulus
/// conversion, and `[1, bound]^2` for division at scale 10^4.
pub fn brute_force_protocol_check(protocol: ProtocolId, bound: u64) -> Result<CheckReport> {
    let batches = domain(protocol, bound)?;
    let bits = 64 - bound.saturating_sub(1).leading_zeros().min(63);
    let mut dealer = PairStream::new(&[0x5a; 32], StreamOwner::Proxies, bound, ProtocolTag::Script);
    let mut report = CheckReport {
        protocol,
        instances: 0,
        failures: 0,
        first_failure: None,
    };
    for (k, batch) in batches.iter().enumerate() {
        let n = batch.a.len();
        let ring = if protocol == ProtocolId::ModulusConversion {
            Ring::K
        } else {
            Ring::L
        };
        let xa = SharedVec::share(&batch.a, ring, &mut dealer);
        let xb = SharedVec::share(&batch.b, ring, &mut dealer);
        let xc = SharedVec::share(&batch.c, ring, &mut dealer);
        let nbits: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let (rb0, rb1): (Vec<u8>, Vec<u8>) = if protocol == ProtocolId::PrivateCompare {
            let width = bits as usize;
            let mut s0 = Vec::with_capacity(n * width);
            let mut s1 = Vec::with_capacity(n * width);
            for &v in &batch.a {
                for j in 0..width {
                    let bit = ((v >> (width - 1 - j)) & 1) as u8;
                    let r = dealer.next_zp();
                    s0.push(r);
                    s1.push(zp::sub(bit, r));
                }
            }
            (s0, s1)
        } else {
            (Vec::new(), Vec::new())
        };
        let seed = crate::random::derive_key(&[0x17; 32], &[&(k as u64).to_le_bytes()]);
        let out = run_local(&seed, Execution::Parallel, |p| {
            let r = p.role();
            match protocol {
                ProtocolId::Mul => mul(p, &xa.view(r), &xb.view(r)),
                ProtocolId::Mux => mux(p, &xa.view(r), &xb.view(r), &xc.view(r)),
                ProtocolId::ModulusConversion => modulus_conversion(p, &xa.view(r)),
                ProtocolId::Compare => compare(p, &xa.view(r), &xb.view(r)),
                ProtocolId::Divide => divide(p, &xa.view(r), &xb.view(r), bound, CHECK_SCALE),
                ProtocolId::PrivateCompare => {
                    let shares = match r {
                        Role::S0 => rb0.clone(),
                        Role::S1 => rb1.clone(),
                        Role::S2 => vec![0; n * bits as usize],
                    };
                    private_compare(p, &shares, &batch.b, &nbits, bits)
                        .map(|v| v.into_iter().map(u64::from).collect())
                }
            }
        })?;
        for i in 0..n {
            let (x, y, c) = (batch.a[i], batch.b[i], batch.c[i]);
            let (got, expected) = match protocol {
                ProtocolId::PrivateCompare => (out[0][i] ^ out[1][i], nbits[i] as u64 ^ (x > y) as u64),
                _ => {
                    let got = out[0][i].wrapping_add(out[1][i]);
                    let expected = match protocol {
                        ProtocolId::Mul => x.wrapping_mul(y),
                        ProtocolId::Mux => {
                            if c == 0 {
                                x
                            } else {
                                y
                            }
                        }
                        ProtocolId::ModulusConversion => x,
                        ProtocolId::Compare => (x < y) as u64,
                        ProtocolId::Divide => {
                            (x as u128 * CHECK_SCALE as u128 / y as u128) as u64
                        }
                        ProtocolId::PrivateCompare => unreachable!(),
                    };
                    (got, expected)
                }
            };
            report.instances += 1;
            if got != expected {
                report.failures += 1;
                if report.first_failure.is_none() {
                    report.first_failure =
                        Some(format!("inputs ({x}, {y}, {c}): expected {expected}, got {got}"));
                }
            }
        }
    }
    Ok(report)
}
