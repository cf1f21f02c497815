//! Tie detection and the area computations over a merged, descending list.
//!
//! Confidences and results are fixed-point integers at a public scale `F`.
//! Every engine returns each proxy's share of `floor(AUC * F)` up to the
//! truncation of the intermediate divisions.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::mul;
use crate::protocols::{divide, mux};
use crate::random::Permutation;
use crate::sort::{merge_many, DeltaParam, LeakageReport, ShareList};
use crate::tag::ProtocolTag;
use crate::transport::codec::{expect_words, parse_words, words};
use crate::transport::Role;

pub const DEFAULT_SCALE: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Auroc,
    AurocTie,
    Aupr,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Auroc, Metric::AurocTie, Metric::Aupr];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Auroc => "auroc",
            Metric::AurocTie => "auroc-tie",
            Metric::Aupr => "aupr",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric {s:?}")))
    }
}

/// x-axis register of the precision-recall accumulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RecallAxis {
    /// Cumulative true positives; yields the standard PR trapezoid.
    #[default]
    TruePositives,
    /// Cumulative rank, advancing by one per record.
    Rank,
}

/// One proxy's share of a result at scale `scale`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AucShare {
    pub share: u64,
    pub scale: u64,
}

/// A reconstructed result: the area equals `value / scale`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AucResult {
    pub value: u64,
    pub scale: u64,
}

impl AucResult {
    pub fn reconstruct(a: AucShare, b: AucShare) -> Result<Self> {
        if a.scale != b.scale {
            return Err(Error::InvalidArgument(format!(
                "shares at scales {} and {}",
                a.scale, b.scale
            )));
        }
        Ok(Self {
            value: a.share.wrapping_add(b.share),
            scale: a.scale,
        })
    }
}

fn shared_constant(p: &Party, v: u64) -> u64 {
    if p.role() == Role::S1 {
        v
    } else {
        0
    }
}

/// Shares of 1 where a confidence differs from its successor; the last mark is 1.
pub fn detect_ties(p: &mut Party, con: &[u64]) -> Result<Vec<u64>> {
    let m = con.len();
    if m == 0 {
        return Err(Error::InvalidArgument("tie detection on an empty list".into()));
    }
    p.scoped(ProtocolTag::DetectTies, |p| {
        let last = shared_constant(p, 1);
        if m == 1 {
            return Ok(vec![last]);
        }
        if p.is_helper() {
            let a = parse_words(&p.recv(Role::S0)?)?;
            let b = parse_words(&p.recv(Role::S1)?)?;
            if a.len() != b.len() || a.len() < m - 1 {
                return Err(Error::Malformed(format!(
                    "masked differences of lengths {} and {}",
                    a.len(),
                    b.len()
                )));
            }
            let rng = p.private(ProtocolTag::DetectTies);
            let mut o0 = Vec::with_capacity(a.len());
            let mut o1 = Vec::with_capacity(a.len());
            for (x, y) in a.iter().zip(&b) {
                let bit = (x ^ y != 0) as u64;
                let r = rng.next_u64();
                o0.push(r);
                o1.push(bit.wrapping_sub(r));
            }
            p.send(Role::S0, &words(&o0))?;
            p.send(Role::S1, &words(&o1))?;
            return Ok(vec![0; m]);
        }
        let is_s0 = p.role() == Role::S0;
        let items = m - 1;
        let rng = p.common(ProtocolTag::DetectTies)?;
        let mut masked = Vec::with_capacity(items);
        for j in 0..items {
            let mut d = con[j].wrapping_sub(con[j + 1]);
            if is_s0 {
                d = d.wrapping_neg();
            }
            d ^= rng.next_u64();
            let sigma = rng.shuffled_indices(64);
            masked.push(permute_bits(d, &sigma));
        }
        let pi = rng.next_permutation(items)?;
        let real = pi.apply(&masked);
        let lo = m.div_ceil(4) as u64;
        let hi = m.div_ceil(2) as u64;
        let dummies = (lo + rng.next_below(hi - lo + 1)) as usize;
        let total = items + dummies;
        let mut is_dummy = vec![false; total];
        for &slot in &rng.shuffled_indices(total)[..dummies] {
            is_dummy[slot] = true;
        }
        let mut payload = Vec::with_capacity(total);
        let mut next_real = real.into_iter();
        for &dummy in &is_dummy {
            if dummy {
                let v = rng.next_u64();
                let nonzero = rng.next_bit() == 1;
                let delta = 1 + rng.next_below(u64::MAX);
                payload.push(if nonzero && !is_s0 { v ^ delta } else { v });
            } else {
                payload.push(next_real.next().unwrap());
            }
        }
        p.send(Role::S2, &words(&payload))?;
        let marks = expect_words(&p.recv(Role::S2)?, total)?;
        let kept: Vec<u64> = marks
            .into_iter()
            .zip(&is_dummy)
            .filter(|(_, &d)| !d)
            .map(|(v, _)| v)
            .collect();
        let mut out = pi.inverse().apply(&kept);
        out.push(last);
        Ok(out)
    })
}

fn permute_bits(v: u64, sigma: &[usize]) -> u64 {
    sigma
        .iter()
        .enumerate()
        .fold(0u64, |acc, (k, &src)| acc | (((v >> src) & 1) << k))
}

fn prefix_sums(values: &[u64]) -> Vec<u64> {
    let mut acc = 0u64;
    values
        .iter()
        .map(|v| {
            acc = acc.wrapping_add(*v);
            acc
        })
        .collect()
}

/// Counts of positives and negatives up to each rank.
fn rates(p: &Party, labels: &[u64]) -> (Vec<u64>, Vec<u64>) {
    let tp = prefix_sums(labels);
    let fp = tp
        .iter()
        .enumerate()
        .map(|(j, t)| shared_constant(p, j as u64 + 1).wrapping_sub(*t))
        .collect();
    (tp, fp)
}

fn check_records(records: &ShareList, marks: Option<&[u64]>) -> Result<usize> {
    let m = records.len();
    if m == 0 {
        return Err(Error::InvalidArgument("no records".into()));
    }
    if records.label.len() != m {
        return Err(Error::InvalidArgument("confidence and label counts differ".into()));
    }
    if let Some(t) = marks {
        if t.len() != m {
            return Err(Error::InvalidArgument(format!("{} tie marks for {m} records", t.len())));
        }
    }
    Ok(m)
}

fn m_squared(m: usize, factor: u64) -> Result<u64> {
    (m as u64)
        .checked_mul(m as u64)
        .and_then(|v| v.checked_mul(factor))
        .ok_or_else(|| Error::InvalidArgument(format!("{m} records is too many")))
}

/// Area under the ROC curve assuming distinct confidences.
pub fn auroc_no_ties(p: &mut Party, records: &ShareList, scale: u64) -> Result<AucShare> {
    let m = check_records(records, None)?;
    let bound = m_squared(m, 1)?;
    p.scoped(ProtocolTag::AurocNoTies, |p| {
        let (tp, fp) = rates(p, &records.label);
        let mut left = tp.clone();
        left.push(tp[m - 1]);
        let mut right = Vec::with_capacity(m + 1);
        let mut prev = 0u64;
        for f in &fp {
            right.push(f.wrapping_sub(prev));
            prev = *f;
        }
        right.push(fp[m - 1]);
        let prod = mul(p, &left, &right)?;
        let n = prod[..m].iter().fold(0u64, |a, b| a.wrapping_add(*b));
        let d = prod[m];
        let z = divide(p, &[n], &[d], bound, scale)?;
        Ok(AucShare { share: z[0], scale })
    })
}

/// Area under the ROC curve with trapezoids over tie groups.
pub fn auroc_with_ties(p: &mut Party, records: &ShareList, marks: &[u64], scale: u64) -> Result<AucShare> {
    let m = check_records(records, Some(marks))?;
    let bound = m_squared(m, 2)?;
    p.scoped(ProtocolTag::AurocTies, |p| {
        let (tp, fp) = rates(p, &records.label);
        let (mut ptp, mut pfp) = (0u64, 0u64);
        let (mut n1, mut n2) = (0u64, 0u64);
        for j in 0..m {
            let dfp = fp[j].wrapping_sub(pfp);
            let dtp = tp[j].wrapping_sub(ptp);
            let a = mul(p, &[ptp, dtp], &[dfp, dfp])?;
            let b = mul(p, &a, &[marks[j], marks[j]])?;
            n1 = n1.wrapping_add(b[0]);
            n2 = n2.wrapping_add(b[1]);
            let anchors = mux(p, &[pfp, ptp], &[fp[j], tp[j]], &[marks[j], marks[j]])?;
            pfp = anchors[0];
            ptp = anchors[1];
        }
        let n = n1.wrapping_mul(2).wrapping_add(n2);
        let d = mul(p, &[tp[m - 1]], &[fp[m - 1]])?[0].wrapping_mul(2);
        let z = divide(p, &[n], &[d], bound, scale)?;
        Ok(AucShare { share: z[0], scale })
    })
}

/// Area under the precision-recall curve with trapezoids over tie groups.
pub fn aupr(
    p: &mut Party,
    records: &ShareList,
    marks: &[u64],
    scale: u64,
    axis: RecallAxis,
) -> Result<AucShare> {
    let m = check_records(records, Some(marks))?;
    let final_bound = (m as u64)
        .checked_mul(scale)
        .and_then(|v| v.checked_mul(2))
        .ok_or_else(|| Error::InvalidArgument(format!("{m} records is too many")))?;
    p.scoped(ProtocolTag::Aupr, |p| {
        let tp = prefix_sums(&records.label);
        let rank: Vec<u64> = (1..=m as u64).map(|j| shared_constant(p, j)).collect();
        let pi = if p.is_helper() {
            Permutation::identity(m)
        } else {
            p.common(ProtocolTag::Aupr)?.next_permutation(m)?
        };
        let hidden = divide(p, &pi.apply(&tp), &pi.apply(&rank), m as u64, scale)?;
        let precision = pi.inverse().apply(&hidden);
        let x = match axis {
            RecallAxis::TruePositives => &tp,
            RecallAxis::Rank => &rank,
        };
        let mut ppc = shared_constant(p, scale);
        let mut px = 0u64;
        let (mut n1, mut n2) = (0u64, 0u64);
        for j in 0..m {
            let dx = x[j].wrapping_sub(px);
            let dpc = precision[j].wrapping_sub(ppc);
            let a = mul(p, &[ppc, dx], &[dx, dpc])?;
            let b = mul(p, &a, &[marks[j], marks[j]])?;
            n1 = n1.wrapping_add(b[0]);
            n2 = n2.wrapping_add(b[1]);
            let anchors = mux(p, &[ppc, px], &[precision[j], x[j]], &[marks[j], marks[j]])?;
            ppc = anchors[0];
            px = anchors[1];
        }
        let n = n1.wrapping_mul(2).wrapping_add(n2);
        let d = tp[m - 1].wrapping_mul(2);
        let z = divide(p, &[n], &[d], final_bound, 1)?;
        Ok(AucShare { share: z[0], scale })
    })
}

/// Merges the owners' lists and evaluates `metric` on the result.
pub fn evaluate(
    p: &mut Party,
    lists: Vec<ShareList>,
    metric: Metric,
    delta: DeltaParam,
    scale: u64,
    report: Option<&mut LeakageReport>,
) -> Result<AucShare> {
    let merged = merge_many(p, lists, delta, report)?;
    match metric {
        Metric::Auroc => auroc_no_ties(p, &merged, scale),
        Metric::AurocTie => {
            let marks = detect_ties(p, &merged.con)?;
            auroc_with_ties(p, &merged, &marks, scale)
        }
        Metric::Aupr => {
            let marks = detect_ties(p, &merged.con)?;
            aupr(p, &merged, &marks, scale, RecallAxis::default())
        }
    }
}
