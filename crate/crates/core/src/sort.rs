//! Merging per-owner descending lists of shared records into one list.
//!
//! A merge alternates shuffles and moves. A shuffle compares every aligned
//! pair of the two lists and swaps the records so that the larger one of each
//! pair ends up in the longer list `L1`; afterwards the head of `L1` is the
//! overall maximum and is moved to the output without revealing anything.
//! With `δ > 1`, up to `δ - 1` further heads are moved by comparisons whose
//! outcome is opened to all servers, trading privacy for fewer shuffles.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::{open_to_all, SharedVec};
use crate::random::PairStream;
use crate::ring::Ring;
use crate::protocols::{compare, mux};
use crate::tag::ProtocolTag;

/// One proxy's shares of a list of (confidence, label) records. S2 holds
/// zero placeholders of the same length.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ShareList {
    pub con: Vec<u64>,
    pub label: Vec<u64>,
}

impl ShareList {
    pub fn new(con: Vec<u64>, label: Vec<u64>) -> Result<Self> {
        if con.len() != label.len() {
            return Err(Error::InvalidArgument(format!(
                "{} confidences but {} labels",
                con.len(),
                label.len()
            )));
        }
        Ok(Self { con, label })
    }

    pub fn placeholder(n: usize) -> Self {
        Self {
            con: vec![0; n],
            label: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.con.len()
    }

    pub fn is_empty(&self) -> bool {
        self.con.is_empty()
    }

    /// Splits plain records into the two proxies' lists.
    pub fn deal(con: &[u64], label: &[u64], rng: &mut PairStream) -> Result<[ShareList; 2]> {
        if con.len() != label.len() {
            return Err(Error::InvalidArgument("confidence and label counts differ".into()));
        }
        let c = SharedVec::share(con, Ring::L, rng);
        let l = SharedVec::share(label, Ring::L, rng);
        Ok([
            ShareList {
                con: c.s0,
                label: l.s0,
            },
            ShareList {
                con: c.s1,
                label: l.s1,
            },
        ])
    }

    /// Plain `(confidences, labels)` from both proxies' lists.
    pub fn reconstruct(a: &ShareList, b: &ShareList) -> (Vec<u64>, Vec<u64>) {
        let add = |x: &[u64], y: &[u64]| x.iter().zip(y).map(|(p, q)| p.wrapping_add(*q)).collect();
        (add(&a.con, &b.con), add(&a.label, &b.label))
    }

    fn with_capacity(n: usize) -> Self {
        Self {
            con: Vec::with_capacity(n),
            label: Vec::with_capacity(n),
        }
    }
}

/// An odd merge parameter `δ = 2a + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeltaParam(usize);

impl DeltaParam {
    pub fn new(delta: usize) -> Result<Self> {
        if delta.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("delta must be odd and positive, got {delta}")));
        }
        Ok(Self(delta))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// The value used for a cycle when the shorter list has `len2` records.
    pub fn effective(self, len2: usize) -> usize {
        if len2 <= 1 {
            return 1;
        }
        let largest_odd = if len2 % 2 == 1 { len2 } else { len2 - 1 };
        self.0.min(largest_odd)
    }
}

impl Default for DeltaParam {
    fn default() -> Self {
        Self(1)
    }
}

/// What the servers learn while merging two lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeRecord {
    pub len1: usize,
    pub len2: usize,
    pub delta: usize,
    /// Run-length encoded effective δ per cycle: `(δ, cycles)`.
    pub delta_used: Vec<(usize, usize)>,
    pub shuffles: usize,
    /// Outcomes of the opened head comparisons, 1 meaning the shorter list's head moved.
    pub revealed: Vec<u8>,
    pub possible_merges: BigUint,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LeakageReport {
    pub merges: Vec<MergeRecord>,
}

impl LeakageReport {
    pub fn total_revealed(&self) -> usize {
        self.merges.iter().map(|m| m.revealed.len()).sum()
    }

    pub fn total_shuffles(&self) -> usize {
        self.merges.iter().map(|m| m.shuffles).sum()
    }

    /// Line-oriented `key: value` text, one block per merge.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "merges: {}", self.merges.len());
        let _ = writeln!(s, "shuffles: {}", self.total_shuffles());
        let _ = writeln!(s, "revealed_selection_bits: {}", self.total_revealed());
        for (k, m) in self.merges.iter().enumerate() {
            let _ = writeln!(s, "[merge {k}]");
            let _ = writeln!(s, "lengths: {} {}", m.len1, m.len2);
            let _ = writeln!(s, "delta: {}", m.delta);
            let used: Vec<String> = m.delta_used.iter().map(|(d, c)| format!("{d}x{c}")).collect();
            let _ = writeln!(s, "delta_used: {}", used.join(" "));
            let _ = writeln!(s, "shuffles: {}", m.shuffles);
            let bits: String = m.revealed.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect();
            let _ = writeln!(s, "selections: {}", m.revealed.len());
            let _ = writeln!(s, "revealed_bits: {bits}");
            let _ = writeln!(s, "possible_merges: {}", m.possible_merges);
        }
        s
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of order-preserving interleavings of two sorted lists, `n1 >= n2 >= 1`.
pub fn possible_merge_count(n1: usize, n2: usize) -> Result<BigUint> {
    if n2 == 0 {
        return Err(Error::InvalidArgument("the shorter list is empty".into()));
    }
    if n1 < n2 {
        return Err(Error::InvalidArgument(format!("expected n1 >= n2, got {n1} < {n2}")));
    }
    Ok((0..n2)
        .map(|i| binomial(n1 + 1, i + 1) * binomial(n2 - 1, i))
        .sum())
}

/// Compares aligned records and puts the larger of each pair in `list1`.
pub fn shuffle_step(p: &mut Party, list1: &ShareList, list2: &ShareList) -> Result<(ShareList, ShareList)> {
    let n = list2.len();
    if n == 0 {
        return Err(Error::InvalidArgument("shuffle with an empty list".into()));
    }
    if list1.len() < n {
        return Err(Error::InvalidArgument(format!(
            "shuffle needs |list1| >= |list2|, got {} < {n}",
            list1.len()
        )));
    }
    p.scoped(ProtocolTag::Shuffle, |p| {
        let swap = compare(p, &list1.con[..n], &list2.con)?;
        let mut x = Vec::with_capacity(4 * n);
        x.extend_from_slice(&list1.con[..n]);
        x.extend_from_slice(&list1.label[..n]);
        x.extend_from_slice(&list2.con);
        x.extend_from_slice(&list2.label);
        let mut y = Vec::with_capacity(4 * n);
        y.extend_from_slice(&list2.con);
        y.extend_from_slice(&list2.label);
        y.extend_from_slice(&list1.con[..n]);
        y.extend_from_slice(&list1.label[..n]);
        let b: Vec<u64> = (0..4).flat_map(|_| swap.iter().copied()).collect();
        let z = mux(p, &x, &y, &b)?;
        let mut hi = ShareList {
            con: z[..n].to_vec(),
            label: z[n..2 * n].to_vec(),
        };
        hi.con.extend_from_slice(&list1.con[n..]);
        hi.label.extend_from_slice(&list1.label[n..]);
        let lo = ShareList {
            con: z[2 * n..3 * n].to_vec(),
            label: z[3 * n..].to_vec(),
        };
        Ok((hi, lo))
    })
}

struct Cursor {
    list: ShareList,
    head: usize,
}

impl Cursor {
    fn new(list: ShareList) -> Self {
        Self { list, head: 0 }
    }

    fn len(&self) -> usize {
        self.list.len() - self.head
    }

    fn rest(&self) -> ShareList {
        ShareList {
            con: self.list.con[self.head..].to_vec(),
            label: self.list.label[self.head..].to_vec(),
        }
    }

    fn head_con(&self) -> u64 {
        self.list.con[self.head]
    }

    fn move_head(&mut self, out: &mut ShareList) {
        out.con.push(self.list.con[self.head]);
        out.label.push(self.list.label[self.head]);
        self.head += 1;
    }

    fn drain_into(&mut self, out: &mut ShareList) {
        out.con.extend_from_slice(&self.list.con[self.head..]);
        out.label.extend_from_slice(&self.list.label[self.head..]);
        self.head = self.list.len();
    }
}

/// Merges two descending lists into one descending list.
pub fn merge_pair(
    p: &mut Party,
    a: ShareList,
    b: ShareList,
    delta: DeltaParam,
    report: Option<&mut LeakageReport>,
) -> Result<ShareList> {
    p.scoped(ProtocolTag::Merge, |p| {
        let (mut l1, mut l2) = if a.len() >= b.len() {
            (Cursor::new(a), Cursor::new(b))
        } else {
            (Cursor::new(b), Cursor::new(a))
        };
        let (len1, len2) = (l1.len(), l2.len());
        let mut out = ShareList::with_capacity(len1 + len2);
        let mut record = MergeRecord {
            len1,
            len2,
            delta: delta.get(),
            delta_used: Vec::new(),
            shuffles: 0,
            revealed: Vec::new(),
            possible_merges: if len2 == 0 {
                BigUint::one()
            } else {
                possible_merge_count(len1, len2)?
            },
        };
        while l1.len() > 0 && l2.len() > 0 {
            if l1.len() < l2.len() {
                std::mem::swap(&mut l1, &mut l2);
            }
            let d = delta.effective(l2.len());
            match record.delta_used.last_mut() {
                Some((last, cycles)) if *last == d => *cycles += 1,
                _ => record.delta_used.push((d, 1)),
            }
            let (hi, lo) = shuffle_step(p, &l1.rest(), &l2.rest())?;
            l1 = Cursor::new(hi);
            l2 = Cursor::new(lo);
            record.shuffles += 1;
            l1.move_head(&mut out);
            for _ in 1..d {
                if l1.len() == 0 || l2.len() == 0 {
                    break;
                }
                let less = compare(p, &[l1.head_con()], &[l2.head_con()])?;
                let bit = open_to_all(p, &less)?[0];
                if bit > 1 {
                    return Err(Error::Malformed(format!("selection bit opened to {bit}")));
                }
                record.revealed.push(bit as u8);
                if bit == 1 {
                    l2.move_head(&mut out);
                } else {
                    l1.move_head(&mut out);
                }
            }
        }
        l1.drain_into(&mut out);
        l2.drain_into(&mut out);
        if let Some(r) = report {
            r.merges.push(record);
        }
        Ok(out)
    })
}

/// Merges any number of descending lists as a balanced binary tree.
pub fn merge_many(
    p: &mut Party,
    lists: Vec<ShareList>,
    delta: DeltaParam,
    mut report: Option<&mut LeakageReport>,
) -> Result<ShareList> {
    if lists.is_empty() {
        return Err(Error::InvalidArgument("nothing to merge".into()));
    }
    let mut level = lists;
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge_pair(p, a, b, delta, report.as_deref_mut())?),
                None => next.push(a),
            }
        }
        level = next;
    }
    Ok(level.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_validation() {
        assert!(DeltaParam::new(0).is_err());
        assert!(DeltaParam::new(4).is_err());
        let d = DeltaParam::new(5).unwrap();
        assert_eq!(d.effective(1), 1);
        assert_eq!(d.effective(2), 1);
        assert_eq!(d.effective(4), 3);
        assert_eq!(d.effective(9), 5);
    }

    #[test]
    fn merge_count_examples() {
        let c = |a, b| possible_merge_count(a, b).unwrap();
        assert_eq!(c(2, 2), BigUint::from(6u32));
        assert_eq!(c(1, 1), BigUint::from(2u32));
        assert_eq!(c(3, 2), BigUint::from(10u32));
        assert!(possible_merge_count(3, 0).is_err());
        assert!(possible_merge_count(1, 2).is_err());
    }

    #[test]
    fn merge_count_is_binomial() {
        for n1 in 1..30 {
            for n2 in 1..=n1 {
                assert_eq!(possible_merge_count(n1, n2).unwrap(), binomial(n1 + n2, n2));
            }
        }
    }
}
