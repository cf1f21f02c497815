//! Additive sharing, Beaver multiplication and private comparison against a
//! public value.
//!
//! All interactive operations are vectorised: one call processes a whole
//! slice in a constant number of rounds. S2 takes part in every call with
//! placeholder slices of the right length (its values are ignored) and gets
//! zeros back for arithmetic outputs.

use crate::error::{Error, Result};
use crate::party::Party;
use crate::random::PairStream;
use crate::ring::{zp, BitVector, Ring, RingElement, ELL, P};
use crate::tag::ProtocolTag;
use crate::transport::codec::{expect_len, expect_words, words};
use crate::transport::Role;

/// One proxy's additive share of a ring element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Share {
    element: RingElement,
    owner: Role,
}

impl Share {
    pub fn new(element: RingElement, owner: Role) -> Result<Self> {
        if !owner.is_proxy() {
            return Err(Error::WrongRole(owner));
        }
        Ok(Self { element, owner })
    }

    pub fn element(&self) -> RingElement {
        self.element
    }

    pub fn value(&self) -> u64 {
        self.element.value()
    }

    pub fn owner(&self) -> Role {
        self.owner
    }
}

/// Splits `x` into two uniformly random shares that sum to `x`.
pub fn make_shares(x: RingElement, rng: &mut PairStream) -> (Share, Share) {
    let ring = x.ring();
    let r = rng
        .next_element(ring, None)
        .expect("unbounded draws cannot fail");
    let other = x.sub(r).expect("same ring");
    (
        Share {
            element: r,
            owner: Role::S0,
        },
        Share {
            element: other,
            owner: Role::S1,
        },
    )
}

pub fn reconstruct(s0: Share, s1: Share) -> Result<RingElement> {
    if s0.owner == s1.owner {
        return Err(Error::OwnerMismatch(s0.owner, s1.owner));
    }
    s0.element.add(s1.element)
}

/// Per-bit `Z_67` shares of a 64-bit value, most significant bit first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitFieldShares {
    components: [u8; ELL as usize],
    owner: Role,
}

impl BitFieldShares {
    pub fn new(components: [u8; ELL as usize], owner: Role) -> Result<Self> {
        if let Some(&c) = components.iter().find(|&&c| c >= P) {
            return Err(Error::OutOfRange {
                value: c as u128,
                ring: Ring::P,
            });
        }
        if !owner.is_proxy() {
            return Err(Error::WrongRole(owner));
        }
        Ok(Self { components, owner })
    }

    pub fn split(x: u64, rng: &mut PairStream) -> (Self, Self) {
        let bits = BitVector::from_u64(x);
        let mut a = [0u8; ELL as usize];
        let mut b = [0u8; ELL as usize];
        for j in 0..ELL as usize {
            a[j] = rng.next_zp();
            b[j] = zp::sub(bits.bit(j), a[j]);
        }
        (
            Self {
                components: a,
                owner: Role::S0,
            },
            Self {
                components: b,
                owner: Role::S1,
            },
        )
    }

    pub fn components(&self) -> &[u8; ELL as usize] {
        &self.components
    }

    pub fn owner(&self) -> Role {
        self.owner
    }

    pub fn reconstruct(a: &Self, b: &Self) -> Result<BitVector> {
        if a.owner == b.owner {
            return Err(Error::OwnerMismatch(a.owner, b.owner));
        }
        let mut v = 0u64;
        for j in 0..ELL as usize {
            let bit = zp::add(a.components[j], b.components[j]);
            if bit > 1 {
                return Err(Error::Malformed(format!("bit {j} reconstructs to {bit}")));
            }
            v = (v << 1) | bit as u64;
        }
        Ok(BitVector::from_u64(v))
    }
}

/// One proxy's shares of a multiplication triple `c = a * b` over `Z_L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BeaverTriple {
    pub a: Share,
    pub b: Share,
    pub c: Share,
}

impl BeaverTriple {
    pub fn deal(rng: &mut PairStream) -> (Self, Self) {
        let t = deal_raw(rng);
        let s = |v: u64, owner| Share {
            element: RingElement::reduced(v as u128, Ring::L),
            owner,
        };
        (
            Self {
                a: s(t[0], Role::S0),
                b: s(t[1], Role::S0),
                c: s(t[2], Role::S0),
            },
            Self {
                a: s(t[3], Role::S1),
                b: s(t[4], Role::S1),
                c: s(t[5], Role::S1),
            },
        )
    }
}

/// `[a0, b0, c0, a1, b1, c1]`
#[inline]
fn deal_raw(rng: &mut PairStream) -> [u64; 6] {
    let a = rng.next_u64();
    let b = rng.next_u64();
    let c = a.wrapping_mul(b);
    let a0 = rng.next_u64();
    let b0 = rng.next_u64();
    let c0 = rng.next_u64();
    [
        a0,
        b0,
        c0,
        a.wrapping_sub(a0),
        b.wrapping_sub(b0),
        c.wrapping_sub(c0),
    ]
}

/// Both proxies' shares of a vector, kept together by the dealer.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SharedVec {
    pub s0: Vec<u64>,
    pub s1: Vec<u64>,
}

impl SharedVec {
    pub fn share(values: &[u64], ring: Ring, rng: &mut PairStream) -> Self {
        let s0: Vec<u64> = values.iter().map(|_| rng.next_element(ring, None).unwrap().value()).collect();
        let s1 = values
            .iter()
            .zip(&s0)
            .map(|(&v, &r)| ring.sub(ring.reduce(v as u128), r))
            .collect();
        Self { s0, s1 }
    }

    pub fn len(&self) -> usize {
        self.s0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s0.is_empty()
    }

    /// The slice a party passes into a protocol; zeros for S2.
    pub fn view(&self, role: Role) -> Vec<u64> {
        match role {
            Role::S0 => self.s0.clone(),
            Role::S1 => self.s1.clone(),
            Role::S2 => vec![0; self.s0.len()],
        }
    }

    pub fn from_outputs(outputs: &[Vec<u64>; 3]) -> Self {
        Self {
            s0: outputs[0].clone(),
            s1: outputs[1].clone(),
        }
    }

    pub fn reconstruct(&self, ring: Ring) -> Vec<u64> {
        self.s0
            .iter()
            .zip(&self.s1)
            .map(|(&a, &b)| ring.add(a, b))
            .collect()
    }
}

pub(crate) fn check_lengths(lens: &[usize]) -> Result<usize> {
    let n = lens.first().copied().unwrap_or(0);
    if lens.iter().any(|&l| l != n) {
        return Err(Error::InvalidArgument(format!("input lengths differ: {lens:?}")));
    }
    Ok(n)
}

/// Element-wise product of two shared vectors over `Z_L`. One round.
pub fn mul(p: &mut Party, x: &[u64], y: &[u64]) -> Result<Vec<u64>> {
    let n = check_lengths(&[x.len(), y.len()])?;
    p.scoped(ProtocolTag::Mul, |p| {
        if p.is_helper() {
            let fork = p.private(ProtocolTag::Mul).fork();
            let parts = p.exec().for_chunks(n, |c, range| {
                let mut s = fork.stream(c);
                let mut t0 = Vec::with_capacity(range.len() * 3);
                let mut t1 = Vec::with_capacity(range.len() * 3);
                for _ in range {
                    let t = deal_raw(&mut s);
                    t0.extend_from_slice(&t[..3]);
                    t1.extend_from_slice(&t[3..]);
                }
                (words(&t0), words(&t1))
            });
            let (mut m0, mut m1) = (Vec::with_capacity(n * 24), Vec::with_capacity(n * 24));
            for (a, b) in parts {
                m0.extend(a);
                m1.extend(b);
            }
            p.send_offline(Role::S0, &m0)?;
            p.send_offline(Role::S1, &m1)?;
            return Ok(vec![0; n]);
        }
        let t = expect_words(&p.recv(Role::S2)?, 3 * n)?;
        let mut ef = Vec::with_capacity(2 * n);
        for k in 0..n {
            ef.push(x[k].wrapping_sub(t[3 * k]));
            ef.push(y[k].wrapping_sub(t[3 * k + 1]));
        }
        let other = expect_words(&p.exchange(&words(&ef))?, 2 * n)?;
        let i = p.index();
        Ok((0..n)
            .map(|k| {
                let e = ef[2 * k].wrapping_add(other[2 * k]);
                let f = ef[2 * k + 1].wrapping_add(other[2 * k + 1]);
                let (a, b, c) = (t[3 * k], t[3 * k + 1], t[3 * k + 2]);
                (i.wrapping_mul(e).wrapping_mul(f))
                    .wrapping_add(f.wrapping_mul(a))
                    .wrapping_add(e.wrapping_mul(b))
                    .wrapping_add(c)
            })
            .collect())
    })
}

/// Opens a shared vector to both proxies. One round; S2 receives nothing.
pub fn reveal(p: &mut Party, x: &[u64]) -> Result<Vec<u64>> {
    p.scoped(ProtocolTag::Reveal, |p| {
        if p.is_helper() {
            return Ok(vec![0; x.len()]);
        }
        let other = expect_words(&p.exchange(&words(x))?, x.len())?;
        Ok(x.iter().zip(other).map(|(a, b)| a.wrapping_add(b)).collect())
    })
}

/// Opens a shared vector to all three servers. One round.
pub fn open_to_all(p: &mut Party, x: &[u64]) -> Result<Vec<u64>> {
    let n = x.len();
    p.scoped(ProtocolTag::Reveal, |p| {
        if p.is_helper() {
            let a = expect_words(&p.recv(Role::S0)?, n)?;
            let b = expect_words(&p.recv(Role::S1)?, n)?;
            return Ok(a.iter().zip(b).map(|(a, b)| a.wrapping_add(b)).collect());
        }
        let payload = words(x);
        p.send(Role::S2, &payload)?;
        let other = expect_words(&p.exchange(&payload)?, n)?;
        Ok(x.iter().zip(other).map(|(a, b)| a.wrapping_add(b)).collect())
    })
}

/// Private comparison of a bit-shared secret `r` against a public `y`.
///
/// `r_bits` holds `bits` `Z_67` shares per element, most significant first;
/// `n` is a bit common to both proxies. The proxies receive boolean shares of
/// `n XOR (r > y)` and S2 receives the plain values. Two rounds.
pub fn private_compare(
    p: &mut Party,
    r_bits: &[u8],
    y: &[u64],
    n: &[u8],
    bits: u32,
) -> Result<Vec<u8>> {
    if !(1..=ELL).contains(&bits) {
        return Err(Error::InvalidArgument(format!("bit length {bits} outside 1..=64")));
    }
    let count = check_lengths(&[y.len(), n.len()])?;
    let width = bits as usize;
    if r_bits.len() != count * width {
        return Err(Error::InvalidArgument(format!(
            "expected {} bit shares, got {}",
            count * width,
            r_bits.len()
        )));
    }
    p.scoped(ProtocolTag::PrivateCompare, |p| {
        if p.is_helper() {
            return private_compare_helper(p, count, width);
        }
        if let Some(&c) = r_bits.iter().find(|&&c| c >= P) {
            return Err(Error::OutOfRange {
                value: c as u128,
                ring: Ring::P,
            });
        }
        let max = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        if let Some(&v) = y.iter().find(|&&v| v > max) {
            return Err(Error::InvalidArgument(format!("public value {v} exceeds {bits} bits")));
        }
        let i = p.index() as u8;
        let fork = p.common(ProtocolTag::PrivateCompare)?.fork();
        let masked = p.exec().map_chunks(count, |c, range| {
            let mut s = fork.stream(c);
            let mut out = Vec::with_capacity(range.len() * width);
            let mut cs = vec![0u8; width];
            for e in range {
                let r = &r_bits[e * width..(e + 1) * width];
                let edge = n[e] == 1 && y[e] == max;
                let t = if n[e] == 1 { y[e].wrapping_add(1) } else { y[e] };
                let mut prefix = 0u8;
                for j in 0..width {
                    let cj = if edge {
                        let u = s.next_zp_star();
                        match (j == width - 1, i) {
                            (true, 0) => u,
                            (true, _) => zp::neg(u),
                            (false, 0) => zp::add(u, 1),
                            (false, _) => zp::neg(u),
                        }
                    } else {
                        let tj = ((t >> (width - 1 - j)) & 1) as u8;
                        let rj = r[j];
                        let w = zp::sub(zp::add(rj, i * tj), zp::mul(2 * tj, rj));
                        let cj = if n[e] == 0 {
                            zp::add(zp::sub(i * tj, rj), zp::add(i, prefix))
                        } else {
                            zp::add(zp::sub(rj, i * tj), zp::add(i, prefix))
                        };
                        prefix = zp::add(prefix, w);
                        cj
                    };
                    cs[j] = zp::mul(s.next_zp_star(), cj);
                }
                let perm = s.shuffled_indices(width);
                out.extend(perm.iter().map(|&k| cs[k]));
            }
            out
        });
        p.send(Role::S2, &masked)?;
        let shares = p.recv(Role::S2)?;
        expect_len(&shares, count)?;
        if let Some(&b) = shares.iter().find(|&&b| b > 1) {
            return Err(Error::Malformed(format!("boolean share {b}")));
        }
        Ok(shares)
    })
}

fn private_compare_helper(p: &mut Party, count: usize, width: usize) -> Result<Vec<u8>> {
    let d0 = p.recv(Role::S0)?;
    let d1 = p.recv(Role::S1)?;
    expect_len(&d0, count * width)?;
    expect_len(&d1, count * width)?;
    let fork = p.private(ProtocolTag::PrivateCompare).fork();
    let parts = p.exec().for_chunks(count, |c, range| {
        let mut s = fork.stream(c);
        let mut plain = Vec::with_capacity(range.len());
        let mut b0 = Vec::with_capacity(range.len());
        let mut b1 = Vec::with_capacity(range.len());
        for e in range {
            let lo = e * width;
            let hit = (lo..lo + width).any(|k| zp::add(d0[k], d1[k]) == 0) as u8;
            let mask = s.next_bit();
            plain.push(hit);
            b0.push(mask);
            b1.push(hit ^ mask);
        }
        (plain, b0, b1)
    });
    let mut plain = Vec::with_capacity(count);
    let mut b0 = Vec::with_capacity(count);
    let mut b1 = Vec::with_capacity(count);
    for (a, b, c) in parts {
        plain.extend(a);
        b0.extend(b);
        b1.extend(c);
    }
    p.send(Role::S0, &b0)?;
    p.send(Role::S1, &b1)?;
    Ok(plain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::party::run_local;
    use crate::random::{StreamOwner, Seed};
    use crate::ring::K;

    fn rng(seed: u8) -> PairStream {
        PairStream::new(&[seed; 32], StreamOwner::Proxies, 9, ProtocolTag::Script)
    }

    #[test]
    fn share_examples() {
        let mut r = rng(1);
        let zero = RingElement::zero(Ring::L);
        let (a, b) = make_shares(zero, &mut r);
        assert_eq!(a.value(), b.value().wrapping_neg());
        let s = |v, ring, o| Share::new(RingElement::new(v, ring).unwrap(), o).unwrap();
        assert_eq!(
            reconstruct(s(3, Ring::P, Role::S0), s(4, Ring::P, Role::S1)).unwrap().value(),
            7
        );
        assert_eq!(
            reconstruct(s(K - 1, Ring::K, Role::S0), s(1, Ring::K, Role::S1)).unwrap().value(),
            0
        );
        assert!(matches!(
            reconstruct(s(1, Ring::K, Role::S0), s(1, Ring::K, Role::S0)),
            Err(Error::OwnerMismatch(..))
        ));
        assert!(matches!(
            reconstruct(s(1, Ring::K, Role::S0), s(1, Ring::L, Role::S1)),
            Err(Error::ModulusMismatch(..))
        ));
        assert!(Share::new(zero, Role::S2).is_err());
    }

    #[test]
    fn sharing_roundtrip_and_freshness() {
        let mut r = rng(2);
        for ring in [Ring::L, Ring::K, Ring::P] {
            for _ in 0..100_000 {
                let x = r.next_element(ring, None).unwrap();
                let (a, b) = make_shares(x, &mut r);
                assert_eq!(reconstruct(a, b).unwrap(), x);
            }
        }
        let x = RingElement::new(12345, Ring::L).unwrap();
        let first = make_shares(x, &mut rng(3));
        let second = make_shares(x, &mut rng(4));
        assert_ne!(first.0.value(), second.0.value());
    }

    #[test]
    fn bit_field_shares() {
        let mut r = rng(5);
        for _ in 0..1000 {
            let v = r.next_u64();
            let (a, b) = BitFieldShares::split(v, &mut r);
            assert_eq!(BitFieldShares::reconstruct(&a, &b).unwrap().to_u64(), v);
        }
        assert!(BitFieldShares::new([67; 64], Role::S0).is_err());
    }

    #[test]
    fn beaver_triple_invariant() {
        let mut r = rng(6);
        for _ in 0..1000 {
            let (t0, t1) = BeaverTriple::deal(&mut r);
            let a = reconstruct(t0.a, t1.a).unwrap();
            let b = reconstruct(t0.b, t1.b).unwrap();
            let c = reconstruct(t0.c, t1.c).unwrap();
            assert_eq!(a.mul(b).unwrap(), c);
        }
    }

    fn run_mul(seed: Seed, xs: &[u64], ys: &[u64]) -> Vec<u64> {
        let mut r = rng(seed[0]);
        let x = SharedVec::share(xs, Ring::L, &mut r);
        let y = SharedVec::share(ys, Ring::L, &mut r);
        let out = run_local(&seed, Execution::Sequential, |p| {
            mul(p, &x.view(p.role()), &y.view(p.role()))
        })
        .unwrap();
        SharedVec::from_outputs(&out).reconstruct(Ring::L)
    }

    #[test]
    fn mul_examples() {
        assert_eq!(run_mul([1; 32], &[0, 1, 3], &[77, 99, 5]), vec![0, 99, 15]);
        for s in 0..100u8 {
            assert_eq!(run_mul([s; 32], &[3], &[5]), vec![15]);
        }
    }

    #[test]
    fn mul_rounds() {
        let out = run_local(&[0; 32], Execution::Sequential, |p| {
            mul(p, &[1, 2], &[3, 4])?;
            p.transcript().round_count(ProtocolTag::Mul)
        })
        .unwrap();
        // S2 only deals offline
        assert_eq!(out, [1, 1, 0]);
    }

    fn run_pc(rs: &[u64], ys: &[u64], ns: &[u8], bits: u32) -> Vec<[u8; 3]> {
        let mut r = rng(7);
        let width = bits as usize;
        let mut b0 = Vec::new();
        let mut b1 = Vec::new();
        for &v in rs {
            for j in 0..width {
                let bit = ((v >> (width - 1 - j)) & 1) as u8;
                let s = r.next_zp();
                b0.push(s);
                b1.push(zp::sub(bit, s));
            }
        }
        let out = run_local(&[8; 32], Execution::Parallel, |p| {
            let bits_view = match p.role() {
                Role::S0 => b0.clone(),
                Role::S1 => b1.clone(),
                Role::S2 => vec![0; b0.len()],
            };
            private_compare(p, &bits_view, ys, ns, bits)
        })
        .unwrap();
        (0..rs.len()).map(|k| [out[0][k], out[1][k], out[2][k]]).collect()
    }

    #[test]
    fn private_compare_examples() {
        let res = run_pc(&[5, 6], &[5, 5], &[0, 0], 64);
        assert_eq!(res[0][0] ^ res[0][1], 0);
        assert_eq!(res[1][0] ^ res[1][1], 1);
        assert_eq!(res[1][2], 1);
    }

    #[test]
    fn private_compare_edge_case() {
        let res = run_pc(&[u64::MAX, 3, 0], &[u64::MAX, u64::MAX, u64::MAX], &[1, 1, 0], 64);
        assert_eq!(res.iter().map(|r| r[0] ^ r[1]).collect::<Vec<_>>(), vec![1, 1, 0]);
    }

    #[test]
    fn private_compare_exhaustive_8_bits() {
        let mut rs = Vec::new();
        let mut ys = Vec::new();
        let mut ns = Vec::new();
        for r in 0..256u64 {
            for y in 0..256u64 {
                for n in 0..2u8 {
                    rs.push(r);
                    ys.push(y);
                    ns.push(n);
                }
            }
        }
        let res = run_pc(&rs, &ys, &ns, 8);
        for (k, out) in res.iter().enumerate() {
            let expected = ns[k] ^ (rs[k] > ys[k]) as u8;
            assert_eq!(out[0] ^ out[1], expected, "r={} y={} n={}", rs[k], ys[k], ns[k]);
            assert_eq!(out[2], expected);
        }
    }

    #[test]
    fn private_compare_rejects_bad_shares() {
        let r: Result<[Vec<u8>; 3]> = run_local(&[0; 32], Execution::Sequential, |p| {
            private_compare(p, &[67; 8], &[1], &[0], 8)
        });
        assert!(r.is_err());
    }

    #[test]
    fn open_to_all_reaches_helper() {
        let out = run_local(&[0; 32], Execution::Sequential, |p| {
            let v = match p.role() {
                Role::S0 => vec![10u64, 0],
                Role::S1 => vec![5u64.wrapping_sub(10), 1],
                Role::S2 => vec![0, 0],
            };
            open_to_all(p, &v)
        })
        .unwrap();
        assert!(out.iter().all(|v| v == &vec![5, 1]));
    }
}
