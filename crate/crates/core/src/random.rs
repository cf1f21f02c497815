//! Pairwise common randomness.
//!
//! Two parties that hold the same 32-byte seed derive identical ChaCha12
//! streams. Every stream is keyed by `SHA-256(seed || pair || session || tag)`
//! so that streams for different party pairs, sessions and protocols never
//! overlap. Vectorised protocols draw through [`PairStream::fork`], which hands
//! out one independent sub-stream per fixed-size chunk of elements; the draws
//! are therefore identical no matter how many threads process the chunks.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ring::{Ring, RingElement, P};
use crate::tag::ProtocolTag;
use crate::transport::Role;

pub type Seed = [u8; 32];

/// Which parties share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamOwner {
    /// Held by both proxies.
    Proxies,
    /// Local to a single party.
    Private(Role),
}

impl StreamOwner {
    fn label(self) -> [u8; 2] {
        match self {
            StreamOwner::Proxies => [b'c', 0],
            StreamOwner::Private(role) => [b'p', role.index() as u8],
        }
    }
}

/// Hashes a seed together with length-prefixed domain components.
pub fn derive_key(seed: &Seed, parts: &[&[u8]]) -> Seed {
    let mut h = Sha256::new();
    h.update(b"auc3pc/v1");
    h.update(seed);
    for part in parts {
        h.update((part.len() as u32).to_le_bytes());
        h.update(part);
    }
    h.finalize().into()
}

/// A deterministic random stream shared by a party pair (or private to one party).
pub struct PairStream {
    key: Seed,
    rng: ChaCha12Rng,
    counter: u64,
    forks: u64,
    buf: [u8; 64],
    buf_pos: usize,
}

impl PairStream {
    pub fn new(seed: &Seed, owner: StreamOwner, session: u64, tag: ProtocolTag) -> Self {
        let key = derive_key(
            seed,
            &[&owner.label(), &session.to_le_bytes(), &[tag as u8]],
        );
        Self::from_key(key, 0)
    }

    /// A stream keyed by `seed` and an arbitrary label, outside any session.
    pub fn keyed(seed: &Seed, label: &[u8]) -> Self {
        Self::from_key(derive_key(seed, &[b"keyed", label]), 0)
    }

    fn from_key(key: Seed, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::from_seed(key);
        rng.set_stream(stream);
        Self {
            key,
            rng,
            counter: 0,
            forks: 0,
            buf: [0; 64],
            buf_pos: 64,
        }
    }

    /// Number of draws taken so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Uniform element of `ring`, or of `[0, upper_bound)` when a bound is given.
    pub fn next_element(&mut self, ring: Ring, upper_bound: Option<u64>) -> Result<RingElement> {
        let value = match upper_bound {
            Some(0) => {
                return Err(Error::InvalidArgument("upper bound must be positive".into()));
            }
            Some(b) if b as u128 > ring.modulus() => {
                return Err(Error::InvalidArgument(format!(
                    "upper bound {b} exceeds the modulus of {ring}"
                )));
            }
            Some(b) => self.next_below(b),
            None => match ring {
                Ring::L => self.next_u64(),
                Ring::K => self.next_u64() >> 1,
                Ring::P => self.next_zp() as u64,
            },
        };
        RingElement::new(value, ring)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, bound)`; unbiased (rejection based).
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.counter += 1;
        self.rng.gen_range(0..bound)
    }

    #[inline]
    pub fn next_bit(&mut self) -> u8 {
        self.next_byte() & 1
    }

    fn raw_byte(&mut self) -> u8 {
        if self.buf_pos == self.buf.len() {
            self.rng.fill_bytes(&mut self.buf);
            self.buf_pos = 0;
        }
        let b = self.buf[self.buf_pos];
        self.buf_pos += 1;
        b
    }

    fn next_byte(&mut self) -> u8 {
        self.counter += 1;
        self.raw_byte()
    }

    /// Uniform draw below a bound of at most 256, by byte rejection.
    #[inline]
    pub fn next_small(&mut self, bound: u16) -> u8 {
        debug_assert!((1..=256).contains(&bound));
        self.counter += 1;
        let zone = 256 - (256 % bound);
        loop {
            let b = self.raw_byte() as u16;
            if b < zone {
                return (b % bound) as u8;
            }
        }
    }

    /// Uniform element of `Z_67`.
    #[inline]
    pub fn next_zp(&mut self) -> u8 {
        self.next_small(P as u16)
    }

    /// Uniform element of `Z_67^*`.
    #[inline]
    pub fn next_zp_star(&mut self) -> u8 {
        1 + self.next_small(P as u16 - 1)
    }

    /// Uniform permutation of `n` indices (Fisher-Yates).
    pub fn next_permutation(&mut self, n: usize) -> Result<Permutation> {
        if n == 0 {
            return Err(Error::InvalidArgument("permutation of zero items".into()));
        }
        Ok(Permutation::from_map(self.shuffled_indices(n)))
    }

    pub(crate) fn shuffled_indices(&mut self, n: usize) -> Vec<usize> {
        let mut map: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = if i < 256 {
                self.next_small(i as u16 + 1) as usize
            } else {
                self.next_below(i as u64 + 1) as usize
            };
            map.swap(i, j);
        }
        map
    }

    /// Splits off a family of independent sub-streams.
    ///
    /// Both members of a pair must fork in the same order to stay in step.
    pub fn fork(&mut self) -> StreamFork {
        let index = self.forks;
        self.forks += 1;
        self.counter += 1;
        StreamFork {
            key: derive_key(&self.key, &[b"fork", &index.to_le_bytes()]),
        }
    }
}

/// Key material for a family of sub-streams, one per chunk index.
#[derive(Clone, Copy)]
pub struct StreamFork {
    key: Seed,
}

impl StreamFork {
    pub fn stream(&self, chunk: u64) -> PairStream {
        PairStream::from_key(self.key, chunk)
    }
}

/// A bijection on `0..n`, stored as `out[i] = in[map[i]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    pub(crate) fn from_map(map: Vec<usize>) -> Self {
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        assert_eq!(items.len(), self.map.len(), "permutation length mismatch");
        self.map.iter().map(|&i| items[i].clone()).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Self { map: inv }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn stream(seed: u8) -> PairStream {
        PairStream::new(&[seed; 32], StreamOwner::Proxies, 0, ProtocolTag::Mux)
    }

    #[test]
    fn pair_members_agree() {
        let mut a = stream(1);
        let mut b = stream(1);
        for _ in 0..7 {
            a.next_u64();
            b.next_u64();
        }
        assert_eq!(a.counter(), 7);
        assert_eq!(
            a.next_element(Ring::L, None).unwrap(),
            b.next_element(Ring::L, None).unwrap()
        );
        assert_eq!(a.next_permutation(50).unwrap(), b.next_permutation(50).unwrap());
    }

    #[test]
    fn replay_is_bit_exact() {
        let draw = |s: &mut PairStream| {
            (0..100)
                .map(|i| match i % 4 {
                    0 => s.next_u64(),
                    1 => s.next_zp() as u64,
                    2 => s.next_bit() as u64,
                    _ => s.next_below(1000),
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(&mut stream(3)), draw(&mut stream(3)));
        assert_ne!(draw(&mut stream(3)), draw(&mut stream(4)));
    }

    #[test]
    fn domain_separation() {
        let seed = [9u8; 32];
        let mut a = PairStream::new(&seed, StreamOwner::Proxies, 0, ProtocolTag::Mux);
        let mut b = PairStream::new(&seed, StreamOwner::Proxies, 0, ProtocolTag::Divide);
        let mut c = PairStream::new(&seed, StreamOwner::Proxies, 1, ProtocolTag::Mux);
        let mut d = PairStream::new(&seed, StreamOwner::Private(Role::S2), 0, ProtocolTag::Mux);
        let va = a.next_u64();
        assert_ne!(va, b.next_u64());
        assert_ne!(va, c.next_u64());
        assert_ne!(va, d.next_u64());
    }

    #[test]
    fn bounds() {
        let mut s = stream(5);
        assert_eq!(s.next_element(Ring::L, Some(1)).unwrap().value(), 0);
        assert!(s.next_element(Ring::L, Some(0)).is_err());
        assert!(s.next_element(Ring::P, Some(68)).is_err());
        for _ in 0..1000 {
            assert!(s.next_element(Ring::K, None).unwrap().value() < crate::ring::K);
            assert!(s.next_zp_star() >= 1);
            assert!(s.next_bit() <= 1);
        }
    }

    #[test]
    fn zp_draws_are_uniform() {
        let mut s = stream(6);
        let n = 100_000u64;
        let mut counts = [0u64; 67];
        for _ in 0..n {
            counts[s.next_element(Ring::P, None).unwrap().value() as usize] += 1;
        }
        let expected = n as f64 / 67.0;
        let sigma = (expected * (1.0 - 1.0 / 67.0)).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 5.0 * sigma, "count {c}");
        }
        // chi-square with 66 degrees of freedom; the 99.99% quantile is about 117
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 117.0, "chi2 = {chi2}");
    }

    #[test]
    fn bit_mean() {
        let mut s = stream(7);
        let ones: u64 = (0..100_000).map(|_| s.next_bit() as u64).sum();
        let mean = ones as f64 / 100_000.0;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }

    #[test]
    fn permutations() {
        let mut s = stream(8);
        assert_eq!(s.next_permutation(1).unwrap(), Permutation::identity(1));
        assert!(s.next_permutation(0).is_err());
        let p = s.next_permutation(20).unwrap();
        let items: Vec<u32> = (100..120).collect();
        assert_eq!(p.inverse().apply(&p.apply(&items)), items);

        let draws = 60_000;
        let mut freq: HashMap<Vec<usize>, u32> = HashMap::new();
        for _ in 0..draws {
            *freq
                .entry(s.next_permutation(3).unwrap().as_slice().to_vec())
                .or_default() += 1;
        }
        assert_eq!(freq.len(), 6);
        let expected = draws as f64 / 6.0;
        let sigma = (expected * (5.0 / 6.0)).sqrt();
        for (perm, c) in freq {
            assert!((c as f64 - expected).abs() < 3.0 * sigma, "{perm:?}: {c}");
        }
    }

    #[test]
    fn forks_agree_and_differ() {
        let mut a = stream(10);
        let mut b = stream(10);
        let fa = a.fork();
        let fb = b.fork();
        assert_eq!(fa.stream(3).next_u64(), fb.stream(3).next_u64());
        assert_ne!(fa.stream(3).next_u64(), fa.stream(4).next_u64());
        let fa2 = a.fork();
        assert_ne!(fa.stream(0).next_u64(), fa2.stream(0).next_u64());
    }
}
