//! Fixed-width modular arithmetic over the three rings used by the protocols.
//!
//! * `Z_L` with `L = 2^64`: native wrapping `u64` arithmetic.
//! * `Z_K` with `K = 2^63`: `u64` arithmetic masked to 63 bits.
//! * `Z_P` with `P = 67`: small prime field used for per-bit shares.

use std::fmt;

use crate::error::{Error, Result};

/// Bit width of the main ring.
pub const ELL: u32 = 64;
/// `K = 2^63`, the modulus of the half ring.
pub const K: u64 = 1 << 63;
/// Prime modulus for per-bit shares.
pub const P: u8 = 67;

const K_MASK: u64 = K - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ring {
    /// `Z_{2^64}`
    L,
    /// `Z_{2^63}`
    K,
    /// `Z_67`
    P,
}

impl Ring {
    pub fn modulus(self) -> u128 {
        match self {
            Ring::L => 1u128 << 64,
            Ring::K => K as u128,
            Ring::P => P as u128,
        }
    }

    #[inline]
    pub fn reduce(self, v: u128) -> u64 {
        match self {
            Ring::L => v as u64,
            Ring::K => (v as u64) & K_MASK,
            Ring::P => (v % P as u128) as u64,
        }
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        match self {
            Ring::L => a.wrapping_add(b),
            Ring::K => a.wrapping_add(b) & K_MASK,
            Ring::P => (a + b) % P as u64,
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        match self {
            Ring::L => a.wrapping_sub(b),
            Ring::K => a.wrapping_sub(b) & K_MASK,
            Ring::P => (a + P as u64 - b) % P as u64,
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        match self {
            Ring::L => a.wrapping_mul(b),
            Ring::K => a.wrapping_mul(b) & K_MASK,
            Ring::P => (a * b) % P as u64,
        }
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        self.sub(0, a)
    }

    fn contains(self, v: u64) -> bool {
        (v as u128) < self.modulus()
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::L => f.write_str("Z_2^64"),
            Ring::K => f.write_str("Z_2^63"),
            Ring::P => f.write_str("Z_67"),
        }
    }
}

/// A residue tagged with the ring it lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RingElement {
    value: u64,
    ring: Ring,
}

impl RingElement {
    pub fn new(value: u64, ring: Ring) -> Result<Self> {
        if ring.contains(value) {
            Ok(Self { value, ring })
        } else {
            Err(Error::OutOfRange {
                value: value as u128,
                ring,
            })
        }
    }

    /// Reduces an arbitrary integer into `ring`.
    pub fn reduced(value: u128, ring: Ring) -> Self {
        Self {
            value: ring.reduce(value),
            ring,
        }
    }

    pub fn zero(ring: Ring) -> Self {
        Self { value: 0, ring }
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn ring(self) -> Ring {
        self.ring
    }

    fn same_ring(self, other: Self) -> Result<Ring> {
        if self.ring == other.ring {
            Ok(self.ring)
        } else {
            Err(Error::ModulusMismatch(self.ring, other.ring))
        }
    }

    pub fn add(self, other: Self) -> Result<Self> {
        let ring = self.same_ring(other)?;
        Ok(Self {
            value: ring.add(self.value, other.value),
            ring,
        })
    }

    pub fn sub(self, other: Self) -> Result<Self> {
        let ring = self.same_ring(other)?;
        Ok(Self {
            value: ring.sub(self.value, other.value),
            ring,
        })
    }

    pub fn mul(self, other: Self) -> Result<Self> {
        let ring = self.same_ring(other)?;
        Ok(Self {
            value: ring.mul(self.value, other.value),
            ring,
        })
    }

    pub fn neg(self) -> Self {
        Self {
            value: self.ring.neg(self.value),
            ring: self.ring,
        }
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.ring)
    }
}

/// 1 iff `a + b` overflows the common modulus.
pub fn wrap_flag(a: RingElement, b: RingElement) -> Result<u8> {
    let ring = a.same_ring(b)?;
    Ok(is_wrap(a.value, b.value, ring))
}

#[inline]
pub(crate) fn is_wrap(a: u64, b: u64, ring: Ring) -> u8 {
    ((a as u128 + b as u128) >= ring.modulus()) as u8
}

/// Most significant bit of a `Z_L` value, i.e. `x >= 2^63`.
#[inline]
pub fn msb(x: RingElement) -> u8 {
    (x.value >> 63) as u8
}

/// The 64 bits of a value, most significant first.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitVector {
    bits: [u8; ELL as usize],
}

impl BitVector {
    pub fn from_u64(v: u64) -> Self {
        let mut bits = [0u8; ELL as usize];
        for (j, bit) in bits.iter_mut().enumerate() {
            *bit = ((v >> (63 - j)) & 1) as u8;
        }
        Self { bits }
    }

    /// Bit `j`, where `j = 0` is the coefficient of `2^63`.
    pub fn bit(&self, j: usize) -> u8 {
        self.bits[j]
    }

    pub fn bits(&self) -> &[u8; ELL as usize] {
        &self.bits
    }

    pub fn to_u64(&self) -> u64 {
        self.bits
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BitVector(")?;
        for b in self.bits {
            write!(f, "{b}")?;
        }
        f.write_str(")")
    }
}

pub fn bit_decompose(x: RingElement) -> BitVector {
    BitVector::from_u64(x.value)
}

/// Arithmetic on `Z_67` residues stored as bytes.
pub(crate) mod zp {
    use super::P;

    #[inline]
    pub fn add(a: u8, b: u8) -> u8 {
        let s = a as u16 + b as u16;
        (s % P as u16) as u8
    }

    #[inline]
    pub fn sub(a: u8, b: u8) -> u8 {
        ((a as u16 + P as u16 - b as u16) % P as u16) as u8
    }

    #[inline]
    pub fn mul(a: u8, b: u8) -> u8 {
        ((a as u16 * b as u16) % P as u16) as u8
    }

    #[inline]
    pub fn neg(a: u8) -> u8 {
        sub(0, a)
    }
}
