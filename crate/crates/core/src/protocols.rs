//! Selection, ring conversion, comparison and bounded division on shares.

use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::{check_lengths, private_compare};
use crate::ring::{is_wrap, zp, Ring, K};
use crate::tag::ProtocolTag;
use crate::transport::codec::{expect_words, words};
use crate::transport::Role;

const K_MASK: u64 = K - 1;

/// Returns shares of `x` where `b = 0` and of `y` where `b = 1`. Two rounds.
///
/// `b` must reconstruct to 0 or 1; anything else yields an unspecified value.
pub fn mux(p: &mut Party, x: &[u64], y: &[u64], b: &[u64]) -> Result<Vec<u64>> {
    let n = check_lengths(&[x.len(), y.len(), b.len()])?;
    p.scoped(ProtocolTag::Mux, |p| {
        if p.is_helper() {
            let from0 = expect_words(&p.recv(Role::S0)?, 2 * n)?;
            let from1 = expect_words(&p.recv(Role::S1)?, 2 * n)?;
            let fork = p.private(ProtocolTag::Mux).fork();
            let parts = p.exec().for_chunks(n, |c, range| {
                let mut s = fork.stream(c);
                let mut z0 = Vec::with_capacity(range.len());
                let mut z1 = Vec::with_capacity(range.len());
                for k in range {
                    let (m2, m3) = (from0[2 * k], from0[2 * k + 1]);
                    let (m5, m6) = (from1[2 * k], from1[2 * k + 1]);
                    let z = m2.wrapping_mul(m5).wrapping_add(m3.wrapping_mul(m6));
                    let r = s.next_u64();
                    z0.push(r);
                    z1.push(z.wrapping_sub(r));
                }
                (z0, z1)
            });
            let (z0, z1): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
            p.send(Role::S0, &words(&z0.concat()))?;
            p.send(Role::S1, &words(&z1.concat()))?;
            return Ok(vec![0; n]);
        }
        let is_s0 = p.role() == Role::S0;
        let fork = p.common(ProtocolTag::Mux)?.fork();
        // (local output term, two masked values for S2)
        let parts = p.exec().for_chunks(n, |c, range| {
            let mut s = fork.stream(c);
            let mut local = Vec::with_capacity(range.len());
            let mut masked = Vec::with_capacity(range.len() * 2);
            for k in range {
                let [r0, r1, r2, r3] = [s.next_u64(), s.next_u64(), s.next_u64(), s.next_u64()];
                let d = x[k].wrapping_sub(y[k]);
                let bk = b[k];
                if is_s0 {
                    local.push(
                        x[k].wrapping_sub(bk.wrapping_mul(d))
                            .wrapping_add(r1.wrapping_mul(bk))
                            .wrapping_add(r2.wrapping_mul(d))
                            .wrapping_add(r2.wrapping_mul(r3)),
                    );
                    masked.push(bk.wrapping_add(r0));
                    masked.push(d.wrapping_add(r3));
                } else {
                    local.push(
                        x[k].wrapping_sub(bk.wrapping_mul(d))
                            .wrapping_add(r0.wrapping_mul(d))
                            .wrapping_add(r0.wrapping_mul(r1))
                            .wrapping_add(r3.wrapping_mul(bk)),
                    );
                    masked.push(d.wrapping_add(r1));
                    masked.push(bk.wrapping_add(r2));
                }
            }
            (local, masked)
        });
        let (local, masked): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
        p.send(Role::S2, &words(&masked.concat()))?;
        let z = expect_words(&p.recv(Role::S2)?, n)?;
        Ok(local
            .concat()
            .into_iter()
            .zip(z)
            .map(|(m, z)| m.wrapping_sub(z))
            .collect())
    })
}

/// Lifts shares over `Z_K` to shares of the same integer over `Z_L`. Three rounds.
pub fn modulus_conversion(p: &mut Party, x: &[u64]) -> Result<Vec<u64>> {
    let n = x.len();
    p.scoped(ProtocolTag::ModulusConversion, |p| {
        if p.is_helper() {
            mc_deal(p, n)?;
            private_compare(p, &vec![0; n * 64], &vec![0; n], &vec![0; n], 64)?;
            return Ok(vec![0; n]);
        }
        if let Some(&v) = x.iter().find(|&&v| v >= K) {
            return Err(Error::OutOfRange {
                value: v as u128,
                ring: Ring::K,
            });
        }
        let dealt = p.recv(Role::S2)?;
        if dealt.len() != n * MC_RECORD {
            return Err(Error::Malformed(format!(
                "expected {} dealt bytes, got {}",
                n * MC_RECORD,
                dealt.len()
            )));
        }
        let mut r = Vec::with_capacity(n);
        let mut r_bits = Vec::with_capacity(n * 64);
        let mut w = Vec::with_capacity(n);
        for rec in dealt.chunks_exact(MC_RECORD) {
            r.push(u64::from_le_bytes(rec[..8].try_into().unwrap()));
            r_bits.extend_from_slice(&rec[8..72]);
            w.push(rec[72]);
        }
        let masked: Vec<u64> = x.iter().zip(&r).map(|(a, b)| (a + b) & K_MASK).collect();
        let other = expect_words(&p.exchange(&words(&masked))?, n)?;
        let y: Vec<u64> = masked
            .iter()
            .zip(&other)
            .map(|(a, b)| (a + b) & K_MASK)
            .collect();
        let fork = p.common(ProtocolTag::ModulusConversion)?.fork();
        let nbits = p.exec().map_chunks(n, |c, range| {
            let mut s = fork.stream(c);
            range.map(|_| s.next_bit()).collect()
        });
        let mut beta = private_compare(p, &r_bits, &y, &nbits, 64)?;
        let is_s0 = p.role() == Role::S0;
        if is_s0 {
            for (b, nb) in beta.iter_mut().zip(&nbits) {
                *b ^= nb;
            }
        }
        Ok((0..n)
            .map(|k| {
                let c = (w[k] ^ beta[k]) as u64;
                let lifted = if is_s0 {
                    masked[k].wrapping_add(is_wrap(masked[k], other[k], Ring::K) as u64 * K)
                } else {
                    masked[k]
                };
                lifted.wrapping_sub(r[k]).wrapping_sub(c.wrapping_mul(K))
            })
            .collect())
    })
}

/// Bytes per element dealt to each proxy: mask share, 64 bit shares, wrap share.
const MC_RECORD: usize = 8 + 64 + 1;

fn mc_deal(p: &mut Party, n: usize) -> Result<()> {
    let fork = p.private(ProtocolTag::ModulusConversion).fork();
    let parts = p.exec().for_chunks(n, |c, range| {
        let mut s = fork.stream(c);
        let mut m0 = Vec::with_capacity(range.len() * MC_RECORD);
        let mut m1 = Vec::with_capacity(range.len() * MC_RECORD);
        for _ in range {
            let r = s.next_u64() & K_MASK;
            let r0 = s.next_u64() & K_MASK;
            let r1 = r.wrapping_sub(r0) & K_MASK;
            m0.extend_from_slice(&r0.to_le_bytes());
            m1.extend_from_slice(&r1.to_le_bytes());
            for j in 0..64 {
                let bit = ((r >> (63 - j)) & 1) as u8;
                let a = s.next_zp();
                m0.push(a);
                m1.push(zp::sub(bit, a));
            }
            let wrap = is_wrap(r0, r1, Ring::K);
            let w0 = s.next_bit();
            m0.push(w0);
            m1.push(wrap ^ w0);
        }
        (m0, m1)
    });
    let (m0, m1): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    p.send_offline(Role::S0, &m0.concat())?;
    p.send_offline(Role::S1, &m1.concat())
}

/// Shares of 1 where `x < y` and 0 where `x >= y`. Five rounds.
///
/// Requires `|x - y| < K` for every element.
pub fn compare(p: &mut Party, x: &[u64], y: &[u64]) -> Result<Vec<u64>> {
    let n = check_lengths(&[x.len(), y.len()])?;
    p.scoped(ProtocolTag::Compare, |p| {
        if p.is_helper() {
            modulus_conversion(p, &vec![0; n])?;
            let a = expect_words(&p.recv(Role::S0)?, 2 * n)?;
            let b = expect_words(&p.recv(Role::S1)?, 2 * n)?;
            let fork = p.private(ProtocolTag::Compare).fork();
            let parts = p.exec().for_chunks(n, |c, range| {
                let mut s = fork.stream(c);
                let mut o0 = Vec::with_capacity(range.len() * 2);
                let mut o1 = Vec::with_capacity(range.len() * 2);
                for k in range {
                    for j in 0..2 {
                        let bit = a[2 * k + j].wrapping_add(b[2 * k + j]) >> 63;
                        let r = s.next_u64();
                        o0.push(r);
                        o1.push(bit.wrapping_sub(r));
                    }
                }
                (o0, o1)
            });
            let (o0, o1): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
            p.send(Role::S0, &words(&o0.concat()))?;
            p.send(Role::S1, &words(&o1.concat()))?;
            return Ok(vec![0; n]);
        }
        let diff: Vec<u64> = x.iter().zip(y).map(|(a, b)| a.wrapping_sub(*b)).collect();
        let low: Vec<u64> = diff.iter().map(|d| d & K_MASK).collect();
        let lifted = modulus_conversion(p, &low)?;
        let fork = p.common(ProtocolTag::Compare)?.fork();
        let flips: Vec<u64> = p.exec().map_chunks(n, |c, range| {
            let mut s = fork.stream(c);
            range.map(|_| s.next_bit() as u64).collect()
        });
        let i = p.index();
        let mut pair = Vec::with_capacity(2 * n);
        for k in 0..n {
            let z = diff[k].wrapping_sub(lifted[k]);
            let f = flips[k];
            pair.push((i * f * K).wrapping_sub(z));
            pair.push((i * (1 - f) * K).wrapping_sub(z));
        }
        p.send(Role::S2, &words(&pair))?;
        let bits = expect_words(&p.recv(Role::S2)?, 2 * n)?;
        Ok((0..n).map(|k| bits[2 * k + flips[k] as usize]).collect())
    })
}

/// Largest mask bound usable with dividend and divisor at most `upper`.
fn mask_bound(upper: u64) -> Result<u64> {
    if upper == 0 {
        return Err(Error::InvalidArgument("division bound must be positive".into()));
    }
    let bound = (1u128 << 64) / (2 * upper as u128);
    if bound < 2 {
        return Err(Error::InvalidArgument(format!("division bound {upper} is too large")));
    }
    Ok(bound as u64)
}

/// Shares of `floor(x * scale / y)`, for `0 <= x <= upper` and `1 <= y <= upper`. Two rounds.
pub fn divide(p: &mut Party, x: &[u64], y: &[u64], upper: u64, scale: u64) -> Result<Vec<u64>> {
    let n = check_lengths(&[x.len(), y.len()])?;
    let bound = mask_bound(upper)?;
    p.scoped(ProtocolTag::Divide, |p| {
        if p.is_helper() {
            let a = expect_words(&p.recv(Role::S0)?, 2 * n)?;
            let b = expect_words(&p.recv(Role::S1)?, 2 * n)?;
            let fork = p.private(ProtocolTag::Divide).fork();
            let parts = p.exec().for_chunks(n, |c, range| {
                let mut s = fork.stream(c);
                let mut o0 = Vec::with_capacity(range.len());
                let mut o1 = Vec::with_capacity(range.len());
                for k in range {
                    let num = a[2 * k].wrapping_add(b[2 * k]) as u128;
                    let den = a[2 * k + 1].wrapping_add(b[2 * k + 1]) as u128;
                    let q = (num * scale as u128).checked_div(den).unwrap_or(0) as u64;
                    let r = s.next_u64();
                    o0.push(r);
                    o1.push(q.wrapping_sub(r));
                }
                (o0, o1)
            });
            let (o0, o1): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
            p.send(Role::S0, &words(&o0.concat()))?;
            p.send(Role::S1, &words(&o1.concat()))?;
            return Ok(vec![0; n]);
        }
        let fork = p.common(ProtocolTag::Divide)?.fork();
        let masks: Vec<(u64, u64)> = p.exec().map_chunks(n, |c, range| {
            let mut s = fork.stream(c);
            range
                .map(|_| {
                    let r1 = 1 + s.next_below(bound - 1);
                    let q = 1 + s.next_below((bound - 1) / r1);
                    (r1, q)
                })
                .collect()
        });
        let mut masked = Vec::with_capacity(2 * n);
        for k in 0..n {
            let (r1, q) = masks[k];
            let r0 = q * r1;
            masked.push(r1.wrapping_mul(x[k]).wrapping_add(r0.wrapping_mul(y[k])));
            masked.push(r1.wrapping_mul(y[k]));
        }
        p.send(Role::S2, &words(&masked))?;
        let c = expect_words(&p.recv(Role::S2)?, n)?;
        if p.role() == Role::S0 {
            return Ok(c);
        }
        Ok(c
            .into_iter()
            .zip(&masks)
            .map(|(c, &(_, q))| c.wrapping_sub(q.wrapping_mul(scale)))
            .collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::party::run_local;
    use crate::primitives::SharedVec;
    use crate::random::{PairStream, StreamOwner};

    fn dealer(seed: u8) -> PairStream {
        PairStream::new(&[seed; 32], StreamOwner::Proxies, 1, ProtocolTag::Script)
    }

    #[test]
    fn mux_examples() {
        let mut d = dealer(1);
        let x = SharedVec::share(&[42, 42], Ring::L, &mut d);
        let y = SharedVec::share(&[7, 7], Ring::L, &mut d);
        let b = SharedVec::share(&[0, 1], Ring::L, &mut d);
        let out = run_local(&[2; 32], Execution::Sequential, |p| {
            let r = p.role();
            let z = mux(p, &x.view(r), &y.view(r), &b.view(r))?;
            Ok((z, p.transcript().round_count(ProtocolTag::Mux)?))
        })
        .unwrap();
        let z = SharedVec {
            s0: out[0].0.clone(),
            s1: out[1].0.clone(),
        };
        assert_eq!(z.reconstruct(Ring::L), vec![42, 7]);
        assert!(out.iter().all(|o| o.1 == 2));
    }

    #[test]
    fn modulus_conversion_examples() {
        let mut d = dealer(3);
        let vals = [0, K - 1, 1, K / 2];
        let x = SharedVec::share(&vals, Ring::K, &mut d);
        let out = run_local(&[4; 32], Execution::Sequential, |p| {
            let z = modulus_conversion(p, &x.view(p.role()))?;
            Ok((z, p.transcript().round_count(ProtocolTag::ModulusConversion)?))
        })
        .unwrap();
        let z = SharedVec {
            s0: out[0].0.clone(),
            s1: out[1].0.clone(),
        };
        assert_eq!(z.reconstruct(Ring::L), vals.to_vec());
        assert!(out.iter().all(|o| o.1 == 3));
    }

    #[test]
    fn compare_examples() {
        let mut d = dealer(5);
        let x = SharedVec::share(&[1234, 5, 9, 0], Ring::L, &mut d);
        let y = SharedVec::share(&[1234, 9, 5, 1], Ring::L, &mut d);
        let out = run_local(&[6; 32], Execution::Sequential, |p| {
            let r = p.role();
            let z = compare(p, &x.view(r), &y.view(r))?;
            Ok((z, p.transcript().round_count(ProtocolTag::Compare)?))
        })
        .unwrap();
        let z = SharedVec {
            s0: out[0].0.clone(),
            s1: out[1].0.clone(),
        };
        assert_eq!(z.reconstruct(Ring::L), vec![0, 1, 0, 1]);
        assert!(out.iter().all(|o| o.1 == 5));
    }

    #[test]
    fn divide_examples() {
        let mut d = dealer(7);
        let x = SharedVec::share(&[1234, 1, 0, 10], Ring::L, &mut d);
        let y = SharedVec::share(&[10000, 3, 5, 10], Ring::L, &mut d);
        let out = run_local(&[8; 32], Execution::Sequential, |p| {
            let r = p.role();
            let z = divide(p, &x.view(r), &y.view(r), 10_000, 10_000)?;
            Ok((z, p.transcript().round_count(ProtocolTag::Divide)?))
        })
        .unwrap();
        let z = SharedVec {
            s0: out[0].0.clone(),
            s1: out[1].0.clone(),
        };
        assert_eq!(z.reconstruct(Ring::L), vec![1234, 3333, 0, 10000]);
        assert!(out.iter().all(|o| o.1 == 2));
    }

    #[test]
    fn divide_rejects_bad_bounds() {
        assert!(mask_bound(0).is_err());
        assert!(mask_bound(1 << 63).is_err());
        assert_eq!(mask_bound(1 << 62).unwrap(), 2);
    }
}
