//! Reconstruction and rendering of a result held by the two proxies.

use std::fmt;

use crate::error::{CliError, Result};

/// An area in `[0, 1]` as `value / scale`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AucValue {
    pub value: u64,
    pub scale: u64,
}

impl AucValue {
    pub fn to_f64(self) -> f64 {
        self.value as f64 / self.scale as f64
    }
}

/// Four fractional digits, truncated.
impl fmt::Display for AucValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tenths = self.value as u128 * 10_000 / self.scale as u128;
        write!(f, "{}.{:04}", tenths / 10_000, tenths % 10_000)
    }
}

pub fn decode_result(s0: u64, s1: u64, scale: u64) -> Result<AucValue> {
    if scale == 0 {
        return Err(CliError::Config("scale must be positive".into()));
    }
    let value = s0.wrapping_add(s1);
    if value > scale {
        return Err(CliError::ResultOutOfRange { value, scale });
    }
    Ok(AucValue { value, scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_four_digits() {
        let r = |v, f| decode_result(v, 0, f).unwrap().to_string();
        assert_eq!(r(7916, 10_000), "0.7916");
        assert_eq!(r(10_000, 10_000), "1.0000");
        assert_eq!(r(0, 10_000), "0.0000");
        assert_eq!(r(5, 100), "0.0500");
        assert_eq!(r(123_456_789, 1_000_000_000), "0.1234");
    }

    #[test]
    fn reconstructs_wrapping_shares() {
        let v = decode_result(u64::MAX - 99, 7600, 10_000).unwrap();
        assert_eq!(v.value, 7500);
    }

    #[test]
    fn rejects_values_above_one() {
        assert!(matches!(
            decode_result(10_001, 0, 10_000),
            Err(CliError::ResultOutOfRange { value: 10_001, .. })
        ));
        assert!(decode_result(1, 0, 0).is_err());
    }
}
