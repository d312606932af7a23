use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed fixed-point codec mapping reals onto Paillier plaintexts.
///
/// `x` is encoded as `round(x · 2^scale_bits) mod n`; negative values wrap
/// into the upper half of `[0, n)`. Every encoded magnitude is checked
/// against `n / (2 · max_terms)` so that a homomorphic sum of up to
/// `max_terms` encodings cannot cross into the other half.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointCodec {
    pub scale_bits: u32,
    pub max_terms: u64,
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        FixedPointCodec {
            scale_bits: 40,
            max_terms: 1 << 20,
        }
    }
}

impl FixedPointCodec {
    pub fn new(scale_bits: u32, max_terms: u64) -> Result<Self> {
        if scale_bits == 0 || scale_bits > 62 {
            return Err(Error::Config(format!("scale_bits {scale_bits} out of range")));
        }
        if max_terms == 0 {
            return Err(Error::Config("max_terms must be positive".into()));
        }
        Ok(FixedPointCodec {
            scale_bits,
            max_terms,
        })
    }

    pub fn resolution(&self) -> f64 {
        (-(self.scale_bits as f64)).exp2()
    }

    /// Largest admissible encoded magnitude for modulus `n`.
    fn magnitude_limit(&self, n: &BigUint) -> BigUint {
        n / (BigUint::from(self.max_terms) * 2u32)
    }

    /// Rounds `x` onto the fixed-point grid as a signed integer.
    pub fn quantize(&self, x: f64) -> Result<i128> {
        if !x.is_finite() {
            return Err(Error::Encoding(format!("cannot encode non-finite {x}")));
        }
        let scaled = (x * (self.scale_bits as f64).exp2()).round();
        if scaled.abs() >= 2f64.powi(120) {
            return Err(Error::Encoding(format!("{x} overflows the fixed-point range")));
        }
        Ok(scaled as i128)
    }

    pub fn encode(&self, x: f64, n: &BigUint) -> Result<BigUint> {
        let q = self.quantize(x)?;
        let mag = BigUint::from(q.unsigned_abs());
        if mag > self.magnitude_limit(n) {
            return Err(Error::Encoding(format!(
                "{x} exceeds the codec range for a {}-bit modulus with {} terms",
                n.bits(),
                self.max_terms
            )));
        }
        Ok(if q < 0 { n - mag } else { mag })
    }

    /// Inverse of [`encode`](Self::encode); residues above `n/2` are negative.
    pub fn decode(&self, m: &BigUint, n: &BigUint) -> f64 {
        let half = n >> 1u32;
        let scale = (self.scale_bits as f64).exp2();
        if m > &half {
            -((n - m).to_f64().unwrap_or(f64::INFINITY) / scale)
        } else {
            m.to_f64().unwrap_or(f64::INFINITY) / scale
        }
    }

    /// Two's-complement 64-bit encoding for the mask-only aggregation mode.
    pub fn encode_wrapping(&self, x: f64) -> Result<u64> {
        let q = self.quantize(x)?;
        let limit = (i64::MAX as u64 / (2 * self.max_terms)) as i128;
        if q.abs() > limit {
            return Err(Error::Encoding(format!(
                "{x} exceeds the 64-bit codec range for {} terms",
                self.max_terms
            )));
        }
        Ok(q as i64 as u64)
    }

    pub fn decode_wrapping(&self, m: u64) -> f64 {
        (m as i64) as f64 / (self.scale_bits as f64).exp2()
    }
}
