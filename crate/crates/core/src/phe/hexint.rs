//! Lowercase big-endian hexadecimal encoding of big integers, used for keys
//! and ciphertexts inside message payloads and key files.

use num_bigint::BigUint;
use num_traits::Num;
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};

pub fn to_hex(v: &BigUint) -> String {
    v.to_str_radix(16)
}

pub fn from_hex(s: &str) -> Result<BigUint> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
        return Err(Error::Serde(format!("not a lowercase hex integer: {s:?}")));
    }
    BigUint::from_str_radix(s, 16).map_err(|e| Error::Serde(e.to_string()))
}

pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&to_hex(v))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigUint, D::Error> {
    let s = String::deserialize(d)?;
    from_hex(&s).map_err(serde::de::Error::custom)
}
