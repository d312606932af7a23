use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::{Error, Result};

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

const MILLER_RABIN_ROUNDS: usize = 40;

/// Uniform integer with exactly `bits` random bits (top bits may be zero).
pub(crate) fn random_bits(rng: &mut impl RngCore, bits: u64) -> BigUint {
    let bytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; bytes];
    rng.fill_bytes(&mut buf);
    let excess = (bytes as u64) * 8 - bits;
    if excess > 0 {
        buf[0] &= 0xffu8 >> excess;
    }
    BigUint::from_bytes_be(&buf)
}

/// Uniform integer in `[0, bound)` by rejection sampling.
pub(crate) fn random_below(rng: &mut impl RngCore, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero(), "empty sampling range");
    let bits = bound.bits();
    loop {
        let c = random_bits(rng, bits);
        if &c < bound {
            return c;
        }
    }
}

pub fn is_probable_prime(n: &BigUint, rng: &mut impl RngCore) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &p in SMALL_PRIMES.iter() {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }

    let one = BigUint::one();
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let base_range = n - BigUint::from(3u32);

    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let a = random_below(rng, &base_range) + &two;
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
            if x == one {
                return false;
            }
        }
        return false;
    }
    true
}

/// Random prime of exactly `bits` bits with the two top bits set, so the
/// product of two such primes has exactly `2 * bits` bits.
pub fn random_prime(bits: u64, rng: &mut impl RngCore, max_attempts: usize) -> Result<BigUint> {
    if bits < 8 {
        return Err(Error::Config(format!("prime size {bits} bits is too small")));
    }
    let top = (BigUint::one() << (bits - 1)) | (BigUint::one() << (bits - 2));
    for _ in 0..max_attempts {
        let candidate = random_bits(rng, bits) | &top | BigUint::one();
        if is_probable_prime(&candidate, rng) {
            return Ok(candidate);
        }
    }
    Err(Error::Config(format!(
        "no {bits}-bit prime found after {max_attempts} candidates"
    )))
}

pub(crate) fn gcd(a: &BigUint, b: &BigUint) -> BigUint {
    a.gcd(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn small_numbers_classified() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let primes: Vec<u32> = (0..400u32)
            .filter(|&n| is_probable_prime(&BigUint::from(n), &mut rng))
            .collect();
        let naive: Vec<u32> = (0..400u32)
            .filter(|&n| n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect();
        assert_eq!(primes, naive);
    }

    #[test]
    fn carmichael_number_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        // 561 = 3·11·17 and 41041 = 7·11·13·41 fool Fermat but not Miller–Rabin.
        assert!(!is_probable_prime(&BigUint::from(561u32), &mut rng));
        assert!(!is_probable_prime(&BigUint::from(41041u32), &mut rng));
        // 2^61 − 1 is a Mersenne prime.
        let m61 = (BigUint::one() << 61u32) - BigUint::one();
        assert!(is_probable_prime(&m61, &mut rng));
    }

    #[test]
    fn generated_prime_has_requested_size() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let p = random_prime(64, &mut rng, 10_000).unwrap();
        assert_eq!(p.bits(), 64);
        assert!(p.bit(62));
    }

    #[test]
    fn random_below_stays_in_range() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let bound = BigUint::from(1000u32);
        for _ in 0..500 {
            assert!(random_below(&mut rng, &bound) < bound);
        }
    }
}
