use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::primes::{gcd, random_below, random_prime};
use crate::error::{Error, Result};

const PRIME_ATTEMPTS: usize = 200_000;
const KEYGEN_RETRIES: usize = 64;

/// How the generator `g` is chosen at key generation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorChoice {
    /// `g = n + 1`; encryption of `m` reduces to `1 + m·n`.
    #[default]
    NPlusOne,
    /// `g` sampled uniformly from the units modulo `n²`.
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicKey {
    #[serde(with = "super::hexint")]
    n: BigUint,
    #[serde(with = "super::hexint")]
    g: BigUint,
    #[serde(skip)]
    n_squared: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateKey {
    #[serde(with = "super::hexint")]
    lambda: BigUint,
    #[serde(with = "super::hexint")]
    mu: BigUint,
    /// Factor-wise decryption constants, present when `p` and `q` are known.
    #[serde(skip)]
    crt: Option<Box<Crt>>,
}

/// Per-prime constants for decrypting modulo `p²` and `q²` separately.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Crt {
    p: BigUint,
    q: BigUint,
    p_squared: BigUint,
    q_squared: BigUint,
    /// `L_p(g^(p−1) mod p²)⁻¹ mod p`, likewise for `q`.
    hp: BigUint,
    hq: BigUint,
    /// `q⁻¹ mod p`.
    q_inv: BigUint,
}

impl Crt {
    fn new(p: &BigUint, q: &BigUint, g: &BigUint) -> Option<Crt> {
        let one = BigUint::one();
        let (p2, q2) = (p * p, q * q);
        let h = |prime: &BigUint, sq: &BigUint| -> Option<BigUint> {
            let u = g.modpow(&(prime - &one), sq);
            l_function(&u, prime).modinv(prime)
        };
        Some(Crt {
            hp: h(p, &p2)?,
            hq: h(q, &q2)?,
            q_inv: q.modinv(p)?,
            p: p.clone(),
            q: q.clone(),
            p_squared: p2,
            q_squared: q2,
        })
    }

    fn decrypt(&self, c: &BigUint) -> BigUint {
        let one = BigUint::one();
        let part = |prime: &BigUint, sq: &BigUint, h: &BigUint| {
            let u = (c % sq).modpow(&(prime - &one), sq);
            l_function(&u, prime) * h % prime
        };
        let mp = part(&self.p, &self.p_squared, &self.hp);
        let mq = part(&self.q, &self.q_squared, &self.hq);
        // Garner: m = mq + q·((mp − mq)·q⁻¹ mod p).
        let diff = (&mp + &self.p - &mq % &self.p) % &self.p;
        &mq + &self.q * (diff * &self.q_inv % &self.p)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Keypair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

/// A Paillier ciphertext, a residue modulo `n²`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ciphertext(#[serde(with = "super::hexint")] BigUint);

impl Ciphertext {
    /// Encryption of zero with unit randomness; the neutral element of
    /// homomorphic addition.
    pub fn identity() -> Self {
        Ciphertext(BigUint::one())
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn from_value(pk: &PublicKey, value: BigUint) -> Result<Self> {
        if value >= pk.n_squared {
            return Err(Error::Ciphertext("value is not below n²".into()));
        }
        Ok(Ciphertext(value))
    }
}

fn l_function(u: &BigUint, n: &BigUint) -> BigUint {
    (u - BigUint::one()) / n
}

impl PublicKey {
    pub fn new(n: BigUint, g: BigUint) -> Result<Self> {
        if n < BigUint::from(3u32) {
            return Err(Error::Config("modulus too small".into()));
        }
        let n_squared = &n * &n;
        if g.is_zero() || g >= n_squared || !gcd(&g, &n_squared).is_one() {
            return Err(Error::Config("generator is not a unit modulo n²".into()));
        }
        Ok(PublicKey { n, g, n_squared })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn bits(&self) -> u64 {
        self.n.bits()
    }

    /// Restores the cached `n²` after deserialization.
    pub fn validated(self) -> Result<Self> {
        PublicKey::new(self.n, self.g)
    }

    fn g_pow(&self, m: &BigUint) -> BigUint {
        if self.g == &self.n + BigUint::one() {
            (BigUint::one() + m * &self.n) % &self.n_squared
        } else {
            self.g.modpow(m, &self.n_squared)
        }
    }

    /// `g^m · r^n mod n²` with caller-chosen randomness.
    pub fn encrypt_with_nonce(&self, m: &BigUint, r: &BigUint) -> Result<Ciphertext> {
        if m >= &self.n {
            return Err(Error::Encoding("plaintext is not below n".into()));
        }
        if r.is_zero() || r >= &self.n || !gcd(r, &self.n).is_one() {
            return Err(Error::Encoding("randomness must be a unit below n".into()));
        }
        let rn = r.modpow(&self.n, &self.n_squared);
        Ok(Ciphertext(self.g_pow(m) * rn % &self.n_squared))
    }

    /// Encrypts with fresh randomness drawn from `rng`, resampling until the
    /// draw is coprime to `n`.
    pub fn encrypt(&self, m: &BigUint, rng: &mut impl RngCore) -> Result<Ciphertext> {
        loop {
            let r = random_below(rng, &self.n);
            if !r.is_zero() && gcd(&r, &self.n).is_one() {
                return self.encrypt_with_nonce(m, &r);
            }
        }
    }

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        Ciphertext(&a.0 * &b.0 % &self.n_squared)
    }

    /// Homomorphic sum: the product of all ciphertexts modulo `n²`.
    pub fn aggregate<'a>(&self, cs: impl IntoIterator<Item = &'a Ciphertext>) -> Ciphertext {
        let mut acc = BigUint::one();
        for c in cs {
            acc = acc * &c.0 % &self.n_squared;
        }
        Ciphertext(acc)
    }
}

impl PrivateKey {
    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.mu
    }

    pub fn new(lambda: BigUint, mu: BigUint) -> Self {
        PrivateKey { lambda, mu, crt: None }
    }

    /// The prime factors of `n`, when known.
    pub fn primes(&self) -> Option<(&BigUint, &BigUint)> {
        self.crt.as_ref().map(|c| (&c.p, &c.q))
    }

    /// `L(c^λ mod n²) · μ mod n`, evaluated modulo `p²` and `q²` when the
    /// factors are known.
    pub fn decrypt(&self, pk: &PublicKey, c: &Ciphertext) -> Result<BigUint> {
        if c.0 >= pk.n_squared {
            return Err(Error::Ciphertext("value is not below n²".into()));
        }
        if let Some(crt) = &self.crt {
            return Ok(crt.decrypt(&c.0));
        }
        let u = c.0.modpow(&self.lambda, &pk.n_squared);
        Ok(l_function(&u, &pk.n) * &self.mu % &pk.n)
    }
}

impl Keypair {
    /// Assembles a keypair from two distinct primes. Fails when
    /// `gcd(n, φ(n)) ≠ 1` or when `L(g^λ mod n²)` is not invertible.
    pub fn from_primes(p: &BigUint, q: &BigUint, g: Option<BigUint>) -> Result<Keypair> {
        if p == q {
            return Err(Error::Config("p and q must differ".into()));
        }
        let one = BigUint::one();
        let n = p * q;
        let p1 = p - &one;
        let q1 = q - &one;
        let phi = &p1 * &q1;
        if !gcd(&n, &phi).is_one() {
            return Err(Error::Config("gcd(n, φ(n)) ≠ 1".into()));
        }
        let lambda = p1.lcm(&q1);
        let g = g.unwrap_or_else(|| &n + &one);
        let public = PublicKey::new(n, g)?;
        let u = public.g.modpow(&lambda, &public.n_squared);
        let mu = l_function(&u, &public.n)
            .modinv(&public.n)
            .ok_or_else(|| Error::Config("L(g^λ mod n²) is not invertible modulo n".into()))?;
        let crt = Crt::new(p, q, &public.g)
            .ok_or_else(|| Error::Config("factor-wise decryption constants do not exist".into()))?;
        Ok(Keypair {
            public,
            private: PrivateKey {
                lambda,
                mu,
                crt: Some(Box::new(crt)),
            },
        })
    }
}

/// Window width, in exponent bits, of the fixed-base table.
const WINDOW: u64 = 8;

/// Encrypts with fixed-base randomness, as in Damgård–Jurik–Nielsen:
/// `r^n` is taken as `h^α mod n²` with `h = (x²)^n` for a random unit `x`
/// and a fresh random exponent `α` of half the modulus size. Powers of `h`
/// are tabulated per window, so each encryption costs one multiplication
/// per window instead of a full exponentiation. Ciphertexts are ordinary
/// Paillier ciphertexts.
#[derive(Clone)]
pub struct Encryptor {
    public: PublicKey,
    exp_bytes: usize,
    /// `table[i][j] = h^(j · 2^(WINDOW·i)) mod n²`.
    table: Vec<Vec<BigUint>>,
}

impl std::fmt::Debug for Encryptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Encryptor")
            .field("public", &self.public)
            .field("exp_bytes", &self.exp_bytes)
            .finish_non_exhaustive()
    }
}

impl Encryptor {
    pub fn new(public: &PublicKey, rng: &mut impl RngCore) -> Result<Self> {
        let n2 = &public.n_squared;
        let x = loop {
            let x = random_below(rng, &public.n);
            if !x.is_zero() && gcd(&x, &public.n).is_one() {
                break x;
            }
        };
        let h = (&x * &x).modpow(&public.n, n2);
        let exp_bytes = (public.bits().div_ceil(2)).div_ceil(WINDOW) as usize;
        let mut table = Vec::with_capacity(exp_bytes);
        let mut base = h;
        for _ in 0..exp_bytes {
            let mut row = Vec::with_capacity(1 << WINDOW);
            let mut acc = BigUint::one();
            for _ in 0..1 << WINDOW {
                row.push(acc.clone());
                acc = acc * &base % n2;
            }
            base = acc;
            table.push(row);
        }
        Ok(Encryptor {
            public: public.clone(),
            exp_bytes,
            table,
        })
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.public
    }

    pub fn encrypt(&self, m: &BigUint, rng: &mut impl RngCore) -> Result<Ciphertext> {
        if m >= &self.public.n {
            return Err(Error::Encoding("plaintext is not below n".into()));
        }
        let n2 = &self.public.n_squared;
        let mut alpha = vec![0u8; self.exp_bytes];
        rng.fill_bytes(&mut alpha);
        let mut c = self.public.g_pow(m);
        for (row, &digit) in self.table.iter().zip(&alpha) {
            if digit != 0 {
                c = c * &row[digit as usize] % n2;
            }
        }
        Ok(Ciphertext(c))
    }
}

/// Seeded key generation with `g = n + 1`.
pub fn keygen(key_bits: u64, seed: u64) -> Result<Keypair> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    keygen_with(key_bits, GeneratorChoice::NPlusOne, &mut rng)
}

pub fn keygen_with(
    key_bits: u64,
    generator: GeneratorChoice,
    rng: &mut impl RngCore,
) -> Result<Keypair> {
    if key_bits < 64 || key_bits % 2 != 0 {
        return Err(Error::Config(format!(
            "key size must be an even number of bits ≥ 64, got {key_bits}"
        )));
    }
    let half = key_bits / 2;
    for _ in 0..KEYGEN_RETRIES {
        let p = random_prime(half, rng, PRIME_ATTEMPTS)?;
        let q = random_prime(half, rng, PRIME_ATTEMPTS)?;
        if p == q {
            continue;
        }
        let g = match generator {
            GeneratorChoice::NPlusOne => None,
            GeneratorChoice::Random => {
                let n = &p * &q;
                let n2 = &n * &n;
                let g = random_below(rng, &n2);
                Some(g)
            }
        };
        match Keypair::from_primes(&p, &q, g) {
            Ok(kp) => return Ok(kp),
            Err(Error::Config(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Config(format!(
        "key generation failed after {KEYGEN_RETRIES} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Keypair {
        Keypair::from_primes(&BigUint::from(3u32), &BigUint::from(5u32), None).unwrap()
    }

    #[test]
    fn toy_keypair_values() {
        let kp = toy();
        assert_eq!(kp.public.n(), &BigUint::from(15u32));
        assert_eq!(kp.public.g(), &BigUint::from(16u32));
        assert_eq!(kp.private.lambda(), &BigUint::from(4u32));
        assert_eq!(kp.private.mu(), &BigUint::from(4u32));
    }

    #[test]
    fn toy_encrypt_decrypt() {
        let kp = toy();
        let c = kp
            .public
            .encrypt_with_nonce(&BigUint::from(7u32), &BigUint::from(2u32))
            .unwrap();
        assert_eq!(c.value(), &BigUint::from(83u32));
        assert_eq!(
            kp.private.decrypt(&kp.public, &c).unwrap(),
            BigUint::from(7u32)
        );
    }

    #[test]
    fn zero_with_unit_randomness_is_one() {
        let kp = toy();
        let c = kp
            .public
            .encrypt_with_nonce(&BigUint::zero(), &BigUint::one())
            .unwrap();
        assert_eq!(c, Ciphertext::identity());
        assert!(kp.private.decrypt(&kp.public, &c).unwrap().is_zero());
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        let kp = toy();
        assert!(kp
            .public
            .encrypt_with_nonce(&BigUint::from(15u32), &BigUint::from(2u32))
            .is_err());
        // 3 shares a factor with n = 15.
        assert!(kp
            .public
            .encrypt_with_nonce(&BigUint::from(1u32), &BigUint::from(3u32))
            .is_err());
        let too_big = Ciphertext(BigUint::from(225u32));
        assert!(kp.private.decrypt(&kp.public, &too_big).is_err());
        assert!(Ciphertext::from_value(&kp.public, BigUint::from(225u32)).is_err());
    }

    #[test]
    fn aggregate_edge_cases() {
        let kp = keygen(128, 5).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let c = kp.public.encrypt(&BigUint::from(42u32), &mut rng).unwrap();
        assert_eq!(kp.public.aggregate([&c]), c);
        let empty = kp.public.aggregate(std::iter::empty());
        assert_eq!(empty, Ciphertext::identity());
        assert!(kp.private.decrypt(&kp.public, &empty).unwrap().is_zero());
    }

    #[test]
    fn random_generator_mode_roundtrips() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let kp = keygen_with(128, GeneratorChoice::Random, &mut rng).unwrap();
        assert_ne!(kp.public.g(), &(kp.public.n() + BigUint::one()));
        for m in [0u64, 1, 12345, u64::MAX] {
            let m = BigUint::from(m);
            let c = kp.public.encrypt(&m, &mut rng).unwrap();
            assert_eq!(kp.private.decrypt(&kp.public, &c).unwrap(), m);
        }
    }

    #[test]
    fn factor_wise_decryption_matches_lambda_form() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        for kp in [keygen(256, 2).unwrap(), keygen_with(128, GeneratorChoice::Random, &mut rng).unwrap()] {
            let plain = PrivateKey::new(kp.private.lambda().clone(), kp.private.mu().clone());
            assert!(kp.private.primes().is_some() && plain.primes().is_none());
            for m in [0u64, 1, 999, u64::MAX] {
                let c = kp.public.encrypt(&BigUint::from(m), &mut rng).unwrap();
                assert_eq!(kp.private.decrypt(&kp.public, &c).unwrap(), BigUint::from(m));
                assert_eq!(plain.decrypt(&kp.public, &c).unwrap(), BigUint::from(m));
            }
        }
    }

    #[test]
    fn fixed_base_encryption_roundtrips_and_adds() {
        let kp = keygen(256, 4).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let enc = Encryptor::new(&kp.public, &mut rng).unwrap();
        let a = enc.encrypt(&BigUint::from(40u32), &mut rng).unwrap();
        let b = enc.encrypt(&BigUint::from(2u32), &mut rng).unwrap();
        assert_ne!(a, enc.encrypt(&BigUint::from(40u32), &mut rng).unwrap());
        let sum = kp.public.add(&a, &b);
        assert_eq!(kp.private.decrypt(&kp.public, &sum).unwrap(), BigUint::from(42u32));
        assert!(enc.encrypt(kp.public.n(), &mut rng).is_err());
    }

    #[test]
    fn keygen_size_and_determinism() {
        let a = keygen(128, 3).unwrap();
        let b = keygen(128, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.public.bits(), 128);
        assert!(keygen(32, 1).is_err());
        assert!(keygen(129, 1).is_err());
    }
}
