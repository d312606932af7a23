//! Paillier additively homomorphic encryption and a signed fixed-point codec
//! for carrying real-valued gradient statistics inside plaintexts.

mod codec;
pub mod hexint;
mod paillier;
mod primes;

pub use codec::FixedPointCodec;
pub use paillier::{keygen, keygen_with, Ciphertext, Encryptor, GeneratorChoice, Keypair, PrivateKey, PublicKey};
pub use primes::{is_probable_prime, random_prime};

pub(crate) use primes::random_below;
