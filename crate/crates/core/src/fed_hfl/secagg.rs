use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gbt::stream_rng;
use crate::phe::random_below;

/// How clients hide their histogram sums from the server.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecAggMode {
    /// Pairwise masks modulo the Paillier modulus, then encryption under
    /// the server's key.
    #[default]
    Paillier,
    /// Pairwise masks over wrapping 64-bit integers only.
    Mask,
}

impl std::str::FromStr for SecAggMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paillier" => Ok(SecAggMode::Paillier),
            "mask" => Ok(SecAggMode::Mask),
            other => Err(Error::Config(format!("unknown secure aggregation mode {other:?}"))),
        }
    }
}

const PAIR_STREAM: u64 = 0x9A1B;

/// Participants of a horizontal run and the pairwise mask seeds shared
/// between every two clients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HflRoster {
    pub server: String,
    pub clients: Vec<String>,
    pub mode: SecAggMode,
    pub key_bits: u64,
    pair_seeds: Vec<u64>,
}

impl HflRoster {
    pub fn new(clients: Vec<String>, mode: SecAggMode, key_bits: u64, seed: u64) -> Result<Self> {
        let server = "server".to_string();
        if clients.is_empty() {
            return Err(Error::Config("a horizontal run needs at least one client".into()));
        }
        let mut names = clients.clone();
        names.push(server.clone());
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("participant names must be distinct".into()));
        }
        let k = clients.len();
        let mut rng = stream_rng(seed, PAIR_STREAM);
        let pair_seeds = (0..k * k).map(|_| rng.gen()).collect();
        Ok(HflRoster {
            server,
            clients,
            mode,
            key_bits,
            pair_seeds,
        })
    }

    pub fn index_of(&self, client: &str) -> Option<usize> {
        self.clients.iter().position(|c| c == client)
    }

    /// Seed shared by clients `i` and `j`; symmetric in its arguments.
    pub fn pair_seed(&self, i: usize, j: usize) -> u64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.pair_seeds[a * self.clients.len() + b]
    }
}

fn pair_stream(pair_seed: u64, tree: usize, node: usize) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"fedgbt-mask");
    h.update(pair_seed.to_le_bytes());
    h.update((tree as u64).to_le_bytes());
    h.update((node as u64).to_le_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

/// Masks client `me` adds to `len` values of node `node` in tree `tree`.
/// For each pair the lower-index client adds the shared draw and the
/// higher-index one subtracts it, so the masks of all clients cancel.
pub fn modular_masks(roster: &HflRoster, me: usize, tree: usize, node: usize, len: usize, n: &BigUint) -> Vec<BigUint> {
    let mut acc = vec![BigUint::default(); len];
    for other in 0..roster.clients.len() {
        if other == me {
            continue;
        }
        let mut rng = pair_stream(roster.pair_seed(me, other), tree, node);
        for a in acc.iter_mut() {
            let r = random_below(&mut rng, n);
            *a = if me < other { (&*a + r) % n } else { (&*a + n - r) % n };
        }
    }
    acc
}

pub fn wrapping_masks(roster: &HflRoster, me: usize, tree: usize, node: usize, len: usize) -> Vec<u64> {
    let mut acc = vec![0u64; len];
    for other in 0..roster.clients.len() {
        if other == me {
            continue;
        }
        let mut rng = pair_stream(roster.pair_seed(me, other), tree, node);
        for a in acc.iter_mut() {
            let r = rng.next_u64();
            *a = if me < other { a.wrapping_add(r) } else { a.wrapping_sub(r) };
        }
    }
    acc
}
