use rand_chacha::ChaCha20Rng;

use super::messages::{EncNodeHistogram, GradientBroadcast};
use super::model::{SplitLookupTable, VflRoster};
use crate::data::PartyDataset;
use crate::error::{Error, Result};
use crate::gbt::{
    all_gradients, initial_margins, per_node_histogram, stream_rng, BinBoundaries, BinStats, GbtParams, GradHistogram,
    GradPair, GRADIENT_SCALE_BITS,
};
use crate::phe::{keygen, Ciphertext, Encryptor, FixedPointCodec, Keypair, PublicKey};

const KEY_STREAM: u64 = 0x4B45_5901;
const ENCRYPT_STREAM: u64 = 0x5EC1_0000;

/// Label holder and key owner of a vertical run.
#[derive(Debug)]
pub struct VflActive {
    pub name: String,
    params: GbtParams,
    data: PartyDataset,
    keypair: Keypair,
    encryptor: Encryptor,
    codec: FixedPointCodec,
    rng: ChaCha20Rng,
    pub table: SplitLookupTable,
    pub margins: Vec<f64>,
    grads: Vec<GradPair>,
}

impl VflActive {
    pub fn new(roster: &VflRoster, data: PartyDataset, params: &GbtParams, seed: u64) -> Result<Self> {
        if data.party != roster.active || data.ids != roster.sample_ids {
            return Err(Error::Config(format!("{} does not match the roster", data.party)));
        }
        data.labels()?;
        let keypair = keygen(roster.key_bits, seed.wrapping_add(KEY_STREAM))?;
        let margins = initial_margins(data.len(), params, seed);
        let mut rng = stream_rng(seed, ENCRYPT_STREAM);
        let encryptor = Encryptor::new(&keypair.public, &mut rng)?;
        Ok(VflActive {
            name: data.party.clone(),
            params: params.clone(),
            codec: FixedPointCodec::new(GRADIENT_SCALE_BITS, data.len().max(1) as u64)?,
            rng,
            encryptor,
            table: SplitLookupTable::new(&data.party),
            margins,
            grads: Vec::new(),
            keypair,
            data,
        })
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.keypair.public
    }

    pub fn keypair(&self) -> &Keypair {
        &self.keypair
    }

    pub fn data(&self) -> &PartyDataset {
        &self.data
    }

    pub fn grads(&self) -> &[GradPair] {
        &self.grads
    }

    /// Refreshes the gradients from the current margins.
    pub fn compute_gradients(&mut self) -> Result<()> {
        self.grads = all_gradients(self.data.labels()?, &self.margins);
        Ok(())
    }

    /// Encrypts the current gradients for the passive parties.
    pub fn encrypt_gradients(&mut self, tree: usize) -> Result<GradientBroadcast> {
        let n = self.keypair.public.n().clone();
        let key = &self.encryptor;
        let mut enc = |x: f64| -> Result<Ciphertext> { key.encrypt(&self.codec.encode(x, &n)?, &mut self.rng) };
        let g = self.grads.iter().map(|p| enc(p.g)).collect::<Result<Vec<_>>>()?;
        let h = self.grads.iter().map(|p| enc(p.h)).collect::<Result<Vec<_>>>()?;
        Ok(GradientBroadcast { tree, g, h })
    }

    pub fn decrypt_histogram(&self, e: &EncNodeHistogram, n_bins: usize) -> Result<GradHistogram> {
        let len = e.n_features * e.n_bins;
        if e.n_bins != n_bins || e.counts.len() != len || e.g.len() != len || e.h.len() != len {
            return Err(Error::Consistency(format!("node {} histogram has the wrong shape", e.node)));
        }
        let pk = &self.keypair.public;
        let dec = |c: &Ciphertext| -> Result<f64> {
            let c = Ciphertext::from_value(pk, c.value().clone())?;
            Ok(self.codec.decode(&self.keypair.private.decrypt(pk, &c)?, pk.n()))
        };
        let slots = (0..len)
            .map(|i| {
                Ok(BinStats {
                    g: dec(&e.g[i])?,
                    h: dec(&e.h[i])?,
                    count: e.counts[i],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        GradHistogram::from_slots(e.n_features, e.n_bins, slots)
    }

    pub fn own_histogram(&self, rows: &[usize]) -> Result<(Vec<BinBoundaries>, GradHistogram)> {
        per_node_histogram(&self.data.features, &self.grads, rows, self.params.max_bin)
    }
}
