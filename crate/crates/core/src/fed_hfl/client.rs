use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand_chacha::ChaCha20Rng;

use super::messages::{
    BinningBroadcast, HistogramSubmit, MaskedSums, ModelDelivery, NodeHistogram, PartitionCount, PartitionReport,
    RangeReport, SplitBroadcast,
};
use super::secagg::{modular_masks, wrapping_masks, HflRoster, SecAggMode};
use crate::data::PartyDataset;
use crate::error::{Error, Result};
use crate::gbt::{
    all_gradients, build_histogram, column_range, initial_margins, stream_rng, subsample_rows, BinBoundaries,
    BinnedMatrix, BoostedEnsemble, GbtParams, GradPair, Tree, GRADIENT_SCALE_BITS,
};
use crate::phe::{Encryptor, FixedPointCodec, PublicKey};

const ENCRYPT_STREAM: u64 = 0x5EC0_0000;

/// Values a client sent in masked form, kept for leakage auditing only.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClientAudit {
    /// Unmasked plaintext encodings as decimal strings.
    pub encodings: Vec<String>,
    /// Unmasked per-slot gradient and hessian sums.
    pub sums: Vec<f64>,
}

/// One data-holding participant of a horizontal run.
#[derive(Debug)]
pub struct HflClient {
    pub name: String,
    index: usize,
    roster: HflRoster,
    params: GbtParams,
    seed: u64,
    data: PartyDataset,
    codec: FixedPointCodec,
    encryptor: Option<Encryptor>,
    binned: Option<BinnedMatrix>,
    margins: Vec<f64>,
    grads: Vec<GradPair>,
    node_rows: BTreeMap<usize, Vec<usize>>,
    tree: usize,
    rng: ChaCha20Rng,
    pub audit: ClientAudit,
    pub model: Option<BoostedEnsemble>,
}

impl HflClient {
    pub fn new(roster: &HflRoster, data: PartyDataset, params: &GbtParams, seed: u64) -> Result<Self> {
        let index = roster
            .index_of(&data.party)
            .ok_or_else(|| Error::Config(format!("{} is not on the roster", data.party)))?;
        data.labels()?;
        if data.is_empty() {
            return Err(Error::InvalidInput(format!("{} holds no samples", data.party)));
        }
        let client_seed = seed.wrapping_add(index as u64 + 1);
        let margins = initial_margins(data.len(), params, client_seed);
        Ok(HflClient {
            name: data.party.clone(),
            index,
            roster: roster.clone(),
            params: params.clone(),
            seed: client_seed,
            codec: FixedPointCodec::new(GRADIENT_SCALE_BITS, roster.clients.len() as u64)?,
            encryptor: None,
            binned: None,
            margins,
            grads: Vec::new(),
            node_rows: BTreeMap::new(),
            tree: 0,
            rng: stream_rng(seed, ENCRYPT_STREAM + index as u64),
            audit: ClientAudit::default(),
            model: None,
            data,
        })
    }

    pub fn on_public_key(&mut self, pk: PublicKey) -> Result<()> {
        self.encryptor = Some(Encryptor::new(&pk.validated()?, &mut self.rng)?);
        Ok(())
    }

    pub fn range_report(&self) -> RangeReport {
        let x = &self.data.features;
        let (mins, maxs) = (0..x.n_cols())
            .map(|j| column_range(x.column(j)).expect("nonempty"))
            .unzip();
        RangeReport {
            symbols: self.data.symbols().iter().map(|s| s.to_string()).collect(),
            mins,
            maxs,
        }
    }

    pub fn on_binning(&mut self, b: &BinningBroadcast) -> Result<()> {
        if b.thresholds.len() != self.data.n_features() {
            return Err(Error::Consistency(format!(
                "{}: binning covers {} features, data has {}",
                self.name,
                b.thresholds.len(),
                self.data.n_features()
            )));
        }
        let bounds: Vec<BinBoundaries> = b
            .thresholds
            .iter()
            .enumerate()
            .map(|(f, t)| BinBoundaries::from_thresholds(f, t.clone()))
            .collect::<Result<_>>()?;
        self.binned = Some(BinnedMatrix::new(&self.data.features, &bounds)?);
        Ok(())
    }

    fn binned(&self) -> Result<&BinnedMatrix> {
        self.binned
            .as_ref()
            .ok_or_else(|| Error::Consistency(format!("{}: no binning received", self.name)))
    }

    /// Computes gradients for tree `t` and submits the root histogram.
    pub fn start_tree(&mut self, t: usize) -> Result<HistogramSubmit> {
        self.tree = t;
        self.grads = all_gradients(self.data.labels()?, &self.margins);
        let rows = subsample_rows(self.data.len(), &self.params, self.seed, t);
        self.node_rows.clear();
        self.node_rows.insert(0, rows);
        Ok(HistogramSubmit {
            tree: t,
            nodes: vec![self.node_histogram(0)?],
        })
    }

    fn node_histogram(&mut self, node: usize) -> Result<NodeHistogram> {
        let rows = self
            .node_rows
            .get(&node)
            .ok_or_else(|| Error::Consistency(format!("{}: unknown node {node}", self.name)))?;
        let hist = build_histogram(self.binned()?, &self.grads, rows);
        let slots = hist.slots();
        let counts = slots.iter().map(|s| s.count).collect();
        let len = slots.len();
        let values: Vec<f64> = slots.iter().map(|s| s.g).chain(slots.iter().map(|s| s.h)).collect();
        self.audit.sums.extend(values.iter().copied().filter(|v| *v != 0.0));
        let sums = match self.roster.mode {
            SecAggMode::Paillier => {
                let enc_key = self
                    .encryptor
                    .as_ref()
                    .ok_or_else(|| Error::Consistency(format!("{}: no public key received", self.name)))?;
                let n = enc_key.public_key().n();
                let masks = modular_masks(&self.roster, self.index, self.tree, node, 2 * len, n);
                let mut cts = Vec::with_capacity(2 * len);
                for (v, m) in values.iter().zip(masks) {
                    let enc = self.codec.encode(*v, n)?;
                    if enc != BigUint::default() {
                        self.audit.encodings.push(enc.to_string());
                    }
                    cts.push(enc_key.encrypt(&((enc + m) % n), &mut self.rng)?);
                }
                let h = cts.split_off(len);
                MaskedSums::Paillier { g: cts, h }
            }
            SecAggMode::Mask => {
                let masks = wrapping_masks(&self.roster, self.index, self.tree, node, 2 * len);
                let mut out = Vec::with_capacity(2 * len);
                for (v, m) in values.iter().zip(masks) {
                    let enc = self.codec.encode_wrapping(*v)?;
                    if enc != 0 {
                        self.audit.encodings.push(enc.to_string());
                    }
                    out.push(enc.wrapping_add(m));
                }
                let h = out.split_off(len);
                MaskedSums::Wrapping { g: out, h }
            }
        };
        Ok(NodeHistogram { node, counts, sums })
    }

    /// Applies a level of split decisions to the local rows, reporting the
    /// resulting child sizes and any requested histograms.
    pub fn on_split(&mut self, b: &SplitBroadcast) -> Result<(Option<PartitionReport>, Option<HistogramSubmit>)> {
        if b.tree != self.tree {
            return Err(Error::Consistency(format!(
                "{}: split for tree {} while on tree {}",
                self.name, b.tree, self.tree
            )));
        }
        let mut counts = Vec::with_capacity(b.splits.len());
        for s in &b.splits {
            let rows = self
                .node_rows
                .remove(&s.node)
                .ok_or_else(|| Error::Consistency(format!("{}: unknown node {}", self.name, s.node)))?;
            let binned = self.binned()?;
            if s.feature >= binned.n_features() || s.bin + 1 >= binned.n_bins() {
                return Err(Error::Consistency(format!("{}: split outside the bin grid", self.name)));
            }
            let col = binned.feature_bins(s.feature);
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| col[i] as usize <= s.bin);
            counts.push(PartitionCount {
                node: s.node,
                left: l.len() as u64,
                right: r.len() as u64,
            });
            self.node_rows.insert(s.left, l);
            self.node_rows.insert(s.right, r);
        }
        for leaf in &b.leaves {
            self.node_rows.remove(leaf);
        }
        let report = (!b.splits.is_empty()).then_some(PartitionReport {
            tree: self.tree,
            counts,
        });
        let submit = if b.request.is_empty() {
            None
        } else {
            let nodes = b
                .request
                .iter()
                .map(|&n| self.node_histogram(n))
                .collect::<Result<Vec<_>>>()?;
            Some(HistogramSubmit { tree: self.tree, nodes })
        };
        Ok((report, submit))
    }

    pub fn on_model(&mut self, m: ModelDelivery) -> Result<()> {
        match m {
            ModelDelivery::Tree { index, tree } => {
                if index != self.tree {
                    return Err(Error::Consistency(format!("{}: tree {index} out of order", self.name)));
                }
                self.apply_tree(&tree)
            }
            ModelDelivery::Final { model } => {
                self.model = Some(model);
                Ok(())
            }
        }
    }

    fn apply_tree(&mut self, tree: &Tree) -> Result<()> {
        tree.validate()?;
        let x = &self.data.features;
        for (i, m) in self.margins.iter_mut().enumerate() {
            *m += self.params.learning_rate * tree.leaf_value(x.row(i))?;
        }
        Ok(())
    }

    pub fn data(&self) -> &PartyDataset {
        &self.data
    }
}
