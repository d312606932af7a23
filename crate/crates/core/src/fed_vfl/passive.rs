use std::collections::{BTreeMap, HashMap};

use super::messages::{
    EncHistogramSubmit, EncNodeHistogram, GradientBroadcast, InferQuery, InferReply, LeftSet, PartitionReply,
    SampleSpace, SplitNotice,
};
use super::model::{SplitLookupTable, SplitRecord};
use crate::data::PartyDataset;
use crate::error::{Error, Result};
use crate::gbt::{boundaries_over, BinBoundaries};
use crate::phe::{Ciphertext, PublicKey};

/// Feature-only participant. It sees encrypted gradients, sample spaces
/// and notices of its own winning splits; thresholds never leave it.
#[derive(Debug)]
pub struct VflPassive {
    pub name: String,
    data: PartyDataset,
    row_of: HashMap<String, usize>,
    n_bins: usize,
    public_key: Option<PublicKey>,
    tree: usize,
    g: Vec<Ciphertext>,
    h: Vec<Ciphertext>,
    bounds: BTreeMap<usize, Vec<BinBoundaries>>,
    spaces: BTreeMap<usize, Vec<usize>>,
    pub table: SplitLookupTable,
}

impl VflPassive {
    pub fn new(data: PartyDataset, n_bins: usize) -> Self {
        let row_of = data.ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        VflPassive {
            name: data.party.clone(),
            table: SplitLookupTable::new(&data.party),
            data,
            row_of,
            n_bins,
            public_key: None,
            tree: 0,
            g: Vec::new(),
            h: Vec::new(),
            bounds: BTreeMap::new(),
            spaces: BTreeMap::new(),
        }
    }

    /// A party ready to answer inference queries with an existing table.
    pub fn for_inference(data: PartyDataset, table: SplitLookupTable) -> Self {
        let mut p = VflPassive::new(data, 2);
        p.table = table;
        p
    }

    pub fn on_public_key(&mut self, pk: PublicKey) -> Result<()> {
        self.public_key = Some(pk.validated()?);
        Ok(())
    }

    pub fn on_gradients(&mut self, b: GradientBroadcast) -> Result<()> {
        let pk = self.key()?;
        if b.g.len() != self.data.len() || b.h.len() != self.data.len() {
            return Err(Error::Consistency(format!(
                "{}: {} encrypted gradients for {} samples",
                self.name,
                b.g.len(),
                self.data.len()
            )));
        }
        for c in b.g.iter().chain(&b.h) {
            Ciphertext::from_value(pk, c.value().clone())?;
        }
        self.tree = b.tree;
        self.g = b.g;
        self.h = b.h;
        self.bounds.clear();
        self.spaces.clear();
        Ok(())
    }

    fn key(&self) -> Result<&PublicKey> {
        self.public_key
            .as_ref()
            .ok_or_else(|| Error::Consistency(format!("{}: no public key received", self.name)))
    }

    /// Homomorphic per-bin sums over each node's sample space, with bins
    /// recomputed over that sample space.
    pub fn on_sample_space(&mut self, s: &SampleSpace) -> Result<EncHistogramSubmit> {
        if s.tree != self.tree {
            return Err(Error::Consistency(format!("{}: sample space for tree {}", self.name, s.tree)));
        }
        let pk = self.key()?.clone();
        let n = self.data.len();
        let nf = self.data.n_features();
        let nb = self.n_bins;
        let x = &self.data.features;
        let mut nodes = Vec::with_capacity(s.nodes.len());
        for ns in &s.nodes {
            if let Some(&bad) = ns.samples.iter().find(|&&i| i >= n) {
                return Err(Error::Consistency(format!("{}: unknown sample {bad}", self.name)));
            }
            let bounds = boundaries_over(x, &ns.samples, nb)?;
            let mut counts = vec![0u64; nf * nb];
            let mut g = vec![Ciphertext::identity(); nf * nb];
            let mut h = vec![Ciphertext::identity(); nf * nb];
            for (f, b) in bounds.iter().enumerate() {
                for &i in &ns.samples {
                    let slot = f * nb + b.bin(x.get(i, f));
                    counts[slot] += 1;
                    g[slot] = pk.add(&g[slot], &self.g[i]);
                    h[slot] = pk.add(&h[slot], &self.h[i]);
                }
            }
            self.bounds.insert(ns.node, bounds);
            self.spaces.insert(ns.node, ns.samples.clone());
            nodes.push(EncNodeHistogram {
                node: ns.node,
                n_features: nf,
                n_bins: nb,
                counts,
                g,
                h,
            });
        }
        Ok(EncHistogramSubmit { tree: self.tree, nodes })
    }

    /// Records each won split locally and returns the left sample sets.
    pub fn on_notice(&mut self, n: &SplitNotice) -> Result<PartitionReply> {
        if n.tree != self.tree {
            return Err(Error::Consistency(format!("{}: notice for tree {}", self.name, n.tree)));
        }
        let mut parts = Vec::with_capacity(n.notices.len());
        for notice in &n.notices {
            let bounds = self
                .bounds
                .get(&notice.node)
                .ok_or_else(|| Error::Consistency(format!("{}: no bins cached for node {}", self.name, notice.node)))?;
            let b = bounds
                .get(notice.feature)
                .ok_or_else(|| Error::Consistency(format!("{}: no feature {}", self.name, notice.feature)))?;
            if notice.bin + 1 >= b.n_bins() {
                return Err(Error::Consistency(format!("{}: bin {} out of range", self.name, notice.bin)));
            }
            let threshold = b.threshold(notice.bin);
            let samples = self
                .spaces
                .get(&notice.node)
                .ok_or_else(|| Error::Consistency(format!("{}: node {} had no sample space", self.name, notice.node)))?;
            let left = samples
                .iter()
                .copied()
                .filter(|&i| b.bin(self.data.features.get(i, notice.feature)) <= notice.bin)
                .collect();
            let record = self.table.push(SplitRecord {
                tree: self.tree,
                node: notice.node,
                feature: notice.feature,
                bin: notice.bin,
                threshold,
            });
            parts.push(LeftSet {
                node: notice.node,
                record,
                left,
            });
        }
        Ok(PartitionReply { tree: self.tree, parts })
    }

    pub fn on_query(&self, q: &InferQuery) -> Result<InferReply> {
        let r = self.table.get(q.record)?;
        let row = *self
            .row_of
            .get(&q.sample)
            .ok_or_else(|| Error::Consistency(format!("{}: unknown sample {}", self.name, q.sample)))?;
        Ok(InferReply {
            go_left: self.data.features.get(row, r.feature) <= r.threshold,
        })
    }
}
