use std::collections::BTreeMap;

use num_bigint::BigUint;

use super::messages::{
    BinningBroadcast, HistogramSubmit, MaskedSums, NodeHistogram, PartitionReport, RangeReport, SplitBroadcast,
    SplitDecision,
};
use super::secagg::{HflRoster, SecAggMode};
use crate::error::{Error, Result};
use crate::gbt::{
    node_split, node_weight, BinBoundaries, BinStats, BinningScope, BoostedEnsemble, GbtParams, GradHistogram, Tree,
    TreeBuilder, GRADIENT_SCALE_BITS,
};
use crate::phe::{keygen, Ciphertext, FixedPointCodec, Keypair};

/// Equal-width bins over the union of the clients' value ranges.
pub fn establish_global_binning(reports: &[RangeReport], n_bins: usize) -> Result<Vec<BinBoundaries>> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Consistency("no range reports".into()))?;
    let k = first.symbols.len();
    for r in reports {
        if r.symbols != first.symbols {
            return Err(Error::Consistency("clients disagree on the feature schema".into()));
        }
        if r.mins.len() != k || r.maxs.len() != k {
            return Err(Error::Consistency("range report has the wrong length".into()));
        }
        if r.mins.iter().chain(&r.maxs).any(|v| !v.is_finite()) {
            return Err(Error::Consistency("range report holds a non-finite value".into()));
        }
    }
    if n_bins < 2 {
        return Err(Error::Config("max_bin must be at least 2".into()));
    }
    Ok((0..k)
        .map(|j| {
            let lo = reports.iter().map(|r| r.mins[j]).fold(f64::INFINITY, f64::min);
            let hi = reports.iter().map(|r| r.maxs[j]).fold(f64::NEG_INFINITY, f64::max);
            BinBoundaries::from_range(j, lo, hi, n_bins)
        })
        .collect())
}

#[derive(Debug)]
struct Open {
    id: usize,
    depth: usize,
    stats: BinStats,
    hist: Option<GradHistogram>,
}

#[derive(Debug)]
struct Expected {
    parent: GradHistogram,
    requested: usize,
    sibling: usize,
}

#[derive(Debug)]
struct TreeState {
    index: usize,
    builder: TreeBuilder,
    frontier: Vec<Open>,
    partitions: Vec<(usize, BinStats, BinStats)>,
    expected: Vec<Expected>,
}

const KEY_STREAM: u64 = 0x4B45_5900;

/// Aggregating server of a horizontal run. It sees only aggregated
/// histograms; its state evolves purely from the messages it receives, so a
/// recorded transcript replays to the same model.
#[derive(Debug)]
pub struct HflServer {
    roster: HflRoster,
    params: GbtParams,
    keypair: Option<Keypair>,
    codec: FixedPointCodec,
    bounds: Vec<BinBoundaries>,
    model: Option<BoostedEnsemble>,
    tree: Option<TreeState>,
}

impl HflServer {
    pub fn new(roster: &HflRoster, params: &GbtParams, seed: u64) -> Result<Self> {
        params.validate()?;
        if params.binning != BinningScope::Global {
            return Err(Error::Config("horizontal training uses global binning".into()));
        }
        let keypair = match roster.mode {
            SecAggMode::Paillier => Some(keygen(roster.key_bits, seed.wrapping_add(KEY_STREAM))?),
            SecAggMode::Mask => None,
        };
        Ok(HflServer {
            roster: roster.clone(),
            params: params.clone(),
            keypair,
            codec: FixedPointCodec::new(GRADIENT_SCALE_BITS, roster.clients.len() as u64)?,
            bounds: Vec::new(),
            model: None,
            tree: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.roster.server
    }

    pub fn roster(&self) -> &HflRoster {
        &self.roster
    }

    pub fn binning(&self) -> &[BinBoundaries] {
        &self.bounds
    }

    pub fn keypair(&self) -> Option<&Keypair> {
        self.keypair.as_ref()
    }

    pub fn on_ranges(&mut self, reports: &[RangeReport]) -> Result<BinningBroadcast> {
        self.bounds = establish_global_binning(reports, self.params.max_bin)?;
        self.model = Some(BoostedEnsemble::new(self.bounds.len(), self.params.clone()));
        Ok(BinningBroadcast {
            n_bins: self.params.max_bin,
            thresholds: self.bounds.iter().map(|b| b.thresholds().to_vec()).collect(),
        })
    }

    fn shape(&self) -> (usize, usize) {
        (self.bounds.len(), self.params.max_bin)
    }

    /// Sums the clients' masked submissions for one node and unmasks the
    /// total.
    pub fn aggregate(&self, parts: &[&NodeHistogram]) -> Result<GradHistogram> {
        let (nf, nb) = self.shape();
        let len = nf * nb;
        let mut counts = vec![0u64; len];
        for p in parts {
            if p.counts.len() != len {
                return Err(Error::Consistency(format!("node {} histogram has the wrong size", p.node)));
            }
            for (c, v) in counts.iter_mut().zip(&p.counts) {
                *c += v;
            }
        }
        let (g, h): (Vec<f64>, Vec<f64>) = match &self.keypair {
            Some(kp) => {
                let pk = &kp.public;
                let n = pk.n();
                let mut g = vec![Ciphertext::identity(); len];
                let mut h = vec![Ciphertext::identity(); len];
                for p in parts {
                    let MaskedSums::Paillier { g: pg, h: ph } = &p.sums else {
                        return Err(Error::Consistency("expected Paillier ciphertexts".into()));
                    };
                    if pg.len() != len || ph.len() != len {
                        return Err(Error::Consistency(format!("node {} histogram has the wrong size", p.node)));
                    }
                    for (acc, c) in g.iter_mut().zip(pg).chain(h.iter_mut().zip(ph)) {
                        let c = Ciphertext::from_value(pk, c.value().clone())?;
                        *acc = pk.add(acc, &c);
                    }
                }
                let dec = |cs: &[Ciphertext]| -> Result<Vec<f64>> {
                    cs.iter()
                        .map(|c| Ok(self.codec.decode(&kp.private.decrypt(pk, c)?, n)))
                        .collect()
                };
                (dec(&g)?, dec(&h)?)
            }
            None => {
                let mut g = vec![0u64; len];
                let mut h = vec![0u64; len];
                for p in parts {
                    let MaskedSums::Wrapping { g: pg, h: ph } = &p.sums else {
                        return Err(Error::Consistency("expected wrapping integers".into()));
                    };
                    if pg.len() != len || ph.len() != len {
                        return Err(Error::Consistency(format!("node {} histogram has the wrong size", p.node)));
                    }
                    for (acc, v) in g.iter_mut().zip(pg).chain(h.iter_mut().zip(ph)) {
                        *acc = acc.wrapping_add(*v);
                    }
                }
                let dec = |v: &[u64]| v.iter().map(|&m| self.codec.decode_wrapping(m)).collect();
                (dec(&g), dec(&h))
            }
        };
        let slots = (0..len)
            .map(|i| BinStats {
                g: g[i],
                h: h[i],
                count: counts[i],
            })
            .collect();
        GradHistogram::from_slots(nf, nb, slots)
    }

    fn node_parts(subs: &[HistogramSubmit], tree: usize, node: usize) -> Result<Vec<&NodeHistogram>> {
        subs.iter()
            .map(|s| {
                if s.tree != tree {
                    return Err(Error::Consistency(format!("submission for tree {} during tree {tree}", s.tree)));
                }
                s.nodes
                    .iter()
                    .find(|n| n.node == node)
                    .ok_or_else(|| Error::Consistency(format!("missing histogram for node {node}")))
            })
            .collect()
    }

    pub fn on_root(&mut self, tree: usize, subs: &[HistogramSubmit]) -> Result<()> {
        if self.model.is_none() {
            return Err(Error::Consistency("binning not established".into()));
        }
        if self.tree.is_some() {
            return Err(Error::Consistency("previous tree still open".into()));
        }
        let hist = self.aggregate(&Self::node_parts(subs, tree, 0)?)?;
        self.tree = Some(TreeState {
            index: tree,
            builder: TreeBuilder::new(),
            frontier: vec![Open {
                id: 0,
                depth: 0,
                stats: hist.totals(),
                hist: Some(hist),
            }],
            partitions: Vec::new(),
            expected: Vec::new(),
        });
        Ok(())
    }

    fn state(&mut self) -> Result<&mut TreeState> {
        self.tree
            .as_mut()
            .ok_or_else(|| Error::Consistency("no tree in progress".into()))
    }

    fn needs_histogram(&self, depth: usize, stats: BinStats) -> bool {
        depth < self.params.max_depth && stats.count >= 2
    }

    /// Decides every frontier node in breadth-first order.
    pub fn decide_level(&mut self) -> Result<SplitBroadcast> {
        let params = self.params.clone();
        let bounds = self.bounds.clone();
        let st = self.tree.take().ok_or_else(|| Error::Consistency("no tree in progress".into()))?;
        let TreeState {
            index,
            mut builder,
            frontier,
            ..
        } = st;
        let mut out = SplitBroadcast {
            tree: index,
            splits: Vec::new(),
            leaves: Vec::new(),
            request: Vec::new(),
        };
        let mut next = Vec::new();
        let mut partitions = Vec::new();
        let mut expected = Vec::new();
        for node in frontier {
            let split = node.hist.as_ref().and_then(|h| node_split(&params, node.depth, node.stats, h));
            let Some(split) = split else {
                builder.leaf(node.id, node_weight(&params, node.stats)?);
                out.leaves.push(node.id);
                continue;
            };
            let threshold = bounds[split.feature].threshold(split.bin);
            let (l, r) = builder.split(node.id, split.feature, split.bin, threshold, 0);
            out.splits.push(SplitDecision {
                node: node.id,
                feature: split.feature,
                bin: split.bin,
                threshold,
                left: l,
                right: r,
            });
            partitions.push((node.id, split.left, split.right));
            let depth = node.depth + 1;
            if self.needs_histogram(depth, split.left) || self.needs_histogram(depth, split.right) {
                let (small, large) = if split.left.count <= split.right.count { (l, r) } else { (r, l) };
                out.request.push(small);
                expected.push(Expected {
                    parent: node.hist.expect("split nodes carry a histogram"),
                    requested: small,
                    sibling: large,
                });
            }
            next.push(Open {
                id: l,
                depth,
                stats: split.left,
                hist: None,
            });
            next.push(Open {
                id: r,
                depth,
                stats: split.right,
                hist: None,
            });
        }
        self.tree = Some(TreeState {
            index,
            builder,
            frontier: next,
            partitions,
            expected,
        });
        Ok(out)
    }

    /// Checks the clients' child sizes against the aggregated split counts.
    pub fn on_partition(&mut self, reports: &[PartitionReport]) -> Result<()> {
        let st = self.state()?;
        let mut sums: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
        for r in reports {
            if r.tree != st.index {
                return Err(Error::Consistency(format!("partition for tree {} during tree {}", r.tree, st.index)));
            }
            for c in &r.counts {
                let e = sums.entry(c.node).or_default();
                e.0 += c.left;
                e.1 += c.right;
            }
        }
        for (node, left, right) in &st.partitions {
            let got = sums.get(node).copied().unwrap_or_default();
            if got != (left.count, right.count) {
                return Err(Error::Consistency(format!(
                    "node {node}: clients report {}/{} rows, histograms imply {}/{}",
                    got.0, got.1, left.count, right.count
                )));
            }
        }
        Ok(())
    }

    /// Aggregates requested child histograms and derives their siblings.
    pub fn on_histograms(&mut self, subs: &[HistogramSubmit]) -> Result<()> {
        let (index, expected) = {
            let st = self.state()?;
            (st.index, std::mem::take(&mut st.expected))
        };
        let mut found: BTreeMap<usize, GradHistogram> = BTreeMap::new();
        for e in &expected {
            let small = self.aggregate(&Self::node_parts(subs, index, e.requested)?)?;
            let large = e.parent.subtract(&small)?;
            found.insert(e.requested, small);
            found.insert(e.sibling, large);
        }
        let st = self.state()?;
        for open in st.frontier.iter_mut() {
            if let Some(h) = found.remove(&open.id) {
                if h.totals().count != open.stats.count {
                    return Err(Error::Consistency(format!(
                        "node {}: histogram holds {} rows, split implies {}",
                        open.id,
                        h.totals().count,
                        open.stats.count
                    )));
                }
                open.hist = Some(h);
            }
        }
        Ok(())
    }

    pub fn tree_complete(&self) -> bool {
        self.tree.as_ref().is_some_and(|t| t.frontier.is_empty())
    }

    pub fn finish_tree(&mut self) -> Result<(usize, Tree)> {
        let st = self.tree.take().ok_or_else(|| Error::Consistency("no tree in progress".into()))?;
        if !st.frontier.is_empty() {
            return Err(Error::Consistency("tree still has open nodes".into()));
        }
        let tree = st.builder.finish()?;
        let model = self.model.as_mut().expect("binning established");
        if model.trees.len() != st.index {
            return Err(Error::Consistency(format!("tree {} finished out of order", st.index)));
        }
        model.trees.push(tree.clone());
        Ok((st.index, tree))
    }

    pub fn model(&self) -> Option<&BoostedEnsemble> {
        self.model.as_ref()
    }

    pub fn plaintext_modulus(&self) -> Option<&BigUint> {
        self.keypair.as_ref().map(|k| k.public.n())
    }
}
