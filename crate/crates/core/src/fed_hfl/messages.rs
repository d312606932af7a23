use serde::{Deserialize, Serialize};

use crate::gbt::{BoostedEnsemble, Tree};
use crate::phe::{Ciphertext, PublicKey};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublicKeyMsg {
    pub public_key: PublicKey,
}

/// Per-feature value range of one client, used only to agree on bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub symbols: Vec<String>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningBroadcast {
    pub n_bins: usize,
    pub thresholds: Vec<Vec<f64>>,
}

/// Masked gradient and hessian sums of one node, slot-major
/// (`feature · n_bins + bin`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case")]
pub enum MaskedSums {
    Paillier { g: Vec<Ciphertext>, h: Vec<Ciphertext> },
    Wrapping { g: Vec<u64>, h: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeHistogram {
    pub node: usize,
    pub counts: Vec<u64>,
    pub sums: MaskedSums,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramSubmit {
    pub tree: usize,
    pub nodes: Vec<NodeHistogram>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitDecision {
    pub node: usize,
    pub feature: usize,
    pub bin: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

/// Decisions for one tree level: which nodes split and how, which became
/// leaves, and which new children the clients must submit histograms for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitBroadcast {
    pub tree: usize,
    pub splits: Vec<SplitDecision>,
    pub leaves: Vec<usize>,
    pub request: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionCount {
    pub node: usize,
    pub left: u64,
    pub right: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub tree: usize,
    pub counts: Vec<PartitionCount>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum ModelDelivery {
    Tree { index: usize, tree: Tree },
    Final { model: BoostedEnsemble },
}
