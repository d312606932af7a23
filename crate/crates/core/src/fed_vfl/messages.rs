use serde::{Deserialize, Serialize};

use crate::phe::Ciphertext;

/// Encrypted per-sample gradients and hessians for one tree, indexed by
/// aligned sample position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBroadcast {
    pub tree: usize,
    pub g: Vec<Ciphertext>,
    pub h: Vec<Ciphertext>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSamples {
    pub node: usize,
    pub samples: Vec<usize>,
}

/// Sample spaces of the nodes whose split is being searched this level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpace {
    pub tree: usize,
    pub nodes: Vec<NodeSamples>,
}

/// Encrypted per-bin sums over a node's sample space, slot-major
/// (`local feature · n_bins + bin`). Bin counts travel in the clear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncNodeHistogram {
    pub node: usize,
    pub n_features: usize,
    pub n_bins: usize,
    pub counts: Vec<u64>,
    pub g: Vec<Ciphertext>,
    pub h: Vec<Ciphertext>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncHistogramSubmit {
    pub tree: usize,
    pub nodes: Vec<EncNodeHistogram>,
}

/// A split won by one of the recipient's own features, in its local
/// feature numbering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Notice {
    pub node: usize,
    pub feature: usize,
    pub bin: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitNotice {
    pub tree: usize,
    pub notices: Vec<Notice>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeftSet {
    pub node: usize,
    pub record: usize,
    pub left: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReply {
    pub tree: usize,
    pub parts: Vec<LeftSet>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferQuery {
    pub record: usize,
    pub sample: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferReply {
    pub go_left: bool,
}
