use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::loss::sigmoid;
use super::params::GbtParams;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "fedgbt-ensemble";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        id: usize,
        feature: usize,
        bin: usize,
        threshold: f64,
        /// Party whose feature this split tests; 0 outside vertical training.
        owner: u32,
        left: usize,
        right: usize,
    },
    Leaf {
        id: usize,
        weight: f64,
    },
}

impl TreeNode {
    pub fn id(&self) -> usize {
        match self {
            TreeNode::Split { id, .. } | TreeNode::Leaf { id, .. } => *id,
        }
    }
}

/// A regression tree stored as a node array; `nodes[i].id() == i` and
/// node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn single_leaf(weight: f64) -> Tree {
        Tree {
            nodes: vec![TreeNode::Leaf { id: 0, weight }],
        }
    }

    /// Leaf weight reached by `row`; `value ≤ threshold` goes left.
    pub fn leaf_value(&self, row: &[f64]) -> Result<f64> {
        let mut i = 0;
        loop {
            match self.nodes.get(i) {
                Some(TreeNode::Leaf { weight, .. }) => return Ok(*weight),
                Some(TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                }) => {
                    let x = row.get(*feature).ok_or(Error::MissingFeature {
                        feature: *feature,
                        available: row.len(),
                    })?;
                    i = if *x <= *threshold { *left } else { *right };
                }
                None => {
                    return Err(Error::InvalidInput(format!("tree has no node {i}")));
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(self, 0)
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id() != i {
                return Err(Error::InvalidInput(format!("node {i} carries id {}", n.id())));
            }
            if let TreeNode::Split { left, right, .. } = n {
                if *left <= i || *right <= i || *left >= self.nodes.len() || *right >= self.nodes.len() {
                    return Err(Error::InvalidInput(format!("node {i} has invalid children")));
                }
            }
        }
        Ok(())
    }
}

/// Allocates node ids breadth first so that every trainer processing the
/// same decisions in the same order produces identical node numbering.
#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<Option<TreeNode>>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        TreeBuilder { nodes: vec![None] }
    }

    pub fn split(&mut self, id: usize, feature: usize, bin: usize, threshold: f64, owner: u32) -> (usize, usize) {
        let left = self.nodes.len();
        let right = left + 1;
        self.nodes.push(None);
        self.nodes.push(None);
        self.nodes[id] = Some(TreeNode::Split {
            id,
            feature,
            bin,
            threshold,
            owner,
            left,
            right,
        });
        (left, right)
    }

    pub fn leaf(&mut self, id: usize, weight: f64) {
        self.nodes[id] = Some(TreeNode::Leaf { id, weight });
    }

    pub fn finish(self) -> Result<Tree> {
        let nodes = self
            .nodes
            .into_iter()
            .enumerate()
            .map(|(i, n)| n.ok_or_else(|| Error::Consistency(format!("node {i} was never resolved"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Tree { nodes })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub margin: f64,
    pub probability: f64,
    pub label: u8,
}

/// A trained model: `margin = base_score_logit + η · Σ_t f_t(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub format: String,
    pub version: u32,
    pub n_features: usize,
    pub base_score_logit: f64,
    pub learning_rate: f64,
    pub params: GbtParams,
    pub trees: Vec<Tree>,
}

impl BoostedEnsemble {
    pub fn new(n_features: usize, params: GbtParams) -> Self {
        BoostedEnsemble {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            n_features,
            base_score_logit: params.base_score_logit,
            learning_rate: params.learning_rate,
            params,
            trees: Vec::new(),
        }
    }

    pub fn margin(&self, row: &[f64]) -> Result<f64> {
        let mut m = self.base_score_logit;
        for t in &self.trees {
            m += self.learning_rate * t.leaf_value(row)?;
        }
        Ok(m)
    }

    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        let margin = self.margin(row)?;
        let probability = sigmoid(margin);
        Ok(Prediction {
            margin,
            probability,
            label: u8::from(probability >= 0.5),
        })
    }

    pub fn predict_proba(&self, rows: &crate::data::Matrix) -> Result<Vec<f64>> {
        rows.rows().map(|r| Ok(self.predict(r)?.probability)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: BoostedEnsemble = serde_json::from_str(s)?;
        if m.format != MODEL_FORMAT {
            return Err(Error::Serde(format!("unexpected model format {:?}", m.format)));
        }
        if m.version != MODEL_VERSION {
            return Err(Error::Serde(format!("unsupported model version {}", m.version)));
        }
        for t in &m.trees {
            t.validate()?;
        }
        Ok(m)
    }

    /// SHA-256 of the compact JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("ensemble serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

pub fn predict(model: &BoostedEnsemble, row: &[f64]) -> Result<Prediction> {
    model.predict(row)
}
