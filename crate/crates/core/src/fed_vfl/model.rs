use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::PartyDataset;
use crate::error::{Error, Result};
use crate::gbt::{BoostedEnsemble, GbtParams, Tree, TreeNode};

/// Participants of a vertical run. Global feature numbering places the
/// passive parties' blocks first, in roster order, then the active party's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VflRoster {
    pub active: String,
    pub passive: Vec<String>,
    pub sample_ids: Vec<String>,
    /// `(party, first global feature, one past the last)`.
    pub feature_ranges: Vec<(String, usize, usize)>,
    pub key_bits: u64,
}

impl VflRoster {
    pub fn new(active: &PartyDataset, passive: &[PartyDataset], key_bits: u64) -> Result<Self> {
        active.labels()?;
        let mut names = vec![active.party.clone()];
        let mut ranges = Vec::new();
        let mut start = 0;
        for p in passive {
            if p.ids != active.ids {
                return Err(Error::Data(format!("{} is not aligned with {}", p.party, active.party)));
            }
            if p.labels.is_some() {
                return Err(Error::Data(format!("passive party {} must not hold labels", p.party)));
            }
            names.push(p.party.clone());
            ranges.push((p.party.clone(), start, start + p.n_features()));
            start += p.n_features();
        }
        ranges.push((active.party.clone(), start, start + active.n_features()));
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("participant names must be distinct".into()));
        }
        Ok(VflRoster {
            active: active.party.clone(),
            passive: passive.iter().map(|p| p.party.clone()).collect(),
            sample_ids: active.ids.clone(),
            feature_ranges: ranges,
            key_bits,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_ranges.last().map_or(0, |r| r.2)
    }

    /// Party owning global feature `f` and its local index there.
    pub fn owner_of(&self, f: usize) -> Option<(&str, usize)> {
        self.feature_ranges
            .iter()
            .find(|(_, a, b)| (*a..*b).contains(&f))
            .map(|(p, a, _)| (p.as_str(), f - a))
    }

    pub fn offset_of(&self, party: &str) -> Option<usize> {
        self.feature_ranges.iter().find(|r| r.0 == party).map(|r| r.1)
    }

    /// Owner index as stored on assembled trees: 0 for the active party,
    /// `1 + k` for the k-th passive party.
    pub fn owner_index(&self, party: &str) -> Option<u32> {
        if party == self.active {
            return Some(0);
        }
        self.passive.iter().position(|p| p == party).map(|k| k as u32 + 1)
    }
}

/// Split details held privately by the feature owner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub tree: usize,
    pub node: usize,
    /// Local feature index at the owner.
    pub feature: usize,
    pub bin: usize,
    pub threshold: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitLookupTable {
    pub party: String,
    pub records: Vec<SplitRecord>,
}

impl SplitLookupTable {
    pub fn new(party: &str) -> Self {
        SplitLookupTable {
            party: party.to_string(),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, r: SplitRecord) -> usize {
        self.records.push(r);
        self.records.len() - 1
    }

    pub fn get(&self, record: usize) -> Result<&SplitRecord> {
        self.records
            .get(record)
            .ok_or_else(|| Error::Consistency(format!("{} has no record {record}", self.party)))
    }
}

/// Node of the active party's tree skeleton: internal nodes name only the
/// owning party and its record id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VflNode {
    Split {
        id: usize,
        party: String,
        record: usize,
        left: usize,
        right: usize,
    },
    Leaf {
        id: usize,
        weight: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VflTree {
    pub nodes: Vec<VflNode>,
}

/// Breadth-first id allocation matching [`crate::gbt::TreeBuilder`].
#[derive(Debug, Default)]
pub(crate) struct SkeletonBuilder {
    nodes: Vec<Option<VflNode>>,
}

impl SkeletonBuilder {
    pub fn new() -> Self {
        SkeletonBuilder { nodes: vec![None] }
    }

    pub fn split(&mut self, id: usize, party: &str, record: usize) -> (usize, usize) {
        let left = self.nodes.len();
        let right = left + 1;
        self.nodes.push(None);
        self.nodes.push(None);
        self.nodes[id] = Some(VflNode::Split {
            id,
            party: party.to_string(),
            record,
            left,
            right,
        });
        (left, right)
    }

    /// Fills in a record id that the owner assigned after the split call.
    pub fn set_record(&mut self, id: usize, rec: usize) {
        if let Some(VflNode::Split { record, .. }) = self.nodes[id].as_mut() {
            *record = rec;
        }
    }

    pub fn leaf(&mut self, id: usize, weight: f64) {
        self.nodes[id] = Some(VflNode::Leaf { id, weight });
    }

    pub fn finish(self) -> Result<VflTree> {
        let nodes = self
            .nodes
            .into_iter()
            .enumerate()
            .map(|(i, n)| n.ok_or_else(|| Error::Consistency(format!("node {i} was never resolved"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(VflTree { nodes })
    }
}

/// Model as stored at the active party.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VflModel {
    pub base_score_logit: f64,
    pub learning_rate: f64,
    pub params: GbtParams,
    pub trees: Vec<VflTree>,
}

impl VflModel {
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("model serializes")))
    }
}

/// Rebuilds a plain ensemble over global feature ids from the skeleton and
/// every party's lookup table. Only for verification: no single party holds
/// all of these inputs in a real deployment.
pub fn vfl_assemble(model: &VflModel, tables: &[SplitLookupTable], roster: &VflRoster) -> Result<BoostedEnsemble> {
    let mut out = BoostedEnsemble::new(roster.n_features(), model.params.clone());
    for t in &model.trees {
        let nodes = t
            .nodes
            .iter()
            .map(|n| match n {
                VflNode::Leaf { id, weight } => Ok(TreeNode::Leaf { id: *id, weight: *weight }),
                VflNode::Split {
                    id,
                    party,
                    record,
                    left,
                    right,
                } => {
                    let table = tables
                        .iter()
                        .find(|t| &t.party == party)
                        .ok_or_else(|| Error::Consistency(format!("no lookup table for {party}")))?;
                    let r = table.get(*record)?;
                    let offset = roster
                        .offset_of(party)
                        .ok_or_else(|| Error::Consistency(format!("{party} is not on the roster")))?;
                    Ok(TreeNode::Split {
                        id: *id,
                        feature: offset + r.feature,
                        bin: r.bin,
                        threshold: r.threshold,
                        owner: roster.owner_index(party).unwrap_or(0),
                        left: *left,
                        right: *right,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let tree = Tree { nodes };
        tree.validate()?;
        out.trees.push(tree);
    }
    Ok(out)
}
