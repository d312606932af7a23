use std::collections::{HashMap, HashSet};

use super::dataset::PartyDataset;
use super::matrix::Matrix;
use super::schema::FeatureGroup;
use crate::error::{Error, Result};

/// Checks that sample-partitioned parties agree on the feature schema and
/// hold labels, returning them unchanged.
pub fn horizontal_partition(parties: Vec<PartyDataset>) -> Result<Vec<PartyDataset>> {
    let first = parties
        .first()
        .ok_or_else(|| Error::Data("no parties to partition".into()))?;
    let symbols: Vec<String> = first.symbols().iter().map(|s| s.to_string()).collect();
    let mut seen = HashSet::new();
    for p in &parties {
        if p.symbols() != symbols {
            return Err(Error::Data(format!("{} does not share the feature schema", p.party)));
        }
        p.labels()?;
        for id in &p.ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Data(format!("sample id {id} appears in more than one party")));
            }
        }
    }
    Ok(parties)
}

/// One party's share of a vertical split.
#[derive(Clone, Debug, PartialEq)]
pub struct VerticalShare {
    pub party: String,
    pub features: Vec<usize>,
    pub holds_labels: bool,
}

/// Splits a joined dataset by columns. Feature assignments must be
/// disjoint; exactly one share may hold the labels.
pub fn vertical_partition(joined: &PartyDataset, shares: &[VerticalShare]) -> Result<Vec<PartyDataset>> {
    let mut owner = vec![None; joined.n_features()];
    for (s, share) in shares.iter().enumerate() {
        for &j in &share.features {
            let slot = owner
                .get_mut(j)
                .ok_or_else(|| Error::Data(format!("feature index {j} out of range")))?;
            if slot.replace(s).is_some() {
                return Err(Error::Data(format!(
                    "feature {} is assigned to more than one party",
                    joined.feature_info[j].symbol
                )));
            }
        }
    }
    if shares.iter().filter(|s| s.holds_labels).count() > 1 {
        return Err(Error::Data("more than one party holds the labels".into()));
    }
    shares
        .iter()
        .map(|s| {
            let mut part = joined.select_features(&s.features);
            part.party = s.party.clone();
            if !s.holds_labels {
                part.labels = None;
            }
            Ok(part)
        })
        .collect()
}

/// Operational features and labels to the active party, geological
/// features to the passive party.
pub fn default_vertical_shares(joined: &PartyDataset) -> Vec<VerticalShare> {
    let by = |g: FeatureGroup| -> Vec<usize> {
        (0..joined.n_features())
            .filter(|&j| joined.feature_info[j].group == g)
            .collect()
    };
    vec![
        VerticalShare {
            party: "oil_company".into(),
            features: by(FeatureGroup::Operational),
            holds_labels: true,
        },
        VerticalShare {
            party: "exploration_institute".into(),
            features: by(FeatureGroup::Geological),
            holds_labels: false,
        },
    ]
}

/// Reassembles vertically split parts on sample ids, in the row order of
/// the first part, appending columns part by part.
pub fn join_vertical(party: &str, parts: &[PartyDataset]) -> Result<PartyDataset> {
    let first = parts.first().ok_or_else(|| Error::Data("nothing to join".into()))?;
    let n = first.len();
    let mut features = Matrix::zeros(n, 0);
    let mut info = Vec::new();
    let mut labels = None;
    for p in parts {
        let index: HashMap<&str, usize> = p.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if index.len() != n || p.len() != n {
            return Err(Error::Data(format!("{} does not cover the same samples", p.party)));
        }
        let order = first
            .ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::Data(format!("{} lacks sample {id}", p.party)))
            })
            .collect::<Result<Vec<_>>>()?;
        let aligned = p.select_rows(&order);
        features = features.hstack(&aligned.features)?;
        info.extend(aligned.feature_info.iter().cloned());
        if let Some(l) = aligned.labels {
            if labels.replace(l).is_some() {
                return Err(Error::Data("more than one part holds labels".into()));
            }
        }
    }
    PartyDataset::new(party, first.ids.clone(), features, info, labels)
}
