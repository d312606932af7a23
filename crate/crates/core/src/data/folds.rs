use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gbt::stream_rng;

/// One cross-validation rotation. `valid ⊆ train` and `train ∩ test = ∅`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl Fold {
    /// Training rows outside the validation subset.
    pub fn fit_rows(&self) -> Vec<usize> {
        self.train.iter().copied().filter(|i| self.valid.binary_search(i).is_err()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("plan serializes")))
    }
}

/// Stratified fold index per sample: each class is shuffled and dealt
/// round-robin, continuing the deal across classes so fold sizes differ by
/// at most one.
pub fn stratified_assignment(labels: &[u8], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, 0xF01D);
    let mut fold = vec![0; labels.len()];
    let mut pos = 0;
    for class in [1u8, 0u8] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = pos % k;
            pos += 1;
        }
    }
    fold
}

fn stratified_subset(rows: &[usize], labels: &[u8], fraction: f64, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, 0x7A11D);
    let mut out = Vec::new();
    for class in [1u8, 0u8] {
        let mut idx: Vec<usize> = rows.iter().copied().filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let cap = idx.len().saturating_sub(1).max(1);
        let take = ((idx.len() as f64 * fraction).round() as usize).clamp(1, cap);
        out.extend_from_slice(&idx[..take]);
    }
    out.sort_unstable();
    out
}

const MAX_RESEEDS: u64 = 10;

/// Stratified random holdout of `rows`: returns `(fit, valid)`, both holding
/// each class present in `rows`. Retries with successive seeds.
pub fn holdout_split(rows: &[usize], labels: &[u8], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    for attempt in 0..MAX_RESEEDS {
        let valid = stratified_subset(rows, labels, fraction, seed.wrapping_add(attempt));
        let fit: Vec<usize> = rows.iter().copied().filter(|i| valid.binary_search(i).is_err()).collect();
        let both = |r: &[usize]| r.iter().any(|&i| labels[i] == 1) && r.iter().any(|&i| labels[i] == 0);
        if both(&valid) && both(&fit) {
            return Ok((fit, valid));
        }
    }
    Err(Error::InvalidInput(
        "no holdout split keeps both classes on each side".into(),
    ))
}

/// Stratified k-fold plan with a stratified validation subset carved out of
/// every training portion.
pub fn split_train_valid_test(labels: &[u8], k: usize, valid_fraction: f64, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidInput("k-fold needs k ≥ 2".into()));
    }
    if labels.len() < k {
        return Err(Error::InvalidInput(format!("{} samples cannot fill {k} folds", labels.len())));
    }
    if !(0.0..1.0).contains(&valid_fraction) {
        return Err(Error::InvalidInput("valid_fraction must lie in [0, 1)".into()));
    }
    for attempt in 0..MAX_RESEEDS {
        let s = seed.wrapping_add(attempt);
        let assign = stratified_assignment(labels, k, s);
        let folds: Vec<Fold> = (0..k)
            .map(|f| {
                let test: Vec<usize> = (0..labels.len()).filter(|&i| assign[i] == f).collect();
                let train: Vec<usize> = (0..labels.len()).filter(|&i| assign[i] != f).collect();
                let valid = if valid_fraction > 0.0 {
                    stratified_subset(&train, labels, valid_fraction, s.wrapping_add(f as u64))
                } else {
                    Vec::new()
                };
                Fold { train, valid, test }
            })
            .collect();
        let both = |rows: &[usize]| rows.iter().any(|&i| labels[i] == 1) && rows.iter().any(|&i| labels[i] == 0);
        if folds.iter().all(|f| both(&f.test)) {
            return Ok(FoldPlan { k, seed: s, folds });
        }
    }
    Err(Error::InvalidInput(format!(
        "no {k}-fold plan puts both classes in every test fold"
    )))
}
