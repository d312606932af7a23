use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::binning::{boundaries_over, BinBoundaries, BinnedMatrix};
use super::histogram::{build_histogram, BinStats, GradHistogram};
use super::loss::{logistic_gradients, GradPair};
use super::params::{BinningScope, GbtParams, MarginInit};
use super::split::{find_best_split, leaf_weight_l1, SplitCandidate};
use super::tree::{BoostedEnsemble, Tree, TreeBuilder};
use crate::data::{Matrix, PartyDataset};
use crate::error::{Error, Result};

/// Fractional bits of the grid that every trainer snaps gradients onto.
///
/// Sums of grid values stay exact in `f64` for any realistic sample count,
/// so centralized and federated trainers see bit-identical node statistics
/// regardless of summation order, and gains tie exactly where partitions
/// coincide.
pub const GRADIENT_SCALE_BITS: u32 = 40;

fn snap(x: f64) -> f64 {
    let s = (GRADIENT_SCALE_BITS as f64).exp2();
    (x * s).round() / s
}

/// Gradients on the training grid; hessians keep at least one grid step so
/// node hessian sums are always positive.
pub fn grid_gradients(y: u8, margin: f64) -> GradPair {
    let raw = logistic_gradients(y, margin);
    let step = (-(GRADIENT_SCALE_BITS as f64)).exp2();
    GradPair {
        g: snap(raw.g),
        h: snap(raw.h).max(step),
    }
}

pub fn all_gradients(labels: &[u8], margins: &[f64]) -> Vec<GradPair> {
    labels
        .iter()
        .zip(margins)
        .map(|(&y, &m)| grid_gradients(y, m))
        .collect()
}

/// Seed stream used for per-tree draws; trainers derive every random choice
/// from `(seed, stream)` so runs are reproducible.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const INIT_STREAM: u64 = 1 << 40;

pub fn initial_margins(n: usize, params: &GbtParams, seed: u64) -> Vec<f64> {
    match params.margin_init {
        MarginInit::Constant => vec![params.base_score_logit; n],
        MarginInit::Random { scale } => {
            let mut rng = stream_rng(seed, INIT_STREAM);
            (0..n)
                .map(|_| params.base_score_logit + rng.gen_range(-1.0..=1.0) * scale)
                .collect()
        }
    }
}

/// Rows kept for tree `t`. With `subsample == 1` every row is kept;
/// otherwise each row is drawn independently and at least one survives.
pub fn subsample_rows(n: usize, params: &GbtParams, seed: u64, tree: usize) -> Vec<usize> {
    if params.subsample >= 1.0 || n == 0 {
        return (0..n).collect();
    }
    let mut rng = stream_rng(seed, tree as u64);
    let rows: Vec<usize> = (0..n).filter(|_| rng.gen::<f64>() < params.subsample).collect();
    if rows.is_empty() {
        vec![rng.gen_range(0..n)]
    } else {
        rows
    }
}

/// Split chosen for a node at `depth`, or `None` when it becomes a leaf.
pub fn node_split(params: &GbtParams, depth: usize, stats: BinStats, hist: &GradHistogram) -> Option<SplitCandidate> {
    if depth >= params.max_depth || stats.count < 2 {
        return None;
    }
    find_best_split(hist, params)
}

pub fn node_weight(params: &GbtParams, stats: BinStats) -> Result<f64> {
    leaf_weight_l1(stats.g, stats.h, params.reg_lambda, params.reg_alpha)
}

struct Pending {
    id: usize,
    depth: usize,
    rows: Vec<usize>,
    stats: Option<BinStats>,
    hist: Option<GradHistogram>,
}

/// Trains on a labeled dataset held in one place.
pub fn train_centralized(data: &PartyDataset, params: &GbtParams, seed: u64) -> Result<BoostedEnsemble> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
    }
    if data.n_features() == 0 {
        return Err(Error::InvalidInput("dataset has no features".into()));
    }
    let labels = data.labels()?;
    let x = &data.features;
    let n = data.len();

    let global = match params.binning {
        BinningScope::Global => {
            let all: Vec<usize> = (0..n).collect();
            let bounds = boundaries_over(x, &all, params.max_bin)?;
            let binned = BinnedMatrix::new(x, &bounds)?;
            Some((bounds, binned))
        }
        BinningScope::PerNode => None,
    };

    let mut model = BoostedEnsemble::new(x.n_cols(), params.clone());
    let mut margins = initial_margins(n, params, seed);
    for t in 0..params.n_estimators {
        let grads = all_gradients(labels, &margins);
        let rows = subsample_rows(n, params, seed, t);
        let tree = match &global {
            Some((bounds, binned)) => grow_global(params, bounds, binned, &grads, rows)?,
            None => grow_per_node(params, x, &grads, rows)?,
        };
        for (i, m) in margins.iter_mut().enumerate() {
            *m += params.learning_rate * tree.leaf_value(x.row(i))?;
        }
        model.trees.push(tree);
    }
    Ok(model)
}

fn grow_global(
    params: &GbtParams,
    bounds: &[BinBoundaries],
    binned: &BinnedMatrix,
    grads: &[GradPair],
    rows: Vec<usize>,
) -> Result<Tree> {
    let mut builder = TreeBuilder::new();
    let mut level = vec![Pending {
        id: 0,
        depth: 0,
        rows,
        stats: None,
        hist: None,
    }];
    while !level.is_empty() {
        let mut next = Vec::new();
        for node in level {
            let hist = match node.hist {
                Some(h) => h,
                None => build_histogram(binned, grads, &node.rows),
            };
            let stats = node.stats.unwrap_or_else(|| hist.totals());
            let Some(split) = node_split(params, node.depth, stats, &hist) else {
                builder.leaf(node.id, node_weight(params, stats)?);
                continue;
            };
            let threshold = bounds[split.feature].threshold(split.bin);
            let (l, r) = builder.split(node.id, split.feature, split.bin, threshold, 0);
            let col = binned.feature_bins(split.feature);
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                node.rows.iter().partition(|&&i| (col[i] as usize) <= split.bin);
            // Build the smaller child directly and derive its sibling.
            let left_smaller = left_rows.len() <= right_rows.len();
            let small = if left_smaller { &left_rows } else { &right_rows };
            let small_hist = build_histogram(binned, grads, small);
            let large_hist = hist.subtract(&small_hist)?;
            let (lh, rh) = if left_smaller {
                (small_hist, large_hist)
            } else {
                (large_hist, small_hist)
            };
            next.push(Pending {
                id: l,
                depth: node.depth + 1,
                rows: left_rows,
                stats: Some(split.left),
                hist: Some(lh),
            });
            next.push(Pending {
                id: r,
                depth: node.depth + 1,
                rows: right_rows,
                stats: Some(split.right),
                hist: Some(rh),
            });
        }
        level = next;
    }
    builder.finish()
}

/// Histogram of `rows` under boundaries recomputed over those rows.
pub fn per_node_histogram(
    x: &Matrix,
    grads: &[GradPair],
    rows: &[usize],
    n_bins: usize,
) -> Result<(Vec<BinBoundaries>, GradHistogram)> {
    let bounds = boundaries_over(x, rows, n_bins)?;
    let mut hist = GradHistogram::zeros(x.n_cols(), n_bins);
    for (f, b) in bounds.iter().enumerate() {
        for &i in rows {
            hist.slot_mut(f, b.bin(x.get(i, f))).push(grads[i]);
        }
    }
    Ok((bounds, hist))
}

fn grow_per_node(params: &GbtParams, x: &Matrix, grads: &[GradPair], rows: Vec<usize>) -> Result<Tree> {
    let mut builder = TreeBuilder::new();
    let mut level = vec![(0usize, 0usize, rows, None::<BinStats>)];
    while !level.is_empty() {
        let mut next = Vec::new();
        for (id, depth, rows, stats) in level {
            let (bounds, hist) = per_node_histogram(x, grads, &rows, params.max_bin)?;
            let stats = stats.unwrap_or_else(|| hist.totals());
            let Some(split) = node_split(params, depth, stats, &hist) else {
                builder.leaf(id, node_weight(params, stats)?);
                continue;
            };
            let threshold = bounds[split.feature].threshold(split.bin);
            let (l, r) = builder.split(id, split.feature, split.bin, threshold, 0);
            let (left, right): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| x.get(i, split.feature) <= threshold);
            next.push((l, depth + 1, left, Some(split.left)));
            next.push((r, depth + 1, right, Some(split.right)));
        }
        level = next;
    }
    builder.finish()
}
