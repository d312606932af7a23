//! Histogram-based gradient-boosted trees with logistic loss.

mod binning;
mod histogram;
mod loss;
mod params;
mod split;
mod train;
mod tree;

pub use binning::{boundaries_over, column_range, BinBoundaries, BinnedMatrix};
pub use histogram::{build_histogram, BinStats, GradHistogram};
pub use loss::{logistic_gradients, logistic_loss, sigmoid, GradPair};
pub use params::{BinningScope, GbtParams, MarginInit};
pub use split::{
    find_best_split, leaf_objective, leaf_weight, leaf_weight_l1, soft_threshold, split_gain, split_gain_l1,
    SplitCandidate,
};
pub use train::{
    all_gradients, grid_gradients, initial_margins, node_split, node_weight, per_node_histogram, stream_rng,
    subsample_rows, train_centralized, GRADIENT_SCALE_BITS,
};
pub use tree::{predict, BoostedEnsemble, Prediction, Tree, TreeBuilder, TreeNode, MODEL_FORMAT, MODEL_VERSION};
