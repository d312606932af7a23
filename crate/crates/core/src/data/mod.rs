//! Well datasets: schema, CSV ingestion, synthetic generation and partitioning.

mod csvio;
mod dataset;
mod folds;
mod matrix;
mod partition;
mod schema;
mod synth;

pub use csvio::{load_csv, write_csv, ID_COLUMN, LABEL_COLUMN};
pub use dataset::PartyDataset;
pub use folds::{holdout_split, split_train_valid_test, stratified_assignment, Fold, FoldPlan};
pub use matrix::Matrix;
pub use partition::{default_vertical_shares, horizontal_partition, join_vertical, vertical_partition, VerticalShare};
pub use schema::{well_schema, FeatureGroup, FeatureInfo};
pub use synth::{synth_generate, DistrictSpec, FeatureStats, Marginal, SignalTerm, SynthConfig};
