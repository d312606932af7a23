use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where bin boundaries come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinningScope {
    /// Equal-width bins over each feature's range on the whole training set,
    /// fixed for the whole run.
    #[default]
    Global,
    /// Equal-width bins recomputed over the samples of every node.
    PerNode,
}

/// Starting margin for each training sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum MarginInit {
    /// Every sample starts at `base_score_logit`.
    #[default]
    Constant,
    /// `base_score_logit` plus seeded uniform noise in `[-scale, scale]`.
    Random { scale: f64 },
}

/// Booster hyperparameters. Defaults are the fixed settings and default
/// values of the tuned hyperparameters used throughout the experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub max_bin: usize,
    pub min_child_weight: f64,
    pub reg_alpha: f64,
    pub reg_lambda: f64,
    pub gamma: f64,
    pub subsample: f64,
    pub min_split_gain: f64,
    pub base_score_logit: f64,
    pub binning: BinningScope,
    pub margin_init: MarginInit,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_estimators: 20,
            max_depth: 5,
            learning_rate: 0.3,
            max_bin: 32,
            min_child_weight: 1.0,
            reg_alpha: 0.0,
            reg_lambda: 0.0,
            gamma: 0.0,
            subsample: 1.0,
            min_split_gain: 0.0,
            base_score_logit: 0.0,
            binning: BinningScope::Global,
            margin_init: MarginInit::Constant,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("invalid {what}")));
        if self.n_estimators < 1 {
            return bad("n_estimators (must be ≥ 1)");
        }
        if self.max_bin < 2 || self.max_bin > u16::MAX as usize {
            return bad("max_bin (must be ≥ 2)");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample (must be in (0, 1])");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate");
        }
        for (name, v) in [
            ("min_child_weight", self.min_child_weight),
            ("reg_alpha", self.reg_alpha),
            ("reg_lambda", self.reg_lambda),
            ("gamma", self.gamma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(name);
            }
        }
        if !self.min_split_gain.is_finite() || !self.base_score_logit.is_finite() {
            return bad("min_split_gain / base_score_logit");
        }
        Ok(())
    }
}
