//! Bayesian hyperparameter optimization and sample-weighted aggregation of
//! locally tuned hyperparameters.

mod bo;
mod gp;
mod space;
mod tune;

pub use bo::{
    bo_optimize, shifted_halton, BoResult, Observation, Provenance, TunedParams, DEFAULT_BUDGET, EI_CANDIDATES,
    INITIAL_DESIGN,
};
pub use gp::{ei_at, expected_improvement, gp_fit, kernel_matrix, rbf, GpSurrogate, JITTER, XI};
pub use space::{ParamKind, ParamSpec, SearchSpace, TUNABLE};
pub use tune::{aggregate_params, tune_holdout, tune_local, tune_objective, validation_auc, TuneMode, TuneSettings};
