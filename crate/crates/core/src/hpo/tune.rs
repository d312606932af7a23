use serde::{Deserialize, Serialize};

use super::bo::{bo_optimize, Provenance, TunedParams};
use super::space::SearchSpace;
use crate::data::{holdout_split, PartyDataset};
use crate::error::{Error, Result};
use crate::eval::auc_roc;
use crate::gbt::{train_centralized, GbtParams};

/// Averages local optima weighted by party sample counts. Integer
/// coordinates round half away from zero after averaging; all coordinates
/// are clamped into bounds.
pub fn aggregate_params(space: &SearchSpace, locals: &[(TunedParams, usize)]) -> Result<TunedParams> {
    if locals.is_empty() {
        return Err(Error::InvalidInput("no local results to aggregate".into()));
    }
    let total: usize = locals.iter().map(|(_, n)| n).sum();
    if total == 0 {
        return Err(Error::InvalidInput("total sample count is zero".into()));
    }
    let dim = space.dim();
    if locals.iter().any(|(t, _)| t.values.len() != dim) {
        return Err(Error::InvalidInput("local results span different spaces".into()));
    }
    let raw: Vec<f64> = (0..dim)
        .map(|d| {
            locals
                .iter()
                .map(|(t, n)| *n as f64 / total as f64 * t.values[d])
                .sum()
        })
        .collect();
    Ok(TunedParams {
        names: space.names(),
        values: space.snap(&raw),
        raw,
        score: None,
        provenance: Provenance::Aggregated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneMode {
    /// Each party tunes on its own data.
    Separate,
    /// One tuning run over the pooled data.
    Centralized,
    /// Each party tunes locally; the results are averaged by sample count.
    FederatedAggregated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneSettings {
    pub budget: usize,
    pub valid_fraction: f64,
}

impl Default for TuneSettings {
    fn default() -> Self {
        TuneSettings {
            budget: super::bo::DEFAULT_BUDGET,
            valid_fraction: 0.1,
        }
    }
}

/// Validation AUC of a model trained with `params` on the fit rows.
pub fn validation_auc(data: &PartyDataset, fit: &[usize], valid: &[usize], params: &GbtParams, seed: u64) -> Result<f64> {
    let model = train_centralized(&data.select_rows(fit), params, seed)?;
    let v = data.select_rows(valid);
    let probs = model.predict_proba(&v.features)?;
    auc_roc(v.labels()?, &probs)
}

/// Direct BO on one labeled dataset, scoring candidates by validation AUC
/// on a stratified holdout.
pub fn tune_local(
    data: &PartyDataset,
    base: &GbtParams,
    space: &SearchSpace,
    settings: &TuneSettings,
    seed: u64,
) -> Result<TunedParams> {
    let labels = data.labels()?;
    let rows: Vec<usize> = (0..data.len()).collect();
    let (fit, valid) = holdout_split(&rows, labels, settings.valid_fraction, seed)?;
    tune_holdout(data, &fit, &valid, base, space, settings.budget, seed)
}

/// Direct BO with a caller-chosen holdout: candidates train on `fit` and
/// are scored by AUC on `valid`.
pub fn tune_holdout(
    data: &PartyDataset,
    fit: &[usize],
    valid: &[usize],
    base: &GbtParams,
    space: &SearchSpace,
    budget: usize,
    seed: u64,
) -> Result<TunedParams> {
    let objective = |x: &[f64]| {
        let p = space.apply(base, x)?;
        validation_auc(data, fit, valid, &p, seed)
    };
    Ok(bo_optimize(objective, space, budget, seed)?.best)
}

/// Tunes according to `mode`. Returns one result per party for
/// [`TuneMode::Separate`] and a single result otherwise. The aggregated
/// mode only ever trains on one party's rows at a time.
pub fn tune_objective(
    mode: TuneMode,
    parties: &[PartyDataset],
    base: &GbtParams,
    space: &SearchSpace,
    settings: &TuneSettings,
    seed: u64,
) -> Result<Vec<TunedParams>> {
    if parties.is_empty() {
        return Err(Error::InvalidInput("no parties to tune".into()));
    }
    match mode {
        TuneMode::Separate => parties
            .iter()
            .map(|p| tune_local(p, base, space, settings, seed))
            .collect(),
        TuneMode::Centralized => {
            let refs: Vec<&PartyDataset> = parties.iter().collect();
            let pooled = PartyDataset::concat("pooled", &refs)?;
            Ok(vec![tune_local(&pooled, base, space, settings, seed)?])
        }
        TuneMode::FederatedAggregated => {
            let locals = parties
                .iter()
                .map(|p| Ok((tune_local(p, base, space, settings, seed)?, p.len())))
                .collect::<Result<Vec<_>>>()?;
            if locals.len() == 1 {
                return Ok(vec![locals.into_iter().next().expect("one party").0]);
            }
            Ok(vec![aggregate_params(space, &locals)?])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpo::space::{ParamKind, ParamSpec};

    fn tuned(values: Vec<f64>) -> TunedParams {
        TunedParams {
            names: vec![],
            raw: values.clone(),
            values,
            score: Some(0.0),
            provenance: Provenance::Direct,
        }
    }

    #[test]
    fn weighted_learning_rate() {
        let space = SearchSpace::new(vec![ParamSpec::new("learning_rate", ParamKind::Continuous, 0.01, 0.5)]).unwrap();
        let agg = aggregate_params(&space, &[(tuned(vec![0.2]), 72), (tuned(vec![0.4]), 212)]).unwrap();
        assert!((agg.values[0] - (72.0 * 0.2 + 212.0 * 0.4) / 284.0).abs() < 1e-12);
        assert_eq!(agg.provenance, Provenance::Aggregated);
    }

    #[test]
    fn integer_rounding_and_fixed_point() {
        let space = SearchSpace::new(vec![ParamSpec::new("max_depth", ParamKind::Integer, 0.0, 10.0)]).unwrap();
        let agg = aggregate_params(&space, &[(tuned(vec![4.0]), 10), (tuned(vec![7.0]), 10)]).unwrap();
        assert_eq!(agg.raw[0], 5.5);
        assert_eq!(agg.values[0], 6.0);
        let same = aggregate_params(&space, &[(tuned(vec![3.0]), 5), (tuned(vec![3.0]), 9)]).unwrap();
        assert_eq!(same.values[0], 3.0);
        assert!(aggregate_params(&space, &[(tuned(vec![3.0]), 0)]).is_err());
    }
}
