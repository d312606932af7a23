use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, MetricReport};
use crate::data::{split_train_valid_test, FoldPlan, PartyDataset};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KFoldReport {
    pub folds: Vec<MetricReport>,
    pub mean: MetricReport,
    pub plan_hash: String,
}

/// Runs `fit_predict(train, test)` over a stratified k-fold plan and averages
/// the per-fold metrics. `fit_predict` returns test-set probabilities.
pub fn kfold_evaluate<F>(tag: &str, data: &PartyDataset, k: usize, seed: u64, mut fit_predict: F) -> Result<KFoldReport>
where
    F: FnMut(&PartyDataset, &PartyDataset) -> Result<Vec<f64>>,
{
    let labels = data.labels()?;
    let plan = split_train_valid_test(labels, k, 0.0, seed)?;
    kfold_with_plan(tag, data, &plan, &mut fit_predict)
}

pub fn kfold_with_plan<F>(tag: &str, data: &PartyDataset, plan: &FoldPlan, fit_predict: &mut F) -> Result<KFoldReport>
where
    F: FnMut(&PartyDataset, &PartyDataset) -> Result<Vec<f64>>,
{
    let mut folds = Vec::new();
    for (f, fold) in plan.folds.iter().enumerate() {
        let train = data.select_rows(&fold.train);
        let test = data.select_rows(&fold.test);
        let probs = fit_predict(&train, &test)?;
        folds.push(evaluate(tag, Some(f), test.labels()?, &probs)?);
    }
    let mean = MetricReport::mean(tag, &folds)?;
    Ok(KFoldReport {
        folds,
        mean,
        plan_hash: plan.hash(),
    })
}
