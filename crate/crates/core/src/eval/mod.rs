//! Classification metrics, cross-validation and privacy-cost accounting.

mod kfold;
mod metrics;

pub use kfold::{kfold_evaluate, kfold_with_plan, KFoldReport};
pub use metrics::{
    auc_roc, confusion, evaluate, metrics, roc_curve, ConfusionMatrix, MetricReport, METRIC_NAMES,
};

use serde::{Deserialize, Serialize};

/// Which regime the open-sharing score is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivacyCostKind {
    /// Score lost by federating instead of sharing data openly.
    Federated,
    /// Score gained by sharing data openly instead of modeling separately.
    OpenShare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyCost {
    pub kind: PrivacyCostKind,
    pub metric: String,
    pub party: Option<String>,
    pub a_open_share: f64,
    /// Federated score for [`PrivacyCostKind::Federated`], separate-model
    /// score for [`PrivacyCostKind::OpenShare`].
    pub a_other: f64,
    pub cost: f64,
}

/// `cost = a_open_share − a_other`. Negative costs mean the other regime
/// scored higher.
pub fn privacy_cost(kind: PrivacyCostKind, metric: &str, a_open_share: f64, a_other: f64) -> PrivacyCost {
    PrivacyCost {
        kind,
        metric: metric.to_string(),
        party: None,
        a_open_share,
        a_other,
        cost: a_open_share - a_other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_inputs_cost_nothing() {
        assert_eq!(privacy_cost(PrivacyCostKind::Federated, "auc", 0.8, 0.8).cost, 0.0);
    }

    #[test]
    fn published_auc_costs() {
        let fed = privacy_cost(PrivacyCostKind::Federated, "auc", 89.61, 89.33);
        assert_eq!(format!("{:.2}", fed.cost), "0.28");
        let open = privacy_cost(PrivacyCostKind::OpenShare, "auc", 89.61, 69.25);
        assert_eq!(format!("{:.2}", open.cost), "20.36");
    }
}
