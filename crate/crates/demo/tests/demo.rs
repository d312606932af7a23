use fedgbt_demo::{bo_curve, masked_aggregation, objective, roc_demo, GRID, MAX_BUDGET};

#[test]
fn bo_curve_finds_the_global_maximum() {
    let c = bo_curve(3, 20).unwrap();
    assert_eq!(c.observations.len(), 20);
    assert_eq!(c.posterior.len(), GRID);
    assert!((c.best.x - 0.3).abs() <= 0.05, "best x {}", c.best.x);
    assert_eq!(c.best.y, objective(c.best.x));
    assert!(c.posterior.iter().all(|p| p.sd >= 0.0 && p.ei >= 0.0));
}

#[test]
fn bo_budget_is_clamped() {
    assert_eq!(bo_curve(1, 1000).unwrap().observations.len(), MAX_BUDGET);
    assert!(bo_curve(1, 0).unwrap().observations.len() > 5);
}

#[test]
fn roc_curves_run_from_origin_to_corner() {
    let r = roc_demo(2, 5, 3).unwrap();
    assert_eq!(r.curves.len(), 2);
    assert!(r.pooled_samples > r.train_samples);
    for c in &r.curves {
        assert_eq!(c.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(c.points.last(), Some(&(1.0, 1.0)));
        let area: f64 = c.points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum();
        assert!((area - c.auc).abs() <= 1e-12);
    }
}

#[test]
fn masked_sum_matches_plain_sum() {
    let a = masked_aggregation(&[1.5, -0.25, 3.0], 256, 4).unwrap();
    assert_eq!(a.parties.len(), 3);
    assert!((a.decrypted_sum - a.true_sum).abs() <= 3.0 * a.resolution);
    // Individual masked plaintexts reveal nothing close to the inputs.
    assert!(a.parties.iter().all(|p| (p.masked_reading - p.value).abs() > 1.0));
    assert!(masked_aggregation(&[], 256, 1).is_err());
}

#[test]
fn outputs_are_deterministic() {
    let a = serde_json::to_string(&masked_aggregation(&[2.0, 5.0], 256, 9).unwrap()).unwrap();
    let b = serde_json::to_string(&masked_aggregation(&[2.0, 5.0], 256, 9).unwrap()).unwrap();
    assert_eq!(a, b);
}
