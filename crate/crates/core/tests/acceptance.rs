//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Run with `cargo test --test acceptance`.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use fedgbt::data::{holdout_split, join_vertical, FeatureInfo, Matrix, PartyDataset, SynthConfig};
use fedgbt::eval::{auc_roc, confusion, metrics, privacy_cost, roc_curve, PrivacyCostKind};
use fedgbt::fed_hfl::{hfl_train, HflRoster, SecAggMode};
use fedgbt::fed_vfl::{vfl_assemble, vfl_predict, vfl_train, VflRoster};
use fedgbt::gbt::{
    find_best_split, train_centralized, BinStats, BinningScope, BoostedEnsemble, GbtParams, GradHistogram, TreeNode,
};
use fedgbt::hpo::{
    aggregate_params, bo_optimize, ei_at, expected_improvement, gp_fit, ParamKind, JITTER, ParamSpec, Provenance,
    SearchSpace, TunedParams,
};
use fedgbt::orchestrator::{
    run_experiment, scan_transcript, DataSource, ExperimentConfig, Regime, ScanTargets, Scenario, REPORT_FILES,
};
use fedgbt::phe::{keygen, FixedPointCodec};
use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- datasets

/// Labeled dataset with continuous, integer-valued (tied) and zero-heavy
/// columns; labels follow a noisy linear score over a few columns.
fn random_dataset(seed: u64, party: &str) -> PartyDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(100..=300);
    let d = rng.gen_range(8..=32);
    let mut z = vec![vec![0.0; d]; n];
    let mut x = vec![vec![0.0; d]; n];
    for j in 0..d {
        let kind = rng.gen_range(0..3);
        let offset: f64 = rng.gen_range(-50.0..50.0);
        let scale: f64 = rng.gen_range(0.1..20.0);
        for i in 0..n {
            let zi: f64 = rng.sample(rand_distr::StandardNormal);
            z[i][j] = zi;
            x[i][j] = match kind {
                0 => offset + scale * zi,
                1 => (zi * 3.0).round(),
                _ => (scale * zi).max(0.0),
            };
        }
    }
    let weights: Vec<f64> = (0..d).map(|j| if j < 4 { rng.gen_range(-2.0..2.0) } else { 0.0 }).collect();
    let mut labels: Vec<u8> = z
        .iter()
        .map(|row| {
            let s: f64 = row.iter().zip(&weights).map(|(a, b)| a * b).sum();
            let noise: f64 = rng.sample(rand_distr::StandardNormal);
            u8::from(s + noise > 0.0)
        })
        .collect();
    labels[0] = 0;
    labels[1] = 1;
    PartyDataset::new(
        party,
        (0..n).map(|i| format!("s{seed}_{i}")).collect(),
        Matrix::from_rows(&x).unwrap(),
        (0..d).map(|j| FeatureInfo::plain(format!("f{j}"))).collect(),
        Some(labels),
    )
    .unwrap()
}

fn small_params(binning: BinningScope) -> GbtParams {
    GbtParams {
        n_estimators: 3,
        max_depth: 3,
        max_bin: 8,
        binning,
        ..GbtParams::default()
    }
}

/// 80/20 stratified train/test split of all rows.
fn train_test(data: &PartyDataset, seed: u64) -> (PartyDataset, PartyDataset) {
    let rows: Vec<usize> = (0..data.len()).collect();
    let (train, test) = holdout_split(&rows, data.labels().unwrap(), 0.2, seed).unwrap();
    (data.select_rows(&train), data.select_rows(&test))
}

/// Splits rows into `k` randomly sized, nonempty client shards.
fn shard_rows(data: &PartyDataset, k: usize, rng: &mut ChaCha8Rng) -> Vec<PartyDataset> {
    let mut rows: Vec<usize> = (0..data.len()).collect();
    rows.shuffle(rng);
    let mut cuts: Vec<usize> = (0..k - 1).map(|_| rng.gen_range(20..data.len() - 20)).collect();
    cuts.sort();
    cuts.dedup();
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(rows.len());
    bounds
        .windows(2)
        .enumerate()
        .map(|(c, w)| {
            let mut r = data.select_rows(&rows[w[0]..w[1]]);
            r.party = format!("client{c}");
            r
        })
        .collect()
}

/// Splits columns into an active block (with labels) and `k` passive blocks.
fn split_columns(data: &PartyDataset, k: usize, rng: &mut ChaCha8Rng) -> (PartyDataset, Vec<PartyDataset>) {
    let mut cols: Vec<usize> = (0..data.n_features()).collect();
    cols.shuffle(rng);
    let per = cols.len() / (k + 1);
    let mut passive = Vec::new();
    for p in 0..k {
        let mut d = data.select_features(&cols[p * per..(p + 1) * per]).without_labels();
        d.party = format!("passive{p}");
        passive.push(d);
    }
    let mut active = data.select_features(&cols[k * per..]);
    active.party = "active".into();
    (active, passive)
}

/// Same node layout, features, bins and thresholds; leaves within `tol`.
fn same_trees(a: &BoostedEnsemble, b: &BoostedEnsemble, tol: f64) -> std::result::Result<f64, String> {
    ensure(a.trees.len() == b.trees.len(), || format!("{} vs {} trees", a.trees.len(), b.trees.len()))?;
    let mut worst = 0.0f64;
    for (t, (x, y)) in a.trees.iter().zip(&b.trees).enumerate() {
        ensure(x.nodes.len() == y.nodes.len(), || format!("tree {t}: node counts differ"))?;
        for (p, q) in x.nodes.iter().zip(&y.nodes) {
            match (p, q) {
                (
                    TreeNode::Split {
                        feature: f1,
                        bin: b1,
                        threshold: t1,
                        left: l1,
                        right: r1,
                        ..
                    },
                    TreeNode::Split {
                        feature: f2,
                        bin: b2,
                        threshold: t2,
                        left: l2,
                        right: r2,
                        ..
                    },
                ) => ensure(f1 == f2 && b1 == b2 && t1 == t2 && l1 == l2 && r1 == r2, || {
                    format!("tree {t}: split {p:?} vs {q:?}")
                })?,
                (TreeNode::Leaf { weight: w1, .. }, TreeNode::Leaf { weight: w2, .. }) => {
                    worst = worst.max((w1 - w2).abs());
                }
                _ => return Err(format!("tree {t}: node kinds differ")),
            }
        }
    }
    ensure(worst <= tol, || format!("leaf weights differ by {worst:e}"))?;
    Ok(worst)
}

// ---------------------------------------------------------------- criteria

fn random_below(n: &BigUint, rng: &mut ChaCha8Rng) -> BigUint {
    let mut bytes = vec![0u8; (n.bits() as usize).div_ceil(8) + 8];
    rng.fill(&mut bytes[..]);
    BigUint::from_bytes_be(&bytes) % n
}

/// Exactly rounded sum of a few floats via two-sum compensation.
fn compensated_sum(xs: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

fn c1_paillier() -> Check {
    let start = Instant::now();
    let kp = keygen(512, 11).map_err(err)?;
    let pk = &kp.public;
    let n = pk.n().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..1000 {
        let (m1, m2) = (random_below(&n, &mut rng), random_below(&n, &mut rng));
        let c = pk.aggregate([&pk.encrypt(&m1, &mut rng).map_err(err)?, &pk.encrypt(&m2, &mut rng).map_err(err)?]);
        let got = kp.private.decrypt(pk, &c).map_err(err)?;
        ensure(got == (&m1 + &m2) % &n, || format!("pair {i}: wrong sum"))?;
    }
    let codec = FixedPointCodec::default();
    let mut worst = 0.0f64;
    for i in 0..200 {
        let terms = rng.gen_range(2..=40);
        let xs: Vec<f64> = (0..terms).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let cs = xs
            .iter()
            .map(|&x| pk.encrypt(&codec.encode(x, &n)?, &mut rng))
            .collect::<fedgbt::Result<Vec<_>>>()
            .map_err(err)?;
        let got = codec.decode(&kp.private.decrypt(pk, &pk.aggregate(&cs)).map_err(err)?, &n);
        let e = (got - compensated_sum(&xs)).abs();
        let bound = 2.0 * terms as f64 * (-40f64).exp2();
        ensure(e <= bound, || format!("signed sum {i}: error {e:e} > {bound:e}"))?;
        worst = worst.max(e / bound);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("1000 exact sums, 200 signed sums (worst error {worst:.3} of bound)"))
}

fn c2_hfl() -> Check {
    let mut worst_leaf = 0.0f64;
    let mut worst_auc = 0.0f64;
    let mut slowest = 0.0f64;
    for seed in 0..20u64 {
        let data = random_dataset(1000 + seed, "all");
        let (train, test) = train_test(&data, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clients = shard_rows(&train, rng.gen_range(2..=4), &mut rng);
        let params = small_params(BinningScope::Global);
        let roster = HflRoster::new(clients.iter().map(|c| c.party.clone()).collect(), SecAggMode::Paillier, 512, seed)
            .map_err(err)?;
        let t = Instant::now();
        let out = hfl_train(&clients, &params, &roster, seed).map_err(err)?;
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let refs: Vec<&PartyDataset> = clients.iter().collect();
        let union = PartyDataset::concat("union", &refs).map_err(err)?;
        let central = train_centralized(&union, &params, seed).map_err(err)?;
        worst_leaf = worst_leaf.max(same_trees(&out.model, &central, 1e-6).map_err(|e| format!("seed {seed}: {e}"))?);
        ensure(out.client_models.iter().all(|m| *m == out.model), || format!("seed {seed}: client copies differ"))?;
        let y = test.labels().unwrap();
        let a = auc_roc(y, &out.model.predict_proba(&test.features).map_err(err)?).map_err(err)?;
        let b = auc_roc(y, &central.predict_proba(&test.features).map_err(err)?).map_err(err)?;
        worst_auc = worst_auc.max((a - b).abs());
        ensure((a - b).abs() <= 0.005, || format!("seed {seed}: AUC {a} vs {b}"))?;
    }
    ensure(slowest <= 600.0, || format!("slowest run took {slowest:.1}s"))?;
    Ok(format!(
        "20 datasets, max leaf delta {worst_leaf:e}, max AUC delta {worst_auc:e}, slowest run {slowest:.1}s"
    ))
}

fn c3_vfl() -> Check {
    let mut worst_leaf = 0.0f64;
    let mut worst_auc = 0.0f64;
    let mut slowest = 0.0f64;
    for seed in 0..20u64 {
        let data = random_dataset(2000 + seed, "all");
        let rows: Vec<usize> = (0..data.len()).collect();
        let (train, test) = holdout_split(&rows, data.labels().unwrap(), 0.2, seed).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..=3);
        let (act_all, pas_all) = split_columns(&data, k, &mut rng);
        let act = act_all.select_rows(&train);
        let pas: Vec<PartyDataset> = pas_all.iter().map(|p| p.select_rows(&train)).collect();
        let act_test = act_all.select_rows(&test);
        let pas_test: Vec<PartyDataset> = pas_all.iter().map(|p| p.select_rows(&test)).collect();
        let mut params = small_params(BinningScope::PerNode);
        if seed % 2 == 1 {
            params.subsample = 0.8;
        }
        let roster = VflRoster::new(&act, &pas, 512).map_err(err)?;
        let t = Instant::now();
        let out = vfl_train(&roster, &act, &pas, &params, seed).map_err(err)?;
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let mut parts = pas.clone();
        parts.push(act.clone());
        let joined = join_vertical("joined", &parts).map_err(err)?;
        let central = train_centralized(&joined, &params, seed).map_err(err)?;
        let assembled = vfl_assemble(&out.model, &out.tables(), &roster).map_err(err)?;
        worst_leaf = worst_leaf.max(same_trees(&assembled, &central, 1e-6).map_err(|e| format!("seed {seed}: {e}"))?);

        let passive: Vec<_> = out.passive_tables.iter().cloned().zip(pas_test.iter().cloned()).collect();
        let pred = vfl_predict(&out.model, &out.active_table, &act_test, &passive).map_err(err)?;
        let mut test_parts = pas_test.clone();
        test_parts.push(act_test.clone());
        let joined_test = join_vertical("joined", &test_parts).map_err(err)?;
        let want = central.predict_proba(&joined_test.features).map_err(err)?;
        let y = act_test.labels().unwrap();
        let a = auc_roc(y, &pred.probabilities).map_err(err)?;
        let b = auc_roc(y, &want).map_err(err)?;
        worst_auc = worst_auc.max((a - b).abs());
        ensure((a - b).abs() <= 0.005, || format!("seed {seed}: AUC {a} vs {b}"))?;
    }
    ensure(slowest <= 600.0, || format!("slowest run took {slowest:.1}s"))?;
    Ok(format!(
        "20 datasets, max leaf delta {worst_leaf:e}, max AUC delta {worst_auc:e}, slowest run {slowest:.1}s"
    ))
}

struct Sample {
    x: Vec<f64>,
    g: f64,
    h: f64,
}

/// Best split by enumerating every `x ≤ v` partition of every feature,
/// summing raw samples. Ties keep the lowest feature, then the lowest `v`.
fn exhaustive_split(samples: &[Sample], n_features: usize, p: &GbtParams) -> Option<(usize, f64, f64)> {
    let shrink = |g: f64| {
        let m = (g.abs() - p.reg_alpha).max(0.0);
        if g < 0.0 {
            -m
        } else {
            m
        }
    };
    let score = |g: f64, h: f64| {
        let t = shrink(g);
        t * t / (h + p.reg_lambda)
    };
    let gt: f64 = samples.iter().map(|s| s.g).sum();
    let ht: f64 = samples.iter().map(|s| s.h).sum();
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..n_features {
        let mut values: Vec<f64> = samples.iter().map(|s| s.x[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for &v in &values[..values.len() - 1] {
            let (mut gl, mut hl) = (0.0, 0.0);
            for s in samples.iter().filter(|s| s.x[f] <= v) {
                gl += s.g;
                hl += s.h;
            }
            let (gr, hr) = (gt - gl, ht - hl);
            if hl < p.min_child_weight || hr < p.min_child_weight {
                continue;
            }
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(gt, ht)) - p.gamma;
            if gain > p.min_split_gain && best.is_none_or(|(_, _, b)| gain > b + 1e-12) {
                best = Some((f, v, gain));
            }
        }
    }
    best
}

fn c4_split_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut with_split = 0;
    let instances = 2000;
    for i in 0..instances {
        let n = rng.gen_range(1..=8);
        let nf = rng.gen_range(1..=2);
        let samples: Vec<Sample> = (0..n)
            .map(|_| Sample {
                x: (0..nf).map(|_| rng.gen_range(0..4) as f64).collect(),
                g: rng.gen_range(-64..=64) as f64 / 64.0,
                h: rng.gen_range(1..=64) as f64 / 64.0,
            })
            .collect();
        let params = GbtParams {
            reg_lambda: [0.0, 0.5, 1.0, 2.0][rng.gen_range(0..4)],
            gamma: [0.0, 0.0, 0.05][rng.gen_range(0..3)],
            reg_alpha: [0.0, 0.0, 0.25][rng.gen_range(0..3)],
            min_child_weight: [0.0, 0.25, 1.0][rng.gen_range(0..3)],
            ..GbtParams::default()
        };
        // One bin per distinct value; shorter features get empty tail bins.
        let distinct: Vec<Vec<f64>> = (0..nf)
            .map(|f| {
                let mut v: Vec<f64> = samples.iter().map(|s| s.x[f]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        let n_bins = distinct.iter().map(Vec::len).max().unwrap().max(2);
        let mut slots = vec![BinStats::default(); nf * n_bins];
        for s in &samples {
            for f in 0..nf {
                let b = distinct[f].iter().position(|&v| v == s.x[f]).unwrap();
                let slot = &mut slots[f * n_bins + b];
                slot.g += s.g;
                slot.h += s.h;
                slot.count += 1;
            }
        }
        let hist = GradHistogram::from_slots(nf, n_bins, slots).map_err(err)?;
        let got = find_best_split(&hist, &params);
        let want = exhaustive_split(&samples, nf, &params);
        match (got, want) {
            (None, None) => {}
            (Some(c), Some((f, v, gain))) => {
                with_split += 1;
                ensure(c.feature == f && distinct[f][c.bin] == v, || {
                    format!("instance {i}: split ({}, {}) vs ({f}, {v})", c.feature, distinct[c.feature][c.bin])
                })?;
                ensure((c.gain - gain).abs() <= 1e-9, || format!("instance {i}: gain {} vs {gain}", c.gain))?;
            }
            (g, w) => return Err(format!("instance {i}: {g:?} vs {w:?}")),
        }
    }
    ensure(with_split >= 500, || format!("only {with_split} instances had a split"))?;
    Ok(format!("{instances} instances, {with_split} with a qualifying split"))
}

fn c5_metric_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = [0.0, 0.125, 0.25, 0.4, 0.5, 0.5, 0.6, 0.75, 0.9, 1.0];
    let mut aucs = 0;
    for i in 0..1000 {
        let n = rng.gen_range(1..=40);
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let scores: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { grid[rng.gen_range(0..grid.len())] } else { rng.gen() })
            .collect();
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for (&y, &s) in labels.iter().zip(&scores) {
            match (y == 1, s >= 0.5) {
                (true, true) => tp += 1,
                (true, false) => fn_ += 1,
                (false, true) => fp += 1,
                (false, false) => tn += 1,
            }
        }
        let frac = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let want = [
            frac(tp + tn, n as u64),
            frac(tp, tp + fp),
            frac(tp, tp + fn_),
            frac(2 * tp, 2 * tp + fp + fn_),
            frac(fp, fp + tn),
            frac(fp, fp + fn_),
        ];
        let r = metrics(&confusion(&labels, &scores, 0.5).map_err(err)?);
        let got = [r.accuracy, r.precision, r.recall, r.f1, r.fpr_standard, r.fpr_alt];
        ensure(got == want, || format!("instance {i}: {got:?} vs {want:?}"))?;

        let pos: Vec<f64> = (0..n).filter(|&k| labels[k] == 1).map(|k| scores[k]).collect();
        let neg: Vec<f64> = (0..n).filter(|&k| labels[k] == 0).map(|k| scores[k]).collect();
        if pos.is_empty() || neg.is_empty() {
            ensure(auc_roc(&labels, &scores).is_err(), || format!("instance {i}: AUC defined for one class"))?;
            continue;
        }
        let (mut wins, mut ties) = (0u64, 0u64);
        for p in &pos {
            for q in &neg {
                if p > q {
                    wins += 1;
                } else if p == q {
                    ties += 1;
                }
            }
        }
        let mw = (wins as f64 + 0.5 * ties as f64) / (pos.len() as f64 * neg.len() as f64);
        let auc = auc_roc(&labels, &scores).map_err(err)?;
        ensure(auc == mw, || format!("instance {i}: AUC {auc} vs Mann-Whitney {mw}"))?;
        let roc = roc_curve(&labels, &scores).map_err(err)?;
        let area: f64 = roc.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum();
        ensure((area - mw).abs() <= 1e-12, || format!("instance {i}: ROC area {area} vs {mw}"))?;
        aucs += 1;
    }
    Ok(format!("1000 instances exact, {aucs} with both classes checked against pairwise AUC"))
}

fn c6_privacy_cost() -> Check {
    let cases = [
        (PrivacyCostKind::Federated, "auc", 89.61, 89.33, "0.28"),
        (PrivacyCostKind::Federated, "accuracy", 84.17, 82.76, "1.41"),
        (PrivacyCostKind::Federated, "f1", 86.74, 85.47, "1.27"),
        (PrivacyCostKind::OpenShare, "auc", 89.61, 69.25, "20.36"),
    ];
    let mut shown = Vec::new();
    for (kind, metric, open, other, want) in cases {
        let got = format!("{:.2}", privacy_cost(kind, metric, open, other).cost);
        ensure(got == want, || format!("{kind:?} {metric}: {got} vs {want}"))?;
        shown.push(got);
    }
    Ok(format!("costs {}", shown.join(", ")))
}

fn rbf_oracle(a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (-d2 / 2.0).exp()
}

fn jittered_kernel(xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..xs.len())
        .map(|i| (0..xs.len()).map(|j| rbf_oracle(&xs[i], &xs[j]) + if i == j { JITTER } else { 0.0 }).collect())
        .collect()
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

fn c7_bo() -> Check {
    let space = SearchSpace::new(vec![ParamSpec::new("x", ParamKind::Continuous, 0.0, 1.0)]).map_err(err)?;
    let mut worst_x = 0.0f64;
    let mut worst_fit = 0.0f64;
    for seed in 1..=10u64 {
        let r = bo_optimize(|x| Ok(-(x[0] - 0.3).powi(2)), &space, 25, seed).map_err(err)?;
        let dx = (r.best.values[0] - 0.3).abs();
        worst_x = worst_x.max(dx);
        ensure(dx <= 0.05, || format!("seed {seed}: best x {}", r.best.values[0]))?;

        let xs: Vec<Vec<f64>> = r.history.iter().map(|o| space.to_unit(&o.x)).collect();
        let ys: Vec<f64> = r.history.iter().map(|o| o.y.unwrap()).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();
        let zs: Vec<f64> = ys.iter().map(|y| (y - mean) / sd).collect();
        let gp = gp_fit(xs.clone(), &zs).map_err(err)?;
        // With noise `j`, the posterior mean at the inputs is y − j·(K + jI)⁻¹y.
        let alpha = solve(jittered_kernel(&xs), zs.clone());
        for (i, x) in xs.iter().enumerate() {
            let want = zs[i] - JITTER * alpha[i];
            let e = (gp.predict(x).0 - want).abs();
            ensure(e <= 1e-6, || format!("seed {seed}: posterior mean off by {e:e} at input {i}"))?;
        }
        let best = zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for k in 0..=1000 {
            let e = ei_at(&gp, &[k as f64 / 1000.0], best);
            ensure(e >= 0.0, || format!("seed {seed}: EI {e} at {}", k as f64 / 1000.0))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let dim = rng.gen_range(1..=8);
        let n = rng.gen_range(2..=25);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen()).collect()).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|a| xs.iter().zip(&c).map(|(b, ci)| rbf_oracle(a, b) * ci).sum()).collect();
        let gp = gp_fit(xs.clone(), &ys).map_err(err)?;
        for (x, y) in xs.iter().zip(&ys) {
            let e = (gp.predict(x).0 - y).abs();
            worst_fit = worst_fit.max(e);
            ensure(e <= 1e-4, || format!("GP misses a target by {e:e} ({n} points in {dim}d)"))?;
        }
    }
    for _ in 0..10_000 {
        let e = expected_improvement(rng.gen_range(-5.0..5.0), rng.gen_range(0.0..4.0), rng.gen_range(-5.0..5.0), 0.01);
        ensure(e >= 0.0, || format!("EI {e} < 0"))?;
    }
    Ok(format!("10/10 seeds, max |x − 0.3| = {worst_x:.4}, max GP interpolation error {worst_fit:e}"))
}

fn tuned(values: Vec<f64>, space: &SearchSpace) -> TunedParams {
    TunedParams {
        names: space.names(),
        raw: values.clone(),
        values,
        score: Some(0.0),
        provenance: Provenance::Direct,
    }
}

fn c8_aggregation() -> Check {
    let space = SearchSpace::new(vec![
        ParamSpec::new("learning_rate", ParamKind::Continuous, 0.01, 1.0),
        ParamSpec::new("max_depth", ParamKind::Integer, 2.0, 10.0),
        ParamSpec::new("subsample", ParamKind::Continuous, 0.5, 1.0),
    ])
    .map_err(err)?;
    let a = tuned(vec![0.2, 3.0, 0.6], &space);
    let b = tuned(vec![0.4, 6.0, 0.9], &space);
    let agg = aggregate_params(&space, &[(a, 72), (b, 212)]).map_err(err)?;
    let want = (72.0 * 0.2 + 212.0 * 0.4) / 284.0;
    let lr = agg.values[0];
    ensure((lr - want).abs() <= 1e-12, || format!("learning rate {lr} vs {want}"))?;
    ensure(format!("{lr:.6}") == "0.349296", || format!("learning rate {lr}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..500 {
        let parties = rng.gen_range(1..=5);
        let locals: Vec<(TunedParams, usize)> = (0..parties)
            .map(|_| {
                let v = vec![
                    rng.gen_range(0.01..1.0),
                    rng.gen_range(2..=10) as f64,
                    rng.gen_range(0.5..1.0),
                ];
                (tuned(v, &space), rng.gen_range(1..500))
            })
            .collect();
        let agg = aggregate_params(&space, &locals).map_err(err)?;
        for d in 0..space.dim() {
            let lo = locals.iter().map(|(t, _)| t.values[d]).fold(f64::INFINITY, f64::min);
            let hi = locals.iter().map(|(t, _)| t.values[d]).fold(f64::NEG_INFINITY, f64::max);
            let r = agg.raw[d];
            ensure(r >= lo - 1e-12 && r <= hi + 1e-12, || format!("instance {i}: {r} outside [{lo}, {hi}]"))?;
        }
        ensure(space.contains(&agg.values), || format!("instance {i}: {:?} out of bounds", agg.values))?;
    }
    Ok(format!("72/212 example gives {lr:.12}; 500 random aggregations within local ranges"))
}

/// Two districts of 72 and 212 wells with their own feature marginals and a
/// shared labeling rule (equal high-yield rates), so pooling adds samples of
/// the same task.
fn hfl_config(seed: u64) -> ExperimentConfig {
    let mut synth = SynthConfig {
        seed,
        ..SynthConfig::default()
    };
    synth.districts[1].positive_rate = synth.districts[0].positive_rate;
    let mut c = ExperimentConfig::new(Scenario::HflCaseOne);
    c.seed = seed;
    c.secagg = SecAggMode::Mask;
    c.data = DataSource::Synth { synth };
    c
}

fn c9_federated_benefit() -> Check {
    let mut wins = 0;
    let mut shown = Vec::new();
    for seed in 1..=10u64 {
        let mut c = hfl_config(seed);
        c.regimes = vec![Regime::Separate, Regime::Federated];
        let run = run_experiment(&c, None).map_err(err)?;
        let regime = |r: Regime| run.report.regimes.iter().find(|x| x.regime == r).unwrap();
        let small = run.report.parties.iter().min_by_key(|p| p.samples).unwrap().party.clone();
        let sep = regime(Regime::Separate).mean(&small).ok_or("no separate metrics")?.auc;
        let fed = regime(Regime::Federated).mean(&small).ok_or("no federated metrics")?.auc;
        if fed >= sep {
            wins += 1;
        }
        shown.push(format!("{:+.3}", fed - sep));
    }
    ensure(wins >= 8, || format!("federated ≥ separate in only {wins}/10 seeds ({})", shown.join(" ")))?;
    Ok(format!("federated ≥ separate for the smaller party in {wins}/10 seeds (AUC deltas {})", shown.join(" ")))
}

fn c10_scanner() -> Check {
    let mut messages = 0;
    for seed in 0..10u64 {
        let data = random_dataset(3000 + seed, "all");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let report = if seed % 2 == 0 {
            let clients = shard_rows(&data, rng.gen_range(2..=4), &mut rng);
            let mode = if seed % 4 == 0 { SecAggMode::Paillier } else { SecAggMode::Mask };
            let roster = HflRoster::new(clients.iter().map(|c| c.party.clone()).collect(), mode, 512, seed).map_err(err)?;
            let out = hfl_train(&clients, &small_params(BinningScope::Global), &roster, seed).map_err(err)?;
            scan_transcript(&out.transcript, &ScanTargets::for_hfl(&clients, &out.audit)).map_err(err)?
        } else {
            let (act, pas) = split_columns(&data, rng.gen_range(1..=3), &mut rng);
            let roster = VflRoster::new(&act, &pas, 512).map_err(err)?;
            let out = vfl_train(&roster, &act, &pas, &small_params(BinningScope::PerNode), seed).map_err(err)?;
            let passive: Vec<_> = pas.iter().cloned().zip(out.passive_tables.iter().cloned()).collect();
            let mut t = ScanTargets::for_vfl(&act, &passive);
            for p in &pas {
                t.add_dataset(p);
            }
            let pred_in: Vec<_> = out.passive_tables.iter().cloned().zip(pas.iter().cloned()).collect();
            let pred = vfl_predict(&out.model, &out.active_table, &act, &pred_in).map_err(err)?;
            let mut all = out.transcript.clone();
            all.extend(pred.transcript);
            scan_transcript(&all, &t).map_err(err)?
        };
        ensure(report.is_clean(), || format!("seed {seed}: {} ({:?})", report.verdict(), report.findings.first()))?;
        messages += report.messages;
    }
    Ok(format!("10 runs (5 horizontal, 5 vertical), {messages} messages, no findings"))
}

fn run_compare(config: &Path, out: &Path) -> std::result::Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_fedgbt"))
        .args(["compare", "--seed", "3", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(err)?;
    ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())
}

fn c11_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let configs = [
        (
            "hfl_bo",
            "scenario = \"hfl_case_one\"\nk = 3\ntuning = \"aggregated_bo\"\nbo_budget = 6\nsecagg = \"mask\"\n\
             [params]\nn_estimators = 3\nmax_depth = 3\nmax_bin = 8\n",
        ),
        (
            "hfl_paillier",
            "scenario = \"hfl_case_one\"\nk = 3\nsecagg = \"paillier\"\nkey_bits = 256\n\
             [params]\nn_estimators = 3\nmax_depth = 3\nmax_bin = 8\n",
        ),
        (
            "vfl",
            "scenario = \"vfl_case_two\"\nk = 2\nkey_bits = 256\n[params]\nn_estimators = 2\nmax_depth = 2\nmax_bin = 6\n",
        ),
    ];
    let mut hashes = 0;
    for (name, text) in configs {
        let cfg = dir.path().join(format!("{name}.toml"));
        std::fs::write(&cfg, text).map_err(err)?;
        let (a, b) = (dir.path().join(format!("{name}_1")), dir.path().join(format!("{name}_2")));
        run_compare(&cfg, &a)?;
        run_compare(&cfg, &b)?;
        for f in REPORT_FILES {
            let x = std::fs::read(a.join(f)).map_err(err)?;
            let y = std::fs::read(b.join(f)).map_err(err)?;
            ensure(x == y, || format!("{name}: {f} differs between runs"))?;
        }
        let report: serde_json::Value =
            serde_json::from_slice(&std::fs::read(a.join("report.json")).map_err(err)?).map_err(err)?;
        hashes += report["regimes"]
            .as_array()
            .map(|rs| rs.iter().map(|r| r["models"].as_array().map_or(0, Vec::len)).sum::<usize>())
            .unwrap_or(0);
    }
    ensure(hashes > 0, || "no model hashes in the reports".into())?;
    Ok(format!("3 configs × 2 runs: {} files byte-identical, {hashes} model hashes equal", REPORT_FILES.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("paillier correctness", c1_paillier),
        ("horizontal ≡ centralized", c2_hfl),
        ("vertical ≡ centralized", c3_vfl),
        ("split-search oracle", c4_split_oracle),
        ("metric oracle", c5_metric_oracle),
        ("privacy-cost arithmetic", c6_privacy_cost),
        ("bayesian optimization", c7_bo),
        ("parameter aggregation", c8_aggregation),
        ("federated benefit", c9_federated_benefit),
        ("privacy scanner", c10_scanner),
        ("determinism", c11_determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let result = check();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
