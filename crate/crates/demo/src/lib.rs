//! Browser demo over the fedgbt library: a Bayesian-optimization run with
//! its GP posterior, ROC curves of a separate versus a pooled model, and a
//! masked Paillier aggregation. Each view has a plain Rust entry point and
//! a `*_json` wrapper exported to JavaScript.

use fedgbt::data::{holdout_split, synth_generate, PartyDataset, SynthConfig};
use fedgbt::eval::{evaluate, roc_curve};
use fedgbt::fed_hfl::{modular_masks, HflRoster, SecAggMode};
use fedgbt::gbt::{train_centralized, GbtParams};
use fedgbt::hpo::{bo_optimize, ei_at, gp_fit, ParamKind, ParamSpec, SearchSpace, INITIAL_DESIGN};
use fedgbt::phe::{keygen, Encryptor, FixedPointCodec};
use num_bigint::BigUint;
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const MAX_BUDGET: usize = 40;
pub const GRID: usize = 201;
pub const MAX_PARTIES: usize = 8;

/// Maximum at `x = 0.3`, with a smaller bump near `0.8` to lure the search.
pub fn objective(x: f64) -> f64 {
    -(x - 0.3).powi(2) + 0.02 * (-(x - 0.8).powi(2) / 0.002).exp()
}

#[derive(Clone, Debug, Serialize)]
pub struct Observation {
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PosteriorPoint {
    pub x: f64,
    pub truth: f64,
    pub mean: f64,
    pub sd: f64,
    /// Expected improvement on the standardized scale the search uses.
    pub ei: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoCurve {
    pub observations: Vec<Observation>,
    pub posterior: Vec<PosteriorPoint>,
    pub best: Observation,
}

/// Runs the optimizer on [`objective`] over `[0, 1]` and evaluates the GP
/// fitted to the full history on a grid.
pub fn bo_curve(seed: u64, budget: usize) -> Result<BoCurve, String> {
    let budget = budget.clamp(INITIAL_DESIGN + 1, MAX_BUDGET);
    let space = SearchSpace::new(vec![ParamSpec::new("x", ParamKind::Continuous, 0.0, 1.0)]).map_err(|e| e.to_string())?;
    let run = bo_optimize(|x| Ok(objective(x[0])), &space, budget, seed).map_err(|e| e.to_string())?;
    let observations: Vec<Observation> = run
        .history
        .iter()
        .filter_map(|o| o.y.map(|y| Observation { x: o.x[0], y }))
        .collect();
    let ys: Vec<f64> = observations.iter().map(|o| o.y).collect();
    let mu = ys.iter().sum::<f64>() / ys.len() as f64;
    let sd = (ys.iter().map(|y| (y - mu).powi(2)).sum::<f64>() / ys.len() as f64).sqrt().max(1e-12);
    let zs: Vec<f64> = ys.iter().map(|y| (y - mu) / sd).collect();
    let gp = gp_fit(observations.iter().map(|o| vec![o.x]).collect(), &zs).map_err(|e| e.to_string())?;
    let best_z = zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let posterior = (0..GRID)
        .map(|i| {
            let x = i as f64 / (GRID - 1) as f64;
            let (m, v) = gp.predict(&[x]);
            PosteriorPoint {
                x,
                truth: objective(x),
                mean: mu + sd * m,
                sd: sd * v.sqrt(),
                ei: ei_at(&gp, &[x], best_z),
            }
        })
        .collect();
    let best = Observation {
        x: run.best.values[0],
        y: run.best.score.unwrap_or(f64::NAN),
    };
    Ok(BoCurve {
        observations,
        posterior,
        best,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Curve {
    pub label: String,
    pub auc: f64,
    pub accuracy: f64,
    pub f1: f64,
    /// `(fpr, tpr)` from the strictest threshold to the loosest.
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RocDemo {
    pub party: String,
    pub train_samples: usize,
    pub pooled_samples: usize,
    pub test_samples: usize,
    pub curves: Vec<Curve>,
}

/// Scores the held-out wells of the smaller synthetic district with a model
/// trained on that district alone and with one trained on both districts.
/// The pooled model is what horizontal federated training produces.
pub fn roc_demo(seed: u64, n_estimators: usize, max_depth: usize) -> Result<RocDemo, String> {
    let e = |e: fedgbt::Error| e.to_string();
    let districts = synth_generate(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })
    .map_err(e)?;
    let (small, large) = (&districts[0], &districts[1]);
    let rows: Vec<usize> = (0..small.len()).collect();
    let (train, test) = holdout_split(&rows, small.labels().map_err(e)?, 0.3, seed).map_err(e)?;
    let (small_train, small_test) = (small.select_rows(&train), small.select_rows(&test));
    let pooled = PartyDataset::concat("pooled", &[&small_train, large]).map_err(e)?;
    let params = GbtParams {
        n_estimators: n_estimators.clamp(1, 100),
        max_depth: max_depth.clamp(1, 8),
        ..GbtParams::default()
    };
    let labels = small_test.labels().map_err(e)?;
    let mut curves = Vec::new();
    for (label, data) in [("separate", &small_train), ("federated", &pooled)] {
        let model = train_centralized(data, &params, seed).map_err(e)?;
        let probs = model.predict_proba(&small_test.features).map_err(e)?;
        let m = evaluate(label, None, labels, &probs).map_err(e)?;
        curves.push(Curve {
            label: label.to_string(),
            auc: m.auc,
            accuracy: m.accuracy,
            f1: m.f1,
            points: roc_curve(labels, &probs).map_err(e)?,
        });
    }
    Ok(RocDemo {
        party: small.party.clone(),
        train_samples: small_train.len(),
        pooled_samples: pooled.len(),
        test_samples: small_test.len(),
        curves,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PartyShare {
    pub party: String,
    pub value: f64,
    /// What the masked plaintext would decode to on its own.
    pub masked_reading: f64,
    /// Leading hex digits of the ciphertext.
    pub ciphertext: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Aggregation {
    pub key_bits: u64,
    pub parties: Vec<PartyShare>,
    pub decrypted_sum: f64,
    pub true_sum: f64,
    pub resolution: f64,
}

fn hex_prefix(v: &BigUint) -> String {
    let s = v.to_str_radix(16);
    if s.len() > 24 {
        format!("{}…", &s[..24])
    } else {
        s
    }
}

/// Each party encodes its value on a fixed-point grid, adds pairwise masks
/// that cancel across parties, and encrypts; the key holder multiplies the
/// ciphertexts and decrypts only the sum.
pub fn masked_aggregation(values: &[f64], key_bits: u64, seed: u64) -> Result<Aggregation, String> {
    let e = |e: fedgbt::Error| e.to_string();
    if values.is_empty() || values.len() > MAX_PARTIES {
        return Err(format!("need 1 to {MAX_PARTIES} values, got {}", values.len()));
    }
    let key_bits = key_bits.clamp(128, 1024) & !1;
    let names: Vec<String> = (1..=values.len()).map(|i| format!("party_{i}")).collect();
    let roster = HflRoster::new(names.clone(), SecAggMode::Paillier, key_bits, seed).map_err(e)?;
    let kp = keygen(key_bits, seed).map_err(e)?;
    let n = kp.public.n();
    let codec = FixedPointCodec::new(40, values.len() as u64).map_err(e)?;
    let mut rng = fedgbt::gbt::stream_rng(seed, 1);
    let enc = Encryptor::new(&kp.public, &mut rng).map_err(e)?;
    let mut parties = Vec::new();
    let mut cts = Vec::new();
    for (i, (&v, name)) in values.iter().zip(&names).enumerate() {
        let mask = modular_masks(&roster, i, 0, 0, 1, n).remove(0);
        let masked = (codec.encode(v, n).map_err(e)? + mask) % n;
        let c = enc.encrypt(&masked, &mut rng).map_err(e)?;
        parties.push(PartyShare {
            party: name.clone(),
            value: v,
            masked_reading: codec.decode(&masked, n),
            ciphertext: hex_prefix(c.value()),
        });
        cts.push(c);
    }
    let sum = kp.private.decrypt(&kp.public, &kp.public.aggregate(&cts)).map_err(e)?;
    Ok(Aggregation {
        key_bits,
        parties,
        decrypted_sum: codec.decode(&sum, n),
        true_sum: values.iter().sum(),
        resolution: codec.resolution(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bo_curve_json(seed: u32, budget: u32) -> Result<String, JsValue> {
    to_js(bo_curve(seed as u64, budget as usize))
}

#[wasm_bindgen]
pub fn roc_demo_json(seed: u32, n_estimators: u32, max_depth: u32) -> Result<String, JsValue> {
    to_js(roc_demo(seed as u64, n_estimators as usize, max_depth as usize))
}

#[wasm_bindgen]
pub fn masked_aggregation_json(values: &[f64], key_bits: u32, seed: u32) -> Result<String, JsValue> {
    to_js(masked_aggregation(values, key_bits as u64, seed as u64))
}
