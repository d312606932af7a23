use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, Regime, Scenario, TuningMode};
use super::scanner::{scan_transcript, ScanTargets};
use super::transport::{traffic, write_transcript, Envelope, TrafficStats};
use crate::data::{
    default_vertical_shares, horizontal_partition, join_vertical, split_train_valid_test, vertical_partition, Fold,
    FoldPlan, PartyDataset,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, privacy_cost, MetricReport, PrivacyCost, PrivacyCostKind};
use crate::fed_hfl::{hfl_train, HflRoster};
use crate::fed_vfl::{vfl_predict, vfl_train, VflRoster};
use crate::gbt::{train_centralized, GbtParams};
use crate::hpo::{aggregate_params, tune_holdout, SearchSpace, TunedParams};

/// Party label for the pooled test rows of every party.
pub const ALL_PARTIES: &str = "all";
/// Metrics carried into the privacy-cost rows and the summary table.
pub const COST_METRICS: [&str; 3] = ["auc", "accuracy", "f1"];
const POOLED: &str = "pooled";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartyMetrics {
    pub party: String,
    pub folds: Vec<MetricReport>,
    /// Arithmetic mean of `folds`.
    pub mean: MetricReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RegimeStatus {
    Completed,
    Failed { error: String },
}

/// One trained model: which data it was trained for and its hash.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldModel {
    pub fold: usize,
    pub scope: String,
    pub hash: String,
    pub params: GbtParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Raw data stays with its owner.
    pub privacy_preserving: bool,
    pub status: RegimeStatus,
    pub plan_hash: String,
    pub metrics: Vec<PartyMetrics>,
    pub models: Vec<FoldModel>,
    /// Bytes and messages per role, summed over folds (federated only).
    pub traffic: BTreeMap<String, TrafficStats>,
    /// Leakage findings over all federated transcripts (federated only).
    pub scan_findings: Option<usize>,
}

impl RegimeReport {
    pub fn completed(&self) -> bool {
        self.status == RegimeStatus::Completed
    }

    pub fn mean(&self, party: &str) -> Option<&MetricReport> {
        self.metrics.iter().find(|m| m.party == party).map(|m| &m.mean)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartySummary {
    pub party: String,
    pub samples: usize,
    pub features: usize,
    /// `None` for feature-only parties.
    pub positives: Option<usize>,
}

/// Deterministic outcome of a run; wall times live in [`Timing`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub parties: Vec<PartySummary>,
    pub plan_hash: String,
    pub regimes: Vec<RegimeReport>,
    pub privacy_costs: Vec<PrivacyCost>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub note: String,
    pub seconds: BTreeMap<String, f64>,
}

#[derive(Debug)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub timing: Timing,
    /// `(name, transcript)` of every federated exchange, when requested.
    pub transcripts: Vec<(String, Vec<Envelope>)>,
}

/// Rows of one fold for one party, with validation positions relative to
/// the training rows.
struct Slice {
    train: PartyDataset,
    fit: Vec<usize>,
    valid: Vec<usize>,
    test: PartyDataset,
}

fn positions(fold: &Fold) -> (Vec<usize>, Vec<usize>) {
    let mut fit = Vec::new();
    let mut valid = Vec::new();
    for (i, r) in fold.train.iter().enumerate() {
        if fold.valid.binary_search(r).is_ok() {
            valid.push(i);
        } else {
            fit.push(i);
        }
    }
    (fit, valid)
}

fn slice(d: &PartyDataset, fold: &Fold) -> Slice {
    let (fit, valid) = positions(fold);
    Slice {
        train: d.select_rows(&fold.train),
        fit,
        valid,
        test: d.select_rows(&fold.test),
    }
}

/// Rows pooled across parties, in party order.
fn pool(party: &str, slices: &[&Slice]) -> Result<Slice> {
    let train: Vec<&PartyDataset> = slices.iter().map(|s| &s.train).collect();
    let test: Vec<&PartyDataset> = slices.iter().map(|s| &s.test).collect();
    let mut fit = Vec::new();
    let mut valid = Vec::new();
    let mut offset = 0;
    for s in slices {
        fit.extend(s.fit.iter().map(|i| i + offset));
        valid.extend(s.valid.iter().map(|i| i + offset));
        offset += s.train.len();
    }
    Ok(Slice {
        train: PartyDataset::concat(party, &train)?,
        fit,
        valid,
        test: PartyDataset::concat(party, &test)?,
    })
}

/// Predictions of one fold: `(party, labels, probabilities)`.
type Scored = Vec<(String, Vec<u8>, Vec<f64>)>;

#[derive(Default)]
struct FoldOutcome {
    scored: Scored,
    models: Vec<FoldModel>,
    transcripts: Vec<(String, Vec<Envelope>)>,
    findings: usize,
}

/// Caches BO results per fold and data scope so regimes share them.
struct Tuner<'a> {
    config: &'a ExperimentConfig,
    base: GbtParams,
    space: SearchSpace,
    cache: BTreeMap<(usize, String), TunedParams>,
}

impl Tuner<'_> {
    fn tuned(&mut self, fold: usize, scope: &str, s: &Slice, seed: u64) -> Result<TunedParams> {
        let key = (fold, scope.to_string());
        if let Some(t) = self.cache.get(&key) {
            return Ok(t.clone());
        }
        let t = tune_holdout(&s.train, &s.fit, &s.valid, &self.base, &self.space, self.config.bo_budget, seed)?;
        self.cache.insert(key, t.clone());
        Ok(t)
    }

    /// Booster settings for a model trained directly on `s`.
    fn direct(&mut self, fold: usize, scope: &str, s: &Slice, seed: u64) -> Result<GbtParams> {
        if self.config.tuning == TuningMode::None {
            return Ok(self.base.clone());
        }
        let t = self.tuned(fold, scope, s, seed)?;
        self.space.apply(&self.base, &t.values)
    }
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_add(fold as u64)
}

fn score(scored: &mut Scored, party: &str, test: &PartyDataset, probs: Vec<f64>) -> Result<()> {
    scored.push((party.to_string(), test.labels()?.to_vec(), probs));
    Ok(())
}

/// Sample-partitioned districts.
struct Horizontal {
    parties: Vec<PartyDataset>,
    plans: Vec<FoldPlan>,
}

impl Horizontal {
    fn slices(&self, f: usize) -> Vec<Slice> {
        self.parties.iter().zip(&self.plans).map(|(d, p)| slice(d, &p.folds[f])).collect()
    }

    fn run_fold(&self, regime: Regime, f: usize, cfg: &ExperimentConfig, tuner: &mut Tuner) -> Result<FoldOutcome> {
        let seed = fold_seed(cfg.seed, f);
        let slices = self.slices(f);
        let refs: Vec<&Slice> = slices.iter().collect();
        let pooled = pool(POOLED, &refs)?;
        let mut out = FoldOutcome::default();
        match regime {
            Regime::Separate => {
                for (d, s) in self.parties.iter().zip(&slices) {
                    let p = tuner.direct(f, &d.party, s, seed)?;
                    let m = train_centralized(&s.train, &p, seed)?;
                    score(&mut out.scored, &d.party, &s.test, m.predict_proba(&s.test.features)?)?;
                    out.models.push(FoldModel {
                        fold: f,
                        scope: d.party.clone(),
                        hash: m.hash(),
                        params: p,
                    });
                }
            }
            Regime::Centralized => {
                let p = tuner.direct(f, POOLED, &pooled, seed)?;
                let m = train_centralized(&pooled.train, &p, seed)?;
                for s in &slices {
                    score(&mut out.scored, &s.test.party, &s.test, m.predict_proba(&s.test.features)?)?;
                }
                out.models.push(FoldModel {
                    fold: f,
                    scope: POOLED.into(),
                    hash: m.hash(),
                    params: p,
                });
            }
            Regime::Federated => {
                let p = match cfg.tuning {
                    TuningMode::None => tuner.base.clone(),
                    // Federated training equals pooled training, so the
                    // pooled objective is the federated objective.
                    TuningMode::DirectBo => tuner.direct(f, POOLED, &pooled, seed)?,
                    TuningMode::AggregatedBo => {
                        let locals = self
                            .parties
                            .iter()
                            .zip(&slices)
                            .map(|(d, s)| Ok((tuner.tuned(f, &d.party, s, seed)?, s.train.len())))
                            .collect::<Result<Vec<_>>>()?;
                        let agg = aggregate_params(&tuner.space, &locals)?;
                        tuner.space.apply(&tuner.base, &agg.values)?
                    }
                };
                let train: Vec<PartyDataset> = slices.iter().map(|s| s.train.clone()).collect();
                let names = train.iter().map(|t| t.party.clone()).collect();
                let roster = HflRoster::new(names, cfg.secagg, cfg.key_bits, seed)?;
                let run = hfl_train(&train, &p, &roster, seed)?;
                for s in &slices {
                    score(&mut out.scored, &s.test.party, &s.test, run.model.predict_proba(&s.test.features)?)?;
                }
                let targets = ScanTargets::for_hfl(&train, &run.audit);
                out.findings = scan_transcript(&run.transcript, &targets)?.findings.len();
                out.models.push(FoldModel {
                    fold: f,
                    scope: POOLED.into(),
                    hash: run.model.hash(),
                    params: p,
                });
                out.transcripts.push((format!("federated_fold{f}_train"), run.transcript));
            }
        }
        Ok(out)
    }
}

/// Feature-partitioned wells: one active party with labels, passive
/// parties with features only.
struct Vertical {
    active: PartyDataset,
    passive: Vec<PartyDataset>,
    /// Passive blocks first, then the active block.
    joined: PartyDataset,
    plan: FoldPlan,
}

impl Vertical {
    fn run_fold(&self, regime: Regime, f: usize, cfg: &ExperimentConfig, tuner: &mut Tuner) -> Result<FoldOutcome> {
        let seed = fold_seed(cfg.seed, f);
        let fold = &self.plan.folds[f];
        let act = slice(&self.active, fold);
        let joined = slice(&self.joined, fold);
        let mut out = FoldOutcome::default();
        let (p, scope) = match regime {
            Regime::Separate => (tuner.direct(f, &self.active.party, &act, seed)?, self.active.party.clone()),
            Regime::Centralized => (tuner.direct(f, POOLED, &joined, seed)?, POOLED.to_string()),
            Regime::Federated => {
                let p = match cfg.tuning {
                    TuningMode::None => tuner.base.clone(),
                    TuningMode::DirectBo => tuner.direct(f, POOLED, &joined, seed)?,
                    // Only the active party holds labels, so its local
                    // optimum is the only one to aggregate.
                    TuningMode::AggregatedBo => {
                        let t = tuner.tuned(f, &self.active.party, &act, seed)?;
                        tuner.space.apply(&tuner.base, &t.values)?
                    }
                };
                (p, POOLED.to_string())
            }
        };
        let hash = match regime {
            Regime::Separate | Regime::Centralized => {
                let s = if regime == Regime::Separate { &act } else { &joined };
                let m = train_centralized(&s.train, &p, seed)?;
                score(&mut out.scored, ALL_PARTIES, &s.test, m.predict_proba(&s.test.features)?)?;
                m.hash()
            }
            Regime::Federated => {
                let pas: Vec<Slice> = self.passive.iter().map(|d| slice(d, fold)).collect();
                let pas_train: Vec<PartyDataset> = pas.iter().map(|s| s.train.clone()).collect();
                let roster = VflRoster::new(&act.train, &pas_train, cfg.key_bits)?;
                let run = vfl_train(&roster, &act.train, &pas_train, &p, seed)?;
                let queries: Vec<_> = run
                    .passive_tables
                    .iter()
                    .cloned()
                    .zip(pas.iter().map(|s| s.test.clone()))
                    .collect();
                let pred = vfl_predict(&run.model, &run.active_table, &act.test, &queries)?;
                score(&mut out.scored, ALL_PARTIES, &act.test, pred.probabilities)?;

                let train_side: Vec<_> = run.passive_tables.iter().cloned().zip(pas_train).map(|(t, d)| (d, t)).collect();
                let test_side: Vec<_> = queries.iter().map(|(t, d)| (d.clone(), t.clone())).collect();
                out.findings = scan_transcript(&run.transcript, &ScanTargets::for_vfl(&act.train, &train_side))?
                    .findings
                    .len()
                    + scan_transcript(&pred.transcript, &ScanTargets::for_vfl(&act.test, &test_side))?
                        .findings
                        .len();
                out.transcripts.push((format!("federated_fold{f}_train"), run.transcript));
                out.transcripts.push((format!("federated_fold{f}_predict"), pred.transcript));
                run.model.hash()
            }
        };
        out.models.push(FoldModel {
            fold: f,
            scope,
            hash,
            params: p,
        });
        Ok(out)
    }
}

enum Setup {
    Horizontal(Horizontal),
    Vertical(Vertical),
}

/// Parties of a scenario built from the district datasets.
#[derive(Clone, Debug)]
pub enum ScenarioData {
    Horizontal(Vec<PartyDataset>),
    Vertical {
        active: PartyDataset,
        passive: Vec<PartyDataset>,
        /// Passive blocks first, then the active block: the column order of
        /// the federated model's global feature ids.
        joined: PartyDataset,
    },
}

impl ScenarioData {
    pub fn new(scenario: Scenario, districts: Vec<PartyDataset>) -> Result<Self> {
        match scenario {
            Scenario::HflCaseOne => Ok(ScenarioData::Horizontal(horizontal_partition(districts)?)),
            Scenario::VflCaseTwo => {
                let refs: Vec<&PartyDataset> = districts.iter().collect();
                let wells = PartyDataset::concat("wells", &refs)?;
                let mut parts = vertical_partition(&wells, &default_vertical_shares(&wells))?;
                if parts.iter().any(|p| p.n_features() == 0) {
                    return Err(Error::Data("a vertical party would hold no features".into()));
                }
                let passive = parts.split_off(1);
                let active = parts.remove(0);
                let mut blocks = passive.clone();
                blocks.push(active.clone());
                let joined = join_vertical("wells", &blocks)?;
                Ok(ScenarioData::Vertical { active, passive, joined })
            }
        }
    }
}

impl Setup {
    fn new(cfg: &ExperimentConfig, districts: Vec<PartyDataset>) -> Result<Self> {
        match ScenarioData::new(cfg.scenario, districts)? {
            ScenarioData::Horizontal(parties) => {
                let plans = parties
                    .iter()
                    .map(|d| split_train_valid_test(d.labels()?, cfg.k, cfg.valid_fraction, cfg.seed))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Setup::Horizontal(Horizontal { parties, plans }))
            }
            ScenarioData::Vertical { active, passive, joined } => {
                let plan = split_train_valid_test(active.labels()?, cfg.k, cfg.valid_fraction, cfg.seed)?;
                Ok(Setup::Vertical(Vertical {
                    active,
                    passive,
                    joined,
                    plan,
                }))
            }
        }
    }

    fn plan_hash(&self) -> String {
        let mut h = Sha256::new();
        match self {
            Setup::Horizontal(s) => s.plans.iter().for_each(|p| h.update(p.hash())),
            Setup::Vertical(s) => h.update(s.plan.hash()),
        }
        hex::encode(h.finalize())
    }

    fn summaries(&self) -> Vec<PartySummary> {
        let parties: Vec<&PartyDataset> = match self {
            Setup::Horizontal(s) => s.parties.iter().collect(),
            Setup::Vertical(s) => std::iter::once(&s.active).chain(&s.passive).collect(),
        };
        parties
            .into_iter()
            .map(|d| PartySummary {
                party: d.party.clone(),
                samples: d.len(),
                features: d.n_features(),
                positives: d.labels.as_ref().map(|l| l.iter().filter(|&&y| y == 1).count()),
            })
            .collect()
    }

    fn run_fold(&self, regime: Regime, f: usize, cfg: &ExperimentConfig, tuner: &mut Tuner) -> Result<FoldOutcome> {
        match self {
            Setup::Horizontal(s) => s.run_fold(regime, f, cfg, tuner),
            Setup::Vertical(s) => s.run_fold(regime, f, cfg, tuner),
        }
    }
}

/// Per-party and pooled metrics of every fold.
fn collect_metrics(regime: Regime, folds: &[Scored]) -> Result<Vec<PartyMetrics>> {
    let mut by_party: Vec<(String, Vec<MetricReport>)> = Vec::new();
    let mut entry = |party: &str, r: MetricReport| match by_party.iter_mut().find(|(p, _)| p == party) {
        Some((_, v)) => v.push(r),
        None => by_party.push((party.to_string(), vec![r])),
    };
    for (f, scored) in folds.iter().enumerate() {
        let mut labels = Vec::new();
        let mut probs = Vec::new();
        for (party, y, p) in scored {
            entry(party, evaluate(&format!("{}/{party}", regime.as_str()), Some(f), y, p)?);
            labels.extend_from_slice(y);
            probs.extend_from_slice(p);
        }
        if scored.len() > 1 {
            let tag = format!("{}/{ALL_PARTIES}", regime.as_str());
            entry(ALL_PARTIES, evaluate(&tag, Some(f), &labels, &probs)?);
        }
    }
    by_party
        .into_iter()
        .map(|(party, folds)| {
            let mean = MetricReport::mean(&format!("{}/{party}", regime.as_str()), &folds)?;
            Ok(PartyMetrics { party, folds, mean })
        })
        .collect()
}

fn run_regime(
    setup: &Setup,
    regime: Regime,
    cfg: &ExperimentConfig,
    tuner: &mut Tuner,
    transcripts: &mut Vec<(String, Vec<Envelope>)>,
) -> Result<RegimeReport> {
    let mut scored = Vec::new();
    let mut models = Vec::new();
    let mut stats: BTreeMap<String, TrafficStats> = BTreeMap::new();
    let mut findings = 0;
    for f in 0..cfg.k {
        let out = setup.run_fold(regime, f, cfg, tuner)?;
        scored.push(out.scored);
        models.extend(out.models);
        findings += out.findings;
        for (name, t) in out.transcripts {
            for (role, s) in traffic(&t) {
                let e = stats.entry(role).or_default();
                e.messages_sent += s.messages_sent;
                e.bytes_sent += s.bytes_sent;
                e.messages_received += s.messages_received;
                e.bytes_received += s.bytes_received;
            }
            if cfg.save_transcripts {
                transcripts.push((name, t));
            }
        }
    }
    Ok(RegimeReport {
        regime,
        privacy_preserving: regime.preserves_privacy(),
        status: RegimeStatus::Completed,
        plan_hash: setup.plan_hash(),
        metrics: collect_metrics(regime, &scored)?,
        models,
        traffic: stats,
        scan_findings: (regime == Regime::Federated).then_some(findings),
    })
}

fn costs(regimes: &[RegimeReport]) -> Vec<PrivacyCost> {
    let done = |r: Regime| regimes.iter().find(|x| x.regime == r && x.completed());
    let Some(central) = done(Regime::Centralized) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (kind, other) in [
        (PrivacyCostKind::Federated, done(Regime::Federated)),
        (PrivacyCostKind::OpenShare, done(Regime::Separate)),
    ] {
        let Some(other) = other else { continue };
        for pm in &central.metrics {
            let Some(o) = other.mean(&pm.party) else { continue };
            for metric in COST_METRICS {
                let mut c = privacy_cost(
                    kind,
                    metric,
                    pm.mean.get(metric).expect("known metric"),
                    o.get(metric).expect("known metric"),
                );
                c.party = Some(pm.party.clone());
                out.push(c);
            }
        }
    }
    out
}

/// Runs every requested regime over one shared fold plan. A failing regime
/// is reported with its error; the others still run.
pub fn run_experiment(config: &ExperimentConfig, data_base: Option<&Path>) -> Result<ExperimentRun> {
    config.validate()?;
    let setup = Setup::new(config, config.data.load(data_base)?)?;
    let mut tuner = Tuner {
        config,
        base: config.effective_params(),
        space: SearchSpace::default(),
        cache: BTreeMap::new(),
    };
    let mut regimes = Vec::new();
    let mut seconds = BTreeMap::new();
    let mut transcripts = Vec::new();
    for &regime in &config.regimes {
        let start = Instant::now();
        let r = run_regime(&setup, regime, config, &mut tuner, &mut transcripts).unwrap_or_else(|e| RegimeReport {
            regime,
            privacy_preserving: regime.preserves_privacy(),
            status: RegimeStatus::Failed { error: e.to_string() },
            plan_hash: setup.plan_hash(),
            metrics: Vec::new(),
            models: Vec::new(),
            traffic: BTreeMap::new(),
            scan_findings: None,
        });
        seconds.insert(regime.as_str().to_string(), start.elapsed().as_secs_f64());
        regimes.push(r);
    }
    let plan_hash = setup.plan_hash();
    if regimes.iter().any(|r| r.plan_hash != plan_hash) {
        return Err(Error::Consistency("regimes ran on different fold plans".into()));
    }
    let privacy_costs = costs(&regimes);
    Ok(ExperimentRun {
        report: ExperimentReport {
            config: config.clone(),
            parties: setup.summaries(),
            plan_hash,
            regimes,
            privacy_costs,
        },
        timing: Timing {
            note: "end-to-end wall time per regime over all folds, including tuning, training and prediction; \
                   hardware dependent"
                .into(),
            seconds,
        },
        transcripts,
    })
}

fn model_name(r: Regime) -> &'static str {
    match r {
        Regime::Separate => "Separate model",
        Regime::Centralized => "Centralized model",
        Regime::Federated => "Federated model",
    }
}

impl ExperimentReport {
    /// Summary table: mean AUC, accuracy and F1 in percent.
    pub fn table_csv(&self) -> String {
        let mut s = String::from("model,party,privacy,auc,acc,f1_score,status\n");
        for r in &self.regimes {
            let privacy = if r.privacy_preserving { "yes" } else { "no" };
            match &r.status {
                RegimeStatus::Failed { .. } => {
                    s.push_str(&format!("{},,{privacy},,,,failed\n", model_name(r.regime)));
                }
                RegimeStatus::Completed => {
                    for pm in &r.metrics {
                        let m = &pm.mean;
                        s.push_str(&format!(
                            "{},{},{privacy},{:.2},{:.2},{:.2},completed\n",
                            model_name(r.regime),
                            pm.party,
                            100.0 * m.auc,
                            100.0 * m.accuracy,
                            100.0 * m.f1
                        ));
                    }
                }
            }
        }
        s
    }

    /// Every fold row with every metric.
    pub fn folds_csv(&self) -> String {
        let mut s = String::from("regime,party,fold,auc,accuracy,precision,recall,f1,fpr_standard,fpr_alt\n");
        for r in &self.regimes {
            for pm in &r.metrics {
                for m in pm.folds.iter().chain(std::iter::once(&pm.mean)) {
                    let fold = m.fold.map_or_else(|| "mean".to_string(), |f| f.to_string());
                    s.push_str(&format!(
                        "{},{},{fold},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                        r.regime.as_str(),
                        pm.party,
                        m.auc,
                        m.accuracy,
                        m.precision,
                        m.recall,
                        m.f1,
                        m.fpr_standard,
                        m.fpr_alt
                    ));
                }
            }
        }
        s
    }

    pub fn privacy_cost_csv(&self) -> String {
        let mut s = String::from("kind,metric,party,a_open_share,a_other,cost\n");
        for c in &self.privacy_costs {
            let kind = match c.kind {
                PrivacyCostKind::Federated => "federated",
                PrivacyCostKind::OpenShare => "open_share",
            };
            s.push_str(&format!(
                "{kind},{},{},{:?},{:?},{:?}\n",
                c.metric,
                c.party.as_deref().unwrap_or(""),
                c.a_open_share,
                c.a_other,
                c.cost
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const REPORT_FILES: [&str; 4] = ["report.json", "table.csv", "folds.csv", "privacy_cost.csv"];

/// Writes the deterministic report files, `timing.json`, and any saved
/// transcripts under `transcripts/`.
pub fn write_report(dir: impl AsRef<Path>, run: &ExperimentRun) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        (REPORT_FILES[0], run.report.to_json()),
        (REPORT_FILES[1], run.report.table_csv()),
        (REPORT_FILES[2], run.report.folds_csv()),
        (REPORT_FILES[3], run.report.privacy_cost_csv()),
        ("timing.json", serde_json::to_string_pretty(&run.timing)?),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    if !run.transcripts.is_empty() {
        let tdir = dir.join("transcripts");
        std::fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
        for (name, t) in &run.transcripts {
            write_transcript(&tdir.join(format!("{name}.jsonl")), t)?;
        }
    }
    Ok(())
}
