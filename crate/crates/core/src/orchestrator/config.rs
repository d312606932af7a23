use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_csv, synth_generate, well_schema, PartyDataset, SynthConfig};
use crate::error::{Error, Result};
use crate::fed_hfl::SecAggMode;
use crate::gbt::{BinningScope, GbtParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Districts as sample-partitioned parties.
    HflCaseOne,
    /// All wells, operational features and labels at the oil company,
    /// geological features at the exploration institute.
    VflCaseTwo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Separate,
    Centralized,
    Federated,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Separate => "separate",
            Regime::Centralized => "centralized",
            Regime::Federated => "federated",
        }
    }

    /// Whether raw data stays with its owner.
    pub fn preserves_privacy(self) -> bool {
        self != Regime::Centralized
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningMode {
    #[default]
    None,
    /// Every regime tunes by BO on the training data it models.
    DirectBo,
    /// As `direct_bo`, except the federated model takes the sample-weighted
    /// average of each party's locally tuned hyperparameters.
    AggregatedBo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    /// One labeled CSV per district, party named by file stem.
    Csv { paths: Vec<PathBuf> },
    Synth {
        #[serde(default)]
        synth: SynthConfig,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synth {
            synth: SynthConfig::default(),
        }
    }
}

impl DataSource {
    /// Loads the district datasets. Relative CSV paths resolve against
    /// `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<Vec<PartyDataset>> {
        match self {
            DataSource::Synth { synth } => synth_generate(synth),
            DataSource::Csv { paths } => {
                let schema = well_schema();
                paths
                    .iter()
                    .map(|p| match base {
                        Some(b) if p.is_relative() => load_csv(b.join(p), &schema),
                        _ => load_csv(p, &schema),
                    })
                    .collect()
            }
        }
    }
}

/// One comparison run. Every field except `scenario` has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default = "all_regimes")]
    pub regimes: Vec<Regime>,
    #[serde(default)]
    pub tuning: TuningMode,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub secagg: SecAggMode,
    #[serde(default = "default_key_bits")]
    pub key_bits: u64,
    #[serde(default = "default_valid_fraction")]
    pub valid_fraction: f64,
    #[serde(default = "default_budget")]
    pub bo_budget: usize,
    /// Write each federated fold's transcript next to the report.
    #[serde(default)]
    pub save_transcripts: bool,
    #[serde(default)]
    pub params: GbtParams,
    #[serde(default)]
    pub data: DataSource,
}

fn all_regimes() -> Vec<Regime> {
    vec![Regime::Separate, Regime::Centralized, Regime::Federated]
}

fn default_k() -> usize {
    5
}

fn default_seed() -> u64 {
    1
}

fn default_key_bits() -> u64 {
    512
}

fn default_valid_fraction() -> f64 {
    0.1
}

fn default_budget() -> usize {
    crate::hpo::DEFAULT_BUDGET
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        ExperimentConfig {
            scenario,
            regimes: all_regimes(),
            tuning: TuningMode::None,
            k: default_k(),
            seed: default_seed(),
            secagg: SecAggMode::default(),
            key_bits: default_key_bits(),
            valid_fraction: default_valid_fraction(),
            bo_budget: default_budget(),
            save_transcripts: false,
            params: GbtParams::default(),
            data: DataSource::default(),
        }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.regimes.is_empty() {
            return Err(Error::Config("at least one regime is required".into()));
        }
        let mut r = self.regimes.clone();
        r.sort();
        r.dedup();
        if r.len() != self.regimes.len() {
            return Err(Error::Config("regimes are listed more than once".into()));
        }
        if self.k < 2 {
            return Err(Error::Config("k must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&self.valid_fraction) {
            return Err(Error::Config("valid_fraction must lie in [0, 1)".into()));
        }
        if self.tuning != TuningMode::None && (self.valid_fraction == 0.0 || self.bo_budget == 0) {
            return Err(Error::Config("tuning needs valid_fraction > 0 and bo_budget > 0".into()));
        }
        if self.key_bits < 64 {
            return Err(Error::Config("key_bits must be at least 64".into()));
        }
        if let DataSource::Csv { paths } = &self.data {
            if paths.is_empty() {
                return Err(Error::Config("csv source lists no paths".into()));
            }
        }
        if let DataSource::Synth { synth } = &self.data {
            synth.validate()?;
        }
        self.effective_params().validate()
    }

    /// Booster settings with the binning each scenario's protocol uses,
    /// applied to every regime so that comparisons stay paired.
    pub fn effective_params(&self) -> GbtParams {
        let mut p = self.params.clone();
        p.binning = match self.scenario {
            Scenario::HflCaseOne => BinningScope::Global,
            Scenario::VflCaseTwo => BinningScope::PerNode,
        };
        p
    }

    pub fn has(&self, r: Regime) -> bool {
        self.regimes.contains(&r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_fills_defaults() {
        let c = ExperimentConfig::from_toml("scenario = \"hfl_case_one\"").unwrap();
        assert_eq!(c.k, 5);
        assert_eq!(c.regimes.len(), 3);
        assert_eq!(c.data, DataSource::default());
    }

    #[test]
    fn round_trips() {
        let mut c = ExperimentConfig::new(Scenario::VflCaseTwo);
        c.tuning = TuningMode::AggregatedBo;
        c.data = DataSource::Csv {
            paths: vec!["a.csv".into(), "b.csv".into()],
        };
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        let s = ExperimentConfig::new(Scenario::HflCaseOne);
        assert_eq!(ExperimentConfig::from_toml(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml("scenario = \"hfl_case_one\"\nregimes = []").is_err());
        assert!(ExperimentConfig::from_toml("scenario = \"hfl_case_one\"\nk = 1").is_err());
        assert!(ExperimentConfig::from_toml("scenario = \"other\"").is_err());
        assert!(ExperimentConfig::from_toml("scenario = \"hfl_case_one\"\nbogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("scenario = \"hfl_case_one\"\nregimes = [\"federated\", \"federated\"]").is_err());
    }

    #[test]
    fn scenario_fixes_binning() {
        let c = ExperimentConfig::new(Scenario::VflCaseTwo);
        assert_eq!(c.effective_params().binning, BinningScope::PerNode);
    }
}
