use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use super::dataset::PartyDataset;
use super::matrix::Matrix;
use super::schema::{well_schema, FeatureInfo};
use crate::error::{Error, Result};
use crate::gbt::stream_rng;

/// Summary statistics of one feature in one district.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub symbol: String,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistrictSpec {
    pub name: String,
    /// Prefix for generated well ids, e.g. `A` → `A-001`.
    pub id_prefix: String,
    pub n_samples: usize,
    pub positive_rate: f64,
    pub features: Vec<FeatureStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalTerm {
    pub symbol: String,
    pub weight: f64,
}

/// Generator settings. Spread parameters (`default_concentration`,
/// `zero_mass`, `noise_sd`) are not pinned by the source statistics, which
/// report only mean, median and range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    /// Productivity (m³/day) at or above which a well is labeled high-yield.
    pub label_threshold: f64,
    /// Standard deviation of the Gaussian noise added to the standardized
    /// productivity score.
    pub noise_sd: f64,
    /// Beta concentration used when the median does not pin one down.
    pub default_concentration: f64,
    /// Point mass at the minimum for features whose median equals it.
    pub zero_mass: f64,
    pub signal: Vec<SignalTerm>,
    pub districts: Vec<DistrictSpec>,
}

// symbol, then (mean, median, min, max) for district A and district B.
const WELL_STATS: [(&str, [f64; 4], [f64; 4]); 32] = [
    ("G1", [1570.38, 1554.00, 895.63, 2163.00], [1468.05, 1500.0, 786.00, 2203.00]),
    ("G2", [17.23, 0.00, 0.00, 173.40], [28.63, 0.00, 0.00, 551.50]),
    ("G3", [243.23, 178.15, 0.00, 1036.00], [386.18, 306.00, 0.00, 1748.00]),
    ("G4", [102.49, 72.30, 0.00, 417.00], [89.30, 50.00, 0.00, 666.00]),
    ("G5", [1019.13, 1057.25, 0.00, 1788.00], [743.99, 726.00, 0.00, 1613.00]),
    ("G6", [127.79, 51.75, 0.00, 1362.00], [152.25, 39.00, 0.00, 1303.00]),
    ("G7", [43.23, 0.00, 0.00, 912.00], [54.09, 0.00, 0.00, 757.00]),
    ("G8", [17.28, 0.00, 0.00, 836.00], [18.47, 0.00, 0.00, 471.00]),
    ("G9", [1262.36, 1328.25, 0.00, 1975.60], [1111.93, 1216.60, 0.00, 1867.20]),
    ("G10", [3291330.10, 3291291.00, 3283866.00, 3297271.10], [3284124.81, 3284647.66, 3272450.10, 3296023.60]),
    ("G11", [18738860.64, 18739164.65, 18731627.60, 18747507.10], [18743263.60, 18743721.90, 18732341.10, 18751582.80]),
    ("G12", [3463.95, 3530.85, 2399.20, 4345.74], [2728.33, 2646.00, 1278.20, 5645.00]),
    ("G13", [4.42, 4.44, 3.57, 5.07], [4.71, 4.71, 2.93, 6.37]),
    ("G14", [3.93, 3.95, 2.46, 4.89], [3.59, 3.62, 2.00, 5.03]),
    ("G15", [1.60, 1.60, 1.30, 1.90], [1.42, 1.46, 0.98, 1.69]),
    ("G16", [79.23, 78.16, 65.45, 100.77], [72.65, 73.17, 40.02, 88.87]),
    ("O1", [35471.40, 34738.04, 18001.00, 60115.00], [31159.44, 31170.63, 3683.58, 57188.90]),
    ("O2", [2897.63, 2992.30, 223.40, 6181.68], [2611.47, 2391.16, 129.40, 7914.90]),
    ("O3", [39897.46, 38964.49, 20013.58, 65022.80], [35173.27, 34940.60, 3840.13, 59781.90]),
    ("O4", [1385.30, 1254.15, 604.60, 2682.60], [966.16, 988.81, 111.90, 1786.00]),
    ("O5", [68.05, 61.37, 40.84, 107.30], [50.27, 50.65, 31.22, 79.45]),
    ("O6", [474.61, 628.20, 9.18, 920.02], [20.06, 20.06, 12.54, 29.79]),
    ("O7", [1956.57, 1933.50, 1229.13, 2335.37], [1803.70, 1820.16, 1240.64, 2178.36]),
    ("O8", [1535.71, 1887.98, 187.98, 2196.65], [706.50, 701.00, 489.51, 1009.85]),
    ("O9", [62.42, 24.15, 0.00, 968.00], [41.55, 38.80, 0.00, 241.90]),
    ("O10", [917.03, 773.37, 214.30, 1861.60], [696.12, 709.20, 87.30, 1273.80]),
    ("O11", [405.84, 353.83, 108.90, 921.10], [228.49, 215.20, 19.60, 438.50]),
    ("O12", [6.47, 6.49, 5.18, 8.55], [7.44, 7.28, 4.81, 23.70]),
    ("O13", [76.74, 60.00, 28.00, 255.00], [48.37, 49.00, 5.00, 75.00]),
    ("O14", [45.22, 44.74, 30.63, 57.74], [35.69, 34.91, 16.08, 64.48]),
    ("O15", [76.93, 78.72, 57.73, 92.72], [74.07, 75.00, 36.00, 97.00]),
    ("O16", [20.13, 20.00, 10.00, 30.00], [18.67, 19.00, 2.00, 29.00]),
];

fn district_stats(which: usize) -> Vec<FeatureStats> {
    WELL_STATS
        .iter()
        .map(|(sym, a, b)| {
            let s = if which == 0 { a } else { b };
            FeatureStats {
                symbol: sym.to_string(),
                mean: s[0],
                median: s[1],
                min: s[2],
                max: s[3],
            }
        })
        .collect()
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            label_threshold: 2.0e4,
            noise_sd: 1.0,
            default_concentration: 6.0,
            zero_mass: 0.6,
            signal: ["G1", "G13", "G15", "O3", "O16"]
                .iter()
                .map(|s| SignalTerm {
                    symbol: s.to_string(),
                    weight: 1.0,
                })
                .collect(),
            districts: vec![
                DistrictSpec {
                    name: "district_a".into(),
                    id_prefix: "A".into(),
                    n_samples: 72,
                    positive_rate: 25.0 / 72.0,
                    features: district_stats(0),
                },
                DistrictSpec {
                    name: "district_b".into(),
                    id_prefix: "B".into(),
                    n_samples: 212,
                    positive_rate: 144.0 / 212.0,
                    features: district_stats(1),
                },
            ],
        }
    }
}

impl SynthConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let c: SynthConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.districts.is_empty() {
            return Err(Error::Config("at least one district is required".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config("noise_sd must be nonnegative".into()));
        }
        if !(self.default_concentration > 0.0) || !(0.5..1.0).contains(&self.zero_mass) {
            return Err(Error::Config("invalid concentration or zero_mass".into()));
        }
        let symbols: Vec<&str> = self.districts[0].features.iter().map(|f| f.symbol.as_str()).collect();
        for d in &self.districts {
            if d.n_samples < 2 {
                return Err(Error::Config(format!("{}: need at least two samples", d.name)));
            }
            if !(d.positive_rate > 0.0 && d.positive_rate < 1.0) {
                return Err(Error::Config(format!("{}: positive_rate must lie in (0, 1)", d.name)));
            }
            let syms: Vec<&str> = d.features.iter().map(|f| f.symbol.as_str()).collect();
            if syms != symbols {
                return Err(Error::Config(format!("{}: feature list differs between districts", d.name)));
            }
            for f in &d.features {
                if !(f.min <= f.median && f.median <= f.max && f.min <= f.mean && f.mean <= f.max) {
                    return Err(Error::Config(format!(
                        "{}: {} statistics violate min ≤ median, mean ≤ max",
                        d.name, f.symbol
                    )));
                }
            }
        }
        for s in &self.signal {
            if !symbols.contains(&s.symbol.as_str()) {
                return Err(Error::Config(format!("signal feature {} is not generated", s.symbol)));
            }
        }
        Ok(())
    }
}

/// Marginal law of one generated feature on `[min, max]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Marginal {
    Constant(f64),
    /// `min + (max − min) · Beta(alpha, beta)`.
    ScaledBeta { min: f64, max: f64, alpha: f64, beta: f64 },
    /// Point mass `zero_mass` at `min`, scaled Beta tail otherwise.
    ZeroInflated { min: f64, max: f64, zero_mass: f64, alpha: f64, beta: f64 },
}

/// Concentration from the mean/median relation `median ≈ (α − ⅓)/(κ − ⅔)`,
/// or `None` when the statistics are inconsistent with that approximation.
fn concentration_from_median(m: f64, md: f64) -> Option<f64> {
    if (md - m).abs() < 1e-12 {
        return None;
    }
    let k = (2.0 * md - 1.0) / (3.0 * (md - m));
    let ok = k.is_finite() && k * m > 1.0 && k * (1.0 - m) > 1.0 && k < 500.0;
    ok.then_some(k)
}

impl Marginal {
    pub fn fit(stats: &FeatureStats, default_concentration: f64, zero_mass: f64) -> Marginal {
        let span = stats.max - stats.min;
        if span <= 0.0 {
            return Marginal::Constant(stats.min);
        }
        let m = ((stats.mean - stats.min) / span).clamp(1e-3, 1.0 - 1e-3);
        if stats.median <= stats.min && stats.mean > stats.min {
            // Shrink the point mass if the tail would otherwise need a mean
            // beyond 90% of the range.
            let pi = zero_mass.min(1.0 - m / 0.9).max(0.5);
            let mt = (m / (1.0 - pi)).clamp(1e-3, 0.9);
            return Marginal::ZeroInflated {
                min: stats.min,
                max: stats.max,
                zero_mass: pi,
                alpha: default_concentration * mt,
                beta: default_concentration * (1.0 - mt),
            };
        }
        let md = ((stats.median - stats.min) / span).clamp(0.0, 1.0);
        let k = concentration_from_median(m, md).unwrap_or(default_concentration);
        Marginal::ScaledBeta {
            min: stats.min,
            max: stats.max,
            alpha: k * m,
            beta: k * (1.0 - m),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Constant(c) => c,
            Marginal::ScaledBeta { min, max, alpha, beta } => min + (max - min) * alpha / (alpha + beta),
            Marginal::ZeroInflated {
                min,
                max,
                zero_mass,
                alpha,
                beta,
            } => min + (1.0 - zero_mass) * (max - min) * alpha / (alpha + beta),
        }
    }

    /// Quantile function.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        let beta_q = |a: f64, b: f64, u: f64| -> Result<f64> {
            let d = Beta::new(a, b).map_err(|e| Error::Config(format!("Beta({a}, {b}): {e}")))?;
            Ok(d.inverse_cdf(u.clamp(0.0, 1.0)))
        };
        Ok(match *self {
            Marginal::Constant(c) => c,
            Marginal::ScaledBeta { min, max, alpha, beta } => min + (max - min) * beta_q(alpha, beta, u)?,
            Marginal::ZeroInflated {
                min,
                max,
                zero_mass,
                alpha,
                beta,
            } => {
                if u < zero_mass {
                    min
                } else {
                    min + (max - min) * beta_q(alpha, beta, (u - zero_mass) / (1.0 - zero_mass))?
                }
            }
        })
    }

    /// `n` draws by stratified inverse-CDF sampling: one uniform per
    /// equal-probability stratum, in shuffled order.
    pub fn sample_stratified(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        let (lo, hi) = (self.quantile(0.0)?, self.quantile(1.0)?);
        strata
            .into_iter()
            .map(|k| {
                let u = (k as f64 + rng.gen::<f64>()) / n as f64;
                Ok(self.quantile(u)?.clamp(lo, hi))
            })
            .collect()
    }
}

const NOISE_STREAM: u64 = 1 << 32;

/// Generates one labeled dataset per configured district.
pub fn synth_generate(config: &SynthConfig) -> Result<Vec<PartyDataset>> {
    config.validate()?;
    let schema = well_schema();
    let symbols: Vec<String> = config.districts[0].features.iter().map(|f| f.symbol.clone()).collect();
    let info: Vec<FeatureInfo> = symbols
        .iter()
        .map(|s| {
            schema
                .iter()
                .find(|f| &f.symbol == s)
                .cloned()
                .unwrap_or_else(|| FeatureInfo::plain(s.clone()))
        })
        .collect();

    let mut matrices = Vec::new();
    for (d, spec) in config.districts.iter().enumerate() {
        let mut m = Matrix::zeros(spec.n_samples, symbols.len());
        for (j, stats) in spec.features.iter().enumerate() {
            let marginal = Marginal::fit(stats, config.default_concentration, config.zero_mass);
            let mut rng = stream_rng(config.seed, (d as u64) << 16 | j as u64);
            for (i, v) in marginal.sample_stratified(spec.n_samples, &mut rng)?.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        matrices.push(m);
    }

    // Pooled standardization of the signal features across all districts.
    let mut terms = Vec::new();
    for s in &config.signal {
        let j = symbols.iter().position(|x| x == &s.symbol).expect("validated");
        let all: Vec<f64> = matrices.iter().flat_map(|m| m.column(j)).collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / all.len() as f64;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        terms.push((j, s.weight, mean, sd));
    }

    let mut out = Vec::new();
    for (d, (spec, m)) in config.districts.iter().zip(matrices).enumerate() {
        let mut rng = stream_rng(config.seed, NOISE_STREAM + d as u64);
        let score: Vec<f64> = (0..spec.n_samples)
            .map(|i| {
                let signal: f64 = terms.iter().map(|&(j, w, mu, sd)| w * (m.get(i, j) - mu) / sd).sum();
                let noise: f64 = rng.sample(StandardNormal);
                signal + config.noise_sd * noise
            })
            .collect();
        let intercept = calibrate_intercept(&score, spec)?;
        let labels = score
            .iter()
            .map(|&z| u8::from(config.label_threshold * (z + intercept).exp() >= config.label_threshold))
            .collect();
        let ids = (1..=spec.n_samples).map(|i| format!("{}-{i:03}", spec.id_prefix)).collect();
        out.push(PartyDataset::new(spec.name.clone(), ids, m, info.clone(), Some(labels))?);
    }
    Ok(out)
}

/// Log-scale intercept placing the threshold between the k-th and
/// (k+1)-th highest scores, where k is the target positive count.
fn calibrate_intercept(score: &[f64], spec: &DistrictSpec) -> Result<f64> {
    let n = score.len();
    let k = (spec.positive_rate * n as f64).round() as usize;
    if k == 0 || k == n {
        return Err(Error::Config(format!(
            "{}: positive rate {} is unreachable with {n} samples",
            spec.name, spec.positive_rate
        )));
    }
    let mut sorted = score.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted[k - 1] == sorted[k] {
        return Err(Error::Config(format!("{}: tied scores at the calibration cut", spec.name)));
    }
    Ok(-(sorted[k - 1] + sorted[k]) / 2.0)
}
