use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbt::GbtParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Continuous,
    Integer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub low: f64,
    pub high: f64,
}

impl ParamSpec {
    pub fn new(name: &str, kind: ParamKind, low: f64, high: f64) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind,
            low,
            high,
        }
    }

    /// Clamps into bounds, rounding integers half away from zero first.
    pub fn snap(&self, v: f64) -> f64 {
        let v = match self.kind {
            ParamKind::Continuous => v,
            ParamKind::Integer => v.round(),
        };
        v.clamp(self.low, self.high)
    }

    pub fn to_unit(&self, v: f64) -> f64 {
        if self.high > self.low {
            (v - self.low) / (self.high - self.low)
        } else {
            0.0
        }
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        self.low + u.clamp(0.0, 1.0) * (self.high - self.low)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<ParamSpec>,
}

/// Names accepted by [`SearchSpace::apply`].
pub const TUNABLE: [&str; 8] = [
    "learning_rate",
    "max_bin",
    "max_depth",
    "min_child_weight",
    "n_estimators",
    "reg_alpha",
    "reg_lambda",
    "subsample",
];

impl Default for SearchSpace {
    /// The eight tuned booster hyperparameters and their adjustment ranges.
    fn default() -> Self {
        use ParamKind::*;
        SearchSpace {
            params: vec![
                ParamSpec::new("learning_rate", Continuous, 0.01, 0.5),
                ParamSpec::new("max_bin", Integer, 8.0, 512.0),
                ParamSpec::new("max_depth", Integer, 0.0, 10.0),
                ParamSpec::new("min_child_weight", Continuous, 0.0, 10.0),
                ParamSpec::new("n_estimators", Integer, 20.0, 100.0),
                ParamSpec::new("reg_alpha", Continuous, 0.0, 1.0),
                ParamSpec::new("reg_lambda", Continuous, 0.0, 1.0),
                ParamSpec::new("subsample", Continuous, 0.01, 1.0),
            ],
        }
    }
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::Config("empty search space".into()));
        }
        for p in &params {
            if !(p.low.is_finite() && p.high.is_finite() && p.low <= p.high) {
                return Err(Error::Config(format!("bad bounds for {}", p.name)));
            }
        }
        Ok(SearchSpace { params })
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn snap(&self, x: &[f64]) -> Vec<f64> {
        self.params.iter().zip(x).map(|(p, &v)| p.snap(v)).collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.params.iter().zip(x).map(|(p, &v)| p.to_unit(v)).collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.params.iter().zip(u).map(|(p, &v)| p.from_unit(v)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self.params.iter().zip(x).all(|(p, &v)| {
                v >= p.low && v <= p.high && (p.kind == ParamKind::Continuous || v.fract() == 0.0)
            })
    }

    /// Values of `base` at this space's coordinates.
    pub fn read(&self, base: &GbtParams) -> Result<Vec<f64>> {
        self.params
            .iter()
            .map(|p| {
                Ok(match p.name.as_str() {
                    "learning_rate" => base.learning_rate,
                    "max_bin" => base.max_bin as f64,
                    "max_depth" => base.max_depth as f64,
                    "min_child_weight" => base.min_child_weight,
                    "n_estimators" => base.n_estimators as f64,
                    "reg_alpha" => base.reg_alpha,
                    "reg_lambda" => base.reg_lambda,
                    "subsample" => base.subsample,
                    "gamma" => base.gamma,
                    other => return Err(Error::Config(format!("unknown hyperparameter {other}"))),
                })
            })
            .collect()
    }

    /// `base` with the coordinates of `x` written in (snapped first).
    pub fn apply(&self, base: &GbtParams, x: &[f64]) -> Result<GbtParams> {
        let mut p = base.clone();
        for (spec, v) in self.params.iter().zip(self.snap(x)) {
            match spec.name.as_str() {
                "learning_rate" => p.learning_rate = v,
                "max_bin" => p.max_bin = v as usize,
                "max_depth" => p.max_depth = v as usize,
                "min_child_weight" => p.min_child_weight = v,
                "n_estimators" => p.n_estimators = v as usize,
                "reg_alpha" => p.reg_alpha = v,
                "reg_lambda" => p.reg_lambda = v,
                "subsample" => p.subsample = v,
                "gamma" => p.gamma = v,
                other => return Err(Error::Config(format!("unknown hyperparameter {other}"))),
            }
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_space_bounds() {
        let s = SearchSpace::default();
        assert_eq!(s.dim(), 8);
        assert_eq!(s.names(), TUNABLE.map(String::from).to_vec());
        let lr = &s.params[0];
        assert_eq!((lr.low, lr.high), (0.01, 0.5));
    }

    #[test]
    fn apply_rounds_integers_half_away_from_zero() {
        let s = SearchSpace::default();
        let x = [0.2, 100.5, 5.5, 1.0, 20.4, 0.0, 0.5, 2.0];
        let p = s.apply(&GbtParams::default(), &x).unwrap();
        assert_eq!(p.max_bin, 101);
        assert_eq!(p.max_depth, 6);
        assert_eq!(p.n_estimators, 20);
        assert_eq!(p.subsample, 1.0);
        assert_eq!(s.read(&p).unwrap()[1], 101.0);
    }
}
