use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gp::{ei_at, gp_fit};
use super::space::SearchSpace;
use crate::error::{Error, Result};
use crate::gbt::stream_rng;

pub const INITIAL_DESIGN: usize = 5;
pub const EI_CANDIDATES: usize = 1024;
pub const DEFAULT_BUDGET: usize = 30;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

/// First `n` Halton points in `[0,1)^dim` under a seeded random shift
/// (each coordinate shifted modulo 1).
pub fn shifted_halton(n: usize, dim: usize, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
    if dim > PRIMES.len() {
        return Err(Error::Config(format!("Halton design supports at most {} dimensions", PRIMES.len())));
    }
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    Ok((1..=n as u64)
        .map(|i| {
            (0..dim)
                .map(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract())
                .collect()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Direct,
    Aggregated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunedParams {
    pub names: Vec<String>,
    /// In bounds, integers rounded.
    pub values: Vec<f64>,
    /// Before rounding; equals `values` for direct results.
    pub raw: Vec<f64>,
    /// Objective at `values`; absent for aggregated results.
    pub score: Option<f64>,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    /// `None` when the objective failed at `x`.
    pub y: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoResult {
    pub best: TunedParams,
    pub history: Vec<Observation>,
}

/// Maximizes `objective` over `space` with a GP surrogate and expected
/// improvement. Targets are standardized before each fit; failed
/// evaluations stay in the history and are fitted at the worst finite value.
pub fn bo_optimize<F>(mut objective: F, space: &SearchSpace, budget: usize, seed: u64) -> Result<BoResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if budget < INITIAL_DESIGN {
        return Err(Error::Config(format!("budget {budget} is below the initial design of {INITIAL_DESIGN}")));
    }
    let mut rng = stream_rng(seed, 0xB0);
    let dim = space.dim();
    let mut units: Vec<Vec<f64>> = Vec::new();
    let mut history: Vec<Observation> = Vec::new();

    let mut evaluate = |u: Vec<f64>, units: &mut Vec<Vec<f64>>, history: &mut Vec<Observation>| {
        let x = space.snap(&space.from_unit(&u));
        let y = objective(&x).ok().filter(|v| v.is_finite());
        units.push(space.to_unit(&x));
        history.push(Observation { x, y });
    };

    for u in shifted_halton(INITIAL_DESIGN, dim, &mut rng)? {
        evaluate(u, &mut units, &mut history);
    }
    while history.len() < budget {
        let ys = fitted_targets(&history);
        let gp = gp_fit(units.clone(), &ys)?;
        let best = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut choice: Option<(f64, Vec<f64>)> = None;
        for _ in 0..EI_CANDIDATES {
            let u: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            let e = ei_at(&gp, &u, best);
            if choice.as_ref().is_none_or(|(b, _)| e > *b) {
                choice = Some((e, u));
            }
        }
        let (_, u) = choice.expect("at least one candidate");
        evaluate(u, &mut units, &mut history);
    }

    let mut best_i = None;
    for (i, o) in history.iter().enumerate() {
        if let Some(y) = o.y {
            if best_i.is_none_or(|b: usize| y > history[b].y.expect("finite best")) {
                best_i = Some(i);
            }
        }
    }
    let b = best_i.ok_or_else(|| Error::InvalidInput("objective failed at every evaluated point".into()))?;
    let best = TunedParams {
        names: space.names(),
        values: history[b].x.clone(),
        raw: history[b].x.clone(),
        score: history[b].y,
        provenance: Provenance::Direct,
    };
    Ok(BoResult { best, history })
}

fn fitted_targets(history: &[Observation]) -> Vec<f64> {
    let finite: Vec<f64> = history.iter().filter_map(|o| o.y).collect();
    if finite.is_empty() {
        return vec![0.0; history.len()];
    }
    let worst = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let ys: Vec<f64> = history.iter().map(|o| o.y.unwrap_or(worst)).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    ys.iter().map(|y| (y - mean) / sd).collect()
}
