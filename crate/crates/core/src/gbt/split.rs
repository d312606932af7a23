use serde::{Deserialize, Serialize};

use super::histogram::{BinStats, GradHistogram};
use super::params::GbtParams;
use crate::error::{Error, Result};

/// L1 shrinkage of a gradient sum: `sign(G) · max(|G| − α, 0)`.
pub fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if alpha <= 0.0 {
        g
    } else {
        g.signum() * (g.abs() - alpha).max(0.0)
    }
}

fn score(g: f64, h: f64, lambda: f64, alpha: f64) -> f64 {
    let denom = h + lambda;
    if denom <= 0.0 {
        0.0
    } else {
        let t = soft_threshold(g, alpha);
        t * t / denom
    }
}

/// Loss reduction of splitting a node into `(G_L, H_L)` and `(G_R, H_R)`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    split_gain_l1(gl, hl, gr, hr, lambda, gamma, 0.0)
}

pub fn split_gain_l1(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64, alpha: f64) -> f64 {
    0.5 * (score(gl, hl, lambda, alpha) + score(gr, hr, lambda, alpha)
        - score(gl + gr, hl + hr, lambda, alpha))
        - gamma
}

/// Optimal leaf weight `−G / (H + λ)`.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> Result<f64> {
    leaf_weight_l1(g, h, lambda, 0.0)
}

pub fn leaf_weight_l1(g: f64, h: f64, lambda: f64, alpha: f64) -> Result<f64> {
    let denom = h + lambda;
    if denom <= 0.0 {
        return Err(Error::DegenerateNode(format!(
            "H + λ = {denom} leaves the leaf weight undefined"
        )));
    }
    Ok(-soft_threshold(g, alpha) / denom)
}

/// Second-order objective of one leaf at weight `w`: `G·w + ½(H + λ)·w²`.
pub fn leaf_objective(g: f64, h: f64, lambda: f64, w: f64) -> f64 {
    g * w + 0.5 * (h + lambda) * w * w
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    /// Samples with bin index `≤ bin` go left.
    pub bin: usize,
    pub gain: f64,
    pub left: BinStats,
    pub right: BinStats,
}

/// Scans every feature and boundary of `hist` for the highest-gain split.
///
/// A candidate qualifies when both children are nonempty, each child's
/// hessian sum reaches `min_child_weight`, and its gain exceeds
/// `min_split_gain`. Ties keep the lowest feature, then the lowest bin.
pub fn find_best_split(hist: &GradHistogram, params: &GbtParams) -> Option<SplitCandidate> {
    let mut best: Option<SplitCandidate> = None;
    for f in 0..hist.n_features() {
        let bins = hist.feature(f);
        let total = bins.iter().fold(BinStats::default(), |a, &s| a + s);
        let mut left = BinStats::default();
        for (b, &slot) in bins.iter().enumerate().take(bins.len().saturating_sub(1)) {
            left += slot;
            let right = BinStats {
                g: total.g - left.g,
                h: total.h - left.h,
                count: total.count - left.count,
            };
            if left.count == 0 || right.count == 0 {
                continue;
            }
            if left.h < params.min_child_weight || right.h < params.min_child_weight {
                continue;
            }
            let gain = split_gain_l1(
                left.g,
                left.h,
                right.g,
                right.h,
                params.reg_lambda,
                params.gamma,
                params.reg_alpha,
            );
            if !(gain > params.min_split_gain) {
                continue;
            }
            if best.is_none_or(|c| gain > c.gain) {
                best = Some(SplitCandidate {
                    feature: f,
                    bin: b,
                    gain,
                    left,
                    right,
                });
            }
        }
    }
    best
}
