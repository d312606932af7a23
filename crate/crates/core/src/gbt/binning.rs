use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};

/// Equal-width boundaries for one feature: `n_bins − 1` nondecreasing
/// thresholds. A value `x` falls into bin `b` = number of thresholds `< x`,
/// so `bin(x) ≤ b` exactly when `x ≤ thresholds[b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinBoundaries {
    pub feature: usize,
    thresholds: Vec<f64>,
}

impl BinBoundaries {
    pub fn from_range(feature: usize, min: f64, max: f64, n_bins: usize) -> Self {
        assert!(n_bins >= 2, "need at least two bins");
        let span = max - min;
        let thresholds = (1..n_bins)
            .map(|k| min + span * k as f64 / n_bins as f64)
            .collect();
        BinBoundaries {
            feature,
            thresholds,
        }
    }

    /// Boundaries received from elsewhere; must be finite and nondecreasing.
    pub fn from_thresholds(feature: usize, thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::InvalidInput("need at least one threshold".into()));
        }
        if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput(format!(
                "thresholds of feature {feature} must be finite and nondecreasing"
            )));
        }
        Ok(BinBoundaries {
            feature,
            thresholds,
        })
    }

    /// Equal-width boundaries over the column's `[min, max]`.
    pub fn compute(feature: usize, column: &[f64], n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::InvalidInput("max_bin must be at least 2".into()));
        }
        let (min, max) = column_range(column.iter().copied())
            .ok_or_else(|| Error::InvalidInput("cannot bin an empty column".into()))?;
        Ok(Self::from_range(feature, min, max, n_bins))
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn n_bins(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn bin(&self, x: f64) -> usize {
        self.thresholds.partition_point(|&t| t < x)
    }

    pub fn threshold(&self, bin: usize) -> f64 {
        self.thresholds[bin]
    }
}

pub fn column_range(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    values.into_iter().fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Boundaries for every column of `matrix`, restricted to `rows`.
pub fn boundaries_over(matrix: &Matrix, rows: &[usize], n_bins: usize) -> Result<Vec<BinBoundaries>> {
    (0..matrix.n_cols())
        .map(|j| {
            let (lo, hi) = column_range(rows.iter().map(|&i| matrix.get(i, j)))
                .ok_or_else(|| Error::InvalidInput("cannot bin an empty sample set".into()))?;
            Ok(BinBoundaries::from_range(j, lo, hi, n_bins))
        })
        .collect()
}

/// Bin indices for a matrix, stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedMatrix {
    n_rows: usize,
    n_features: usize,
    n_bins: usize,
    bins: Vec<u16>,
}

impl BinnedMatrix {
    pub fn new(matrix: &Matrix, boundaries: &[BinBoundaries]) -> Result<Self> {
        if boundaries.len() != matrix.n_cols() {
            return Err(Error::InvalidInput(format!(
                "{} boundary sets for {} features",
                boundaries.len(),
                matrix.n_cols()
            )));
        }
        let n_bins = boundaries.first().map_or(2, BinBoundaries::n_bins);
        if boundaries.iter().any(|b| b.n_bins() != n_bins) {
            return Err(Error::InvalidInput("features disagree on bin count".into()));
        }
        let n_rows = matrix.n_rows();
        let mut bins = Vec::with_capacity(n_rows * boundaries.len());
        for (j, b) in boundaries.iter().enumerate() {
            bins.extend((0..n_rows).map(|i| b.bin(matrix.get(i, j)) as u16));
        }
        Ok(BinnedMatrix {
            n_rows,
            n_features: boundaries.len(),
            n_bins,
            bins,
        })
    }

    pub fn from_raw(n_rows: usize, n_features: usize, n_bins: usize, bins: Vec<u16>) -> Result<Self> {
        if bins.len() != n_rows * n_features || bins.iter().any(|&b| b as usize >= n_bins) {
            return Err(Error::InvalidInput("bin indices out of range".into()));
        }
        Ok(BinnedMatrix {
            n_rows,
            n_features,
            n_bins,
            bins,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn get(&self, row: usize, feature: usize) -> usize {
        self.bins[feature * self.n_rows + row] as usize
    }

    pub fn feature_bins(&self, feature: usize) -> &[u16] {
        &self.bins[feature * self.n_rows..(feature + 1) * self.n_rows]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_for_two_bins() {
        let b = BinBoundaries::compute(0, &[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(b.thresholds(), &[1.5]);
        assert_eq!(b.bin(1.5), 0);
        assert_eq!(b.bin(1.6), 1);
    }

    #[test]
    fn five_bins_over_ten() {
        let b = BinBoundaries::compute(0, &[0.0, 10.0, 3.0], 5).unwrap();
        assert_eq!(b.thresholds(), &[2.0, 4.0, 6.0, 8.0]);
        assert_eq!(b.bin(0.0), 0);
        assert_eq!(b.bin(10.0), 4);
        assert_eq!(b.bin(4.0), 1);
    }

    #[test]
    fn constant_column_single_bin() {
        let b = BinBoundaries::compute(0, &[7.0; 5], 8).unwrap();
        assert!([7.0, 7.0].iter().all(|&x| b.bin(x) == 0));
        assert_eq!(b.n_bins(), 8);
    }

    #[test]
    fn errors() {
        assert!(BinBoundaries::compute(0, &[], 4).is_err());
        assert!(BinBoundaries::compute(0, &[1.0], 1).is_err());
    }

    #[test]
    fn bin_matches_threshold_rule() {
        let b = BinBoundaries::from_range(0, -3.3, 17.9, 13);
        for k in 0..500 {
            let x = -4.0 + k as f64 * 0.047;
            let bin = b.bin(x);
            assert!(bin < b.n_bins());
            for (t, &thr) in b.thresholds().iter().enumerate() {
                assert_eq!(bin <= t, x <= thr);
            }
        }
    }
}
