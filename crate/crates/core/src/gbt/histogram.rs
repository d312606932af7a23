use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;
use super::loss::GradPair;
use crate::error::{Error, Result};

/// Gradient sum, hessian sum and sample count of one histogram slot or node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub g: f64,
    pub h: f64,
    pub count: u64,
}

impl BinStats {
    pub fn of(pairs: impl IntoIterator<Item = GradPair>) -> Self {
        pairs.into_iter().fold(BinStats::default(), |mut acc, p| {
            acc.push(p);
            acc
        })
    }

    pub fn push(&mut self, p: GradPair) {
        self.g += p.g;
        self.h += p.h;
        self.count += 1;
    }
}

impl Add for BinStats {
    type Output = BinStats;
    fn add(self, o: BinStats) -> BinStats {
        BinStats {
            g: self.g + o.g,
            h: self.h + o.h,
            count: self.count + o.count,
        }
    }
}

impl AddAssign for BinStats {
    fn add_assign(&mut self, o: BinStats) {
        *self = *self + o;
    }
}

impl Sub for BinStats {
    type Output = BinStats;
    /// Counts saturate at zero; use [`GradHistogram::subtract`] for a
    /// checked slot-wise difference.
    fn sub(self, o: BinStats) -> BinStats {
        BinStats {
            g: self.g - o.g,
            h: self.h - o.h,
            count: self.count.saturating_sub(o.count),
        }
    }
}

/// Per-feature, per-bin gradient statistics for one tree node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradHistogram {
    n_features: usize,
    n_bins: usize,
    slots: Vec<BinStats>,
}

impl GradHistogram {
    pub fn zeros(n_features: usize, n_bins: usize) -> Self {
        GradHistogram {
            n_features,
            n_bins,
            slots: vec![BinStats::default(); n_features * n_bins],
        }
    }

    pub fn from_slots(n_features: usize, n_bins: usize, slots: Vec<BinStats>) -> Result<Self> {
        if slots.len() != n_features * n_bins {
            return Err(Error::InvalidInput(format!(
                "{} slots for a {n_features}×{n_bins} histogram",
                slots.len()
            )));
        }
        Ok(GradHistogram {
            n_features,
            n_bins,
            slots,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn slots(&self) -> &[BinStats] {
        &self.slots
    }

    pub fn feature(&self, f: usize) -> &[BinStats] {
        &self.slots[f * self.n_bins..(f + 1) * self.n_bins]
    }

    pub fn slot(&self, f: usize, b: usize) -> BinStats {
        self.slots[f * self.n_bins + b]
    }

    pub fn slot_mut(&mut self, f: usize, b: usize) -> &mut BinStats {
        &mut self.slots[f * self.n_bins + b]
    }

    /// Node totals, read off the first feature's bins.
    pub fn totals(&self) -> BinStats {
        if self.n_features == 0 {
            return BinStats::default();
        }
        self.feature(0).iter().fold(BinStats::default(), |a, &s| a + s)
    }

    fn check_shape(&self, other: &GradHistogram) -> Result<()> {
        if self.n_features != other.n_features || self.n_bins != other.n_bins {
            return Err(Error::Consistency(format!(
                "histogram shapes differ: {}×{} vs {}×{}",
                self.n_features, self.n_bins, other.n_features, other.n_bins
            )));
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &GradHistogram) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            *a += *b;
        }
        Ok(())
    }

    /// Slot-wise `self − child`; the sibling of `child` within this node.
    pub fn subtract(&self, child: &GradHistogram) -> Result<GradHistogram> {
        self.check_shape(child)?;
        let mut slots = Vec::with_capacity(self.slots.len());
        for (i, (p, c)) in self.slots.iter().zip(&child.slots).enumerate() {
            if c.count > p.count {
                return Err(Error::Consistency(format!(
                    "negative count in slot (feature {}, bin {})",
                    i / self.n_bins,
                    i % self.n_bins
                )));
            }
            slots.push(*p - *c);
        }
        Ok(GradHistogram {
            n_features: self.n_features,
            n_bins: self.n_bins,
            slots,
        })
    }

    /// Places the features of `other` after those of `self`.
    pub fn concat_features(&self, other: &GradHistogram) -> Result<GradHistogram> {
        if self.n_features > 0 && other.n_features > 0 && self.n_bins != other.n_bins {
            return Err(Error::Consistency("bin counts differ".into()));
        }
        let n_bins = if self.n_features > 0 { self.n_bins } else { other.n_bins };
        let mut slots = self.slots.clone();
        slots.extend_from_slice(&other.slots);
        Ok(GradHistogram {
            n_features: self.n_features + other.n_features,
            n_bins,
            slots,
        })
    }
}

/// Accumulates `(G, H, count)` per feature and bin over `samples`.
pub fn build_histogram(bins: &BinnedMatrix, grads: &[GradPair], samples: &[usize]) -> GradHistogram {
    let mut hist = GradHistogram::zeros(bins.n_features(), bins.n_bins());
    for f in 0..bins.n_features() {
        let col = bins.feature_bins(f);
        let base = f * bins.n_bins();
        for &i in samples {
            hist.slots[base + col[i] as usize].push(grads[i]);
        }
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_feature(bins: Vec<u16>, n_bins: usize) -> BinnedMatrix {
        BinnedMatrix::from_raw(bins.len(), 1, n_bins, bins).unwrap()
    }

    #[test]
    fn empty_sample_set() {
        let m = one_feature(vec![0, 1, 2], 4);
        let grads = vec![GradPair { g: 1.0, h: 1.0 }; 3];
        let h = build_histogram(&m, &grads, &[]);
        assert!(h.slots().iter().all(|s| *s == BinStats::default()));
    }

    #[test]
    fn single_sample_lands_in_its_bin() {
        let m = one_feature(vec![3], 5);
        let h = build_histogram(&m, &[GradPair { g: -0.5, h: 0.25 }], &[0]);
        for b in 0..5 {
            let s = h.slot(0, b);
            if b == 3 {
                assert_eq!(s, BinStats { g: -0.5, h: 0.25, count: 1 });
            } else {
                assert_eq!(s, BinStats::default());
            }
        }
    }

    #[test]
    fn subtraction_rejects_non_subset() {
        let m = one_feature(vec![0, 1], 2);
        let grads = vec![GradPair { g: 1.0, h: 1.0 }; 2];
        let parent = build_histogram(&m, &grads, &[0]);
        let child = build_histogram(&m, &grads, &[1]);
        assert!(parent.subtract(&child).is_err());
        let zero = parent.subtract(&parent).unwrap();
        assert_eq!(zero.totals(), BinStats::default());
        assert_eq!(parent.subtract(&GradHistogram::zeros(1, 2)).unwrap(), parent);
    }
}
