use nalgebra::{DMatrix, DVector};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const JITTER: f64 = 1e-6;

/// Squared-exponential kernel `exp(−‖a − b‖² / 2σ²)`.
pub fn rbf(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

pub fn kernel_matrix(xs: &[Vec<f64>], sigma: f64) -> DMatrix<f64> {
    let n = xs.len();
    DMatrix::from_fn(n, n, |i, j| rbf(&xs[i], &xs[j], sigma))
}

/// Zero-mean Gaussian-process posterior with an RBF kernel.
#[derive(Clone, Debug)]
pub struct GpSurrogate {
    xs: Vec<Vec<f64>>,
    sigma: f64,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    alpha: DVector<f64>,
}

impl GpSurrogate {
    pub fn fit(xs: Vec<Vec<f64>>, ys: &[f64], sigma: f64, jitter: f64) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::InvalidInput("GP needs matching, nonempty inputs and targets".into()));
        }
        let n = xs.len();
        let k = kernel_matrix(&xs, sigma) + DMatrix::identity(n, n) * jitter;
        let chol = k
            .cholesky()
            .ok_or_else(|| Error::Consistency("kernel matrix is not positive definite".into()))?;
        let alpha = chol.solve(&DVector::from_column_slice(ys));
        Ok(GpSurrogate { xs, sigma, chol, alpha })
    }

    /// Posterior mean and variance at `x`; tiny negative variances clamp to 0.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(self.xs.len(), self.xs.iter().map(|xi| rbf(xi, x, self.sigma)));
        let mean = k.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&k).expect("triangular solve");
        let var = (1.0 - v.dot(&v)).max(0.0);
        (mean, var)
    }
}

pub fn gp_fit(xs: Vec<Vec<f64>>, ys: &[f64]) -> Result<GpSurrogate> {
    GpSurrogate::fit(xs, ys, 1.0, JITTER)
}

pub const XI: f64 = 0.01;

/// Expected improvement over `best` for maximization.
pub fn expected_improvement(mean: f64, variance: f64, best: f64, xi: f64) -> f64 {
    let improve = mean - best - xi;
    let sd = variance.max(0.0).sqrt();
    if sd <= 0.0 {
        return improve.max(0.0);
    }
    let z = improve / sd;
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    (improve * n.cdf(z) + sd * n.pdf(z)).max(0.0)
}

pub fn ei_at(gp: &GpSurrogate, x: &[f64], best: f64) -> f64 {
    let (m, v) = gp.predict(x);
    expected_improvement(m, v, best, XI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_targets() {
        let xs = vec![vec![0.1], vec![0.5], vec![0.9]];
        let ys = [1.0, -0.5, 0.25];
        let gp = gp_fit(xs.clone(), &ys).unwrap();
        for (x, y) in xs.iter().zip(ys) {
            assert!((gp.predict(x).0 - y).abs() < 1e-4);
        }
        let near = gp.predict(&[0.5]).1;
        let far = gp.predict(&[5.0]).1;
        assert!(near <= far);
    }

    #[test]
    fn one_point_closed_form() {
        let gp = gp_fit(vec![vec![0.0, 0.0]], &[2.0]).unwrap();
        let d: f64 = 1.3;
        let (m, _) = gp.predict(&[d, 0.0]);
        let expect = (-d * d / 2.0).exp() * 2.0 / (1.0 + JITTER);
        assert!((m - expect).abs() < 1e-12);
    }

    #[test]
    fn duplicate_points_are_absorbed_by_jitter() {
        assert!(gp_fit(vec![vec![0.3], vec![0.3]], &[1.0, 1.0]).is_ok());
    }

    #[test]
    fn ei_edge_cases() {
        assert_eq!(expected_improvement(-1.0, 0.0, 0.0, XI), 0.0);
        let mut prev = 0.0;
        for k in 0..100 {
            let e = expected_improvement(-2.0 + k as f64 * 0.04, 0.3, 0.0, XI);
            assert!(e >= prev);
            prev = e;
        }
    }
}
