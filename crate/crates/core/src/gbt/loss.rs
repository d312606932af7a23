use serde::{Deserialize, Serialize};

const P_CLAMP: f64 = 1e-15;

/// First- and second-order gradient of the loss at one sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GradPair {
    pub g: f64,
    pub h: f64,
}

pub fn sigmoid(margin: f64) -> f64 {
    if margin >= 0.0 {
        1.0 / (1.0 + (-margin).exp())
    } else {
        let e = margin.exp();
        e / (1.0 + e)
    }
}

/// Logistic-loss gradients: `g = p − y`, `h = p(1 − p)` with `p` clamped
/// away from 0 and 1.
pub fn logistic_gradients(y: u8, margin: f64) -> GradPair {
    let p = sigmoid(margin).clamp(P_CLAMP, 1.0 - P_CLAMP);
    GradPair {
        g: p - y as f64,
        h: p * (1.0 - p),
    }
}

/// Mean negative log-likelihood of labels under margins.
pub fn logistic_loss(labels: &[u8], margins: &[f64]) -> f64 {
    let total: f64 = labels
        .iter()
        .zip(margins)
        .map(|(&y, &m)| {
            let p = sigmoid(m).clamp(P_CLAMP, 1.0 - P_CLAMP);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / labels.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_margin() {
        assert_eq!(logistic_gradients(1, 0.0), GradPair { g: -0.5, h: 0.25 });
        assert_eq!(logistic_gradients(0, 0.0), GradPair { g: 0.5, h: 0.25 });
    }

    #[test]
    fn saturated_margin() {
        let gp = logistic_gradients(1, 50.0);
        assert!(gp.g.abs() < 1e-12 && gp.h > 0.0 && gp.h < 1e-12);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(0.3) + sigmoid(-0.3) - 1.0).abs() < 1e-15);
    }
}
