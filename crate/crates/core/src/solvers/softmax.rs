use crate::error::{Error, Result};
use crate::weights::WeightMatrix;

pub const DEFAULT_N_D: f64 = 32.0;

/// Row-wise `softmax(logits / √n_d)` with max subtraction.
pub fn softmax_rows(logits: &[f64], rows: usize, cols: usize, n_d: f64) -> Vec<f64> {
    let inv = 1.0 / n_d.sqrt();
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        let z = &logits[i * cols..(i + 1) * cols];
        let o = &mut out[i * cols..(i + 1) * cols];
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (oj, zj) in o.iter_mut().zip(z) {
            *oj = ((zj - m) * inv).exp();
            sum += *oj;
        }
        for oj in o.iter_mut() {
            *oj /= sum;
        }
    }
    out
}

/// Logit matrix and the weights it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinningWeights {
    logits: Vec<f64>,
    weights: WeightMatrix,
    n_d: f64,
}

impl SkinningWeights {
    pub fn from_logits(rows: usize, cols: usize, logits: Vec<f64>, n_d: f64) -> Result<Self> {
        if logits.len() != rows * cols {
            return Err(Error::size("logit count", rows * cols, logits.len()));
        }
        if cols == 0 {
            return Err(Error::ShapeMismatch("skinning weights need at least one joint".into()));
        }
        if let Some(i) = logits.iter().position(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!("logit {i} is not finite")));
        }
        if !(n_d > 0.0) {
            return Err(Error::InvalidConfig(format!("n_d must be positive, got {n_d}")));
        }
        let weights = WeightMatrix::from_flat(rows, cols, softmax_rows(&logits, rows, cols, n_d))?;
        Ok(SkinningWeights { logits, weights, n_d })
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn n_d(&self) -> f64 {
        self.n_d
    }

    pub fn into_weights(self) -> WeightMatrix {
        self.weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits() {
        let w = softmax_rows(&[3.0, 3.0, 3.0, 3.0], 1, 4, 32.0);
        assert!(w.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn temperature() {
        let w = softmax_rows(&[32f64.sqrt(), 0.0], 1, 2, 32.0);
        let e = std::f64::consts::E;
        assert!((w[0] - e / (e + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SkinningWeights::from_logits(1, 2, vec![0.0], 32.0).is_err());
        assert!(SkinningWeights::from_logits(1, 1, vec![f64::NAN], 32.0).is_err());
    }

    proptest! {
        #[test]
        fn rows_stay_on_simplex(logits in prop::collection::vec(-50.0f64..50.0, 1..40), cols in 1usize..6) {
            let rows = logits.len() / cols;
            prop_assume!(rows > 0);
            let z = &logits[..rows * cols];
            let sw = SkinningWeights::from_logits(rows, cols, z.to_vec(), 32.0).unwrap();
            for r in sw.weights().rows() {
                let s: f64 = r.iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
                prop_assert!(r.iter().all(|v| v.is_finite() && *v > 0.0));
            }
            let again = softmax_rows(sw.logits(), rows, cols, 32.0);
            prop_assert_eq!(again.as_slice(), sw.weights().as_slice());
        }
    }
}
