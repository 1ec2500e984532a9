use nalgebra::{DMatrix, DVector};

use super::{Potential, PotentialMeta};
use crate::error::{Error, Result};

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood of logistic regression without bias,
/// `(1/n) Σ [log(1 + e^{x_iᵀw}) - y_i x_iᵀw]`.
#[derive(Clone, Debug)]
pub struct LogisticLoss {
    features: DMatrix<f64>,
    labels: DVector<f64>,
}

pub fn logistic_loss(features: DMatrix<f64>, labels: &[f64]) -> Result<LogisticLoss> {
    if features.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature rows but {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    if features.nrows() == 0 {
        return Err(Error::Shape("empty design matrix".into()));
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
        return Err(Error::Domain(format!("labels must be 0 or 1, found {bad}")));
    }
    Ok(LogisticLoss {
        features,
        labels: DVector::from_column_slice(labels),
    })
}

impl LogisticLoss {
    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        self.labels.as_slice()
    }

    fn logits(&self, w: &[f64]) -> DVector<f64> {
        &self.features * DVector::from_column_slice(w)
    }
}

impl Potential for LogisticLoss {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let z = self.logits(w);
        let total: f64 = z.iter().zip(self.labels.iter()).map(|(&z, &y)| softplus(z) - y * z).sum();
        total / self.n_samples() as f64
    }

    /// (1/n) Xᵀ(sigmoid(Xw) - y)
    fn grad_into(&self, w: &[f64], out: &mut [f64]) -> bool {
        let mut r = self.logits(w);
        for (ri, &y) in r.iter_mut().zip(self.labels.iter()) {
            *ri = sigmoid(*ri) - y;
        }
        let g = self.features.tr_mul(&r) / self.n_samples() as f64;
        out.copy_from_slice(g.as_slice());
        true
    }

    fn has_grad(&self) -> bool {
        true
    }

    fn meta(&self) -> PotentialMeta {
        // Hessian ≤ (1/4n) XᵀX
        let xtx = self.features.tr_mul(&self.features) / self.n_samples() as f64;
        let top = xtx.symmetric_eigen().eigenvalues.max();
        PotentialMeta {
            smoothness: Some(0.25 * top),
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::potentials::testutil::assert_grad_matches_fd;

    fn random_problem(n: usize, d: usize, seed: u64) -> LogisticLoss {
        let mut rng = RngStream::new(seed, 0);
        let x = DMatrix::from_fn(n, d, |_, _| rng.normal());
        let y: Vec<f64> = (0..n).map(|_| if rng.uniform() < 0.5 { 1.0 } else { 0.0 }).collect();
        logistic_loss(x, &y).unwrap()
    }

    #[test]
    fn loss_at_zero_is_log2() {
        for seed in 0..3 {
            let l = random_problem(40, 5, seed);
            assert!((l.value(&[0.0; 5]) - 2f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let l = random_problem(60, 4, 11);
        let mut rng = RngStream::new(12, 0);
        for _ in 0..20 {
            let w: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
            assert_grad_matches_fd(&l, &w, 1e-6);
        }
    }

    #[test]
    fn perfect_classification_limit() {
        let l = logistic_loss(DMatrix::from_element(1, 1, 1.0), &[1.0]).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..30 {
            let v = l.value(&[k as f64]);
            assert!(v < prev && v >= 0.0);
            prev = v;
        }
        assert!(prev < 1e-12);
        assert!(l.value(&[800.0]) >= 0.0);
        // no overflow far out
        assert!(l.value(&[-1e6]).is_finite());
    }

    #[test]
    fn shape_and_label_errors() {
        let x = DMatrix::from_element(3, 2, 1.0);
        assert!(matches!(logistic_loss(x.clone(), &[1.0, 0.0]), Err(Error::Shape(_))));
        assert!(matches!(logistic_loss(x, &[1.0, 0.0, 2.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
