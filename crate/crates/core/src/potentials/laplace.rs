use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{Potential, PotentialMeta};
use crate::error::{Error, Result};
use crate::numerics::special::{bessel_k_ratio, ln_bessel_k};

/// `U(x) = |x - loc| / scale`, the univariate Laplace potential without its
/// normalizing constant (so `U(loc) = 0`).
#[derive(Clone, Debug)]
pub struct Laplace1d {
    pub loc: f64,
    pub scale: f64,
}

pub fn laplace1d_potential(scale: f64) -> Result<Laplace1d> {
    if !(scale > 0.0) {
        return Err(Error::Domain(format!("Laplace scale must be positive, got {scale}")));
    }
    Ok(Laplace1d { loc: 0.0, scale })
}

impl Potential for Laplace1d {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        (x[0] - self.loc).abs() / self.scale
    }

    /// sign(x - loc)/scale, with 0 at the kink.
    fn grad_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        let t = x[0] - self.loc;
        out[0] = if t == 0.0 { 0.0 } else { t.signum() / self.scale };
        true
    }

    fn has_grad(&self) -> bool {
        true
    }

    fn meta(&self) -> PotentialMeta {
        PotentialMeta {
            lipschitz_k: Some(1.0 / self.scale),
            ..Default::default()
        }
    }
}

/// Radii below this are evaluated at the floor; the density has an
/// integrable pole at the origin for d ≥ 2.
const MIN_RADIUS: f64 = 1e-12;

/// Negative log-density of the centered symmetric multivariate Laplace
/// distribution with covariance `Σ`, normalizing constant included.
#[derive(Clone, Debug)]
pub struct MultivariateLaplace {
    d: usize,
    sigma: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_norm: f64,
    order: f64,
}

/// Builds the multivariate Laplace potential; fails unless `sigma` is
/// symmetric positive definite.
pub fn multivariate_laplace_potential(sigma: DMatrix<f64>) -> Result<MultivariateLaplace> {
    let d = sigma.nrows();
    if d == 0 || sigma.ncols() != d {
        return Err(Error::Shape(format!(
            "covariance must be square and non-empty, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    if (&sigma - sigma.transpose()).abs().max() > 1e-12 * sigma.abs().max().max(1.0) {
        return Err(Error::Domain("covariance is not symmetric".into()));
    }
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("covariance is not positive definite".into()))?;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let precision = chol.inverse();
    let df = d as f64;
    let log_norm = 2f64.ln() - 0.5 * df * (2.0 * PI).ln() - 0.5 * log_det;
    Ok(MultivariateLaplace {
        d,
        sigma,
        precision,
        log_norm,
        order: (2.0 - df) / 2.0,
    })
}

impl MultivariateLaplace {
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Laplace scale of marginal `j`: the marginal is univariate Laplace
    /// with variance `Σ_jj`, i.e. scale `√(Σ_jj / 2)`.
    pub fn marginal_scale(&self, j: usize) -> f64 {
        (self.sigma[(j, j)] / 2.0).sqrt()
    }

    fn quad_form(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        (v.transpose() * &self.precision * &v)[(0, 0)]
    }

    /// General-d formula with `K_v`, `v = (2 - d)/2`.
    pub fn value_general(&self, x: &[f64]) -> f64 {
        let q = self.quad_form(x);
        let r = (2.0 * q).sqrt().max(MIN_RADIUS);
        let q = 0.5 * r * r;
        let log_k = ln_bessel_k(self.order, r).unwrap_or(f64::NEG_INFINITY);
        -(self.log_norm + 0.5 * self.order * (q / 2.0).ln() + log_k)
    }

    /// The two-dimensional form in terms of σ1, σ2 and ρ.
    pub fn value_bivariate(&self, x: &[f64]) -> Option<f64> {
        if self.d != 2 {
            return None;
        }
        let s1 = self.sigma[(0, 0)].sqrt();
        let s2 = self.sigma[(1, 1)].sqrt();
        let rho = self.sigma[(0, 1)] / (s1 * s2);
        let one_m = 1.0 - rho * rho;
        let (x1, x2) = (x[0], x[1]);
        let inner = (x1 * x1 / (s1 * s1) - 2.0 * rho * x1 * x2 / (s1 * s2) + x2 * x2 / (s2 * s2)) / one_m;
        let r = (2.0 * inner).sqrt().max(MIN_RADIUS);
        let log_k0 = ln_bessel_k(0.0, r).ok()?;
        Some(-(log_k0 - (PI * s1 * s2 * one_m.sqrt()).ln()))
    }
}

impl Potential for MultivariateLaplace {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_bivariate(x).unwrap_or_else(|| self.value_general(x))
    }

    /// ∇U = (2/r) (K_{v-1}(r)/K_v(r)) Σ⁻¹x with r = √(2 xᵀΣ⁻¹x); zero at the origin.
    fn grad_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        let v = DVector::from_column_slice(x);
        let px = &self.precision * &v;
        let q = v.dot(&px);
        let r = (2.0 * q).sqrt();
        if r < MIN_RADIUS {
            out.iter_mut().for_each(|o| *o = 0.0);
            return true;
        }
        let ratio = bessel_k_ratio(self.order, r).unwrap_or(1.0);
        let c = 2.0 / r * ratio;
        for (o, p) in out.iter_mut().zip(px.iter()) {
            *o = c * p;
        }
        true
    }

    fn has_grad(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::bessel_k;
    use crate::numerics::RngStream;
    use crate::potentials::testutil::assert_grad_matches_fd;

    #[test]
    fn univariate_values() {
        let u = laplace1d_potential(1.0 / 2f64.sqrt()).unwrap();
        assert!((u.value(&[1.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(u.value(&[0.0]), 0.0);
        for &x in &[0.3, 1.7, 12.0] {
            assert_eq!(u.value(&[x]), u.value(&[-x]));
        }
        assert_eq!(u.grad(&[0.0]).unwrap(), vec![0.0]);
        assert!(laplace1d_potential(0.0).is_err());
    }

    #[test]
    fn bivariate_identity_covariance_value() {
        let u = multivariate_laplace_potential(DMatrix::identity(2, 2)).unwrap();
        let expected = -((1.0 / PI) * bessel_k(0.0, 2f64.sqrt()).unwrap()).ln();
        assert!((u.value(&[1.0, 0.0]) - expected).abs() < 1e-12);
    }

    #[test]
    fn bivariate_and_general_formulas_agree() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let u = multivariate_laplace_potential(sigma).unwrap();
        let mut rng = RngStream::new(1, 0);
        for _ in 0..20 {
            let x = [2.0 * rng.normal(), 2.0 * rng.normal()];
            let a = u.value_bivariate(&x).unwrap();
            let b = u.value_general(&x);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn symmetric_about_origin() {
        let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let u = multivariate_laplace_potential(sigma).unwrap();
        let mut rng = RngStream::new(2, 0);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            assert!((u.value(&x) - u.value(&neg)).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_case_reduces_to_univariate_laplace() {
        // Σ = [1] gives Laplace with scale 1/√2, density √2/2 e^{-√2|x|}
        let u = multivariate_laplace_potential(DMatrix::from_element(1, 1, 1.0)).unwrap();
        for &x in &[0.2, 1.0, 3.0] {
            let expected = 2f64.sqrt() * x - (2f64.sqrt() / 2.0).ln();
            assert!((u.value(&[x]) - expected).abs() < 1e-12);
        }
        assert!((u.marginal_scale(0) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for d in [2usize, 3] {
            let mut sigma = DMatrix::identity(d, d);
            sigma[(0, 1)] = 0.3;
            sigma[(1, 0)] = 0.3;
            let u = multivariate_laplace_potential(sigma).unwrap();
            let mut rng = RngStream::new(3, d as u64);
            for _ in 0..100 {
                let x: Vec<f64> = (0..d).map(|_| 1.5 * rng.normal()).collect();
                if x.iter().map(|v| v * v).sum::<f64>() < 1e-2 {
                    continue;
                }
                assert_grad_matches_fd(&u, &x, 1e-5);
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let u = multivariate_laplace_potential(DMatrix::identity(2, 2)).unwrap();
        let mut rng = RngStream::new(99, 0);
        let half = 12.0;
        let n = 2_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let x = [half * (2.0 * rng.uniform() - 1.0), half * (2.0 * rng.uniform() - 1.0)];
            acc += (-u.value(&x)).exp();
        }
        let mass = acc / n as f64 * (2.0 * half).powi(2);
        assert!((mass - 1.0).abs() < 0.01, "mass {mass}");
    }

    #[test]
    fn rejects_non_spd() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(multivariate_laplace_potential(bad), Err(Error::Domain(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(multivariate_laplace_potential(asym).is_err());
    }
}
