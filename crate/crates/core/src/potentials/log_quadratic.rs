use nalgebra::{DMatrix, DVector};

use super::{Potential, PotentialMeta};
use crate::error::{Error, Result};
use crate::numerics::norm_sq;

/// `U(x) = c · log(1 + (x - loc)ᵀ Σ⁻¹ (x - loc) / ν)`.
///
/// Covers the heavy-tailed target `ι log(1 + ‖x‖²)` (ν = 1, Σ = I) and the
/// multivariate Student-t family.
#[derive(Clone, Debug)]
pub struct LogQuadratic {
    coef: f64,
    nu: f64,
    loc: Vec<f64>,
    precision: DMatrix<f64>,
    /// Σ = I and loc = 0, which skips the matrix algebra.
    isotropic: bool,
}

impl LogQuadratic {
    pub fn new(coef: f64, nu: f64, loc: Vec<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let d = loc.len();
        if d == 0 || sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::Shape(format!(
                "location has length {d} but scale matrix is {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if !(nu > 0.0) || !coef.is_finite() {
            return Err(Error::Domain(format!("need nu > 0 and finite coefficient, got nu={nu}, c={coef}")));
        }
        let isotropic = sigma == DMatrix::identity(d, d) && loc.iter().all(|&v| v == 0.0);
        let precision = sigma
            .cholesky()
            .ok_or_else(|| Error::Domain("scale matrix is not positive definite".into()))?
            .inverse();
        Ok(Self {
            coef,
            nu,
            loc,
            precision,
            isotropic,
        })
    }

    pub fn coef(&self) -> f64 {
        self.coef
    }

    /// Same quadratic form, different coefficient.
    pub fn with_coef(&self, coef: f64) -> Self {
        Self { coef, ..self.clone() }
    }

    fn centered(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(x.len(), x.iter().zip(&self.loc).map(|(a, b)| a - b))
    }
}

/// `ι log(1 + ‖x‖²)` in `d` dimensions. The density is integrable only for
/// `ι > d/2`; the tail assumptions used by the samplers want `ι > 1 + d/2`,
/// and smaller values only produce a warning.
pub fn heavy_tail_potential(iota: f64, d: usize) -> Result<LogQuadratic> {
    if iota <= 1.0 + d as f64 / 2.0 {
        log::warn!("heavy-tail exponent {iota} is at most 1 + d/2 = {}", 1.0 + d as f64 / 2.0);
    }
    LogQuadratic::new(iota, 1.0, vec![0.0; d], DMatrix::identity(d, d))
}

impl Potential for LogQuadratic {
    fn dim(&self) -> usize {
        self.loc.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        if self.isotropic {
            return self.coef * (norm_sq(x) / self.nu).ln_1p();
        }
        let z = self.centered(x);
        let q = z.dot(&(&self.precision * &z)) / self.nu;
        self.coef * q.ln_1p()
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        if self.isotropic {
            let c = 2.0 * self.coef / (self.nu + norm_sq(x));
            for (o, &v) in out.iter_mut().zip(x) {
                *o = c * v;
            }
            return true;
        }
        let z = self.centered(x);
        let pz = &self.precision * &z;
        let q = 1.0 + z.dot(&pz) / self.nu;
        let c = 2.0 * self.coef / (self.nu * q);
        for (o, p) in out.iter_mut().zip(pz.iter()) {
            *o = c * p;
        }
        true
    }

    fn has_grad(&self) -> bool {
        true
    }

    fn meta(&self) -> PotentialMeta {
        PotentialMeta::default()
    }
}

/// A multivariate Student-t target `((d+ν)/2) log q` together with the
/// anchor `β log q`, `β = (d+ν)/2 - 1`.
#[derive(Clone, Debug)]
pub struct StudentTPair {
    pub target: LogQuadratic,
    pub anchor: LogQuadratic,
    pub beta: f64,
    /// Condition number of Σ.
    pub kappa: f64,
    pub d: usize,
    pub nu: f64,
}

impl StudentTPair {
    /// Sufficient condition `d + ν > 2 + d κ(Σ)` under which the pair
    /// satisfies the dissipativity assumptions.
    pub fn condition_holds(&self) -> bool {
        self.d as f64 + self.nu > 2.0 + self.d as f64 * self.kappa
    }
}

pub fn student_t_pair(nu: f64, loc: Vec<f64>, sigma: DMatrix<f64>) -> Result<StudentTPair> {
    let d = loc.len();
    let target = LogQuadratic::new((d as f64 + nu) / 2.0, nu, loc, sigma.clone())?;
    let eig = sigma.symmetric_eigen().eigenvalues;
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let beta = target.coef - 1.0;
    let anchor = target.with_coef(beta);
    Ok(StudentTPair {
        target,
        anchor,
        beta,
        kappa: hi / lo,
        d,
        nu,
    })
}
