//! Gaussian smoothing `g0(x) = E[g(x + μξ)]` of nonsmooth functions.

use std::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::special::erf;
use crate::numerics::RngStream;
use crate::potentials::{Potential, PotentialMeta};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    pub mu: f64,
    pub n_samples: usize,
    /// Draw separate batches for the value and gradient estimates.
    pub independent_batches: bool,
    /// Subtract `g(x)` inside the gradient estimator. Leaves the mean unchanged.
    pub control_variate: bool,
}

impl SmoothingSpec {
    pub fn new(mu: f64, n_samples: usize) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("smoothing scale must be positive, got {mu}")));
        }
        if n_samples == 0 {
            return Err(Error::Domain("Monte Carlo batch size must be at least 1".into()));
        }
        Ok(Self {
            mu,
            n_samples,
            independent_batches: true,
            control_variate: false,
        })
    }
}

/// `(1/N) Σ g(x + μξ_i)`.
pub fn mc_smoothed_value<G>(g: G, x: &[f64], spec: &SmoothingSpec, rng: &mut RngStream) -> f64
where
    G: Fn(&[f64]) -> f64,
{
    let mut xi = vec![0.0; x.len()];
    let mut y = vec![0.0; x.len()];
    let mut acc = 0.0;
    for _ in 0..spec.n_samples {
        rng.fill_normal(&mut xi);
        perturb(x, &xi, spec.mu, &mut y);
        acc += g(&y);
    }
    acc / spec.n_samples as f64
}

#[inline]
fn perturb(x: &[f64], xi: &[f64], mu: f64, y: &mut [f64]) {
    for ((yi, &xv), &e) in y.iter_mut().zip(x).zip(xi) {
        *yi = xv + mu * e;
    }
}

/// `(1/(μN)) Σ ξ̂_i g(x + μξ̂_i)` written into `out`.
pub fn mc_smoothed_grad_into<G>(g: G, x: &[f64], spec: &SmoothingSpec, rng: &mut RngStream, out: &mut [f64])
where
    G: Fn(&[f64]) -> f64,
{
    let base = if spec.control_variate { g(x) } else { 0.0 };
    let mut xi = vec![0.0; x.len()];
    let mut y = vec![0.0; x.len()];
    out.iter_mut().for_each(|o| *o = 0.0);
    for _ in 0..spec.n_samples {
        rng.fill_normal(&mut xi);
        perturb(x, &xi, spec.mu, &mut y);
        let w = g(&y) - base;
        for (o, &e) in out.iter_mut().zip(&xi) {
            *o += w * e;
        }
    }
    let scale = 1.0 / (spec.mu * spec.n_samples as f64);
    out.iter_mut().for_each(|o| *o *= scale);
}

pub fn mc_smoothed_grad<G>(g: G, x: &[f64], spec: &SmoothingSpec, rng: &mut RngStream) -> Vec<f64>
where
    G: Fn(&[f64]) -> f64,
{
    let mut out = vec![0.0; x.len()];
    mc_smoothed_grad_into(g, x, spec, rng, &mut out);
    out
}

/// Value and gradient estimates together. Without `independent_batches`
/// both reuse one batch of directions.
pub fn mc_smoothed_value_and_grad<G>(
    g: G,
    x: &[f64],
    spec: &SmoothingSpec,
    rng: &mut RngStream,
    grad: &mut [f64],
) -> f64
where
    G: Fn(&[f64]) -> f64,
{
    if spec.independent_batches {
        let v = mc_smoothed_value(&g, x, spec, rng);
        mc_smoothed_grad_into(&g, x, spec, rng, grad);
        return v;
    }
    let base = if spec.control_variate { g(x) } else { 0.0 };
    let mut xi = vec![0.0; x.len()];
    let mut y = vec![0.0; x.len()];
    grad.iter_mut().for_each(|o| *o = 0.0);
    let mut acc = 0.0;
    for _ in 0..spec.n_samples {
        rng.fill_normal(&mut xi);
        perturb(x, &xi, spec.mu, &mut y);
        let gy = g(&y);
        acc += gy;
        for (o, &e) in grad.iter_mut().zip(&xi) {
            *o += (gy - base) * e;
        }
    }
    let n = spec.n_samples as f64;
    grad.iter_mut().for_each(|o| *o /= spec.mu * n);
    acc / n
}

/// Per-component mean and standard error of the gradient estimator's
/// summands `ξ̂ g(x + μξ̂)/μ`.
pub fn mc_smoothed_grad_stats<G>(g: G, x: &[f64], spec: &SmoothingSpec, rng: &mut RngStream) -> (Vec<f64>, Vec<f64>)
where
    G: Fn(&[f64]) -> f64,
{
    let d = x.len();
    let base = if spec.control_variate { g(x) } else { 0.0 };
    let (mut xi, mut y) = (vec![0.0; d], vec![0.0; d]);
    let (mut s1, mut s2) = (vec![0.0; d], vec![0.0; d]);
    for _ in 0..spec.n_samples {
        rng.fill_normal(&mut xi);
        perturb(x, &xi, spec.mu, &mut y);
        let w = (g(&y) - base) / spec.mu;
        for j in 0..d {
            let t = w * xi[j];
            s1[j] += t;
            s2[j] += t * t;
        }
    }
    let n = spec.n_samples as f64;
    let mean: Vec<f64> = s1.iter().map(|s| s / n).collect();
    let se = s2
        .iter()
        .zip(&mean)
        .map(|(s, m)| ((s / n - m * m).max(0.0) * n / (n - 1.0).max(1.0) / n).sqrt())
        .collect();
    (mean, se)
}

/// Exact Gaussian smoothing of `λ‖x‖₁`: per coordinate
/// `λ(μ√(2/π) e^{-x²/2μ²} + x erf(x/(μ√2)))`, gradient `λ erf(x/(μ√2))`.
pub fn l1_gaussian_closed_form(x: &[f64], mu: f64, lambda: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; x.len()];
    let v = l1_gaussian_closed_form_into(x, mu, lambda, &mut grad);
    (v, grad)
}

pub(crate) fn l1_gaussian_closed_form_into(x: &[f64], mu: f64, lambda: f64, grad: &mut [f64]) -> f64 {
    // √(2/π) = (2/√π)/√2
    let c = FRAC_2_SQRT_PI / SQRT_2;
    let mut v = 0.0;
    for (gi, &xi) in grad.iter_mut().zip(x) {
        let e = erf(xi / (mu * SQRT_2));
        v += mu * c * (-xi * xi / (2.0 * mu * mu)).exp() + xi * e;
        *gi = lambda * e;
    }
    lambda * v
}

/// `Kμ√d`, the uniform gap between a K-Lipschitz function and its smoothing.
pub fn smoothing_gap_bound(k: f64, mu: f64, d: usize) -> f64 {
    k * mu * (d as f64).sqrt()
}

/// `λ‖x‖₁` smoothed in closed form, as a potential.
#[derive(Clone, Debug)]
pub struct GaussianSmoothedL1 {
    pub lambda: f64,
    pub mu: f64,
    pub d: usize,
}

impl Potential for GaussianSmoothedL1 {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut scratch = vec![0.0; x.len()];
        l1_gaussian_closed_form_into(x, self.mu, self.lambda, &mut scratch)
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        l1_gaussian_closed_form_into(x, self.mu, self.lambda, out);
        true
    }

    fn has_grad(&self) -> bool {
        true
    }

    fn meta(&self) -> PotentialMeta {
        PotentialMeta {
            lipschitz_k: Some(self.lambda * (self.d as f64).sqrt()),
            ..Default::default()
        }
    }
}
