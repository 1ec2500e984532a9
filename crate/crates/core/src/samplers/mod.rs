//! Discrete-time Langevin samplers.
//!
//! All three schemes share one interface: a [`DriftOracle`] supplies the
//! reference gradient `∇U0(x)` and, when asked, the exponent `U(x) - U0(x)`.
//! Exact pairs, Monte Carlo smoothed composites and closed-form smoothed
//! composites are all oracles, so the step functions never care where the
//! numbers came from.

pub mod bounds;
mod chain;
mod oracle;

pub use bounds::{
    bound_curve, select_hyperparameters, theoretical_eta_max_and_c, BoundConstants, CorollaryConstants,
    Hyperparameters, TheoremBound,
};
pub use chain::{
    algorithm1_run, algorithm2_run, run_chain, run_ensemble, ChainDiagnostics, ChainOutput, ChainState,
    EnsembleControl, SamplerConfig, SamplerKind,
};
pub use oracle::{AnchorPair, ClosedFormL1Oracle, DriftOracle, GaussianSmoothingOracle, OracleEval, DEFAULT_CLAMP};

/// `x - η∇U0(x) + √(2η)ξ`.
#[inline]
pub fn ula_step(x: &[f64], grad0: &[f64], eta: f64, xi: &[f64], out: &mut [f64]) {
    let s = (2.0 * eta).sqrt();
    for i in 0..x.len() {
        out[i] = x[i] - eta * grad0[i] + s * xi[i];
    }
}

/// `x + ηb(x) + √(2η)σ(x)ξ` with `b = -∇U0 e^t`, `σ = e^{t/2}` and `t` the
/// (already clamped) exponent. With `t = 0` this is bitwise equal to
/// [`ula_step`].
#[inline]
pub fn anchored_step(x: &[f64], grad0: &[f64], exponent: f64, eta: f64, xi: &[f64], out: &mut [f64]) {
    let scale = exponent.exp();
    let noise = (2.0 * eta).sqrt() * (0.5 * exponent).exp();
    for i in 0..x.len() {
        let b = -grad0[i] * scale;
        out[i] = x[i] + eta * b + noise * xi[i];
    }
}

/// Random time change: advances the clock by `Δℓ = η e^t`, then takes a
/// ULA step of size `Δℓ` on `U0`. Returns `Δℓ`.
#[inline]
pub fn time_change_step(z: &[f64], grad0: &[f64], exponent: f64, eta: f64, xi: &[f64], out: &mut [f64]) -> f64 {
    let dl = eta * exponent.exp();
    let s = (2.0 * dl).sqrt();
    for i in 0..z.len() {
        out[i] = z[i] - dl * grad0[i] + s * xi[i];
    }
    dl
}
