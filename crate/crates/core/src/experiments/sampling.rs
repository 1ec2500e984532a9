//! Distribution-matching experiments: a cloud of independent
//! single-sample chains is compared to the target through W2 after every
//! recorded step.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::metrics::QuantileGrid;
use crate::numerics::{PowerTailCdf, QuantileFn};
use crate::potentials::{
    heavy_tail_potential, laplace1d_potential, multivariate_laplace_potential, CompositePotential, FnPotential,
    Penalty, SharedPotential,
};
use crate::samplers::{
    run_ensemble, AnchorPair, ClosedFormL1Oracle, DriftOracle, EnsembleControl, GaussianSmoothingOracle,
    SamplerConfig, SamplerKind,
};
use crate::smoothing::SmoothingSpec;

use super::{finish, recorded_iterations, Clamped, ExperimentKind, ExperimentResult, ExperimentSpec, MetricSeries, SmoothingMode};

/// Drift oracle of a sampling experiment. The Laplace targets use Gaussian
/// smoothing of the whole potential as `U0`; the heavy-tailed target uses
/// `U0 = β log(1+‖x‖²)`, or `U0 = U` for the ULA baseline.
pub fn sampling_oracle(spec: &ExperimentSpec) -> Result<Box<dyn DriftOracle>> {
    let smoothing = || -> Result<SmoothingSpec> {
        let mut s = SmoothingSpec::new(spec.smoothing_mu()?, spec.n_mc)?;
        s.independent_batches = spec.independent_batches;
        Ok(s)
    };
    Ok(match spec.kind {
        ExperimentKind::Laplace1d => match spec.smoothing {
            SmoothingMode::MonteCarlo => {
                let u: SharedPotential = Arc::new(laplace1d_potential(FRAC_1_SQRT_2)?);
                Box::new(GaussianSmoothingOracle::new(None, u, smoothing()?)?)
            }
            SmoothingMode::ClosedForm => {
                let zero: SharedPotential =
                    Arc::new(FnPotential::new(1, |_| 0.0).with_grad(|_, o| o.iter_mut().for_each(|v| *v = 0.0)));
                let target = CompositePotential::new(zero, Penalty::l1(SQRT_2), 0.0);
                Box::new(ClosedFormL1Oracle::new(target, spec.smoothing_mu()?)?)
            }
        },
        ExperimentKind::LaplaceMd => {
            let u: SharedPotential = Arc::new(multivariate_laplace_potential(spec.covariance()?)?);
            Box::new(GaussianSmoothingOracle::new(None, u, smoothing()?)?)
        }
        ExperimentKind::Heavytail => {
            let u: SharedPotential = Arc::new(heavy_tail_potential(spec.iota, spec.d)?);
            if spec.sampler == SamplerKind::Ula {
                Box::new(AnchorPair::same(u)?)
            } else {
                let u0: SharedPotential = Arc::new(heavy_tail_potential(spec.beta, spec.d)?);
                Box::new(AnchorPair::new(u, u0)?)
            }
        }
        other => return Err(Error::Spec(format!("{other} is not a sampling experiment"))),
    })
}

/// Per-axis reference quantiles for a cloud of `n_chains` points.
pub fn w2_reference_grids(spec: &ExperimentSpec) -> Result<Vec<QuantileGrid>> {
    let marginals: Vec<QuantileFn> = match spec.kind {
        ExperimentKind::Laplace1d => vec![QuantileFn::laplace(0.0, FRAC_1_SQRT_2)],
        ExperimentKind::LaplaceMd => {
            let target = multivariate_laplace_potential(spec.covariance()?)?;
            (0..spec.d).map(|j| QuantileFn::laplace(0.0, target.marginal_scale(j))).collect()
        }
        ExperimentKind::Heavytail => {
            // each marginal of (1+‖x‖²)^(-ι) is proportional to (1+x²)^(-(ι-(d-1)/2))
            let q = PowerTailCdf::new(spec.iota - (spec.d as f64 - 1.0) / 2.0)?.quantile_fn();
            vec![q; spec.d]
        }
        other => return Err(Error::Spec(format!("{other} has no W2 reference"))),
    };
    marginals.iter().map(|q| QuantileGrid::new(q, spec.n_chains, spec.trim)).collect()
}

pub fn run_laplace_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if !matches!(spec.kind, ExperimentKind::Laplace1d | ExperimentKind::LaplaceMd) {
        return Err(Error::Spec(format!("expected a Laplace experiment, got {}", spec.kind)));
    }
    run_particles(spec)
}

pub fn run_heavytail_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.kind != ExperimentKind::Heavytail {
        return Err(Error::Spec(format!("expected a heavytail experiment, got {}", spec.kind)));
    }
    run_particles(spec)
}

fn run_particles(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let start = Instant::now();
    let oracle = sampling_oracle(spec)?;
    let oracle = Clamped {
        inner: oracle.as_ref(),
        bound: spec.clamp,
    };
    let grids = w2_reference_grids(spec)?;
    let config = SamplerConfig::new(spec.eta, spec.n_steps)?.record_every(spec.record_every);
    let prior = spec.initial_distribution();
    let iterations = recorded_iterations(spec);
    let mut series = MetricSeries::new("w2", iterations.clone());
    let mut hits = Vec::new();
    let mut clamps = 0;
    let mut column = vec![0.0; spec.n_chains];
    for r in 0..spec.n_repeats {
        let mut vals = vec![f64::NAN; iterations.len()];
        let mut hit = None;
        let mut run_clamps = 0;
        run_ensemble(
            spec.sampler,
            &config,
            &oracle,
            spec.n_chains,
            spec.seed,
            r,
            |rng| prior.sample(rng, spec.d),
            |done, states| {
                if done == 0 {
                    return Ok(EnsembleControl::Continue);
                }
                let mut acc = 0.0;
                for (j, g) in grids.iter().enumerate() {
                    for (c, s) in column.iter_mut().zip(states) {
                        *c = s.x[j];
                    }
                    acc += g.w2(&column)?.powi(2);
                }
                let w2 = (acc / grids.len() as f64).sqrt();
                vals[done / spec.record_every - 1] = w2;
                run_clamps = states.iter().map(|s| s.clamp_count).sum();
                if let Some(t) = spec.threshold {
                    if hit.is_none() && w2 < t {
                        hit = Some(done);
                        if spec.stop_at_threshold {
                            return Ok(EnsembleControl::Stop);
                        }
                    }
                }
                Ok(EnsembleControl::Continue)
            },
        )?;
        log::debug!("repeat {r}: threshold hit {hit:?}");
        clamps += run_clamps;
        series.per_repeat.push(vals);
        hits.push(hit);
        if spec.stop_after_miss && hit.is_none() {
            break;
        }
    }
    Ok(finish(spec, vec![series], hits, clamps, start, None))
}
