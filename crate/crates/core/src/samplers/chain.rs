use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oracle::{DriftOracle, GaussianSmoothingOracle, OracleEval};
use super::{anchored_step, time_change_step, ula_step};
use crate::error::{Error, Result};
use crate::metrics::{SampleMeta, SampleSet};
use crate::numerics::RngStream;
use crate::potentials::CompositePotential;
use crate::smoothing::SmoothingSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// Langevin on `U0` alone.
    Ula,
    Anchored,
    #[serde(alias = "time_change")]
    TimeChange,
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ula" => Ok(Self::Ula),
            "anchored" => Ok(Self::Anchored),
            "timechange" | "time_change" => Ok(Self::TimeChange),
            other => Err(Error::Spec(format!("unknown sampler {other:?}"))),
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ula => "ula",
            Self::Anchored => "anchored",
            Self::TimeChange => "timechange",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub eta: f64,
    pub n_steps: usize,
    /// Keep every `record_every`-th iterate (iteration 0 is always kept).
    pub record_every: usize,
    pub smoothing: Option<SmoothingSpec>,
}

impl SamplerConfig {
    pub fn new(eta: f64, n_steps: usize) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("step size must be positive, got {eta}")));
        }
        Ok(Self {
            eta,
            n_steps,
            record_every: 1,
            smoothing: None,
        })
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    pub fn smoothing(mut self, spec: SmoothingSpec) -> Self {
        self.smoothing = Some(spec);
        self
    }
}

/// One chain: its iterate, step counter, time-change clock and random stream.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub k: usize,
    /// Time-change clock ℓ_k; stays 0 for the other samplers.
    pub ell: f64,
    pub rng: RngStream,
    pub clamp_count: u64,
    sigma_sum: f64,
    grad: Vec<f64>,
    xi: Vec<f64>,
    next: Vec<f64>,
}

impl ChainState {
    pub fn new(x0: Vec<f64>, rng: RngStream) -> Self {
        let d = x0.len();
        Self {
            x: x0,
            k: 0,
            ell: 0.0,
            rng,
            clamp_count: 0,
            sigma_sum: 0.0,
            grad: vec![0.0; d],
            xi: vec![0.0; d],
            next: vec![0.0; d],
        }
    }

    /// Mean of σ(x_k) = e^{t/2} over the steps taken so far.
    pub fn mean_sigma(&self) -> f64 {
        if self.k == 0 {
            1.0
        } else {
            self.sigma_sum / self.k as f64
        }
    }

    /// Advances one step. Oracle randomness (Monte Carlo batches) is drawn
    /// before the step's Gaussian noise.
    pub fn step(&mut self, kind: SamplerKind, eta: f64, oracle: &dyn DriftOracle) -> Result<()> {
        let need = kind != SamplerKind::Ula;
        let raw = oracle.eval(&self.x, &mut self.rng, need, &mut self.grad);
        let ev = OracleEval::clamp(raw, oracle.exponent_clamp());
        if ev.clamped {
            self.clamp_count += 1;
        }
        self.rng.fill_normal(&mut self.xi);
        match kind {
            SamplerKind::Ula => ula_step(&self.x, &self.grad, eta, &self.xi, &mut self.next),
            SamplerKind::Anchored => anchored_step(&self.x, &self.grad, ev.exponent, eta, &self.xi, &mut self.next),
            SamplerKind::TimeChange => {
                self.ell += time_change_step(&self.x, &self.grad, ev.exponent, eta, &self.xi, &mut self.next);
            }
        }
        if raw.is_nan() || self.next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: self.k + 1,
                last_finite: self.x.clone(),
            });
        }
        self.sigma_sum += (0.5 * ev.exponent).exp();
        std::mem::swap(&mut self.x, &mut self.next);
        self.k += 1;
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ChainDiagnostics {
    pub steps: usize,
    pub clamp_count: u64,
    pub mean_sigma: f64,
    pub final_ell: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub samples: SampleSet,
    pub diagnostics: ChainDiagnostics,
}

/// Runs one chain from `x0`, recording iteration 0 and every
/// `record_every`-th iterate after it.
pub fn run_chain(
    kind: SamplerKind,
    config: &SamplerConfig,
    oracle: &dyn DriftOracle,
    x0: &[f64],
    rng: RngStream,
) -> Result<ChainOutput> {
    if x0.len() != oracle.dim() {
        return Err(Error::Shape(format!("x0 has length {} but target dimension is {}", x0.len(), oracle.dim())));
    }
    let start = Instant::now();
    let seed = rng.seed();
    let mut state = ChainState::new(x0.to_vec(), rng);
    let mut samples = SampleSet::new(x0.len());
    samples.push(&state.x)?;
    for _ in 0..config.n_steps {
        state.step(kind, config.eta, oracle)?;
        if state.k % config.record_every == 0 {
            samples.push(&state.x)?;
        }
    }
    samples.meta = SampleMeta {
        sampler: kind.to_string(),
        seed,
        steps: config.n_steps,
        eta: config.eta,
        mu: config.smoothing.map(|s| s.mu),
        n_mc: config.smoothing.map(|s| s.n_samples),
    };
    Ok(ChainOutput {
        samples,
        diagnostics: ChainDiagnostics {
            steps: state.k,
            clamp_count: state.clamp_count,
            mean_sigma: state.mean_sigma(),
            final_ell: state.ell,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

fn smoothed_oracle(target: &CompositePotential, config: &SamplerConfig) -> Result<GaussianSmoothingOracle> {
    let spec = config
        .smoothing
        .ok_or_else(|| Error::Spec("Gaussian smoothing settings are required".into()))?;
    Ok(GaussianSmoothingOracle::from_composite(target, spec))
}

/// Anchored Langevin with Monte Carlo Gaussian smoothing of the penalty.
pub fn algorithm1_run(target: &CompositePotential, config: &SamplerConfig, x0: &[f64], rng: RngStream) -> Result<ChainOutput> {
    let oracle = smoothed_oracle(target, config)?;
    run_chain(SamplerKind::Anchored, config, &oracle, x0, rng)
}

/// Random time-change Langevin with Monte Carlo Gaussian smoothing.
pub fn algorithm2_run(target: &CompositePotential, config: &SamplerConfig, x0: &[f64], rng: RngStream) -> Result<ChainOutput> {
    let oracle = smoothed_oracle(target, config)?;
    run_chain(SamplerKind::TimeChange, config, &oracle, x0, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnsembleControl {
    Continue,
    Stop,
}

/// Runs `n_particles` independent chains in lockstep. Particle `i` of
/// repeat `r` uses the stream `(seed, r·n_particles + i)` both for its
/// initial draw and its dynamics, so results do not depend on the thread
/// count. `observe` sees the ensemble at iteration 0 and after every
/// `record_every` steps and may stop the run early. Returns the number of
/// steps taken.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble<I, O>(
    kind: SamplerKind,
    config: &SamplerConfig,
    oracle: &dyn DriftOracle,
    n_particles: usize,
    seed: u64,
    repeat: usize,
    init: I,
    mut observe: O,
) -> Result<usize>
where
    I: Fn(&mut RngStream) -> Vec<f64> + Sync,
    O: FnMut(usize, &[ChainState]) -> Result<EnsembleControl>,
{
    let mut states: Vec<ChainState> = (0..n_particles)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::for_chain(seed, repeat, i, n_particles);
            let x0 = init(&mut rng);
            ChainState::new(x0, rng)
        })
        .collect();
    if let Some(bad) = states.iter().find(|s| s.x.len() != oracle.dim()) {
        return Err(Error::Shape(format!("initial state of length {} for dimension {}", bad.x.len(), oracle.dim())));
    }
    if observe(0, &states)? == EnsembleControl::Stop {
        return Ok(0);
    }
    let mut done = 0;
    while done < config.n_steps {
        let chunk = config.record_every.min(config.n_steps - done);
        states.par_iter_mut().try_for_each(|s| {
            for _ in 0..chunk {
                s.step(kind, config.eta, oracle)?;
            }
            Ok::<_, Error>(())
        })?;
        done += chunk;
        if observe(done, &states)? == EnsembleControl::Stop {
            break;
        }
    }
    Ok(done)
}
