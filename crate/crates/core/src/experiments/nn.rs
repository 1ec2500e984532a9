//! Two-layer network `σ(Σ_j relu(x·w1_j) w2_j)` trained by Langevin
//! updates: the first layer through Gaussian smoothing of the loss as a
//! function of `w1`, the second layer by exact-gradient ULA.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::potentials::sigmoid;
use crate::samplers::{anchored_step, ula_step, OracleEval, SamplerKind};
use crate::smoothing::{mc_smoothed_grad_into, mc_smoothed_value, mc_smoothed_value_and_grad, SmoothingSpec};

use super::{finish, recorded_iterations, Dataset, DatasetInfo, ExperimentResult, ExperimentSpec, MetricSeries};

/// Binary cross-entropy network without biases. `w1` holds the hidden
/// units' input weights one unit after another (length `d·hidden`).
#[derive(Clone, Debug)]
pub struct TwoLayerNet {
    x: DMatrix<f64>,
    y: DVector<f64>,
    hidden: usize,
}

impl TwoLayerNet {
    pub fn new(x: DMatrix<f64>, y: &[f64], hidden: usize) -> Result<Self> {
        if x.nrows() != y.len() || x.nrows() == 0 {
            return Err(Error::Shape(format!("{} rows but {} labels", x.nrows(), y.len())));
        }
        if hidden == 0 {
            return Err(Error::Shape("need at least one hidden unit".into()));
        }
        Ok(Self {
            x,
            y: DVector::from_column_slice(y),
            hidden,
        })
    }

    pub fn n_w1(&self) -> usize {
        self.x.ncols() * self.hidden
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn activations(&self, w1: &[f64]) -> DMatrix<f64> {
        let w = DMatrix::from_column_slice(self.x.ncols(), self.hidden, w1);
        (&self.x * w).map(|v| v.max(0.0))
    }

    /// Pre-sigmoid outputs, one per sample.
    pub fn logits(&self, w1: &[f64], w2: &[f64]) -> DVector<f64> {
        self.activations(w1) * DVector::from_column_slice(w2)
    }

    /// Mean binary cross-entropy, computed as softplus(s) - y s.
    pub fn loss(&self, w1: &[f64], w2: &[f64]) -> f64 {
        let s = self.logits(w1, w2);
        let total: f64 = s
            .iter()
            .zip(self.y.iter())
            .map(|(&s, &y)| {
                let sp = if s > 0.0 { s + (-s).exp().ln_1p() } else { s.exp().ln_1p() };
                sp - y * s
            })
            .sum();
        total / self.y.len() as f64
    }

    /// Fraction of samples with `σ(s) ≥ 0.5` matching the label.
    pub fn accuracy(&self, w1: &[f64], w2: &[f64]) -> f64 {
        let s = self.logits(w1, w2);
        let hits = s.iter().zip(self.y.iter()).filter(|(&s, &y)| (sigmoid(s) >= 0.5) == (y == 1.0)).count();
        hits as f64 / self.y.len() as f64
    }

    /// Exact gradient of the loss with respect to the second layer.
    pub fn grad_w2_into(&self, w1: &[f64], w2: &[f64], out: &mut [f64]) {
        let a = self.activations(w1);
        let s = &a * DVector::from_column_slice(w2);
        let r = DVector::from_iterator(s.len(), s.iter().zip(self.y.iter()).map(|(&s, &y)| sigmoid(s) - y));
        let g = a.transpose() * r / self.y.len() as f64;
        out.copy_from_slice(g.as_slice());
    }
}

struct Run {
    accuracy: Vec<f64>,
    loss: Vec<f64>,
    clamps: u64,
}

fn run_one(spec: &ExperimentSpec, net: &TwoLayerNet, smoothing: &SmoothingSpec, repeat: usize) -> Result<Run> {
    let mut rng = RngStream::for_chain(spec.seed, repeat, 0, 1);
    let prior = spec.initial_distribution();
    let mut w1 = prior.sample(&mut rng, net.n_w1());
    let mut w2 = prior.sample(&mut rng, net.hidden());
    let (n1, n2) = (w1.len(), w2.len());
    let (mut g1, mut g2) = (vec![0.0; n1], vec![0.0; n2]);
    let (mut xi1, mut xi2) = (vec![0.0; n1], vec![0.0; n2]);
    let (mut next1, mut next2) = (vec![0.0; n1], vec![0.0; n2]);
    let anchored = spec.sampler == SamplerKind::Anchored;
    let mut run = Run {
        accuracy: Vec::new(),
        loss: Vec::new(),
        clamps: 0,
    };
    for k in 1..=spec.n_steps {
        let w2_now = w2.clone();
        let g = |v: &[f64]| net.loss(v, &w2_now);
        let exponent = if anchored {
            let g0 = if smoothing.independent_batches {
                let v = mc_smoothed_value(g, &w1, smoothing, &mut rng);
                mc_smoothed_grad_into(g, &w1, smoothing, &mut rng, &mut g1);
                v
            } else {
                mc_smoothed_value_and_grad(g, &w1, smoothing, &mut rng, &mut g1)
            };
            g(&w1) - g0
        } else {
            mc_smoothed_grad_into(g, &w1, smoothing, &mut rng, &mut g1);
            0.0
        };
        net.grad_w2_into(&w1, &w2, &mut g2);
        if spec.m0 > 0.0 {
            g1.iter_mut().zip(&w1).for_each(|(o, v)| *o += 2.0 * spec.m0 * v);
            g2.iter_mut().zip(&w2).for_each(|(o, v)| *o += 2.0 * spec.m0 * v);
        }
        let ev = OracleEval::clamp(exponent, spec.clamp);
        run.clamps += u64::from(ev.clamped);
        rng.fill_normal(&mut xi1);
        rng.fill_normal(&mut xi2);
        if anchored {
            anchored_step(&w1, &g1, ev.exponent, spec.eta, &xi1, &mut next1);
        } else {
            ula_step(&w1, &g1, spec.eta, &xi1, &mut next1);
        }
        ula_step(&w2, &g2, spec.eta, &xi2, &mut next2);
        if exponent.is_nan() || next1.iter().chain(&next2).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: k,
                last_finite: w1.iter().chain(&w2).copied().collect(),
            });
        }
        std::mem::swap(&mut w1, &mut next1);
        std::mem::swap(&mut w2, &mut next2);
        if k % spec.record_every == 0 {
            run.accuracy.push(net.accuracy(&w1, &w2));
            run.loss.push(net.loss(&w1, &w2));
        }
    }
    Ok(run)
}

pub fn run_nn_experiment(spec: &ExperimentSpec, ds: &Dataset) -> Result<ExperimentResult> {
    spec.validate()?;
    if !matches!(spec.sampler, SamplerKind::Anchored | SamplerKind::Ula) {
        return Err(Error::Spec("the network experiment supports ula and anchored only".into()));
    }
    let start = Instant::now();
    let net = TwoLayerNet::new(ds.x.clone(), &ds.y, spec.hidden)?;
    let mut smoothing = SmoothingSpec::new(spec.smoothing_mu()?, spec.n_mc)?;
    smoothing.independent_batches = spec.independent_batches;
    let runs: Vec<Run> = (0..spec.n_repeats)
        .into_par_iter()
        .map(|r| run_one(spec, &net, &smoothing, r))
        .collect::<Result<_>>()?;
    let iterations = recorded_iterations(spec);
    let mut acc = MetricSeries::new("accuracy", iterations.clone());
    let mut loss = MetricSeries::new("loss", iterations);
    let mut clamps = 0;
    for r in runs {
        acc.per_repeat.push(r.accuracy);
        loss.per_repeat.push(r.loss);
        clamps += r.clamps;
    }
    let info = DatasetInfo {
        name: ds.name.clone(),
        n: ds.n(),
        dim: ds.dim(),
        raw_dim: ds.raw_dim,
        standardized: ds.standardization.is_some(),
    };
    Ok(finish(spec, vec![acc, loss], Vec::new(), clamps, start, Some(info)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> TwoLayerNet {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, -0.5, 2.0, 0.3, 0.8, -1.2, -2.0, 0.1, 0.4, 0.7, 0.7, 0.7]);
        TwoLayerNet::new(x, &[1.0, 0.0, 1.0, 0.0], 5).unwrap()
    }

    #[test]
    fn zero_weights_give_log_two() {
        let n = net();
        let (w1, w2) = (vec![0.0; n.n_w1()], vec![0.0; n.hidden()]);
        assert!(n.logits(&w1, &w2).iter().all(|&s| sigmoid(s) == 0.5));
        assert!((n.loss(&w1, &w2) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn second_layer_gradient_matches_finite_differences() {
        let n = net();
        let mut rng = RngStream::new(3, 0);
        let w1: Vec<f64> = (0..n.n_w1()).map(|_| rng.normal()).collect();
        let w2: Vec<f64> = (0..n.hidden()).map(|_| rng.normal()).collect();
        let mut g = vec![0.0; n.hidden()];
        n.grad_w2_into(&w1, &w2, &mut g);
        let h = 1e-6;
        for j in 0..n.hidden() {
            let (mut p, mut m) = (w2.clone(), w2.clone());
            p[j] += h;
            m[j] -= h;
            let fd = (n.loss(&w1, &p) - n.loss(&w1, &m)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-5, "unit {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn hidden_unit_layout() {
        // unit j reads w1[j*d .. (j+1)*d]
        let n = net();
        let mut w1 = vec![0.0; n.n_w1()];
        w1[3] = 1.0; // unit 1, feature 0
        let mut w2 = vec![0.0; n.hidden()];
        w2[1] = 1.0;
        let s = n.logits(&w1, &w2);
        assert_eq!(s.as_slice(), &[1.0, 0.3, 0.0, 0.7]);
    }
}
