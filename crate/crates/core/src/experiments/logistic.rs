//! Sparse Bayesian logistic regression. Each run is one chain whose
//! iterate is scored by its training accuracy.

use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::metrics::classification_accuracy;
use crate::potentials::{
    logistic_loss, smoothed_penalty, CompositePotential, Penalty, PenaltyPotential, Potential, Ridge,
    SharedPotential, SumPotential,
};
use crate::samplers::{AnchorPair, DriftOracle, GaussianSmoothingOracle};
use crate::smoothing::SmoothingSpec;

use super::{finish, run_single_chains, Clamped, Dataset, DatasetInfo, ExperimentKind, ExperimentResult, ExperimentSpec};

/// `U = f + m0‖x‖² + g` with `f` the mean logistic loss. In deterministic
/// mode `U0` replaces `g` by its √(x²+ε²) surrogate; in Gaussian mode
/// `U0` replaces it by the Monte Carlo Gaussian smoothing.
pub fn logistic_oracle(spec: &ExperimentSpec, ds: &Dataset) -> Result<Box<dyn DriftOracle>> {
    let d = ds.dim();
    let f: SharedPotential = Arc::new(logistic_loss(ds.x.clone(), &ds.y)?);
    let penalty = Penalty::new(spec.penalty, spec.lambda, spec.a)?;
    let with_ridge = |mut terms: Vec<SharedPotential>| -> SharedPotential {
        if spec.m0 > 0.0 {
            terms.push(Arc::new(Ridge { m0: spec.m0, d }));
        }
        Arc::new(SumPotential::new(terms))
    };
    match spec.kind {
        ExperimentKind::LogisticDet => {
            let u = with_ridge(vec![Arc::clone(&f), Arc::new(PenaltyPotential { penalty, d })]);
            let u0 = with_ridge(vec![f, Arc::new(smoothed_penalty(penalty, spec.epsilon, d)?)]);
            Ok(Box::new(AnchorPair::new(u, u0)?))
        }
        ExperimentKind::LogisticGauss => {
            let mut s = SmoothingSpec::new(spec.smoothing_mu()?, spec.n_mc)?;
            s.independent_batches = spec.independent_batches;
            let target = CompositePotential::new(f, penalty, spec.m0);
            Ok(Box::new(GaussianSmoothingOracle::from_composite(&target, s)))
        }
        other => Err(Error::Spec(format!("{other} is not a logistic experiment"))),
    }
}

pub fn run_logistic_experiment(spec: &ExperimentSpec, ds: &Dataset) -> Result<ExperimentResult> {
    spec.validate()?;
    let start = Instant::now();
    let oracle = logistic_oracle(spec, ds)?;
    let oracle = Clamped {
        inner: oracle.as_ref(),
        bound: spec.clamp,
    };
    let prior = spec.initial_distribution();
    let loss = logistic_loss(ds.x.clone(), &ds.y)?;
    let d = ds.dim();
    let accuracy = |w: &[f64]| classification_accuracy(w, &ds.x, &ds.y).unwrap_or(f64::NAN);
    let mean_loss = |w: &[f64]| loss.value(w);
    let (series, clamps) = run_single_chains(
        spec,
        &oracle,
        &|rng| prior.sample(rng, d),
        &[("accuracy", &accuracy), ("loss", &mean_loss)],
    )?;
    let info = DatasetInfo {
        name: ds.name.clone(),
        n: ds.n(),
        dim: d,
        raw_dim: ds.raw_dim,
        standardized: ds.standardization.is_some(),
    };
    Ok(finish(spec, series, Vec::new(), clamps, start, Some(info)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{parse_dataset, DatasetFormat};
    use crate::numerics::RngStream;
    use crate::samplers::{run_chain, SamplerConfig};

    /// Linearly separable toy problem: label = [x1 + 0.5 x2 > 0].
    fn toy() -> Dataset {
        let mut rng = RngStream::new(5, 0);
        let mut text = String::new();
        for _ in 0..120 {
            let (a, b) = (rng.normal(), rng.normal());
            text += &format!("{a},{b},{}\n", u8::from(a + 0.5 * b > 0.0));
        }
        parse_dataset(&text, "toy", DatasetFormat::Csv, false).unwrap()
    }

    fn spec(kind: &str, sampler: &str, extra: &str) -> ExperimentSpec {
        let text = format!(
            "[experiment]\nkind = \"{kind}\"\nsampler = \"{sampler}\"\neta = 0.05\nn_steps = 200\n\
             record_every = 10\ndataset = \"unused.csv\"\n{extra}"
        );
        ExperimentSpec::from_toml_str(&text).unwrap().remove(0)
    }

    #[test]
    fn single_repeat_equals_one_chain() {
        let ds = toy();
        let s = spec("logistic_det", "anchored", "m0 = 0.01\nlambda = 0.01\n");
        let res = run_logistic_experiment(&s, &ds).unwrap();
        let oracle = logistic_oracle(&s, &ds).unwrap();
        let mut rng = RngStream::for_chain(s.seed, 0, 0, 1);
        let x0 = s.initial_distribution().sample(&mut rng, 2);
        let cfg = SamplerConfig::new(s.eta, s.n_steps).unwrap().record_every(s.record_every);
        let out = run_chain(s.sampler, &cfg, oracle.as_ref(), &x0, rng).unwrap();
        let expected: Vec<f64> =
            out.samples.rows().skip(1).map(|w| classification_accuracy(w, &ds.x, &ds.y).unwrap()).collect();
        assert_eq!(res.primary().per_repeat[0], expected);
        assert_eq!(res.primary().iterations.len(), 20);
    }

    /// E_π[accuracy] for π ∝ e^{-U} by midpoint quadrature on a 2-D grid.
    fn posterior_accuracy(s: &ExperimentSpec, ds: &Dataset) -> f64 {
        let loss = logistic_loss(ds.x.clone(), &ds.y).unwrap();
        let pen = Penalty::new(s.penalty, s.lambda, s.a).unwrap();
        let (h, half) = (0.05, 12.0);
        let n = (2.0 * half / h) as usize;
        let (mut z, mut acc) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let w = [-half + (i as f64 + 0.5) * h, -half + (j as f64 + 0.5) * h];
                let u = loss.value(&w) + s.m0 * (w[0] * w[0] + w[1] * w[1]) + crate::potentials::penalty_value(&pen, &w);
                let p = (-u).exp();
                z += p;
                acc += p * classification_accuracy(&w, &ds.x, &ds.y).unwrap();
            }
        }
        acc / z
    }

    #[test]
    fn chains_reproduce_posterior_accuracy() {
        let ds = toy();
        for kind in ["logistic_det", "logistic_gauss"] {
            let mut s = spec(kind, "anchored", "mu = 0.2\nn_mc = 20\nn_repeats = 48\nm0 = 0.1\nlambda = 0.5\n");
            s.n_steps = 2000;
            let want = posterior_accuracy(&s, &ds);
            let got = run_logistic_experiment(&s, &ds).unwrap().primary().tail_mean(0.5);
            assert!((got - want).abs() < 0.03, "{kind}: chains {got}, quadrature {want}");
        }
    }

    #[test]
    fn deterministic_surrogate_lies_above_l1() {
        // exponent g - g_eps is non-positive for the l1 surrogate
        let ds = toy();
        let oracle = logistic_oracle(&spec("logistic_det", "anchored", ""), &ds).unwrap();
        let mut rng = RngStream::new(0, 0);
        let mut g = [0.0; 2];
        for x in [[0.0, 0.0], [1.0, -3.0], [1e-3, 2.0]] {
            assert!(oracle.eval(&x, &mut rng, true, &mut g) <= 0.0);
        }
    }
}
