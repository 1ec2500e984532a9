//! Config-driven experiments: Laplace and heavy-tailed sampling, logistic
//! regression with sparse penalties and a two-layer ReLU network.

pub mod checks;
mod config;
mod data;
mod logistic;
mod nn;
mod output;
mod sampling;
mod table;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{ExperimentKind, ExperimentSpec, Prior, SmoothingMode};
pub use data::{load_dataset, parse_dataset, Dataset, DatasetFormat, Standardization};
pub use logistic::{logistic_oracle, run_logistic_experiment};
pub use nn::{run_nn_experiment, TwoLayerNet};
pub use output::{emit_results, format_float, parse_float, read_metrics_csv};
pub use sampling::{run_heavytail_experiment, run_laplace_experiment, sampling_oracle, w2_reference_grids};
pub use table::{laplace_table_csv, TABLE_ETAS, TABLE_MUS};

use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::samplers::{ChainState, DriftOracle};

/// Crate version plus the git revision the binary was built from.
pub fn version_string() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("ALANG_GIT_REV"))
}

/// Mean, standard error and count of one metric at one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub iteration: usize,
    pub mean: f64,
    /// Sample standard deviation over repeats divided by √n; NaN for n < 2.
    pub stderr: f64,
    pub n: usize,
}

/// One metric recorded at iterations `record_every, 2·record_every, …`.
/// `per_repeat[r][i]` is NaN once repeat `r` has stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    pub name: String,
    pub iterations: Vec<usize>,
    pub per_repeat: Vec<Vec<f64>>,
}

impl MetricSeries {
    pub fn new(name: &str, iterations: Vec<usize>) -> Self {
        Self {
            name: name.to_string(),
            iterations,
            per_repeat: Vec::new(),
        }
    }

    /// Mean over the repeats still running at each iteration.
    pub fn summary(&self) -> Vec<SeriesPoint> {
        self.iterations
            .iter()
            .enumerate()
            .map(|(i, &iteration)| {
                let vals: Vec<f64> = self.per_repeat.iter().map(|r| r[i]).filter(|v| !v.is_nan()).collect();
                let n = vals.len();
                let mean = if n == 0 { f64::NAN } else { vals.iter().sum::<f64>() / n as f64 };
                let stderr = if n < 2 {
                    f64::NAN
                } else {
                    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
                };
                SeriesPoint {
                    iteration,
                    mean,
                    stderr,
                    n,
                }
            })
            .collect()
    }

    /// Mean of the summary series over its last `fraction` of points.
    pub fn tail_mean(&self, fraction: f64) -> f64 {
        let s = self.summary();
        let k = ((s.len() as f64 * fraction).ceil() as usize).clamp(1, s.len().max(1));
        let tail: Vec<f64> = s[s.len() - k..].iter().map(|p| p.mean).filter(|v| !v.is_nan()).collect();
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub name: String,
    pub n: usize,
    pub dim: usize,
    pub raw_dim: usize,
    pub standardized: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    /// Primary metric first (W2 or accuracy), then any secondary ones.
    pub series: Vec<MetricSeries>,
    /// First recorded iteration below the threshold, per executed repeat.
    pub threshold_hits: Vec<Option<usize>>,
    /// Mean of `threshold_hits`; infinite when any repeat never crossed or
    /// was skipped after a miss. `None` without a threshold.
    pub iterations_to_threshold: Option<f64>,
    pub clamp_count: u64,
    pub wall_seconds: f64,
    pub version: String,
    pub dataset: Option<DatasetInfo>,
}

impl ExperimentResult {
    pub fn primary(&self) -> &MetricSeries {
        &self.series[0]
    }

    /// Mean of the primary metric at the last recorded iteration.
    pub fn final_metric(&self) -> f64 {
        self.primary().summary().last().map_or(f64::NAN, |p| p.mean)
    }

    /// First iteration at which the mean primary series is below `level`.
    pub fn mean_series_crossing(&self, level: f64) -> Option<usize> {
        first_below(&self.primary().summary().iter().map(|p| (p.iteration, p.mean)).collect::<Vec<_>>(), level)
    }
}

/// First iteration whose value is strictly below `level`.
pub fn first_below(points: &[(usize, f64)], level: f64) -> Option<usize> {
    points.iter().find(|(_, v)| *v < level).map(|(i, _)| *i)
}

/// Mean of per-repeat hits, infinite if any is missing or repeats were skipped.
pub(crate) fn mean_hits(hits: &[Option<usize>], n_repeats: usize) -> f64 {
    if hits.len() < n_repeats || hits.iter().any(Option::is_none) {
        return f64::INFINITY;
    }
    hits.iter().map(|h| h.unwrap() as f64).sum::<f64>() / hits.len() as f64
}

pub(crate) fn recorded_iterations(spec: &ExperimentSpec) -> Vec<usize> {
    (1..=spec.n_steps / spec.record_every).map(|k| k * spec.record_every).collect()
}

/// Oracle wrapper imposing the experiment's exponent clamp.
pub(crate) struct Clamped<'a> {
    pub inner: &'a dyn DriftOracle,
    pub bound: f64,
}

impl DriftOracle for Clamped<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &[f64], rng: &mut RngStream, need_exponent: bool, grad: &mut [f64]) -> f64 {
        self.inner.eval(x, rng, need_exponent, grad)
    }
    fn exponent_clamp(&self) -> f64 {
        self.bound
    }
}

/// Runs `n_repeats` single chains. Repeat `r` owns stream `(seed, r)`: it
/// first draws its initial point, then evolves. Each metric is evaluated
/// on the iterate at every recorded iteration. Returns the series and the
/// total clamp count.
pub(crate) fn run_single_chains(
    spec: &ExperimentSpec,
    oracle: &dyn DriftOracle,
    init: &(dyn Fn(&mut RngStream) -> Vec<f64> + Sync),
    metrics: &[(&str, &(dyn Fn(&[f64]) -> f64 + Sync))],
) -> Result<(Vec<MetricSeries>, u64)> {
    let iterations = recorded_iterations(spec);
    let runs: Vec<(Vec<Vec<f64>>, u64)> = (0..spec.n_repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::for_chain(spec.seed, r, 0, 1);
            let x0 = init(&mut rng);
            let mut state = ChainState::new(x0, rng);
            let mut out = vec![Vec::with_capacity(iterations.len()); metrics.len()];
            while state.k < spec.n_steps {
                state.step(spec.sampler, spec.eta, oracle)?;
                if state.k % spec.record_every == 0 {
                    for (m, (_, f)) in metrics.iter().enumerate() {
                        out[m].push(f(&state.x));
                    }
                }
            }
            Ok((out, state.clamp_count))
        })
        .collect::<Result<_>>()?;
    let mut series: Vec<MetricSeries> = metrics.iter().map(|(n, _)| MetricSeries::new(n, iterations.clone())).collect();
    let mut clamps = 0;
    for (vals, c) in runs {
        clamps += c;
        for (s, v) in series.iter_mut().zip(vals) {
            s.per_repeat.push(v);
        }
    }
    Ok((series, clamps))
}

/// Validates `spec` and dispatches on its kind.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::Laplace1d | ExperimentKind::LaplaceMd => run_laplace_experiment(spec),
        ExperimentKind::Heavytail => run_heavytail_experiment(spec),
        ExperimentKind::LogisticDet | ExperimentKind::LogisticGauss | ExperimentKind::Neuralnet => {
            let path = spec.dataset.as_ref().ok_or_else(|| Error::Spec("dataset path missing".into()))?;
            let format = spec.format.unwrap_or_else(|| guess_format(path));
            let ds = load_dataset(path, format, spec.standardize)?;
            if spec.kind == ExperimentKind::Neuralnet {
                run_nn_experiment(spec, &ds)
            } else {
                run_logistic_experiment(spec, &ds)
            }
        }
    }
}

fn guess_format(path: &std::path::Path) -> DatasetFormat {
    let name = path.file_name().map(|n| n.to_string_lossy().to_ascii_lowercase()).unwrap_or_default();
    if name.contains("wdbc") {
        DatasetFormat::Wdbc
    } else if name.contains("banknote") {
        DatasetFormat::Banknote
    } else {
        DatasetFormat::Csv
    }
}

pub(crate) fn finish(
    spec: &ExperimentSpec,
    series: Vec<MetricSeries>,
    threshold_hits: Vec<Option<usize>>,
    clamp_count: u64,
    start: Instant,
    dataset: Option<DatasetInfo>,
) -> ExperimentResult {
    let iterations_to_threshold = spec.threshold.map(|_| mean_hits(&threshold_hits, spec.n_repeats));
    ExperimentResult {
        spec: spec.clone(),
        series,
        threshold_hits,
        iterations_to_threshold,
        clamp_count,
        wall_seconds: start.elapsed().as_secs_f64(),
        version: version_string(),
        dataset,
    }
}
