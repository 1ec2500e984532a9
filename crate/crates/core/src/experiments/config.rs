//! Experiment descriptions read from TOML.
//!
//! A run file holds either one `[experiment]` table or an `[[experiment]]`
//! array. A suite file may also carry top-level `mu` and `eta` lists; every
//! experiment that leaves those keys out is expanded over the grid.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::potentials::PenaltyKind;
use crate::samplers::SamplerKind;

use super::data::DatasetFormat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Laplace1d,
    LaplaceMd,
    LogisticDet,
    LogisticGauss,
    Neuralnet,
    Heavytail,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Laplace1d => "laplace1d",
            Self::LaplaceMd => "laplace_md",
            Self::LogisticDet => "logistic_det",
            Self::LogisticGauss => "logistic_gauss",
            Self::Neuralnet => "neuralnet",
            Self::Heavytail => "heavytail",
        })
    }
}

/// Distribution of the initial iterate, written `gaussian(var)`,
/// `uniform(lo, hi)` or `laplace(loc, scale)`; applied coordinatewise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Prior {
    Gaussian { var: f64 },
    Uniform { lo: f64, hi: f64 },
    Laplace { loc: f64, scale: f64 },
}

impl Prior {
    pub fn sample(&self, rng: &mut RngStream, d: usize) -> Vec<f64> {
        (0..d)
            .map(|_| match *self {
                Prior::Gaussian { var } => var.sqrt() * rng.normal(),
                Prior::Uniform { lo, hi } => lo + (hi - lo) * rng.uniform(),
                Prior::Laplace { loc, scale } => rng.laplace(loc, scale),
            })
            .collect()
    }
}

impl FromStr for Prior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Spec(format!("cannot parse prior {s:?}; expected gaussian(var), uniform(lo,hi) or laplace(loc,scale)"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = s[..open].trim().to_ascii_lowercase();
        let args: Vec<f64> = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let prior = match (name.as_str(), args.as_slice()) {
            ("gaussian" | "normal", [var]) => Prior::Gaussian { var: *var },
            ("uniform", [lo, hi]) => Prior::Uniform { lo: *lo, hi: *hi },
            ("laplace", [loc, scale]) => Prior::Laplace { loc: *loc, scale: *scale },
            _ => return Err(bad()),
        };
        prior.validate()?;
        Ok(prior)
    }
}

impl Prior {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Prior::Gaussian { var } => var > 0.0 && var.is_finite(),
            Prior::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Prior::Laplace { loc, scale } => loc.is_finite() && scale > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Spec(format!("invalid prior parameters in {self}")))
        }
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Prior::Gaussian { var } => write!(f, "gaussian({var})"),
            Prior::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Prior::Laplace { loc, scale } => write!(f, "laplace({loc},{scale})"),
        }
    }
}

impl TryFrom<String> for Prior {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Prior> for String {
    fn from(p: Prior) -> String {
        p.to_string()
    }
}

/// How the Gaussian smoothing of the rough part is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingMode {
    #[default]
    MonteCarlo,
    /// Exact smoothing; available for the univariate Laplace target only.
    ClosedForm,
}

fn default_n_mc() -> usize {
    500
}
fn one() -> usize {
    1
}
fn default_chains() -> usize {
    5000
}
fn default_d() -> usize {
    1
}
fn default_iota() -> f64 {
    2.0
}
fn default_beta() -> f64 {
    1.0
}
fn default_lambda() -> f64 {
    1.0
}
fn default_a() -> f64 {
    10.0
}
fn default_epsilon() -> f64 {
    0.5
}
fn default_trim() -> f64 {
    0.01
}
fn default_true() -> bool {
    true
}
fn default_hidden() -> usize {
    32
}
fn default_clamp() -> f64 {
    crate::samplers::DEFAULT_CLAMP
}

/// One experiment. Every key has a default except `kind`, `sampler`, `eta`
/// and `n_steps`; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Row label in tables and output directory name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub kind: ExperimentKind,
    pub sampler: SamplerKind,
    pub eta: f64,
    /// Gaussian smoothing scale; required by every kind except `heavytail`
    /// and `logistic_det`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    #[serde(default)]
    pub smoothing: SmoothingMode,
    /// Draw the value and gradient Monte Carlo batches independently.
    #[serde(default = "default_true")]
    pub independent_batches: bool,
    pub n_steps: usize,
    #[serde(default = "one")]
    pub n_repeats: usize,
    /// Particles per repeat for the distribution-matching experiments.
    #[serde(default = "default_chains")]
    pub n_chains: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub record_every: usize,
    /// Initial distribution; see [`ExperimentSpec::initial_distribution`]
    /// for the per-kind default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Prior>,

    #[serde(default = "default_d")]
    pub d: usize,
    /// Correlation placed on entries (1,2) and (2,1) of Σ.
    #[serde(default)]
    pub rho: f64,
    /// Full covariance, row by row; overrides `rho`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_iota")]
    pub iota: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub penalty: PenaltyKind,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    /// Ridge weight `m0‖x‖²` added to the loss.
    #[serde(default)]
    pub m0: f64,
    /// Deterministic smoothing width for `logistic_det`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_clamp")]
    pub clamp: f64,

    /// W2 level for the iterations-to-threshold statistic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// End each repeat as soon as it crosses the threshold.
    #[serde(default)]
    pub stop_at_threshold: bool,
    /// Skip the remaining repeats once one misses the threshold; the mean
    /// is infinite from then on.
    #[serde(default)]
    pub stop_after_miss: bool,
    #[serde(default = "default_trim")]
    pub trim: f64,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<DatasetFormat>,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
}

impl ExperimentSpec {
    pub fn from_toml_str(s: &str) -> Result<Vec<Self>> {
        parse_experiments(s, None)
    }

    pub fn load(path: &Path) -> Result<Vec<Self>> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut specs = parse_experiments(&text, Some(path))?;
        // datasets are resolved relative to the file that names them
        if let Some(dir) = path.parent() {
            for s in &mut specs {
                if let Some(p) = &s.dataset {
                    if p.is_relative() && !p.exists() {
                        s.dataset = Some(dir.join(p));
                    }
                }
            }
        }
        Ok(specs)
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Wrap<'a> {
            experiment: &'a ExperimentSpec,
        }
        toml::to_string(&Wrap { experiment: self }).expect("spec serializes")
    }

    /// `prior` if given, else N(0, 10) for the sampling targets,
    /// Laplace(0, 2) for logistic regression and N(0, 4) for the network.
    pub fn initial_distribution(&self) -> Prior {
        self.prior.unwrap_or(match self.kind {
            ExperimentKind::LogisticDet | ExperimentKind::LogisticGauss => Prior::Laplace { loc: 0.0, scale: 2.0 },
            ExperimentKind::Neuralnet => Prior::Gaussian { var: 4.0 },
            _ => Prior::Gaussian { var: 10.0 },
        })
    }

    pub fn smoothing_mu(&self) -> Result<f64> {
        self.mu
            .ok_or_else(|| Error::Spec(format!("{} needs a smoothing scale `mu`", self.kind)))
    }

    /// Covariance of the multivariate Laplace target.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        match &self.sigma {
            Some(rows) => {
                if rows.len() != self.d || rows.iter().any(|r| r.len() != self.d) {
                    return Err(Error::Spec(format!("sigma must be {0}×{0}", self.d)));
                }
                Ok(DMatrix::from_fn(self.d, self.d, |i, j| rows[i][j]))
            }
            None => {
                let mut s = DMatrix::identity(self.d, self.d);
                if self.d >= 2 {
                    s[(0, 1)] = self.rho;
                    s[(1, 0)] = self.rho;
                } else if self.rho != 0.0 {
                    return Err(Error::Spec("rho needs d ≥ 2".into()));
                }
                Ok(s)
            }
        }
    }

    /// Default row label: sampler name plus the distinguishing target
    /// parameters.
    pub fn row_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let name = match self.sampler {
            SamplerKind::Ula => "LD",
            SamplerKind::Anchored => "Anchored LD",
            SamplerKind::TimeChange => "Time-change LD",
        };
        match self.kind {
            ExperimentKind::LaplaceMd if self.sigma.is_some() => format!("{name}, custom sigma"),
            ExperimentKind::LaplaceMd => format!("{name}, rho = {}", self.rho),
            ExperimentKind::LogisticDet | ExperimentKind::LogisticGauss => format!("{name}, {}", self.penalty),
            _ => name.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Spec(m));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return fail(format!("eta must be positive, got {}", self.eta));
        }
        if self.n_steps == 0 {
            return fail("n_steps must be positive".into());
        }
        if self.record_every == 0 || self.n_steps % self.record_every != 0 {
            return fail(format!("record_every ({}) must divide n_steps ({})", self.record_every, self.n_steps));
        }
        if self.n_repeats == 0 {
            return fail("n_repeats must be positive".into());
        }
        if self.n_mc == 0 {
            return fail("n_mc must be positive".into());
        }
        if !(self.clamp > 0.0) {
            return fail(format!("clamp must be positive, got {}", self.clamp));
        }
        if !(0.0..0.5).contains(&self.trim) {
            return fail(format!("trim must lie in [0, 0.5), got {}", self.trim));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0) {
                return fail(format!("threshold must be positive, got {t}"));
            }
        } else if self.stop_at_threshold || self.stop_after_miss {
            return fail("stop_at_threshold and stop_after_miss need a threshold".into());
        }
        self.initial_distribution().validate()?;
        let needs_mu = !matches!(self.kind, ExperimentKind::Heavytail | ExperimentKind::LogisticDet);
        if needs_mu {
            let mu = self.smoothing_mu()?;
            if !(mu > 0.0 && mu.is_finite()) {
                return fail(format!("mu must be positive, got {mu}"));
            }
        }
        if self.smoothing == SmoothingMode::ClosedForm && self.kind != ExperimentKind::Laplace1d {
            return fail(format!("closed-form smoothing is only available for laplace1d, not {}", self.kind));
        }
        match self.kind {
            ExperimentKind::Laplace1d | ExperimentKind::LaplaceMd | ExperimentKind::Heavytail => {
                if self.n_chains < 10 {
                    return fail(format!("n_chains must be at least 10, got {}", self.n_chains));
                }
            }
            _ => {}
        }
        match self.kind {
            ExperimentKind::Laplace1d if self.d != 1 => fail(format!("laplace1d needs d = 1, got {}", self.d)),
            ExperimentKind::LaplaceMd => {
                if self.d < 2 {
                    return fail(format!("laplace_md needs d ≥ 2, got {}", self.d));
                }
                if self.sigma.is_none() && !(self.rho.abs() < 1.0) {
                    return fail(format!("rho must lie in (-1, 1), got {}", self.rho));
                }
                self.covariance()?;
                Ok(())
            }
            ExperimentKind::Heavytail => {
                if self.d == 0 {
                    return fail("d must be positive".into());
                }
                if !(self.iota > 1.0 + self.d as f64 / 2.0) {
                    return fail(format!("iota must exceed 1 + d/2 = {}, got {}", 1.0 + self.d as f64 / 2.0, self.iota));
                }
                if !(self.beta > self.d as f64 / 2.0) {
                    return fail(format!("beta must exceed d/2 = {}, got {}", self.d as f64 / 2.0, self.beta));
                }
                Ok(())
            }
            ExperimentKind::LogisticDet | ExperimentKind::LogisticGauss | ExperimentKind::Neuralnet => {
                if self.dataset.is_none() {
                    return fail(format!("{} needs a dataset path", self.kind));
                }
                if self.sampler == SamplerKind::TimeChange && self.kind == ExperimentKind::Neuralnet {
                    return fail("the network experiment supports ula and anchored only".into());
                }
                if !(self.lambda >= 0.0) || !(self.m0 >= 0.0) {
                    return fail("lambda and m0 must be non-negative".into());
                }
                if matches!(self.penalty, PenaltyKind::Scad | PenaltyKind::Mcp) && !(self.a > 1.0) {
                    return fail(format!("a must exceed 1, got {}", self.a));
                }
                if self.kind == ExperimentKind::LogisticDet && !(self.epsilon > 0.0) {
                    return fail(format!("epsilon must be positive, got {}", self.epsilon));
                }
                if self.kind == ExperimentKind::Neuralnet && self.hidden == 0 {
                    return fail("hidden must be positive".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Parses a run or suite file. Grid expansion happens before typing, so an
/// experiment may omit `mu` and `eta` when the file provides lists.
fn parse_experiments(text: &str, path: Option<&Path>) -> Result<Vec<ExperimentSpec>> {
    let where_ = || path.map(|p| format!("{}: ", p.display())).unwrap_or_default();
    let mut root: toml::Table = toml::from_str(text).map_err(|e| Error::Spec(format!("{}{e}", where_())))?;
    let grid_mu = take_list(&mut root, "mu")?;
    let grid_eta = take_list(&mut root, "eta")?;
    let entries = match root.remove("experiment") {
        Some(toml::Value::Table(t)) => vec![t],
        Some(toml::Value::Array(a)) => a
            .into_iter()
            .map(|v| match v {
                toml::Value::Table(t) => Ok(t),
                _ => Err(Error::Spec("[[experiment]] entries must be tables".into())),
            })
            .collect::<Result<_>>()?,
        Some(_) => return Err(Error::Spec("`experiment` must be a table".into())),
        None => return Err(Error::Spec(format!("{}no [experiment] section", where_()))),
    };
    if let Some(k) = root.keys().next() {
        return Err(Error::Spec(format!("{}unknown top-level key `{k}`", where_())));
    }
    let mut out = Vec::new();
    for entry in entries {
        let mus = grid_values(&entry, "mu", &grid_mu);
        let etas = grid_values(&entry, "eta", &grid_eta);
        for mu in &mus {
            for eta in &etas {
                let mut e = entry.clone();
                if let Some(v) = mu {
                    e.insert("mu".into(), toml::Value::Float(*v));
                }
                if let Some(v) = eta {
                    e.insert("eta".into(), toml::Value::Float(*v));
                }
                let spec: ExperimentSpec = toml::Value::Table(e)
                    .try_into()
                    .map_err(|err: toml::de::Error| Error::Spec(format!("{}{}", where_(), err.message())))?;
                spec.validate()?;
                out.push(spec);
            }
        }
    }
    Ok(out)
}

fn take_list(root: &mut toml::Table, key: &str) -> Result<Vec<f64>> {
    match root.remove(key) {
        None => Ok(vec![]),
        Some(toml::Value::Array(a)) => a
            .iter()
            .map(|v| match v {
                toml::Value::Float(f) => Ok(*f),
                toml::Value::Integer(i) => Ok(*i as f64),
                _ => Err(Error::Spec(format!("`{key}` list must hold numbers"))),
            })
            .collect(),
        Some(_) => Err(Error::Spec(format!("top-level `{key}` must be a list"))),
    }
}

/// Values an entry takes for a grid key: its own value if present,
/// otherwise every grid value, otherwise nothing to insert.
fn grid_values(entry: &toml::Table, key: &str, grid: &[f64]) -> Vec<Option<f64>> {
    if entry.contains_key(key) || grid.is_empty() {
        vec![None]
    } else {
        grid.iter().map(|v| Some(*v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [experiment]
        kind = "laplace1d"
        sampler = "anchored"
        eta = 0.5
        mu = 1.0
        n_steps = 20
    "#;

    #[test]
    fn defaults_are_filled() {
        let s = &ExperimentSpec::from_toml_str(MINIMAL).unwrap()[0];
        assert_eq!(s.n_mc, 500);
        assert_eq!(s.n_chains, 5000);
        assert_eq!(s.initial_distribution(), Prior::Gaussian { var: 10.0 });
        assert_eq!(s.trim, 0.01);
        assert!(s.independent_batches);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\nstepsize = 3\n");
        let err = ExperimentSpec::from_toml_str(&text).unwrap_err();
        assert!(err.is_spec(), "{err}");
        assert!(err.to_string().contains("stepsize"));
    }

    #[test]
    fn missing_mu_is_a_spec_error() {
        let text = MINIMAL.replace("mu = 1.0", "");
        assert!(ExperimentSpec::from_toml_str(&text).unwrap_err().is_spec());
    }

    #[test]
    fn heavytail_condition_is_checked() {
        let text = r#"
            [experiment]
            kind = "heavytail"
            sampler = "anchored"
            eta = 0.01
            n_steps = 10
            iota = 1.4
        "#;
        assert!(ExperimentSpec::from_toml_str(text).unwrap_err().is_spec());
    }

    #[test]
    fn priors_round_trip() {
        for p in ["gaussian(10)", "uniform(-5,5)", "laplace(0,2)"] {
            let prior: Prior = p.parse().unwrap();
            assert_eq!(prior.to_string().parse::<Prior>().unwrap(), prior);
        }
        assert_eq!("uniform(-5, 5)".parse::<Prior>().unwrap(), Prior::Uniform { lo: -5.0, hi: 5.0 });
        for bad in ["gaussian(-1)", "uniform(3,1)", "cauchy(0,1)", "gaussian", "laplace(0)"] {
            assert!(bad.parse::<Prior>().is_err(), "{bad}");
        }
    }

    #[test]
    fn grid_expansion_fills_missing_keys_only() {
        let text = r#"
            mu = [1, 2, 3]
            eta = [0.1, 0.5]
            [[experiment]]
            kind = "laplace1d"
            sampler = "anchored"
            n_steps = 10
            [[experiment]]
            kind = "laplace1d"
            sampler = "ula"
            mu = 2.0
            n_steps = 10
        "#;
        let specs = ExperimentSpec::from_toml_str(text).unwrap();
        assert_eq!(specs.len(), 6 + 2);
        assert!(specs[6..].iter().all(|s| s.mu == Some(2.0)));
        assert_eq!(specs[0].mu, Some(1.0));
        assert_eq!(specs[1].eta, 0.5);
    }

    #[test]
    fn echo_round_trips() {
        let s = ExperimentSpec::from_toml_str(MINIMAL).unwrap().remove(0);
        let back = ExperimentSpec::from_toml_str(&s.to_toml()).unwrap().remove(0);
        assert_eq!(s, back);
    }

    #[test]
    fn covariance_from_rho() {
        let mut s = ExperimentSpec::from_toml_str(MINIMAL).unwrap().remove(0);
        s.kind = ExperimentKind::LaplaceMd;
        s.d = 3;
        s.rho = 0.5;
        let c = s.covariance().unwrap();
        assert_eq!(c[(0, 1)], 0.5);
        assert_eq!(c[(1, 0)], 0.5);
        assert_eq!(c[(1, 2)], 0.0);
        assert_eq!(c[(2, 2)], 1.0);
    }

    #[test]
    fn record_every_must_divide() {
        let text = MINIMAL.replace("n_steps = 20", "n_steps = 20\nrecord_every = 3");
        assert!(ExperimentSpec::from_toml_str(&text).is_err());
    }
}
