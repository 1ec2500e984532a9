//! Sample containers and distances to reference distributions.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{integrate, QuantileFn};
use crate::potentials::sigmoid;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SampleMeta {
    pub sampler: String,
    pub seed: u64,
    pub steps: usize,
    pub eta: f64,
    pub mu: Option<f64>,
    pub n_mc: Option<usize>,
}

/// Row-major n×d sample matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    d: usize,
    data: Vec<f64>,
    pub meta: SampleMeta,
}

impl SampleSet {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            data: Vec::new(),
            meta: SampleMeta::default(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or_else(|| Error::Size("no rows".into()))?;
        let mut s = Self::new(d);
        for r in rows {
            s.push(r)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.d {
            return Err(Error::Shape(format!("row of length {} in a {}-column sample", row.len(), self.d)));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("sample entries must be finite".into()));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.data.len() / self.d
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.d.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Reference quantiles `Q(i/n)` for the kept order statistics
/// `trim·n < i ≤ (1-trim)·n`, evaluated once and reused across samples of
/// the same size. With `trim = 0` the point `i = n` is dropped when `Q(1)`
/// is infinite, as it is for every unbounded target.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileGrid {
    n: usize,
    first: usize,
    values: Vec<f64>,
}

impl QuantileGrid {
    pub fn new(q: &QuantileFn, n: usize, trim: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&trim) {
            return Err(Error::Domain(format!("trim fraction must lie in [0, 0.5), got {trim}")));
        }
        if n < 10 {
            return Err(Error::Size(format!("need at least 10 points, got {n}")));
        }
        let nf = n as f64;
        let (lo, hi) = (trim * nf, (1.0 - trim) * nf);
        let drop_last = trim == 0.0 && !q.eval(1.0).is_finite();
        let kept: Vec<usize> = (1..=n)
            .filter(|&i| (i as f64) > lo && (i as f64) <= hi && !(drop_last && i == n))
            .collect();
        if kept.is_empty() {
            return Err(Error::Size("no points left after trimming".into()));
        }
        Ok(Self {
            n,
            first: kept[0],
            values: kept.iter().map(|&i| q.eval(i as f64 / nf)).collect(),
        })
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// Trimmed W2 of `sample` (which must have the grid's size).
    pub fn w2(&self, sample: &[f64]) -> Result<f64> {
        if sample.len() != self.n {
            return Err(Error::Shape(format!("grid built for {} points, sample has {}", self.n, sample.len())));
        }
        let xs = sorted(sample);
        let acc: f64 = xs[self.first - 1..]
            .iter()
            .zip(&self.values)
            .map(|(x, q)| (x - q).powi(2))
            .sum();
        Ok((acc / self.values.len() as f64).sqrt())
    }
}

/// Root-mean-square gap between the order statistics `X_(i)` and the
/// reference quantiles `Q(i/n)`, keeping only `trim·n < i ≤ (1-trim)·n`.
/// The trim applies to the shared index set, so sample and quantile grid
/// are cut at the same positions.
pub fn w2_1d_trimmed(sample: &[f64], q: &QuantileFn, trim: f64) -> Result<f64> {
    QuantileGrid::new(q, sample.len(), trim)?.w2(sample)
}

/// Sliced W2 from per-axis quantile grids.
pub fn sliced_w2_grid(samples: &SampleSet, grids: &[QuantileGrid]) -> Result<f64> {
    if grids.len() != samples.dim() || samples.dim() == 0 {
        return Err(Error::Shape(format!("{} quantile grids for {}-dimensional samples", grids.len(), samples.dim())));
    }
    let mut acc = 0.0;
    for (j, g) in grids.iter().enumerate() {
        acc += g.w2(&samples.column(j))?.powi(2);
    }
    Ok((acc / grids.len() as f64).sqrt())
}

/// Sliced W2 with the coordinate axes as the L = d projection directions.
pub fn sliced_w2(samples: &SampleSet, marginals: &[QuantileFn], trim: f64) -> Result<f64> {
    if marginals.len() != samples.dim() || samples.dim() == 0 {
        return Err(Error::Shape(format!(
            "{} marginal quantile functions for {}-dimensional samples",
            marginals.len(),
            samples.dim()
        )));
    }
    let mut acc = 0.0;
    for (j, q) in marginals.iter().enumerate() {
        acc += w2_1d_trimmed(&samples.column(j), q, trim)?.powi(2);
    }
    Ok((acc / marginals.len() as f64).sqrt())
}

/// Fraction of rows whose prediction `sigmoid(x_iᵀw) ≥ 0.5` matches the label.
pub fn classification_accuracy(weights: &[f64], features: &DMatrix<f64>, labels: &[f64]) -> Result<f64> {
    if features.ncols() != weights.len() || features.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{}x{} features, {} weights, {} labels",
            features.nrows(),
            features.ncols(),
            weights.len(),
            labels.len()
        )));
    }
    let correct = (0..features.nrows())
        .filter(|&i| {
            let z: f64 = features.row(i).iter().zip(weights).map(|(a, b)| a * b).sum();
            let pred = if sigmoid(z) >= 0.5 { 1.0 } else { 0.0 };
            pred == labels[i]
        })
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Total variation between the sample histogram on `bins` equal cells of
/// `range` and the density's mass on the same cells. Points outside the
/// range count toward neither side.
pub fn tv_histogram(sample: &[f64], density: impl Fn(f64) -> f64, bins: usize, range: (f64, f64)) -> Result<f64> {
    let (a, b) = range;
    if bins < 2 {
        return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
    }
    if !(b > a) {
        return Err(Error::Domain(format!("empty range [{a}, {b}]")));
    }
    if sample.is_empty() {
        return Err(Error::Size("empty sample".into()));
    }
    let width = (b - a) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in sample {
        if x >= a && x < b {
            counts[(((x - a) / width) as usize).min(bins - 1)] += 1;
        } else if x == b {
            counts[bins - 1] += 1;
        }
    }
    let n = sample.len() as f64;
    let tv = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let lo = a + k as f64 * width;
            let mass = integrate(&density, lo, lo + width, 1e-12);
            (c as f64 / n - mass).abs()
        })
        .sum::<f64>();
    Ok(0.5 * tv)
}

/// W2 between two equal-size empirical measures on the line: the sorted
/// coupling is optimal, so this is the RMS of sorted differences.
pub fn brute_force_w2_discrete(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape(format!("lengths {} and {} must match and be positive", a.len(), b.len())));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    let ms = sa.iter().zip(&sb).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
    Ok(ms.sqrt())
}
