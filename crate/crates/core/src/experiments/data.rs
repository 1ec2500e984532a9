//! Binary classification datasets.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    /// UCI breast cancer (diagnostic): ID, M/B diagnosis, 30 features.
    Wdbc,
    /// UCI banknote authentication: 4 features, then a 0/1 class.
    Banknote,
    /// Numeric columns with the 0/1 label last; a header row is skipped
    /// when its first field is not a number.
    Csv,
}

impl FromStr for DatasetFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wdbc" => Ok(Self::Wdbc),
            "banknote" => Ok(Self::Banknote),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Spec(format!("unknown dataset format {other:?}"))),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Wdbc => "wdbc",
            Self::Banknote => "banknote",
            Self::Csv => "csv",
        })
    }
}

/// Per-column affine map `z = (x - mean) / scale` applied at load time.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant columns.
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let (mut mean, mut scale) = (Vec::new(), Vec::new());
        for col in x.column_iter() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            mean.push(m);
            scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Self { mean, scale }
    }

    pub fn apply(&self, x: &mut DMatrix<f64>) {
        for (j, mut col) in x.column_iter_mut().enumerate() {
            col.iter_mut().for_each(|v| *v = (*v - self.mean[j]) / self.scale[j]);
        }
    }

    pub fn invert(&self, x: &mut DMatrix<f64>) {
        for (j, mut col) in x.column_iter_mut().enumerate() {
            col.iter_mut().for_each(|v| *v = *v * self.scale[j] + self.mean[j]);
        }
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    /// n × d feature matrix as used by the models.
    pub x: DMatrix<f64>,
    /// Labels in {0, 1}.
    pub y: Vec<f64>,
    /// Non-label columns in the file, identifier included (31 for WDBC).
    pub raw_dim: usize,
    pub standardization: Option<Standardization>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

pub fn load_dataset(path: &Path, format: DatasetFormat, standardize: bool) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_dataset(&text, &name, format, standardize).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Parses dataset text; errors carry 1-based row and column numbers.
pub fn parse_dataset(text: &str, name: &str, format: DatasetFormat, standardize: bool) -> Result<Dataset> {
    let perr = |message: String| Error::Parse {
        path: name.into(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (i, rec) in reader.records().enumerate() {
        let row_no = i + 1;
        let rec = rec.map_err(|e| perr(format!("row {row_no}: {e}")))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if format == DatasetFormat::Csv && i == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let expected = match format {
            DatasetFormat::Wdbc => Some(32),
            DatasetFormat::Banknote => Some(5),
            DatasetFormat::Csv => width,
        };
        if let Some(w) = expected {
            if rec.len() != w {
                return Err(perr(format!("row {row_no}: expected {w} columns, found {}", rec.len())));
            }
        } else if rec.len() < 2 {
            return Err(perr(format!("row {row_no}: need at least one feature and a label")));
        }
        width = Some(rec.len());
        let num = |j: usize| -> Result<f64> {
            let field = &rec[j];
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| perr(format!("row {row_no}, column {}: not a finite number: {field:?}", j + 1)))
        };
        let (features, label) = match format {
            DatasetFormat::Wdbc => {
                let label = match &rec[1] {
                    "M" => 1.0,
                    "B" => 0.0,
                    other => return Err(perr(format!("row {row_no}, column 2: diagnosis must be M or B, got {other:?}"))),
                };
                ((2..32).map(num).collect::<Result<Vec<_>>>()?, label)
            }
            DatasetFormat::Banknote | DatasetFormat::Csv => {
                let last = rec.len() - 1;
                let label = num(last)?;
                if label != 0.0 && label != 1.0 {
                    return Err(perr(format!("row {row_no}, column {}: label must be 0 or 1, got {label}", last + 1)));
                }
                ((0..last).map(num).collect::<Result<Vec<_>>>()?, label)
            }
        };
        rows.push(features);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(perr("no data rows".into()));
    }
    let d = rows[0].len();
    let mut x = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let standardization = standardize.then(|| {
        let s = Standardization::fit(&x);
        s.apply(&mut x);
        s
    });
    Ok(Dataset {
        name: name.to_string(),
        x,
        y: labels,
        raw_dim: if format == DatasetFormat::Wdbc { d + 1 } else { d },
        standardization,
    })
}
