//! Result files. Floats carry 17 significant digits; infinities and NaN
//! are written as `inf`, `-inf` and `nan`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{laplace_table_csv, ExperimentResult, SeriesPoint};

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse_float(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t.parse().map_err(|_| Error::Spec(format!("not a number: {t:?}"))),
    }
}

pub(crate) fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn write(path: PathBuf, text: String) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `metrics.csv` (per-iteration mean, standard error and repeat
/// count for every metric), `long.csv` (one row per repeat and iteration),
/// `table.csv` (iterations to threshold in the μ × η layout), `spec.echo`
/// (the validated spec) and `summary.toml`. Returns the written paths.
pub fn emit_results(result: &ExperimentResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let metrics = result.series.iter().flat_map(|s| {
        s.summary().into_iter().map(move |p| {
            vec![s.name.clone(), p.iteration.to_string(), format_float(p.mean), format_float(p.stderr), p.n.to_string()]
        })
    });
    written.push(write(out_dir.join("metrics.csv"), csv_string(&["metric", "iteration", "mean", "stderr", "n"], metrics))?);

    let long = result.series.iter().flat_map(|s| {
        s.per_repeat.iter().enumerate().flat_map(move |(r, vals)| {
            s.iterations
                .iter()
                .zip(vals)
                .map(move |(it, v)| vec![s.name.clone(), r.to_string(), it.to_string(), format_float(*v)])
        })
    });
    written.push(write(out_dir.join("long.csv"), csv_string(&["metric", "repeat", "iteration", "value"], long))?);

    written.push(write(out_dir.join("table.csv"), laplace_table_csv(std::slice::from_ref(result)))?);

    let echo = format!("# alang {}\n{}", result.version, result.spec.to_toml());
    written.push(write(out_dir.join("spec.echo"), echo)?);

    written.push(write(out_dir.join("summary.toml"), summary_toml(result))?);
    Ok(written)
}

fn summary_toml(r: &ExperimentResult) -> String {
    let mut t = toml::Table::new();
    let f = |v: f64| toml::Value::String(format_float(v));
    t.insert("version".into(), r.version.clone().into());
    t.insert("wall_seconds".into(), f(r.wall_seconds));
    t.insert("metric".into(), r.primary().name.clone().into());
    t.insert("final".into(), f(r.final_metric()));
    t.insert("tail_mean_last_20_percent".into(), f(r.primary().tail_mean(0.2)));
    t.insert("clamp_count".into(), (r.clamp_count as i64).into());
    if let Some(v) = r.iterations_to_threshold {
        t.insert("iterations_to_threshold".into(), f(v));
        let hits: Vec<toml::Value> = r
            .threshold_hits
            .iter()
            .map(|h| h.map_or_else(|| "inf".to_string(), |v| v.to_string()).into())
            .collect();
        t.insert("threshold_hits".into(), hits.into());
    }
    if let Some(d) = &r.dataset {
        t.insert("dataset".into(), toml::Value::try_from(d).expect("plain struct"));
    }
    toml::to_string(&t).expect("summary serializes")
}

/// Reads `metrics.csv` back as `(metric, point)` pairs.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<(String, SeriesPoint)>> {
    let perr = |m: String| Error::Parse {
        path: path.to_path_buf(),
        message: m,
    };
    let mut rd = csv::Reader::from_path(path).map_err(|e| perr(e.to_string()))?;
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| perr(format!("row {}: {e}", i + 2)))?;
        if rec.len() != 5 {
            return Err(perr(format!("row {}: expected 5 fields", i + 2)));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| perr(format!("row {}: bad integer {s:?}", i + 2)));
        out.push((
            rec[0].to_string(),
            SeriesPoint {
                iteration: int(&rec[1])?,
                mean: parse_float(&rec[2])?,
                stderr: parse_float(&rec[3])?,
                n: int(&rec[4])?,
            },
        ));
    }
    Ok(out)
}
