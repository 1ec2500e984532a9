//! Iterations-to-threshold table: one row per sampler variant, grouped in
//! blocks by target, with smoothing scale μ × step size η columns.

use super::output::{csv_string, format_float};
use super::{ExperimentKind, ExperimentResult, ExperimentSpec};

pub const TABLE_MUS: [f64; 3] = [1.0, 2.0, 3.0];
pub const TABLE_ETAS: [f64; 2] = [0.1, 0.5];

fn block_label(spec: &ExperimentSpec) -> String {
    let base = match spec.kind {
        ExperimentKind::Laplace1d => "Univariate Laplace, d = 1".to_string(),
        ExperimentKind::LaplaceMd if spec.d == 2 => "Bivariate Laplace, d = 2".to_string(),
        ExperimentKind::LaplaceMd => format!("Multivariate Laplace, d = {}", spec.d),
        ExperimentKind::Heavytail => format!("Heavy-tailed, d = {}", spec.d),
        other => other.to_string(),
    };
    match spec.threshold {
        Some(t) => format!("{base}, epsilon = {t}"),
        None => base,
    }
}

fn column_name(mu: Option<f64>, eta: f64) -> String {
    match mu {
        Some(mu) => format!("mu={mu} eta={eta}"),
        None => format!("eta={eta}"),
    }
}

/// Table rows keep the order in which results first mention them. The six
/// standard columns always appear; other (μ, η) pairs are appended.
pub fn laplace_table_csv(results: &[ExperimentResult]) -> String {
    let mut columns: Vec<(Option<f64>, f64)> =
        TABLE_MUS.iter().flat_map(|&m| TABLE_ETAS.iter().map(move |&e| (Some(m), e))).collect();
    let mut rows: Vec<(String, String)> = Vec::new();
    let mut cells: Vec<((String, String), (Option<f64>, f64), f64)> = Vec::new();
    for r in results {
        let key = (block_label(&r.spec), r.spec.row_label());
        if !rows.contains(&key) {
            rows.push(key.clone());
        }
        let col = (r.spec.mu, r.spec.eta);
        if !columns.contains(&col) {
            columns.push(col);
        }
        if let Some(v) = r.iterations_to_threshold {
            if let Some(c) = cells.iter_mut().find(|c| c.0 == key && c.1 == col) {
                log::warn!("duplicate table cell for {} / {}; keeping the later result", key.0, key.1);
                c.2 = v;
            } else {
                cells.push((key, col, v));
            }
        }
    }
    let mut header = vec!["block".to_string(), "row".to_string()];
    header.extend(columns.iter().map(|&(m, e)| column_name(m, e)));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let body = rows.iter().map(|key| {
        let mut rec = vec![key.0.clone(), key.1.clone()];
        for col in &columns {
            rec.push(
                cells
                    .iter()
                    .find(|c| &c.0 == key && &c.1 == col)
                    .map_or_else(String::new, |c| format_float(c.2)),
            );
        }
        rec
    });
    csv_string(&header_refs, body)
}
