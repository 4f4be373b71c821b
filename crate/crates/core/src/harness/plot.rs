use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::record::{RecordRow, RunRecord};
use super::HarnessError;

/// One aligned point of a seed-averaged curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub request_count: u64,
    pub seeds: usize,
    pub success_mean: f64,
    /// Sample standard error over seeds; zero for a single seed.
    pub success_stderr: f64,
    pub cost_mean: f64,
    /// Mean histogram over the seeds whose window was non-empty.
    pub frac_i: Option<f64>,
    pub frac_ii: Option<f64>,
    pub frac_iii: Option<f64>,
    pub frac_iv: Option<f64>,
}

/// Seed-averaged curve of one (method, teacher, setting) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn nearest(rows: &[RecordRow], target: u64) -> &RecordRow {
    rows.iter().min_by_key(|r| r.request_count.abs_diff(target)).expect("non-empty run")
}

/// Groups runs and aligns every seed onto the evaluation points of its
/// longest run by nearest request count.
pub fn aggregate(records: &[RunRecord]) -> Vec<Curve> {
    let mut groups: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.rows.is_empty()) {
        let f = &r.rows[0];
        groups.entry(format!("{}_{}_{}", f.method, f.teacher.name(), f.setting.name())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(label, runs)| {
            let grid = runs.iter().rev().max_by_key(|r| r.rows.len()).unwrap();
            let points = grid
                .rows
                .iter()
                .map(|g| {
                    let rows: Vec<&RecordRow> = runs.iter().map(|r| nearest(&r.rows, g.request_count)).collect();
                    let succ: Vec<f64> = rows.iter().map(|r| r.success_rate).collect();
                    let cost: Vec<f64> = rows.iter().map(|r| r.total_cost.parse::<f64>().unwrap_or(f64::NAN)).collect();
                    let frac = |get: fn(&RecordRow) -> Option<f64>| {
                        let v: Vec<f64> = rows.iter().filter_map(|r| get(r)).collect();
                        (!v.is_empty()).then(|| mean_stderr(&v).0)
                    };
                    let (success_mean, success_stderr) = mean_stderr(&succ);
                    CurvePoint {
                        request_count: g.request_count,
                        seeds: rows.len(),
                        success_mean,
                        success_stderr,
                        cost_mean: mean_stderr(&cost).0,
                        frac_i: frac(|r| r.frac_i),
                        frac_ii: frac(|r| r.frac_ii),
                        frac_iii: frac(|r| r.frac_iii),
                        frac_iv: frac(|r| r.frac_iv),
                    }
                })
                .collect();
            Curve { label, points }
        })
        .collect()
}

/// Writes one `curve_<method>_<teacher>_<setting>.csv` per group into `dir`.
pub fn emit_plot_data(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(e.to_string()))?;
    let mut written = Vec::new();
    for curve in aggregate(records) {
        let path = dir.join(format!("curve_{}.csv", curve.label));
        let mut w = csv::Writer::from_path(&path)?;
        for p in &curve.points {
            w.serialize(p)?;
        }
        w.flush().map_err(|e| HarnessError::Io(e.to_string()))?;
        written.push(path);
    }
    Ok(written)
}
