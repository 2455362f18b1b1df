use std::fmt::Write as _;
use std::path::Path;

use crate::inference::Interval;
use crate::simgen::Scenario;

use super::study::{Estimator, ReplicationRecord};
use super::HarnessError;

/// Accuracy and inference summary of one estimator over replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub bias: f64,
    pub rmse: f64,
    pub mae: f64,
    pub coverage: f64,
    pub ci_width: f64,
    pub count: usize,
}

/// Bias, RMSE, median absolute error, coverage and mean width.
pub fn summarize(estimates: &[f64], intervals: &[Interval], theta_star: f64) -> Result<Metrics, HarnessError> {
    if estimates.is_empty() || intervals.len() != estimates.len() {
        return Err(HarnessError::NoData);
    }
    let m = estimates.len() as f64;
    let bias = estimates.iter().map(|e| e - theta_star).sum::<f64>() / m;
    let rmse = (estimates.iter().map(|e| (e - theta_star).powi(2)).sum::<f64>() / m).sqrt();
    let mut abs: Vec<f64> = estimates.iter().map(|e| (e - theta_star).abs()).collect();
    abs.sort_by(f64::total_cmp);
    let k = abs.len();
    let mae = if k % 2 == 1 {
        abs[k / 2]
    } else {
        0.5 * (abs[k / 2 - 1] + abs[k / 2])
    };
    let coverage = intervals.iter().filter(|iv| iv.contains(theta_star)).count() as f64 / m;
    let ci_width = intervals.iter().map(Interval::width).sum::<f64>() / m;
    Ok(Metrics {
        bias,
        rmse,
        mae,
        coverage,
        ci_width,
        count: estimates.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub n: usize,
    pub scenario: Scenario,
    pub estimator: Estimator,
    pub metrics: Metrics,
    /// Replications of this cell left out because they were flagged.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn get(&self, n: usize, scenario: Scenario, estimator: Estimator) -> Option<&Metrics> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.scenario == scenario && r.estimator == estimator)
            .map(|r| &r.metrics)
    }

    pub fn excluded_total(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.estimator == Estimator::Or)
            .map(|r| r.excluded)
            .sum()
    }
}

/// Per-(sample size, scenario, estimator) metrics over the usable records.
/// Cells appear in the order they first occur in `records`.
pub fn compute_metrics(records: &[ReplicationRecord], theta_star: f64) -> Result<MetricsTable, HarnessError> {
    let mut cells: Vec<(usize, Scenario)> = Vec::new();
    for r in records {
        if !cells.contains(&(r.n, r.scenario)) {
            cells.push((r.n, r.scenario));
        }
    }
    let mut rows = Vec::new();
    for (n, scenario) in cells {
        let cell: Vec<&ReplicationRecord> = records.iter().filter(|r| r.n == n && r.scenario == scenario).collect();
        let ok: Vec<_> = cell
            .iter()
            .filter_map(|r| Some((r.bundle.as_ref()?, r.intervals.as_ref()?)))
            .collect();
        if ok.is_empty() {
            continue;
        }
        let excluded = cell.len() - ok.len();
        for estimator in Estimator::ALL {
            let est: Vec<f64> = ok.iter().map(|(b, _)| estimator.estimate(b)).collect();
            let ivs: Vec<Interval> = ok.iter().map(|(_, iv)| estimator.interval(iv)).collect();
            rows.push(MetricsRow {
                n,
                scenario,
                estimator,
                metrics: summarize(&est, &ivs, theta_star)?,
                excluded,
            });
        }
    }
    if rows.is_empty() {
        return Err(HarnessError::NoData);
    }
    Ok(MetricsTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

fn render_markdown(table: &MetricsTable) -> String {
    let mut out = String::new();
    let mut sizes: Vec<usize> = Vec::new();
    for r in &table.rows {
        if !sizes.contains(&r.n) {
            sizes.push(r.n);
        }
    }
    for n in sizes {
        let _ = writeln!(out, "### n = {n}\n");
        out.push_str("| Scenario | Estimator | Bias | RMSE | MAE | Coverage | CI Width |\n");
        out.push_str("|---|---|---:|---:|---:|---:|---:|\n");
        let mut last: Option<Scenario> = None;
        for r in table.rows.iter().filter(|r| r.n == n) {
            let label = if last == Some(r.scenario) {
                String::new()
            } else {
                r.scenario.label()
            };
            last = Some(r.scenario);
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "| {label} | {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.2} |",
                r.estimator, m.bias, m.rmse, m.mae, m.coverage, m.ci_width
            );
        }
        let excluded: usize = table
            .rows
            .iter()
            .filter(|r| r.n == n && r.estimator == Estimator::Or)
            .map(|r| r.excluded)
            .sum();
        let _ = writeln!(out, "\nExcluded replications: {excluded}\n");
    }
    out
}

/// Writes the table as CSV (full precision) or as a markdown report grouped
/// by sample size and scenario.
pub fn emit_report(table: &MetricsTable, format: ReportFormat, path: &Path) -> Result<(), HarnessError> {
    match format {
        ReportFormat::Markdown => std::fs::write(path, render_markdown(table))?,
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record([
                "n",
                "scenario",
                "estimator",
                "bias",
                "rmse",
                "mae",
                "coverage",
                "ci_width",
                "replications",
                "excluded",
            ])?;
            for r in &table.rows {
                let m = &r.metrics;
                w.write_record([
                    r.n.to_string(),
                    r.scenario.code(),
                    r.estimator.name().to_string(),
                    m.bias.to_string(),
                    m.rmse.to_string(),
                    m.mae.to_string(),
                    m.coverage.to_string(),
                    m.ci_width.to_string(),
                    m.count.to_string(),
                    r.excluded.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
