//! CSV / JSON tables and atomic file output.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use dop_core::{CampaignReport, CellReport, EstimatorKind};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{FigurePlan, Format};

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("no figure datasets requested")]
    NothingRequested,
    #[error("report lacks grid cells: {}", format_missing(.0))]
    MissingCells(Vec<(String, usize)>),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn format_missing(cells: &[(String, usize)]) -> String {
    cells.iter().map(|(m, n)| format!("({m}, {n})")).collect::<Vec<_>>().join(", ")
}

/// Ten significant digits, fixed-point, no exponent.
pub fn fmt_sig10(x: f64) -> String {
    if !x.is_finite() {
        return "nan".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    // exponent after rounding to 10 significant digits
    let sci = format!("{x:.9e}");
    let exponent: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (9 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Text(String),
    Int(usize),
    Real(f64),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Text(s) => s.clone(),
            Field::Int(n) => n.to_string(),
            Field::Real(x) => fmt_sig10(*x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Field::render).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    /// Numbers are written as the same decimal strings as the CSV.
    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(|f| Value::String(f.render())).collect()))
            .collect();
        let doc = json!({ "name": self.name, "columns": self.columns, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> (String, String) {
        match format {
            Format::Csv => (format!("{}.csv", self.name), self.to_csv()),
            Format::Json => (format!("{}.json", self.name), self.to_json()),
        }
    }
}

fn real(x: Option<f64>) -> Field {
    Field::Real(x.unwrap_or(f64::NAN))
}

/// One row per (matrix, N, estimator) cell.
pub fn campaign_table(report: &CampaignReport) -> Table {
    let mut t = Table::new(
        "campaign",
        &[
            "matrix", "n", "estimator", "true_p2", "mean_p2", "var_p2", "n_times_var",
            "realization_count", "failures",
        ],
    );
    for c in &report.cells {
        t.rows.push(vec![
            Field::Text(c.matrix.clone()),
            Field::Int(c.n),
            Field::Text(c.estimator.name().into()),
            Field::Real(c.true_p2),
            real(c.mean_p2()),
            real(c.var_p2()),
            real(c.n_times_var()),
            Field::Int(c.realization_count),
            Field::Int(c.failures),
        ]);
    }
    t
}

const FIG_ORDER: [EstimatorKind; 3] =
    [EstimatorKind::FourImage, EstimatorKind::CorrelatedPair, EstimatorKind::Osci];

fn suffixed(prefix: &str) -> Vec<String> {
    FIG_ORDER.iter().map(|k| format!("{prefix}_{}", k.label())).collect()
}

fn with_columns(name: &str, lead: &[&str], prefix: &str) -> Table {
    let mut cols: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    cols.extend(suffixed(prefix));
    Table { name: name.into(), columns: cols, rows: vec![] }
}

fn lookup<'a>(
    report: &'a CampaignReport,
    m: &str,
    n: usize,
    missing: &mut Vec<(String, usize)>,
) -> Option<[&'a CellReport; 3]> {
    let cells: Vec<&CellReport> = FIG_ORDER.iter().filter_map(|&k| report.cell(m, n, k)).collect();
    let found = <[&CellReport; 3]>::try_from(cells).ok();
    if found.is_none() && !missing.iter().any(|(a, b)| a == m && *b == n) {
        missing.push((m.to_string(), n));
    }
    found
}

/// Builds the figure tables for `plan`, or reports every absent (matrix, N) pair.
pub fn figure_tables(report: &CampaignReport, plan: &FigurePlan) -> Result<Vec<Table>, EmitError> {
    if plan.is_empty() {
        return Err(EmitError::NothingRequested);
    }
    let mut missing: Vec<(String, usize)> = Vec::new();
    let mut tables = Vec::new();
    if let Some(n) = plan.overview_n {
        let mut means = with_columns("fig1", &["matrix_id", "true_p2"], "mean");
        let mut sds = with_columns("fig2", &["matrix_id"], "sd");
        for m in report.matrices() {
            if let Some(cells) = lookup(report, m, n, &mut missing) {
                let mut row = vec![Field::Text(m.into()), Field::Real(cells[0].true_p2)];
                row.extend(cells.iter().map(|c| real(c.mean_p2())));
                means.rows.push(row);
                let mut row = vec![Field::Text(m.into())];
                row.extend(cells.iter().map(|c| real(c.var_p2().map(f64::sqrt))));
                sds.rows.push(row);
            }
        }
        if means.rows.is_empty() {
            missing.push(("*".into(), n));
        }
        tables.push(means);
        tables.push(sds);
    }
    let ns: Vec<usize> = {
        let mut v: Vec<usize> = report.cells.iter().map(|c| c.n).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    for (k, m) in plan.sweep_matrices.iter().enumerate() {
        let mut means = with_columns(&format!("fig{}", 3 + 2 * k), &["n", "true_p2"], "mean");
        let mut nvars = with_columns(&format!("fig{}", 4 + 2 * k), &["n"], "n_var");
        if !report.cells.iter().any(|c| &c.matrix == m) {
            missing.push((m.clone(), 0));
        }
        for &n in &ns {
            if let Some(cells) = lookup(report, m, n, &mut missing) {
                let mut row = vec![Field::Int(n), Field::Real(cells[0].true_p2)];
                row.extend(cells.iter().map(|c| real(c.mean_p2())));
                means.rows.push(row);
                let mut row = vec![Field::Int(n)];
                row.extend(cells.iter().map(|c| real(c.n_times_var())));
                nvars.rows.push(row);
            }
        }
        tables.push(means);
        tables.push(nvars);
    }
    if !missing.is_empty() {
        return Err(EmitError::MissingCells(missing));
    }
    Ok(tables)
}

/// Writes every file to a temporary name first and renames once all writes succeed.
pub fn write_atomically(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>, EmitError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| EmitError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut staged = Vec::new();
    for (name, bytes) in files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, bytes) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(io_err(&tmp)(e));
        }
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::new();
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest).map_err(io_err(&dest))?;
        written.push(dest);
    }
    Ok(written)
}

/// Emits the figure datasets of `plan` into `output_dir`; nothing is written on error.
pub fn emit_figure_datasets(
    report: &CampaignReport,
    plan: &FigurePlan,
    output_dir: &Path,
    format: Format,
) -> Result<Vec<PathBuf>, EmitError> {
    let files: Vec<(String, Vec<u8>)> = figure_tables(report, plan)?
        .iter()
        .map(|t| {
            let (name, body) = t.render(format);
            (name, body.into_bytes())
        })
        .collect();
    write_atomically(output_dir, &files)
}
