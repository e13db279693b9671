//! Collation of a finished run directory: a pass/fail table, `report.json`, and plot-ready CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gkdv_core::io::{read_modulation_log, write_json};
use serde::{Deserialize, Serialize};

use crate::{Check, Comparison, LabError, LabResult};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
    pub informational_failed: usize,
    /// `diagnostics.json` of a stability run, including the I_η monotonicity verdict.
    pub diagnostics: Option<serde_json::Value>,
    pub plot_files: Vec<String>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

fn read_artifact(dir: &Path, name: &str) -> LabResult<String> {
    let p = dir.join(name);
    fs::read_to_string(&p).map_err(|_| LabError::MissingArtifact(p.display().to_string()))
}

fn parse_artifact<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> LabResult<T> {
    serde_json::from_str(&read_artifact(dir, name)?).map_err(|e| LabError::CorruptArtifact(format!("{}: {e}", dir.join(name).display())))
}

pub fn format_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(4).max(4);
    let mut out = format!("\n{:<width$}  {:>12}  {:>12}  {:>10}  pass\n", "name", "measured", "expected", "tol");
    for c in checks {
        let expected = match c.comparison {
            Comparison::Near => format!("{:.6e}", c.expected),
            Comparison::AtMost => "≤ tol".to_string(),
            Comparison::AtLeast => "≥ tol".to_string(),
        };
        let verdict = match (c.pass, c.informational) {
            (true, _) => "yes",
            (false, true) => "no (info)",
            (false, false) => "NO",
        };
        let pad = width - c.name.chars().count();
        let _ = writeln!(out, "{}{}  {:>12.4e}  {:>12}  {:>10.2e}  {verdict}", c.name, " ".repeat(pad), c.measured, expected, c.tol);
    }
    out
}

/// Reads `meta.json` and `checks.json` (both required), writes `report.json`, and, when the
/// run logged a modulation history, `plot.csv` with
/// `t, c, y_minus_c2t, ip_wQ, ip_wQp[, i_eta, d_i_eta_dt]` where `y_minus_c2t = y(t) − c(0)²t`.
/// A scatter residual curve is copied to `plot_residual.csv`.
pub fn report(dir: &Path) -> LabResult<Report> {
    if !dir.is_dir() {
        return Err(LabError::MissingArtifact(dir.display().to_string()));
    }
    let meta: serde_json::Value = parse_artifact(dir, "meta.json")?;
    let experiment = meta
        .pointer("/config/experiment")
        .and_then(|v| v.as_str())
        .ok_or_else(|| LabError::CorruptArtifact(format!("{}: no config.experiment", dir.join("meta.json").display())))?
        .to_string();
    let checks: Vec<Check> = parse_artifact(dir, "checks.json")?;
    let diagnostics = if dir.join("diagnostics.json").exists() { Some(parse_artifact(dir, "diagnostics.json")?) } else { None };

    let mut plot_files = Vec::new();
    if dir.join("modulation.csv").exists() {
        let rows = read_modulation_log(&dir.join("modulation.csv")).map_err(|e| LabError::CorruptArtifact(e.to_string()))?;
        let virial = if dir.join("i_eta.csv").exists() { Some(read_numeric_csv(&dir.join("i_eta.csv"), 3)?) } else { None };
        if let Some(v) = &virial {
            if v.len() != rows.len() {
                return Err(LabError::CorruptArtifact(format!("i_eta.csv has {} rows, modulation.csv {}", v.len(), rows.len())));
            }
        }
        let (c0, y0) = rows.first().map_or((0.0, 0.0), |r| (r[1], r[2]));
        let mut out = String::from("t,c,y_minus_c2t,ip_wQ,ip_wQp");
        out.push_str(if virial.is_some() { ",i_eta,d_i_eta_dt\n" } else { "\n" });
        for (k, r) in rows.iter().enumerate() {
            let mut cols = vec![r[0], r[1], r[2] - y0 - c0 * c0 * r[0], r[5], r[6]];
            if let Some(v) = &virial {
                cols.extend([v[k][1], v[k][2]]);
            }
            out.push_str(&cols.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        fs::write(dir.join("plot.csv"), out)?;
        plot_files.push("plot.csv".to_string());
    }
    for stem in ["scatter", "round_trip"] {
        let src = dir.join(format!("{stem}_residual.csv"));
        if src.exists() {
            let name = if stem == "scatter" { "plot_residual.csv".to_string() } else { format!("plot_{stem}_residual.csv") };
            fs::copy(&src, dir.join(&name))?;
            plot_files.push(name);
        }
    }

    let rep = Report {
        experiment,
        passed: checks.iter().filter(|c| c.pass).count(),
        failed: checks.iter().filter(|c| !c.ok()).count(),
        informational_failed: checks.iter().filter(|c| !c.pass && c.informational).count(),
        checks,
        diagnostics,
        plot_files,
    };
    write_json(&dir.join("report.json"), &rep)?;
    Ok(rep)
}

fn read_numeric_csv(path: &Path, width: usize) -> LabResult<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|_| LabError::MissingArtifact(path.display().to_string()))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let row: Vec<f64> = l
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| LabError::CorruptArtifact(format!("{}: {e}", path.display())))?;
            if row.len() == width {
                Ok(row)
            } else {
                Err(LabError::CorruptArtifact(format!("{}: row of width {}", path.display(), row.len())))
            }
        })
        .collect()
}
