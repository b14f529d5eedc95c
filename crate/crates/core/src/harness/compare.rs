use std::fmt::Write;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::output::write_atomic;
use crate::harness::ExperimentSummary;

/// One (policy, seed) row of the comparison table. Averages are final
/// values divided by `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub policy: String,
    pub seed: u64,
    pub violation_avg: f64,
    pub deterministic_regret_k1_avg: Option<f64>,
    pub realized_regret_k1_avg: Option<f64>,
    pub deterministic_regret_kt_avg: Option<f64>,
    pub wall_clock_s: Option<f64>,
}

#[derive(Deserialize)]
struct Timing {
    policy: String,
    seed: u64,
    wall_clock_s: f64,
}

fn read_summary(dir: &Path) -> Result<ExperimentSummary> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::MissingInput(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn read_timing(dir: &Path) -> Result<Vec<Timing>> {
    let path = dir.join("timing.json");
    if !path.exists() {
        return Ok(Vec::new());
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Builds the comparison table from a run's outputs and writes it to
/// `compare.csv` in the same directory.
pub fn compare_policies(dir: &Path) -> Result<Vec<CompareRow>> {
    let summary = read_summary(dir)?;
    let timing = read_timing(dir)?;
    let horizon = summary.horizon;
    let rows: Vec<CompareRow> = summary
        .runs
        .iter()
        .map(|run| {
            let regret = |k: usize| run.regret.iter().find(|r| r.k == k);
            CompareRow {
                policy: run.policy.clone(),
                seed: run.seed,
                violation_avg: run.violation_avg,
                deterministic_regret_k1_avg: regret(1).map(|r| r.deterministic_avg),
                realized_regret_k1_avg: regret(1).map(|r| r.realized_avg),
                deterministic_regret_kt_avg: regret(horizon).map(|r| r.deterministic_avg),
                wall_clock_s: timing
                    .iter()
                    .find(|t| t.policy == run.policy && t.seed == run.seed)
                    .map(|t| t.wall_clock_s),
            }
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::MissingInput(format!("{}: summary lists no runs", dir.display())));
    }

    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    write_atomic(&dir.join("compare.csv"), &bytes)?;
    Ok(rows)
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Fixed-width text rendering of [`compare_policies`] output.
pub fn format_table(rows: &[CompareRow]) -> String {
    let header = [
        "policy",
        "seed",
        "viol/T",
        "R^1/T",
        "R~^1/T",
        "R^T/T",
        "wall_s",
    ];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.policy.clone(),
                r.seed.to_string(),
                format!("{:.4}", r.violation_avg),
                cell(r.deterministic_regret_k1_avg),
                cell(r.realized_regret_k1_avg),
                cell(r.deterministic_regret_kt_avg),
                cell(r.wall_clock_s),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..7)
        .map(|c| body.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |cells: &[&str], out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&header, &mut out);
    for r in &body {
        line(&r.iter().map(String::as_str).collect::<Vec<_>>(), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_is_missing_input() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(compare_policies(dir.path()), Err(Error::MissingInput(_))));
    }

    #[test]
    fn table_alignment() {
        let rows = vec![CompareRow {
            policy: "alg1".into(),
            seed: 3,
            violation_avg: -1.5,
            deterministic_regret_k1_avg: Some(0.25),
            realized_regret_k1_avg: None,
            deterministic_regret_kt_avg: Some(2.0),
            wall_clock_s: None,
        }];
        let text = format_table(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("alg1"));
        assert!(lines[1].contains("-1.5000") && lines[1].contains("0.2500"));
    }
}
