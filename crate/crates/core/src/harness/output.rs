use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::harness::svg::line_chart;
use crate::harness::{ExperimentOutput, RunRecord};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutputOptions {
    /// Also write an SVG chart per figure table.
    pub svg: bool,
    /// Also write `timing.json` with per-run wall-clock times. Off by
    /// default so repeated runs produce identical bytes.
    pub timing: bool,
}

/// Writes `bytes` to a temporary sibling, then renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(writer.into_inner().map_err(|e| e.into_error())?)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |x| x.to_string())
}

fn ledger_csv(output: &ExperimentOutput, run: &RunRecord) -> Result<Vec<u8>> {
    let space = output.config.network.capacities();
    let space = crate::model::ReservationSpace::from_capacities(&space, usize::MAX)?;
    let header: Vec<String> = [
        "t",
        "request",
        "prev_request",
        "sampled",
        "lambda",
        "realized_reservation_cost",
        "expected_reservation_cost",
        "expected_cost",
        "expected_cost_prev",
        "step_distance",
        "distribution",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let show = |i: usize| space.reservation_at(i).map(|r| r.to_string()).unwrap_or_default();
    let rows = run.ledger.slots.iter().map(|s| {
        let support = s
            .distribution
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, p)| format!("{i}:{p}"))
            .collect::<Vec<_>>()
            .join(" ");
        vec![
            s.t.to_string(),
            show(s.request),
            show(s.prev_request),
            show(s.sampled),
            opt(s.lambda),
            s.realized_reservation_cost.to_string(),
            s.expected_reservation_cost.to_string(),
            s.expected_cost.to_string(),
            s.expected_cost_prev.to_string(),
            s.step_distance.to_string(),
            support,
        ]
    });
    csv_bytes(&header, rows)
}

fn metrics_csv(run: &RunRecord) -> Result<Vec<u8>> {
    let mut header = vec!["t".to_string(), "violation_avg".into(), "step_distance".into()];
    for (k, _, _) in &run.series.regret_avg {
        header.push(format!("realized_regret_k{k}_avg"));
        header.push(format!("deterministic_regret_k{k}_avg"));
    }
    let rows = (0..run.ledger.horizon()).map(|t| {
        let mut row = vec![
            (t + 1).to_string(),
            run.series.violation_avg[t].to_string(),
            run.series.step_distance[t].to_string(),
        ];
        for (_, realized, det) in &run.series.regret_avg {
            row.push(realized[t].to_string());
            row.push(det[t].to_string());
        }
        row
    });
    csv_bytes(&header, rows)
}

/// A figure table: `t` plus one column per run.
struct Figure<'a> {
    file: &'static str,
    title: &'static str,
    columns: Vec<(String, &'a [f64])>,
}

fn column_name(run: &RunRecord) -> String {
    format!("{}/s{}", run.ledger.policy, run.ledger.seed)
}

fn regret_figure<'a>(output: &'a ExperimentOutput, k: usize, file: &'static str, title: &'static str) -> Figure<'a> {
    let columns = output
        .runs
        .iter()
        .filter_map(|run| {
            run.series
                .regret_avg
                .iter()
                .find(|(rk, _, _)| *rk == k)
                .map(|(_, _, det)| (column_name(run), det.as_slice()))
        })
        .collect();
    Figure { file, title, columns }
}

fn figures(output: &ExperimentOutput) -> Vec<Figure<'_>> {
    let mut figs = vec![Figure {
        file: "fig_violations",
        title: "time-average cumulative violation",
        columns: output
            .runs
            .iter()
            .map(|run| (column_name(run), run.series.violation_avg.as_slice()))
            .collect(),
    }];
    if output.summary.ks.contains(&1) {
        figs.push(regret_figure(output, 1, "fig_regret_k1", "time-average regret, K = 1"));
    }
    if output.summary.ks.contains(&output.summary.horizon) {
        figs.push(regret_figure(
            output,
            output.summary.horizon,
            "fig_regret_kT",
            "time-average regret, K = T",
        ));
    }
    let saddle: Vec<&str> = output
        .config
        .policies
        .iter()
        .filter(|p| p.step_sizes().is_some())
        .map(|p| p.name.as_str())
        .collect();
    figs.push(Figure {
        file: "fig_step_distance",
        title: "distance between successive distributions",
        columns: output
            .runs
            .iter()
            .filter(|run| saddle.contains(&run.ledger.policy.as_str()))
            .map(|run| (column_name(run), run.series.step_distance.as_slice()))
            .collect(),
    });
    figs
}

fn figure_csv(horizon: usize, fig: &Figure<'_>) -> Result<Vec<u8>> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(fig.columns.iter().map(|(name, _)| name.clone()))
        .collect();
    let rows = (0..horizon).map(|t| {
        std::iter::once((t + 1).to_string())
            .chain(fig.columns.iter().map(|(_, series)| series[t].to_string()))
            .collect()
    });
    csv_bytes(&header, rows)
}

#[derive(Serialize)]
struct Timing<'a> {
    policy: &'a str,
    seed: u64,
    wall_clock_s: f64,
}

/// Writes ledgers, per-run metric series, figure tables, `summary.json`
/// and the resolved `config.json` into `dir`, creating it if needed.
pub fn write_outputs(output: &ExperimentOutput, dir: &Path, options: OutputOptions) -> Result<()> {
    fs::create_dir_all(dir)?;
    for run in &output.runs {
        let stem = format!("{}_{}", run.ledger.policy, run.ledger.seed);
        write_atomic(&dir.join(format!("ledger_{stem}.csv")), &ledger_csv(output, run)?)?;
        write_atomic(&dir.join(format!("metrics_{stem}.csv")), &metrics_csv(run)?)?;
    }
    let horizon = output.summary.horizon;
    for fig in figures(output) {
        write_atomic(&dir.join(format!("{}.csv", fig.file)), &figure_csv(horizon, &fig)?)?;
        if options.svg {
            let chart = line_chart(fig.title, &fig.columns);
            write_atomic(&dir.join(format!("{}.svg", fig.file)), chart.as_bytes())?;
        }
    }
    write_atomic(&dir.join("summary.json"), &json_bytes(&output.summary)?)?;
    write_atomic(&dir.join("config.json"), &json_bytes(&output.config)?)?;
    if options.timing {
        let timing: Vec<Timing<'_>> = output
            .runs
            .iter()
            .map(|r| Timing {
                policy: &r.ledger.policy,
                seed: r.ledger.seed,
                wall_clock_s: r.wall_clock_s,
            })
            .collect();
        write_atomic(&dir.join("timing.json"), &json_bytes(&timing)?)?;
    }
    Ok(())
}
