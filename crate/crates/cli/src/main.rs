use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use netresv::harness::{
    bounds_for_config, compare_policies, format_table, run_experiment, ExperimentConfig, OutputOptions, WindowLength,
};

#[derive(Parser)]
#[command(name = "netresv", version, about = "Online randomized resource reservation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run policies over a workload and write ledgers, figure tables and a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated policy names to keep.
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<String>>,
        /// `a..b` (exclusive), `a..=b`, or a comma-separated list.
        #[arg(long)]
        seeds: Option<String>,
        /// Comma-separated window lengths; `T` stands for the horizon.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<String>>,
        /// Also write an SVG chart per figure.
        #[arg(long)]
        svg: bool,
        /// Also write per-run wall-clock times to timing.json.
        #[arg(long)]
        timing: bool,
    },
    /// Summarize a finished run directory, one row per (policy, seed).
    Compare {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print instance constants and theoretical bounds as JSON.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 200)]
        aleph_max: u64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
}

fn parse_seeds(text: &str) -> anyhow::Result<Vec<u64>> {
    let text = text.trim();
    let num = |s: &str| s.trim().parse::<u64>().with_context(|| format!("bad seed {s:?}"));
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = text.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        text.split(',').map(num).collect::<anyhow::Result<_>>()?
    };
    if seeds.is_empty() {
        bail!("seed range {text:?} is empty");
    }
    Ok(seeds)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            policies,
            seeds,
            k,
            svg,
            timing,
        } => {
            let mut cfg = ExperimentConfig::from_json_file(&config)?;
            if let Some(names) = policies {
                cfg.select_policies(&names)?;
            }
            if let Some(seeds) = seeds {
                cfg.seeds = parse_seeds(&seeds)?;
            }
            if let Some(ks) = k {
                cfg.benchmark_ks = ks.iter().map(|s| WindowLength::parse(s)).collect::<Result<_, _>>()?;
            }
            cfg.validate()?;
            let Some(out) = out.or_else(|| cfg.output_dir.clone()) else {
                bail!("no output directory: pass --out or set output_dir in the config");
            };
            let output = run_experiment(&cfg, &out, OutputOptions { svg, timing })?;
            let status = serde_json::json!({
                "status": "ok",
                "out": out,
                "runs": output.runs.len(),
                "theta_bound": output.summary.theta_bound,
                "eta": output.summary.eta,
            });
            println!("{status}");
        }
        Command::Compare { out } => {
            let rows = compare_policies(&out)?;
            print!("{}", format_table(&rows));
        }
        Command::Bounds {
            config,
            aleph_max,
            delta,
        } => {
            let cfg = ExperimentConfig::from_json_file(&config)?;
            let report = bounds_for_config(&cfg, aleph_max, delta)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = err
                .downcast_ref::<netresv::Error>()
                .map_or("usage", netresv::Error::kind);
            let report = serde_json::json!({ "error": kind, "message": format!("{err:#}") });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
