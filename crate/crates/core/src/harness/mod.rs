//! Experiment harness: runs policies over a workload for several seeds,
//! solves the hindsight benchmarks, derives regret and violation series,
//! and writes ledgers, figure tables and a summary.
//!
//! Every (policy, seed) run owns one `ChaCha8Rng` seeded with the run seed,
//! so identical configs produce byte-identical outputs. Runs execute in
//! parallel; results are collected and written in config order.

mod compare;
mod config;
mod output;
mod svg;

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::OnlinePolicy;
use crate::benchmarks::{
    bound_report, cumulative_violation, deterministic_regret_series, realized_regret_series, solve_distribution_k,
    solve_static_k, time_average, BoundCalculator, BoundParams, BoundReport, InstanceConstants, RunLedger,
    SlotRecord, StaticBenchmark,
};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::Reservation;
use crate::simplex::{self, Distribution};
use crate::workload::{generate, to_indices};

pub use compare::{compare_policies, format_table, CompareRow};
pub use config::{BoundsConfig, ExperimentConfig, InitMode, PolicyKind, PolicySpec, WindowLength};
pub use output::{write_outputs, OutputOptions};
pub use svg::line_chart;

/// Plays `policy` against `requests` (flat indices), starting from the
/// initial request `b0`, with all sampling drawn from a generator seeded
/// by `seed`.
pub fn simulate(
    inst: &Instance,
    policy: &mut dyn OnlinePolicy,
    requests: &[usize],
    b0: usize,
    seed: u64,
) -> Result<RunLedger> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prev: Option<Distribution> = policy.current_distribution().cloned();
    let mut b_prev = b0;
    let mut slots = Vec::with_capacity(requests.len());
    for (t, &b) in requests.iter().enumerate() {
        if b >= inst.len() {
            return Err(Error::IndexOutOfRange {
                index: b,
                size: inst.len(),
            });
        }
        let lambda = policy.lambda();
        let decision = policy.step(inst, b_prev, &mut rng)?;
        let p = decision.distribution;
        let step_distance = match &prev {
            Some(q) => simplex::l2_distance(&p, q)?,
            None => 0.0,
        };
        slots.push(SlotRecord {
            t: t + 1,
            lambda,
            sampled: decision.sampled_index,
            request: b,
            prev_request: b_prev,
            realized_reservation_cost: inst.reservation_costs[decision.sampled_index],
            expected_reservation_cost: simplex::expectation(&p, &inst.reservation_costs)?,
            expected_cost: simplex::expectation(&p, &inst.oracle.costs_for_request(b))?,
            expected_cost_prev: decision.expected_cost_vs_prev_request,
            step_distance,
            distribution: p.clone(),
        });
        prev = Some(p);
        b_prev = b;
    }
    Ok(RunLedger {
        policy: policy.name().to_string(),
        seed,
        slots,
        final_lambda: policy.lambda(),
    })
}

/// A nonzero entry of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub index: usize,
    pub reservation: Reservation,
    pub prob: f64,
}

pub fn support(inst: &Instance, p: &Distribution) -> Vec<Atom> {
    p.probs()
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(index, &prob)| Atom {
            index,
            reservation: inst.reservation_at(index).expect("index in range"),
            prob,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowBenchmarks {
    pub k: usize,
    pub static_best: StaticBenchmark,
    pub distribution_best: Vec<Atom>,
    /// `E_{P*_K}[C_R]`
    pub distribution_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedBenchmarks {
    pub seed: u64,
    pub workload_seed: u64,
    pub windows: Vec<WindowBenchmarks>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub k: usize,
    /// `R̃^K_T`
    pub realized: f64,
    /// `R^K_T`
    pub deterministic: f64,
    pub realized_avg: f64,
    pub deterministic_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub seed: u64,
    /// `Υ_T`
    pub violation: f64,
    pub violation_avg: f64,
    pub max_lambda: Option<f64>,
    pub final_lambda: Option<f64>,
    pub median_step_distance: f64,
    pub regret: Vec<RegretSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyBounds {
    pub policy: String,
    /// `ℵ` in `1..=aleph_max` minimizing the multiplier cap.
    pub aleph: u64,
    pub reports: Vec<BoundReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub policies: Vec<String>,
    pub ks: Vec<usize>,
    pub theta_bound: f64,
    pub eta: f64,
    pub slater: Vec<Atom>,
    pub bounds: Vec<PolicyBounds>,
    /// Why `bounds` is empty, when it is.
    pub bounds_note: Option<String>,
    pub benchmarks: Vec<SeedBenchmarks>,
    pub runs: Vec<RunSummary>,
}

/// Time-averaged series of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub violation_avg: Vec<f64>,
    /// `(K, realized regret / t, deterministic regret / t)`
    pub regret_avg: Vec<(usize, Vec<f64>, Vec<f64>)>,
    pub step_distance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub ledger: RunLedger,
    pub series: RunSeries,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub summary: ExperimentSummary,
    /// Ordered seed-major within each policy, in config order.
    pub runs: Vec<RunRecord>,
    /// Flat request indices per seed, in `config.seeds` order.
    pub requests: Vec<Vec<usize>>,
}

impl ExperimentOutput {
    pub fn run(&self, policy: &str, seed: u64) -> Option<&RunRecord> {
        self.runs
            .iter()
            .find(|r| r.ledger.policy == policy && r.ledger.seed == seed)
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

fn seed_benchmarks(inst: &Instance, requests: &[usize], ks: &[usize], seed: u64, workload_seed: u64) -> Result<SeedBenchmarks> {
    let windows = ks
        .iter()
        .map(|&k| {
            let static_best = solve_static_k(inst, requests, k)?;
            let distribution = solve_distribution_k(inst, requests, k)?;
            Ok(WindowBenchmarks {
                k,
                static_best,
                distribution_best: support(inst, &distribution.distribution),
                distribution_objective: distribution.objective,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeedBenchmarks {
        seed,
        workload_seed,
        windows,
    })
}

fn policy_bounds(
    constants: &InstanceConstants,
    cfg: &ExperimentConfig,
    ks: &[usize],
) -> (Vec<PolicyBounds>, Option<String>) {
    if !constants.has_slater_point() {
        return (
            Vec::new(),
            Some(format!("no Slater point: best margin is {}", constants.eta)),
        );
    }
    let mut out = Vec::new();
    for spec in &cfg.policies {
        let Some((alpha, mu)) = spec.step_sizes() else {
            continue;
        };
        let result = BoundCalculator::new(constants, alpha, mu).and_then(|calc| {
            let aleph = calc.tightest_aleph(cfg.bounds.aleph_max);
            let reports = ks
                .iter()
                .map(|&k| {
                    bound_report(
                        constants,
                        BoundParams {
                            alpha,
                            mu,
                            horizon: cfg.horizon,
                            k,
                            aleph,
                            delta: cfg.bounds.delta,
                        },
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PolicyBounds {
                policy: spec.name.clone(),
                aleph,
                reports,
            })
        });
        match result {
            Ok(b) => out.push(b),
            Err(e) => return (Vec::new(), Some(e.to_string())),
        }
    }
    (out, None)
}

fn summarize(ledger: &RunLedger, series: &RunSeries, v: f64, benches: &SeedBenchmarks) -> RunSummary {
    let t = ledger.horizon() as f64;
    let violation = cumulative_violation(ledger, v).last().copied().unwrap_or(0.0);
    let regret = benches
        .windows
        .iter()
        .map(|w| {
            let realized = realized_regret_series(ledger, w.static_best.reservation_cost)
                .last()
                .copied()
                .unwrap_or(0.0);
            let deterministic = deterministic_regret_series(ledger, w.distribution_objective)
                .last()
                .copied()
                .unwrap_or(0.0);
            RegretSummary {
                k: w.k,
                realized,
                deterministic,
                realized_avg: realized / t,
                deterministic_avg: deterministic / t,
            }
        })
        .collect();
    RunSummary {
        policy: ledger.policy.clone(),
        seed: ledger.seed,
        violation,
        violation_avg: violation / t,
        max_lambda: ledger.max_lambda(),
        final_lambda: ledger.final_lambda,
        median_step_distance: median(&series.step_distance),
        regret,
    }
}

/// Runs every (policy, seed) pair of a validated config in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let inst = Instance::new(cfg.network.clone())?;
    let ks = cfg.window_lengths()?;
    let b0 = inst.index_of(&cfg.initial_request())?;
    let constants = InstanceConstants::compute(&inst)?;

    let per_seed: Vec<(Vec<usize>, SeedBenchmarks)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let workload = cfg.workload_for_seed(seed);
            let requests = to_indices(&inst.space, &generate(&workload, &cfg.network, cfg.horizon)?)?;
            let benches = seed_benchmarks(&inst, &requests, &ks, seed, workload.seed)?;
            Ok((requests, benches))
        })
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..cfg.policies.len())
        .flat_map(|p| (0..cfg.seeds.len()).map(move |s| (p, s)))
        .collect();
    let runs: Vec<(RunRecord, RunSummary)> = pairs
        .par_iter()
        .map(|&(p, s)| {
            let started = Instant::now();
            let seed = cfg.seeds[s];
            let (requests, benches) = &per_seed[s];
            let mut policy = cfg.policies[p].build(&inst, b0)?;
            let ledger = simulate(&inst, policy.as_mut(), requests, b0, seed)?;
            let series = RunSeries {
                violation_avg: time_average(&cumulative_violation(&ledger, inst.v())),
                regret_avg: benches
                    .windows
                    .iter()
                    .map(|w| {
                        (
                            w.k,
                            time_average(&realized_regret_series(&ledger, w.static_best.reservation_cost)),
                            time_average(&deterministic_regret_series(&ledger, w.distribution_objective)),
                        )
                    })
                    .collect(),
                step_distance: ledger.slots.iter().map(|s| s.step_distance).collect(),
            };
            let summary = summarize(&ledger, &series, inst.v(), benches);
            Ok((
                RunRecord {
                    ledger,
                    series,
                    wall_clock_s: started.elapsed().as_secs_f64(),
                },
                summary,
            ))
        })
        .collect::<Result<_>>()?;

    let (bounds, bounds_note) = policy_bounds(&constants, cfg, &ks);
    let (runs, run_summaries): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let (requests, benchmarks): (Vec<_>, Vec<_>) = per_seed.into_iter().unzip();
    let summary = ExperimentSummary {
        horizon: cfg.horizon,
        seeds: cfg.seeds.clone(),
        policies: cfg.policies.iter().map(|p| p.name.clone()).collect(),
        ks,
        theta_bound: constants.theta_bound,
        eta: constants.eta,
        slater: support(&inst, &constants.slater),
        bounds,
        bounds_note,
        benchmarks,
        runs: run_summaries,
    };
    Ok(ExperimentOutput {
        config: cfg.clone(),
        summary,
        runs,
        requests,
    })
}

/// [`execute`] followed by [`write_outputs`].
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, options: OutputOptions) -> Result<ExperimentOutput> {
    let output = execute(cfg)?;
    write_outputs(&output, out_dir, options)?;
    Ok(output)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsOutput {
    pub theta_bound: f64,
    pub eta: f64,
    pub v: f64,
    pub slater: Vec<Atom>,
    pub horizon: usize,
    pub policies: Vec<PolicyBounds>,
}

/// Instance constants and bound reports for every saddle-point policy in
/// the config, at the `ℵ ≤ aleph_max` with the smallest multiplier cap.
pub fn bounds_for_config(cfg: &ExperimentConfig, aleph_max: u64, delta: f64) -> Result<BoundsOutput> {
    let mut cfg = cfg.clone();
    cfg.bounds = BoundsConfig { aleph_max, delta };
    cfg.validate()?;
    let inst = Instance::new(cfg.network.clone())?;
    let constants = InstanceConstants::compute(&inst)?;
    if !constants.has_slater_point() {
        return Err(Error::NoSlaterPoint { eta: constants.eta });
    }
    let ks = cfg.window_lengths()?;
    let (policies, note) = policy_bounds(&constants, &cfg, &ks);
    if let Some(note) = note {
        return Err(Error::InvalidParameter(note));
    }
    Ok(BoundsOutput {
        theta_bound: constants.theta_bound,
        eta: constants.eta,
        v: constants.v,
        slater: support(&inst, &constants.slater),
        horizon: cfg.horizon,
        policies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkConfig;
    use crate::workload::WorkloadSpec;

    fn config(horizon: usize) -> ExperimentConfig {
        ExperimentConfig {
            network: NetworkConfig::two_server_example(),
            workload: WorkloadSpec::iid_uniform(0),
            horizon,
            policies: vec![
                PolicySpec {
                    name: "alg1".into(),
                    kind: PolicyKind::SaddlePoint {
                        alpha: 0.001,
                        mu: 0.1,
                        lambda_init: 0.0,
                        init: InitMode::Uniform,
                    },
                },
                PolicySpec {
                    name: "lazy".into(),
                    kind: PolicyKind::Lazy,
                },
            ],
            benchmark_ks: vec![WindowLength::Fixed(1), WindowLength::Symbolic("T".into())],
            seeds: vec![0, 1],
            initial_request: None,
            vary_workload_with_seed: true,
            bounds: BoundsConfig::default(),
            output_dir: None,
        }
    }

    #[test]
    fn single_slot_run() {
        let mut cfg = config(1);
        cfg.policies.truncate(1);
        cfg.seeds = vec![0];
        let out = execute(&cfg).unwrap();
        assert_eq!(out.runs.len(), 1);
        assert_eq!(out.runs[0].ledger.horizon(), 1);
        assert_eq!(out.summary.ks, vec![1]);
    }

    #[test]
    fn ledger_columns_are_consistent() {
        let out = execute(&config(40)).unwrap();
        let inst = Instance::new(NetworkConfig::two_server_example()).unwrap();
        assert_eq!(out.runs.len(), 4);
        for (run, requests) in out.runs.iter().zip(out.requests.iter().cycle()) {
            assert_eq!(&run.ledger.requests(), requests);
            for s in &run.ledger.slots {
                assert_eq!(s.realized_reservation_cost, inst.reservation_costs[s.sampled]);
                let e: f64 = (0..56)
                    .map(|a| s.distribution.probs()[a] * inst.oracle.total(a, s.request))
                    .sum();
                assert!((s.expected_cost - e).abs() < 1e-9);
            }
        }
        let lazy = out.run("lazy", 1).unwrap();
        for w in lazy.ledger.slots.windows(2) {
            assert_eq!(w[1].sampled, w[0].request);
        }
    }

    #[test]
    fn summary_matches_series() {
        let out = execute(&config(30)).unwrap();
        for (run, summary) in out.runs.iter().zip(&out.summary.runs) {
            assert_eq!(*run.series.violation_avg.last().unwrap(), summary.violation_avg);
            for ((k, realized, det), r) in run.series.regret_avg.iter().zip(&summary.regret) {
                assert_eq!(*k, r.k);
                assert!((realized.last().unwrap() - r.realized_avg).abs() < 1e-12);
                assert!((det.last().unwrap() - r.deterministic_avg).abs() < 1e-12);
            }
        }
        assert_eq!(out.summary.bounds.len(), 1);
        assert_eq!(out.summary.theta_bound, 65.9);
    }

    #[test]
    fn seeds_change_workload_only_when_asked() {
        let mut cfg = config(20);
        let out = execute(&cfg).unwrap();
        assert_ne!(out.requests[0], out.requests[1]);
        cfg.vary_workload_with_seed = false;
        let out = execute(&cfg).unwrap();
        assert_eq!(out.requests[0], out.requests[1]);
    }

    #[test]
    fn bounds_need_slater_point() {
        let mut cfg = config(10);
        assert!(bounds_for_config(&cfg, 200, 0.1).is_ok());
        cfg.network.v = 0.0;
        assert!(matches!(bounds_for_config(&cfg, 200, 0.1), Err(Error::NoSlaterPoint { .. })));
        let out = execute(&cfg).unwrap();
        assert!(out.summary.bounds.is_empty() && out.summary.bounds_note.is_some());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[]), 0.0);
    }
}
