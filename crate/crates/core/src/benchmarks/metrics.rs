use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::simplex::{self, Distribution};

use super::hindsight::{solve_distribution_k, solve_static_k};

/// One slot of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub t: usize,
    #[serde(skip)]
    pub distribution: Distribution,
    /// Multiplier in force during the slot, for policies that keep one.
    pub lambda: Option<f64>,
    pub sampled: usize,
    pub request: usize,
    pub prev_request: usize,
    pub realized_reservation_cost: f64,
    pub expected_reservation_cost: f64,
    /// `E_{P^t}[C(A, b^t)]`
    pub expected_cost: f64,
    /// `E_{P^t}[C(A, b^{t-1})]`
    pub expected_cost_prev: f64,
    /// `‖P^t - P^{t-1}‖`
    pub step_distance: f64,
}

/// Per-slot trajectory of one (policy, seed) run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLedger {
    pub policy: String,
    pub seed: u64,
    pub slots: Vec<SlotRecord>,
    /// Multiplier after the last update, `λ_{T+1}`.
    pub final_lambda: Option<f64>,
}

impl RunLedger {
    pub fn horizon(&self) -> usize {
        self.slots.len()
    }

    pub fn requests(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.request).collect()
    }

    /// Largest multiplier over `λ_1..λ_{T+1}`.
    pub fn max_lambda(&self) -> Option<f64> {
        self.slots
            .iter()
            .filter_map(|s| s.lambda)
            .chain(self.final_lambda)
            .reduce(f64::max)
    }
}

fn cumulative(values: impl Iterator<Item = f64>) -> Vec<f64> {
    values
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Divides a cumulative series by `t`.
pub fn time_average(series: &[f64]) -> Vec<f64> {
    series
        .iter()
        .enumerate()
        .map(|(i, x)| x / (i + 1) as f64)
        .collect()
}

/// `Σ_{s≤t} (C_R(A^s) - benchmark)` for every `t`.
pub fn realized_regret_series(ledger: &RunLedger, benchmark_cost: f64) -> Vec<f64> {
    cumulative(
        ledger
            .slots
            .iter()
            .map(|s| s.realized_reservation_cost - benchmark_cost),
    )
}

/// `Σ_{s≤t} (E_{P^s}[C_R] - benchmark)` for every `t`.
pub fn deterministic_regret_series(ledger: &RunLedger, benchmark_cost: f64) -> Vec<f64> {
    cumulative(
        ledger
            .slots
            .iter()
            .map(|s| s.expected_reservation_cost - benchmark_cost),
    )
}

/// `Υ_t = Σ_{s≤t} (E_{P^s}[C(A, b^s)] - v)`.
pub fn cumulative_violation(ledger: &RunLedger, v: f64) -> Vec<f64> {
    cumulative(ledger.slots.iter().map(|s| s.expected_cost - v))
}

fn check_requests(ledger: &RunLedger, requests: &[usize]) -> Result<()> {
    if requests.len() != ledger.horizon() {
        return Err(Error::LengthMismatch {
            expected: ledger.horizon(),
            got: requests.len(),
        });
    }
    Ok(())
}

/// Realized regret against the best static reservation for windows of
/// length `K`.
pub fn realized_regret_k(ledger: &RunLedger, inst: &Instance, requests: &[usize], k: usize) -> Result<Vec<f64>> {
    check_requests(ledger, requests)?;
    let benchmark = solve_static_k(inst, requests, k)?;
    Ok(realized_regret_series(ledger, benchmark.reservation_cost))
}

/// Expected regret against the best static distribution for windows of
/// length `K`.
pub fn deterministic_regret_k(
    ledger: &RunLedger,
    inst: &Instance,
    requests: &[usize],
    k: usize,
) -> Result<Vec<f64>> {
    check_requests(ledger, requests)?;
    let benchmark = solve_distribution_k(inst, requests, k)?;
    Ok(deterministic_regret_series(ledger, benchmark.objective))
}

/// Expected reservation cost of a distribution.
pub fn expected_reservation_cost(inst: &Instance, p: &Distribution) -> Result<f64> {
    simplex::expectation(p, &inst.reservation_costs)
}
