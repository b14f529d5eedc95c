//! Hindsight benchmarks, regret and violation metrics, instance constants
//! and theoretical bound calculators.

pub mod bounds;
pub mod hindsight;
pub mod metrics;

pub use bounds::{bound_report, BoundCalculator, BoundParams, BoundReport, EpsilonSchedule};
pub use hindsight::{solve_distribution_k, solve_static_k, window_sums, DistributionBenchmark, StaticBenchmark};
pub use metrics::{
    cumulative_violation, deterministic_regret_k, deterministic_regret_series, realized_regret_k,
    realized_regret_series, time_average, RunLedger, SlotRecord,
};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::simplex::{self, Distribution};

/// Ceiling on `|R|²` for the exhaustive pair sweep behind [`compute_theta`].
pub const PAIR_SWEEP_CEILING: usize = 50_000_000;

/// Per-instance constants the bounds depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceConstants {
    /// Smallest `Θ` bounding `|C_R|`, `|C_T|` and `|C_V|` everywhere.
    pub theta_bound: f64,
    /// Slater margin; positive when a Slater distribution exists.
    pub eta: f64,
    pub slater: Distribution,
    pub v: f64,
}

impl InstanceConstants {
    pub fn compute(inst: &Instance) -> Result<Self> {
        let theta_bound = compute_theta(inst)?;
        let (slater, eta) = compute_slater(inst)?;
        Ok(InstanceConstants {
            theta_bound,
            eta,
            slater,
            v: inst.v(),
        })
    }

    pub fn has_slater_point(&self) -> bool {
        self.eta > 0.0
    }
}

/// `max_{a,b} max(|C_R(a)|, |C_T(a,b)|, |C_V(a,b)|)`.
pub fn compute_theta(inst: &Instance) -> Result<f64> {
    let n = inst.len();
    if n.saturating_mul(n) > PAIR_SWEEP_CEILING {
        return Err(Error::SpaceTooLarge {
            size: (n as u128) * (n as u128),
            ceiling: PAIR_SWEEP_CEILING,
        });
    }
    let mut theta = inst
        .reservation_costs
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()));
    for b in 0..n {
        for a in 0..n {
            theta = theta
                .max(inst.oracle.violation(a, b).abs())
                .max(inst.oracle.transfer(a, b).abs());
        }
    }
    Ok(theta)
}

/// Distribution maximizing the worst-case budget margin
/// `η = v - max_b E_P[C(A, b)]`, found by linear programming.
///
/// The returned margin is recomputed directly from the distribution; a
/// value `≤ 0` means no Slater point exists.
pub fn compute_slater(inst: &Instance) -> Result<(Distribution, f64)> {
    let n = inst.len();
    // variables: p_0..p_{n-1}, z+, z-; minimize z = z+ - z-
    let mut objective = vec![0.0; n + 2];
    objective[n] = 1.0;
    objective[n + 1] = -1.0;
    let mut lp = LinearProgram::new(objective);
    let mut simplex_row = vec![1.0; n + 2];
    simplex_row[n] = 0.0;
    simplex_row[n + 1] = 0.0;
    lp.add(simplex_row, Relation::Eq, 1.0);

    let rows: Vec<Vec<f64>> = (0..n).map(|b| inst.oracle.costs_for_request(b).into_owned()).collect();
    // dominated request rows never bind the max; reduce against -inf so
    // nothing is dropped as trivially satisfied
    for row in hindsight::reduce_rows(rows, f64::NEG_INFINITY) {
        let mut coefs = row;
        coefs.push(-1.0);
        coefs.push(1.0);
        lp.add(coefs, Relation::Le, 0.0);
    }
    let solution = match lp.solve() {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Err(Error::Infeasible { k: 0 }),
        LpOutcome::Unbounded => return Err(Error::Unbounded),
    };
    let slater = Distribution::new(solution.x[..n].to_vec())?;
    Ok((slater.clone(), slater_margin(inst, &slater)?))
}

/// `v - max_b E_P[C(A, b)]`.
pub fn slater_margin(inst: &Instance, p: &Distribution) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for b in 0..inst.len() {
        worst = worst.max(simplex::expectation(p, &inst.oracle.costs_for_request(b))?);
    }
    Ok(inst.v() - worst)
}
