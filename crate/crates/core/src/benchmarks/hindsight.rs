//! Hindsight comparators that see the whole request trace: the best static
//! reservation and the best static distribution subject to the budget over
//! every length-`K` window.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::model::Reservation;
use crate::simplex::Distribution;

/// Slack allowed on window sums, absorbing prefix-sum rounding.
const WINDOW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticBenchmark {
    pub k: usize,
    pub index: usize,
    pub reservation: Reservation,
    pub reservation_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionBenchmark {
    pub k: usize,
    pub distribution: Distribution,
    /// `E_P[C_R]` per slot.
    pub objective: f64,
}

fn check_k(k: usize, horizon: usize) -> Result<()> {
    if k == 0 || k > horizon {
        return Err(Error::InvalidParameter(format!(
            "window length K={k} must lie in 1..={horizon}"
        )));
    }
    Ok(())
}

/// `W_t(a) = Σ_{k=t}^{t+K-1} C(a, b^k)` for every reservation `a` (outer)
/// and window start `t` (inner), via prefix sums.
pub fn window_sums(inst: &Instance, requests: &[usize], k: usize) -> Result<Vec<Vec<f64>>> {
    check_k(k, requests.len())?;
    let windows = requests.len() - k + 1;
    Ok((0..inst.len())
        .map(|a| {
            let mut prefix = Vec::with_capacity(requests.len() + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for &b in requests {
                acc += inst.oracle.total(a, b);
                prefix.push(acc);
            }
            (0..windows).map(|t| prefix[t + k] - prefix[t]).collect()
        })
        .collect())
}

fn budget(inst: &Instance, k: usize) -> f64 {
    k as f64 * inst.v()
}

fn within(value: f64, limit: f64) -> bool {
    value <= limit + WINDOW_TOLERANCE * (1.0 + limit.abs())
}

/// Cheapest reservation whose cost stays within `K v` over every window.
pub fn solve_static_k(inst: &Instance, requests: &[usize], k: usize) -> Result<StaticBenchmark> {
    let sums = window_sums(inst, requests, k)?;
    let limit = budget(inst, k);
    let index = (0..inst.len())
        .filter(|&a| sums[a].iter().all(|&w| within(w, limit)))
        .min_by(|&x, &y| inst.reservation_costs[x].total_cmp(&inst.reservation_costs[y]))
        .ok_or(Error::Infeasible { k })?;
    Ok(StaticBenchmark {
        k,
        index,
        reservation: inst.reservation_at(index)?,
        reservation_cost: inst.reservation_costs[index],
    })
}

/// Drops exact duplicates, rows no distribution can violate, and rows
/// dominated entrywise by another row.
pub(crate) fn reduce_rows(rows: Vec<Vec<f64>>, limit: f64) -> Vec<Vec<f64>> {
    let mut seen = HashSet::new();
    let mut unique: Vec<Vec<f64>> = rows
        .into_iter()
        .filter(|row| row.iter().any(|&w| w > limit))
        .filter(|row| seen.insert(row.iter().map(|x| x.to_bits()).collect::<Vec<u64>>()))
        .collect();
    // larger rows first so dominators are kept
    unique.sort_by(|x, y| y.iter().sum::<f64>().total_cmp(&x.iter().sum::<f64>()));
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for row in unique {
        let dominated = kept
            .iter()
            .any(|big| big.iter().zip(&row).all(|(b, r)| b >= r));
        if !dominated {
            kept.push(row);
        }
    }
    kept
}

/// Cheapest distribution (in expected `C_R`) whose expected window costs
/// stay within `K v`. Solved as a linear program over the simplex.
pub fn solve_distribution_k(inst: &Instance, requests: &[usize], k: usize) -> Result<DistributionBenchmark> {
    let sums = window_sums(inst, requests, k)?;
    let n = inst.len();
    let limit = budget(inst, k);
    let windows = sums.first().map_or(0, Vec::len);
    let rows: Vec<Vec<f64>> = (0..windows)
        .map(|t| (0..n).map(|a| sums[a][t]).collect())
        .collect();

    let mut lp = LinearProgram::new(inst.reservation_costs.clone());
    lp.add(vec![1.0; n], Relation::Eq, 1.0);
    for row in reduce_rows(rows, limit) {
        lp.add(row, Relation::Le, limit);
    }
    match lp.solve() {
        LpOutcome::Optimal(solution) => {
            let distribution = Distribution::new(solution.x)?;
            let objective = crate::simplex::expectation(&distribution, &inst.reservation_costs)?;
            Ok(DistributionBenchmark {
                k,
                distribution,
                objective,
            })
        }
        LpOutcome::Infeasible => Err(Error::Infeasible { k }),
        LpOutcome::Unbounded => Err(Error::Unbounded),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkConfig;

    fn example(v: f64) -> Instance {
        let mut cfg = NetworkConfig::two_server_example();
        cfg.v = v;
        Instance::new(cfg).unwrap()
    }

    #[test]
    fn static_unconstrained_picks_cheapest() {
        let inst = example(1e9);
        let s = solve_static_k(&inst, &[0, 0], 1).unwrap();
        assert_eq!(s.reservation, Reservation::new(vec![1, 1]));
    }

    #[test]
    fn static_negative_budget_is_infeasible() {
        let mut inst = example(2.0);
        inst.config.v = -0.5;
        assert!(matches!(solve_static_k(&inst, &[3, 9, 40], 2), Err(Error::Infeasible { k: 2 })));
        assert!(matches!(solve_distribution_k(&inst, &[3, 9, 40], 2), Err(Error::Infeasible { k: 2 })));
    }

    #[test]
    fn static_always_feasible_at_nonnegative_budget() {
        let inst = example(0.0);
        let requests: Vec<usize> = (0..40).map(|t| (t * 13 + 5) % 56).collect();
        for k in [1, 3, 40] {
            let s = solve_static_k(&inst, &requests, k).unwrap();
            assert!(s.reservation_cost <= inst.reservation_costs[55]);
        }
    }

    #[test]
    fn window_sums_match_direct_sums() {
        let inst = example(2.0);
        let requests = [4, 50, 23, 23, 8, 55, 0];
        let sums = window_sums(&inst, &requests, 3).unwrap();
        for a in [0, 17, 42] {
            for t in 0..5 {
                let direct: f64 = requests[t..t + 3].iter().map(|&b| inst.oracle.total(a, b)).sum();
                assert!((sums[a][t] - direct).abs() < 1e-12);
            }
        }
        assert!(window_sums(&inst, &requests, 0).is_err());
        assert!(window_sums(&inst, &requests, 8).is_err());
    }

    #[test]
    fn distribution_unconstrained_is_point_mass() {
        let inst = example(1e9);
        let d = solve_distribution_k(&inst, &[10, 20, 30], 1).unwrap();
        assert_eq!(d.distribution.atom(), Some(0));
        assert!((d.objective - inst.reservation_costs[0]).abs() < 1e-12);
    }

    #[test]
    fn distribution_zero_budget_example() {
        let inst = example(0.0);
        let b = inst.index_of(&Reservation::new(vec![1, 3])).unwrap();
        let d = solve_distribution_k(&inst, &[b; 6], 1).unwrap();
        assert!((d.objective - 2.0).abs() < 1e-7);
    }

    #[test]
    fn distribution_never_worse_than_static() {
        let inst = example(2.0);
        let requests: Vec<usize> = (0..60).map(|t| (t * 29 + 3) % 56).collect();
        for k in [1, 2, 5, 60] {
            let s = solve_static_k(&inst, &requests, k).unwrap();
            let d = solve_distribution_k(&inst, &requests, k).unwrap();
            assert!(d.objective <= s.reservation_cost + 1e-9, "K={k}");
            let sums = window_sums(&inst, &requests, k).unwrap();
            for t in 0..sums[0].len() {
                let e: f64 = (0..inst.len()).map(|a| d.distribution.probs()[a] * sums[a][t]).sum();
                assert!(e <= k as f64 * 2.0 + 1e-7);
            }
        }
    }

    #[test]
    fn reduce_rows_keeps_binding_rows() {
        let rows = vec![
            vec![1.0, 5.0],
            vec![1.0, 5.0],
            vec![0.5, 4.0],
            vec![3.0, 0.0],
            vec![0.1, 0.2],
        ];
        let kept = reduce_rows(rows, 1.0);
        assert_eq!(kept.len(), 2);
        assert!(kept.contains(&vec![1.0, 5.0]) && kept.contains(&vec![3.0, 0.0]));
    }
}
