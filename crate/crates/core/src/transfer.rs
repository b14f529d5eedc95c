//! Per-slot job transfer subproblem and the memoized cost oracle
//! `C(a, b) = C_V(a, b) + C_T(a, b)`.
//!
//! After requests `b` arrive against reservation `a`, server `n` has a
//! deficit `(b_n - a_n)^+` and server `m` a surplus `(a_m - b_m)^+`. A plan
//! moves `delta[n][m]` jobs from deficit servers to surplus servers, paying
//! `f^T_n` per (sender, receiver) pair and `f^V_n` on whatever remains
//! unserved. Each entry is bounded by `min(deficit_n, surplus_m)`, and the
//! total received by `m` is bounded by `surplus_m`.
//!
//! Objective values are always accumulated in one canonical order (rows in
//! server order, each row's transfer terms in receiver order followed by its
//! violation term) so that the exact solver and the brute-force oracle
//! produce bit-identical optima.

use std::borrow::Cow;
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::RwLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{JobRequest, NetworkConfig, Reservation, ReservationSpace};

/// Default ceiling on the number of candidate matrices for
/// [`brute_force_transfer`].
pub const BRUTE_FORCE_CEILING: u128 = 10_000_000;

/// Cost tables up to this many reservations are precomputed densely.
pub const DENSE_ORACLE_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct TransferPlan {
    /// `delta[n][m]`: jobs moved from server `n` to server `m`.
    pub delta: Vec<Vec<u32>>,
    pub c_v: f64,
    pub c_t: f64,
    /// The minimized objective in canonical summation order.
    pub objective: f64,
}

impl TransferPlan {
    pub fn total(&self) -> f64 {
        self.c_v + self.c_t
    }
}

/// Deficit and surplus of every server for a given `(a, b)`.
struct Imbalance {
    /// (server, deficit) for servers with `b_n > a_n`, in server order.
    deficits: Vec<(usize, u32)>,
    /// (server, surplus) for servers with `a_m > b_m`, in server order.
    surpluses: Vec<(usize, u32)>,
}

impl Imbalance {
    fn new(a: &Reservation, b: &JobRequest) -> Self {
        let mut deficits = Vec::new();
        let mut surpluses = Vec::new();
        for (n, (&an, &bn)) in a.values().iter().zip(b.values()).enumerate() {
            if bn > an {
                deficits.push((n, bn - an));
            } else if an > bn {
                surpluses.push((n, an - bn));
            }
        }
        Imbalance {
            deficits,
            surpluses,
        }
    }
}

fn check_pair(config: &NetworkConfig, a: &Reservation, b: &JobRequest) -> Result<()> {
    let space = ReservationSpace::from_capacities(&config.capacities(), usize::MAX)?;
    space.check(a)?;
    space.check(b)
}

/// Cost of one deficit server's row: transfer terms in receiver order, then
/// the violation term on the unserved remainder.
fn row_cost(config: &NetworkConfig, sender: usize, deficit: u32, row: &[u32]) -> f64 {
    let server = &config.servers[sender];
    let mut cost = 0.0;
    let mut moved: i64 = 0;
    for &d in row {
        cost += server.transfer_cost.eval(d as i64);
        moved += d as i64;
    }
    cost + server.violation_cost.eval(deficit as i64 - moved)
}

/// Recomputes `(c_v, c_t, objective)` for an arbitrary full `delta` matrix.
pub fn plan_costs(
    config: &NetworkConfig,
    a: &Reservation,
    b: &JobRequest,
    delta: &[Vec<u32>],
) -> (f64, f64, f64) {
    let mut c_v = 0.0;
    let mut c_t = 0.0;
    let mut objective = 0.0;
    for (n, server) in config.servers.iter().enumerate() {
        let mut row_t = 0.0;
        let mut moved: i64 = 0;
        for (m, &d) in delta[n].iter().enumerate() {
            if m != n {
                row_t += server.transfer_cost.eval(d as i64);
                moved += d as i64;
            }
        }
        let residual = b.values()[n] as i64 - a.values()[n] as i64 - moved;
        let row_v = server.violation_cost.eval(residual);
        c_t += row_t;
        c_v += row_v;
        objective += row_t + row_v;
    }
    (c_v, c_t, objective)
}

fn assemble(
    config: &NetworkConfig,
    a: &Reservation,
    b: &JobRequest,
    imbalance: &Imbalance,
    rows: &[Vec<u32>],
) -> TransferPlan {
    let n = config.num_servers();
    let mut delta = vec![vec![0u32; n]; n];
    for ((sender, _), row) in imbalance.deficits.iter().zip(rows) {
        for ((receiver, _), &d) in imbalance.surpluses.iter().zip(row) {
            delta[*sender][*receiver] = d;
        }
    }
    let (c_v, c_t, objective) = plan_costs(config, a, b, &delta);
    TransferPlan {
        delta,
        c_v,
        c_t,
        objective,
    }
}

/// Advances `row` to the next vector in lexicographic order with
/// `row[i] <= limits[i]`. Returns false after the last one.
fn next_lex(row: &mut [u32], limits: &[u32]) -> bool {
    for i in (0..row.len()).rev() {
        if row[i] < limits[i] {
            row[i] += 1;
            return true;
        }
        row[i] = 0;
    }
    false
}

/// Exact branch-and-bound over deficit rows.
///
/// A backward dynamic program over the receivers' remaining capacities gives
/// the optimal completion cost for every suffix of deficit servers. The
/// search then walks rows in lexicographic order and keeps only strict
/// improvements, so the first optimum found is the lexicographically
/// smallest one.
struct Search<'a> {
    config: &'a NetworkConfig,
    imbalance: &'a Imbalance,
    radices: Vec<usize>,
    /// `bound[k][state]`: optimal cost of deficit rows `k..` given the
    /// receivers' remaining capacities encoded as `state`.
    bound: Vec<Vec<f64>>,
    best: f64,
    best_rows: Vec<Vec<u32>>,
    rows: Vec<Vec<u32>>,
}

impl<'a> Search<'a> {
    fn new(config: &'a NetworkConfig, imbalance: &'a Imbalance) -> Self {
        let radices: Vec<usize> = imbalance
            .surpluses
            .iter()
            .map(|&(_, s)| s as usize + 1)
            .collect();
        let num_states: usize = radices.iter().product();
        let k = imbalance.deficits.len();
        let mut search = Search {
            config,
            imbalance,
            radices,
            bound: vec![vec![0.0; num_states]; k + 1],
            best: f64::INFINITY,
            best_rows: Vec::new(),
            rows: Vec::with_capacity(k),
        };
        search.fill_bounds();
        search
    }

    fn encode(&self, rem: &[u32]) -> usize {
        rem.iter()
            .zip(&self.radices)
            .fold(0, |acc, (&r, &radix)| acc * radix + r as usize)
    }

    fn decode(&self, mut code: usize) -> Vec<u32> {
        let mut rem = vec![0u32; self.radices.len()];
        for i in (0..rem.len()).rev() {
            rem[i] = (code % self.radices[i]) as u32;
            code /= self.radices[i];
        }
        rem
    }

    fn limits(&self, deficit: u32, rem: &[u32]) -> Vec<u32> {
        rem.iter().map(|&r| r.min(deficit)).collect()
    }

    fn fill_bounds(&mut self) {
        let k_total = self.imbalance.deficits.len();
        let num_states = self.bound[0].len();
        for k in (0..k_total).rev() {
            let (sender, deficit) = self.imbalance.deficits[k];
            for code in 0..num_states {
                let rem = self.decode(code);
                let limits = self.limits(deficit, &rem);
                let mut row = vec![0u32; rem.len()];
                let mut best = f64::INFINITY;
                loop {
                    let next: Vec<u32> = rem.iter().zip(&row).map(|(r, d)| r - d).collect();
                    let value = row_cost(self.config, sender, deficit, &row)
                        + self.bound[k + 1][self.encode(&next)];
                    if value < best {
                        best = value;
                    }
                    if !next_lex(&mut row, &limits) {
                        break;
                    }
                }
                self.bound[k][code] = best;
            }
        }
    }

    fn run(&mut self) {
        let rem: Vec<u32> = self.imbalance.surpluses.iter().map(|&(_, s)| s).collect();
        self.descend(0, &rem, 0.0);
    }

    fn descend(&mut self, k: usize, rem: &[u32], prefix: f64) {
        if k == self.imbalance.deficits.len() {
            if prefix < self.best {
                self.best = prefix;
                self.best_rows = self.rows.clone();
            }
            return;
        }
        let (sender, deficit) = self.imbalance.deficits[k];
        let limits = self.limits(deficit, rem);
        let mut row = vec![0u32; rem.len()];
        loop {
            let next: Vec<u32> = rem.iter().zip(&row).map(|(r, d)| r - d).collect();
            let value = prefix + row_cost(self.config, sender, deficit, &row);
            let optimistic = value + self.bound[k + 1][self.encode(&next)];
            let slack = 1e-9 * (1.0 + self.best.abs());
            if !(optimistic > self.best + slack) {
                self.rows.push(row.clone());
                self.descend(k + 1, &next, value);
                self.rows.pop();
            }
            if !next_lex(&mut row, &limits) {
                break;
            }
        }
    }
}

/// Optimal transfer plan for reservation `a` and requests `b`.
///
/// Ties are broken toward the lexicographically smallest row-major `delta`.
pub fn solve_transfer(config: &NetworkConfig, a: &Reservation, b: &JobRequest) -> Result<TransferPlan> {
    check_pair(config, a, b)?;
    Ok(solve_unchecked(config, a, b))
}

fn solve_unchecked(config: &NetworkConfig, a: &Reservation, b: &JobRequest) -> TransferPlan {
    let imbalance = Imbalance::new(a, b);
    if imbalance.deficits.is_empty() || imbalance.surpluses.is_empty() {
        let rows = vec![vec![0; imbalance.surpluses.len()]; imbalance.deficits.len()];
        return assemble(config, a, b, &imbalance, &rows);
    }
    let mut search = Search::new(config, &imbalance);
    search.run();
    let rows = std::mem::take(&mut search.best_rows);
    assemble(config, a, b, &imbalance, &rows)
}

/// Exhaustive search over every integer `delta` within the pairwise and
/// receiver-capacity bounds. Verification oracle for [`solve_transfer`].
pub fn brute_force_transfer(
    config: &NetworkConfig,
    a: &Reservation,
    b: &JobRequest,
) -> Result<TransferPlan> {
    brute_force_transfer_with_ceiling(config, a, b, BRUTE_FORCE_CEILING)
}

pub fn brute_force_transfer_with_ceiling(
    config: &NetworkConfig,
    a: &Reservation,
    b: &JobRequest,
    ceiling: u128,
) -> Result<TransferPlan> {
    check_pair(config, a, b)?;
    let n = config.num_servers();
    let av = a.values();
    let bv = b.values();
    let deficit = |i: usize| bv[i].saturating_sub(av[i]);
    let surplus = |i: usize| av[i].saturating_sub(bv[i]);

    // every off-diagonal cell, row-major, with its pairwise bound
    let cells: Vec<(usize, usize, u32)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, deficit(i).min(surplus(j))))
        .collect();
    let candidates: u128 = cells.iter().map(|&(_, _, u)| u as u128 + 1).product();
    if candidates > ceiling {
        return Err(Error::SearchTooLarge {
            candidates,
            ceiling,
        });
    }

    let limits: Vec<u32> = cells.iter().map(|&(_, _, u)| u).collect();
    let mut values = vec![0u32; cells.len()];
    let mut delta = vec![vec![0u32; n]; n];
    let mut best: Option<(f64, Vec<Vec<u32>>)> = None;
    loop {
        for (&(i, j, _), &d) in cells.iter().zip(&values) {
            delta[i][j] = d;
        }
        let within_capacity = (0..n).all(|j| {
            let received: u64 = (0..n).filter(|&i| i != j).map(|i| delta[i][j] as u64).sum();
            received <= surplus(j) as u64
        });
        if within_capacity {
            let (_, _, objective) = plan_costs(config, a, b, &delta);
            if best.as_ref().is_none_or(|(value, _)| objective < *value) {
                best = Some((objective, delta.clone()));
            }
        }
        if !next_lex(&mut values, &limits) {
            break;
        }
    }
    let (_, delta) = best.expect("the zero plan is always feasible");
    let (c_v, c_t, objective) = plan_costs(config, a, b, &delta);
    Ok(TransferPlan {
        delta,
        c_v,
        c_t,
        objective,
    })
}

/// `C_V(a, b) + C_T(a, b)` under the optimal transfer plan.
pub fn total_cost(config: &NetworkConfig, a: &Reservation, b: &JobRequest) -> Result<f64> {
    Ok(solve_transfer(config, a, b)?.total())
}

enum Storage {
    /// Request-major: entry `b * len + a`.
    Dense { violation: Vec<f64>, transfer: Vec<f64> },
    Sparse(RwLock<HashMap<(usize, usize), (f64, f64)>>),
}

/// Memoized `C(a, b)` over flat indices.
///
/// Spaces up to [`DENSE_ORACLE_LIMIT`] reservations are fully precomputed on
/// construction; larger ones are filled lazily behind a read-write lock.
pub struct CostOracle {
    config: NetworkConfig,
    space: ReservationSpace,
    storage: Storage,
}

impl CostOracle {
    pub fn new(config: &NetworkConfig, space: &ReservationSpace) -> Self {
        let len = space.len();
        let storage = if len <= DENSE_ORACLE_LIMIT {
            let columns: Vec<(Vec<f64>, Vec<f64>)> = (0..len)
                .into_par_iter()
                .map(|bi| {
                    let b = space.reservation_at(bi).expect("in range");
                    (0..len)
                        .map(|ai| {
                            let a = space.reservation_at(ai).expect("in range");
                            let plan = solve_unchecked(config, &a, &b);
                            (plan.c_v, plan.c_t)
                        })
                        .unzip()
                })
                .collect();
            let mut violation = Vec::with_capacity(len * len);
            let mut transfer = Vec::with_capacity(len * len);
            for (v, t) in columns {
                violation.extend(v);
                transfer.extend(t);
            }
            Storage::Dense {
                violation,
                transfer,
            }
        } else {
            Storage::Sparse(RwLock::new(HashMap::new()))
        };
        CostOracle {
            config: config.clone(),
            space: space.clone(),
            storage,
        }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn space(&self) -> &ReservationSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    fn parts(&self, a: usize, b: usize) -> (f64, f64) {
        let len = self.space.len();
        assert!(a < len && b < len, "flat index out of range");
        match &self.storage {
            Storage::Dense {
                violation,
                transfer,
            } => (violation[b * len + a], transfer[b * len + a]),
            Storage::Sparse(cache) => {
                if let Some(&hit) = cache.read().expect("oracle lock").get(&(a, b)) {
                    return hit;
                }
                let ra = self.space.reservation_at(a).expect("in range");
                let rb = self.space.reservation_at(b).expect("in range");
                let plan = solve_unchecked(&self.config, &ra, &rb);
                let entry = (plan.c_v, plan.c_t);
                cache.write().expect("oracle lock").insert((a, b), entry);
                entry
            }
        }
    }

    pub fn violation(&self, a: usize, b: usize) -> f64 {
        self.parts(a, b).0
    }

    pub fn transfer(&self, a: usize, b: usize) -> f64 {
        self.parts(a, b).1
    }

    /// `C(a, b) = C_V + C_T`.
    pub fn total(&self, a: usize, b: usize) -> f64 {
        let (v, t) = self.parts(a, b);
        v + t
    }

    /// `C(·, b)` over every reservation, in flat-index order.
    pub fn costs_for_request(&self, b: usize) -> Cow<'_, [f64]> {
        Cow::Owned((0..self.space.len()).map(|a| self.total(a, b)).collect())
    }

    /// Writes the full matrix as CSV: row = reservation index, column =
    /// request index.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let len = self.space.len();
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "a")?;
        for b in 0..len {
            write!(out, ",{b}")?;
        }
        writeln!(out)?;
        for a in 0..len {
            write!(out, "{a}")?;
            for b in 0..len {
                write!(out, ",{}", self.total(a, b))?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostFn, Server};

    fn res(v: &[u32]) -> Reservation {
        Reservation::new(v.to_vec())
    }

    #[test]
    fn keeps_jobs_when_violation_is_cheaper() {
        let cfg = NetworkConfig::two_server_example();
        let plan = solve_transfer(&cfg, &res(&[3, 5]), &res(&[5, 3])).unwrap();
        assert_eq!(plan.delta, vec![vec![0, 0], vec![0, 0]]);
        assert!((plan.c_v - 0.4).abs() < 1e-12);
        assert_eq!(plan.c_t, 0.0);
    }

    #[test]
    fn uses_free_unit_transfer() {
        let cfg = NetworkConfig::two_server_example();
        let plan = solve_transfer(&cfg, &res(&[5, 3]), &res(&[3, 5])).unwrap();
        assert_eq!(plan.delta, vec![vec![0, 0], vec![1, 0]]);
        assert!((plan.c_v - 0.2).abs() < 1e-12);
        assert_eq!(plan.c_t, 0.0);
        // hand-evaluated alternatives: δ=0 → 0.8, δ=2 → ln 1.5
        let cost = |d: u32| plan_costs(&cfg, &res(&[5, 3]), &res(&[3, 5]), &[vec![0, 0], vec![d, 0]]).2;
        assert!((cost(0) - 0.8).abs() < 1e-12);
        assert!((cost(2) - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn balanced_pair_costs_nothing() {
        let cfg = NetworkConfig::two_server_example();
        for a in ReservationSpace::new(&cfg).unwrap().iter() {
            let plan = solve_transfer(&cfg, &a, &a).unwrap();
            assert!(plan.delta.iter().flatten().all(|&d| d == 0));
            assert_eq!(plan.total(), 0.0);
            assert_eq!(brute_force_transfer(&cfg, &a, &a).unwrap(), plan);
        }
    }

    #[test]
    fn full_reservation_never_pays() {
        let cfg = NetworkConfig::two_server_example();
        let space = ReservationSpace::new(&cfg).unwrap();
        for b in space.iter() {
            assert_eq!(total_cost(&cfg, &res(&[7, 8]), &b).unwrap(), 0.0);
        }
    }

    #[test]
    fn total_cost_example() {
        let cfg = NetworkConfig::two_server_example();
        assert!((total_cost(&cfg, &res(&[3, 5]), &res(&[5, 3])).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn receiver_capacity_is_shared() {
        // two senders with deficit 2, one receiver with surplus 2, free
        // transfers: at most 2 jobs can be moved in total
        let server = |capacity| Server {
            capacity,
            reservation_cost: CostFn::zero(),
            violation_cost: CostFn::power(1.0, 1.0),
            transfer_cost: CostFn::zero(),
        };
        let cfg = NetworkConfig {
            servers: vec![server(3), server(3), server(3)],
            v: 0.0,
        };
        let a = res(&[1, 1, 3]);
        let b = res(&[3, 3, 1]);
        let plan = solve_transfer(&cfg, &a, &b).unwrap();
        let received: u32 = plan.delta.iter().map(|row| row[2]).sum();
        assert_eq!(received, 2);
        assert_eq!(plan.c_v, 2.0);
        // lexicographically smallest optimum sends through the later row
        assert_eq!(plan.delta, vec![vec![0, 0, 0], vec![0, 0, 2], vec![0, 0, 0]]);
        assert_eq!(brute_force_transfer(&cfg, &a, &b).unwrap(), plan);
    }

    #[test]
    fn plan_invariants_over_example_grid() {
        let cfg = NetworkConfig::two_server_example();
        let space = ReservationSpace::new(&cfg).unwrap();
        for a in space.iter() {
            for b in space.iter() {
                let plan = solve_transfer(&cfg, &a, &b).unwrap();
                let (av, bv) = (a.values(), b.values());
                for n in 0..2 {
                    assert_eq!(plan.delta[n][n], 0);
                    for m in 0..2 {
                        if n != m {
                            let cap = bv[n].saturating_sub(av[n]).min(av[m].saturating_sub(bv[m]));
                            assert!(plan.delta[n][m] <= cap);
                        }
                    }
                }
                let (c_v, c_t, _) = plan_costs(&cfg, &a, &b, &plan.delta);
                assert!((c_v - plan.c_v).abs() < 1e-12 && (c_t - plan.c_t).abs() < 1e-12);
                assert!(plan.total() >= 0.0);
            }
        }
    }

    #[test]
    fn brute_force_ceiling() {
        let cfg = NetworkConfig::two_server_example();
        let err = brute_force_transfer_with_ceiling(&cfg, &res(&[1, 8]), &res(&[7, 1]), 3).unwrap_err();
        assert!(matches!(err, Error::SearchTooLarge { candidates: 7, ceiling: 3 }));
    }

    #[test]
    fn oracle_matches_direct_solve() {
        let cfg = NetworkConfig::two_server_example();
        let space = ReservationSpace::new(&cfg).unwrap();
        let oracle = CostOracle::new(&cfg, &space);
        for ai in [0, 7, 30, 55] {
            for bi in [0, 12, 41, 55] {
                let a = space.reservation_at(ai).unwrap();
                let b = space.reservation_at(bi).unwrap();
                let direct = total_cost(&cfg, &a, &b).unwrap();
                assert_eq!(oracle.total(ai, bi).to_bits(), direct.to_bits());
                assert_eq!(oracle.total(ai, bi).to_bits(), oracle.total(ai, bi).to_bits());
            }
        }
        let column = oracle.costs_for_request(3);
        assert_eq!(column.len(), 56);
        assert_eq!(column[10], oracle.total(10, 3));
    }

    #[test]
    fn rejects_invalid_vectors() {
        let cfg = NetworkConfig::two_server_example();
        assert!(solve_transfer(&cfg, &res(&[0, 1]), &res(&[1, 1])).is_err());
        assert!(solve_transfer(&cfg, &res(&[1, 1]), &res(&[8, 1])).is_err());
    }
}
