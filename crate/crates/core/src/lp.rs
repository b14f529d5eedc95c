//! Small dense linear programs: two-phase tableau simplex with Bland's rule.
//!
//! Solves `min c·x` subject to row constraints `a_i·x {≤,=,≥} b_i` and
//! `x ≥ 0`. Sized for hindsight benchmarks over a few hundred variables and
//! rows.

const PIVOT_EPS: f64 = 1e-10;
const COST_EPS: f64 = 1e-10;
const FEASIBILITY_EPS: f64 = 1e-8;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coefs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coefs.len(), self.objective.len(), "constraint width");
        self.constraints.push(Constraint {
            coefs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    /// `rows × (cols + 1)`, last column is the right-hand side.
    cells: Vec<Vec<f64>>,
    basis: Vec<usize>,
    num_vars: usize,
    /// First artificial column; artificials occupy `art_start..cols`.
    art_start: usize,
    cols: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.objective.len();
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coefs.iter().map(|x| -x).collect(), flipped, -c.rhs)
                } else {
                    (c.coefs.clone(), c.relation, c.rhs)
                }
            })
            .collect();
        let num_slack = normalized.iter().filter(|r| r.1 != Relation::Eq).count();
        let num_art = normalized.iter().filter(|r| r.1 != Relation::Le).count();
        let art_start = n + num_slack;
        let cols = art_start + num_art;

        let mut cells = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let (mut slack, mut art) = (n, art_start);
        for (coefs, relation, rhs) in normalized {
            let mut row = vec![0.0; cols + 1];
            row[..n].copy_from_slice(&coefs);
            row[cols] = rhs;
            match relation {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
            }
            cells.push(row);
        }
        Tableau {
            cells,
            basis,
            num_vars: n,
            art_start,
            cols,
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.cols + 1;
        let p = self.cells[row][col];
        for j in 0..width {
            self.cells[row][j] /= p;
        }
        let pivot_row = self.cells[row].clone();
        for (i, r) in self.cells.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for j in 0..width {
                    r[j] -= factor * pivot_row[j];
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Minimizes `cost · x` over columns `0..allowed`. Returns false when
    /// unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> bool {
        for _ in 0..MAX_PIVOTS {
            // Bland: lowest-index improving column
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .cells
                        .iter()
                        .zip(&self.basis)
                        .map(|(r, &b)| cost[b] * r[j])
                        .sum::<f64>();
                reduced < -COST_EPS
            });
            let Some(col) = entering else {
                return true;
            };
            let mut leaving: Option<(usize, f64)> = None;
            for (i, r) in self.cells.iter().enumerate() {
                if r[col] > PIVOT_EPS {
                    let ratio = r[self.cols] / r[col];
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((best, best_ratio)) => {
                            if ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[i] < self.basis[best])
                            {
                                Some((i, ratio))
                            } else {
                                Some((best, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leaving else {
                return false;
            };
            self.pivot(row, col);
        }
        panic!("simplex exceeded {MAX_PIVOTS} pivots");
    }

    fn value(&self, cost: &[f64]) -> f64 {
        self.cells
            .iter()
            .zip(&self.basis)
            .map(|(r, &b)| cost[b] * r[self.cols])
            .sum()
    }

    fn solve(mut self, objective: &[f64]) -> LpOutcome {
        let scale = 1.0
            + self
                .cells
                .iter()
                .map(|r| r[self.cols].abs())
                .fold(0.0, f64::max);

        if self.art_start < self.cols {
            let mut phase1 = vec![0.0; self.cols];
            phase1[self.art_start..].iter_mut().for_each(|c| *c = 1.0);
            self.optimize(&phase1, self.cols);
            if self.value(&phase1) > FEASIBILITY_EPS * scale {
                return LpOutcome::Infeasible;
            }
            // move remaining (zero-valued) artificials out of the basis
            let mut i = 0;
            while i < self.cells.len() {
                if self.basis[i] >= self.art_start {
                    let replacement =
                        (0..self.art_start).find(|&j| self.cells[i][j].abs() > PIVOT_EPS);
                    match replacement {
                        Some(j) => {
                            self.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            // redundant row
                            self.cells.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }

        let mut phase2 = vec![0.0; self.cols];
        phase2[..self.num_vars].copy_from_slice(objective);
        if !self.optimize(&phase2, self.art_start) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; self.num_vars];
        for (r, &b) in self.cells.iter().zip(&self.basis) {
            if b < self.num_vars {
                x[b] = r[self.cols].max(0.0);
            }
        }
        let objective_value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome::Optimal(LpSolution {
            x,
            objective: objective_value,
        })
    }
}
