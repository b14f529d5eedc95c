//! Online reservation policies.
//!
//! Every policy is a single-step state machine: at slot `t` it sees the
//! previous slot's request `b^{t-1}` (as a flat index) and commits to a
//! distribution over reservations and a sampled reservation, before `b^t`
//! is revealed.
//!
//! * [`SaddlePoint`]: randomized proximal primal step on the simplex plus a
//!   projected dual ascent step on the budget multiplier.
//! * [`Lazy`]: reserve exactly the previous request.
//! * [`Naive`]: cheapest reservation meeting the budget against the
//!   previous request.
//! * [`LagrangianCombinatorial`]: minimize the per-slot Lagrangian over
//!   reservations directly, with a dual step of 1 by default.
//!
//! Ties are always broken toward the smallest flat index.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::{JobRequest, Reservation};
use crate::simplex::{self, Distribution};

/// What a policy commits to in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub distribution: Distribution,
    pub sampled_index: usize,
    /// `E_{P^t}[C(A, b^{t-1})]`
    pub expected_cost_vs_prev_request: f64,
}

impl PolicyDecision {
    fn deterministic(inst: &Instance, index: usize, b_prev: usize) -> Self {
        PolicyDecision {
            distribution: Distribution::point_mass(inst.len(), index),
            sampled_index: index,
            expected_cost_vs_prev_request: inst.oracle.total(index, b_prev),
        }
    }
}

pub trait OnlinePolicy: Send {
    fn name(&self) -> &str;

    /// Multiplier in force for the upcoming slot, if the policy keeps one.
    fn lambda(&self) -> Option<f64>;

    /// `P^{t-1}` for policies that carry a distribution between slots.
    fn current_distribution(&self) -> Option<&Distribution> {
        None
    }

    /// Plays one slot given the previous request `b_prev`.
    fn step(&mut self, inst: &Instance, b_prev: usize, rng: &mut dyn RngCore) -> Result<PolicyDecision>;
}

/// `P^t = Π_simplex(P^{t-1} - α g)`; the minimizer of `⟨g, P⟩ + ‖P - P^{t-1}‖²/(2α)`
/// over the simplex.
pub fn proximal_step(prev: &Distribution, gradient: &[f64], alpha: f64) -> Result<Distribution> {
    if gradient.len() != prev.len() {
        return Err(Error::LengthMismatch {
            expected: prev.len(),
            got: gradient.len(),
        });
    }
    let y: Vec<f64> = prev
        .probs()
        .iter()
        .zip(gradient)
        .map(|(p, g)| p - alpha * g)
        .collect();
    simplex::project_simplex(&y)
}

/// Projected dual ascent: `max(0, λ + μ (E - v))`.
pub fn dual_step(lambda: f64, expected_cost: f64, v: f64, mu: f64) -> f64 {
    (lambda + mu * (expected_cost - v)).max(0.0)
}

/// State of the randomized saddle-point policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleState {
    /// `P^{t-1}`
    pub prev: Distribution,
    /// `λ_t`
    pub lambda: f64,
    /// `b^{t-1}` as a flat index.
    pub b_prev: usize,
    pub alpha: f64,
    pub mu: f64,
}

impl SaddleState {
    pub fn new(prev: Distribution, lambda: f64, b_prev: usize, alpha: f64, mu: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step sizes must be positive, got alpha={alpha}, mu={mu}"
            )));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
        }
        Ok(SaddleState {
            prev,
            lambda,
            b_prev,
            alpha,
            mu,
        })
    }
}

/// Gradient of the approximate Lagrangian in `P`: `C_R(a) + λ C(a, b_prev)`.
/// The `-λ v` term is constant in `P`.
fn lagrangian_gradient(inst: &Instance, lambda: f64, b_prev: usize) -> Vec<f64> {
    let costs = inst.oracle.costs_for_request(b_prev);
    inst.reservation_costs
        .iter()
        .zip(costs.iter())
        .map(|(r, c)| r + lambda * c)
        .collect()
}

pub fn saddle_primal_step(state: &SaddleState, inst: &Instance) -> Result<Distribution> {
    let gradient = lagrangian_gradient(inst, state.lambda, state.b_prev);
    proximal_step(&state.prev, &gradient, state.alpha)
}

/// One slot of the saddle-point policy. `b_observed` is `b^{t-1}`; the
/// dual update uses it too, not `b^t`.
pub fn saddle_step(
    state: &SaddleState,
    b_observed: usize,
    inst: &Instance,
    rng: &mut dyn RngCore,
) -> Result<(PolicyDecision, SaddleState)> {
    let mut next = state.clone();
    next.b_prev = b_observed;
    let p = saddle_primal_step(&next, inst)?;
    let sampled_index = simplex::sample(&p, rng);
    let expected = simplex::expectation(&p, &inst.oracle.costs_for_request(b_observed))?;
    next.lambda = dual_step(state.lambda, expected, inst.v(), state.mu);
    next.prev = p.clone();
    Ok((
        PolicyDecision {
            distribution: p,
            sampled_index,
            expected_cost_vs_prev_request: expected,
        },
        next,
    ))
}

pub struct SaddlePoint {
    name: String,
    state: SaddleState,
}

impl SaddlePoint {
    pub fn new(name: impl Into<String>, state: SaddleState) -> Self {
        SaddlePoint {
            name: name.into(),
            state,
        }
    }

    pub fn state(&self) -> &SaddleState {
        &self.state
    }
}

impl OnlinePolicy for SaddlePoint {
    fn name(&self) -> &str {
        &self.name
    }

    fn lambda(&self) -> Option<f64> {
        Some(self.state.lambda)
    }

    fn current_distribution(&self) -> Option<&Distribution> {
        Some(&self.state.prev)
    }

    fn step(&mut self, inst: &Instance, b_prev: usize, rng: &mut dyn RngCore) -> Result<PolicyDecision> {
        let (decision, next) = saddle_step(&self.state, b_prev, inst, rng)?;
        self.state = next;
        Ok(decision)
    }
}

/// `A^t = b^{t-1}`.
pub fn lazy_step(b_prev: &JobRequest) -> Reservation {
    b_prev.clone()
}

pub struct Lazy {
    name: String,
}

impl Lazy {
    pub fn new(name: impl Into<String>) -> Self {
        Lazy { name: name.into() }
    }
}

impl OnlinePolicy for Lazy {
    fn name(&self) -> &str {
        &self.name
    }

    fn lambda(&self) -> Option<f64> {
        None
    }

    fn step(&mut self, inst: &Instance, b_prev: usize, _rng: &mut dyn RngCore) -> Result<PolicyDecision> {
        // reservations and requests share one space, so the index carries over
        Ok(PolicyDecision::deterministic(inst, b_prev, b_prev))
    }
}

/// Cheapest reservation with `C(A, b_prev) ≤ v`. If none qualifies, the one
/// with the smallest `C(A, b_prev)`, then smallest `C_R`.
pub fn naive_step(inst: &Instance, b_prev: usize) -> usize {
    let v = inst.v();
    let feasible = (0..inst.len())
        .filter(|&a| inst.oracle.total(a, b_prev) <= v)
        .min_by(|&x, &y| inst.reservation_costs[x].total_cmp(&inst.reservation_costs[y]));
    feasible.unwrap_or_else(|| {
        (0..inst.len())
            .min_by(|&x, &y| {
                inst.oracle
                    .total(x, b_prev)
                    .total_cmp(&inst.oracle.total(y, b_prev))
                    .then(inst.reservation_costs[x].total_cmp(&inst.reservation_costs[y]))
            })
            .expect("nonempty space")
    })
}

pub struct Naive {
    name: String,
}

impl Naive {
    pub fn new(name: impl Into<String>) -> Self {
        Naive { name: name.into() }
    }
}

impl OnlinePolicy for Naive {
    fn name(&self) -> &str {
        &self.name
    }

    fn lambda(&self) -> Option<f64> {
        None
    }

    fn step(&mut self, inst: &Instance, b_prev: usize, _rng: &mut dyn RngCore) -> Result<PolicyDecision> {
        Ok(PolicyDecision::deterministic(inst, naive_step(inst, b_prev), b_prev))
    }
}

/// Multiplier state of the Lagrangian combinatorial policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub lambda: f64,
    pub b_prev: usize,
    /// Dual step size; 1 unless overridden.
    pub step: f64,
}

impl DualState {
    pub fn new(b_prev: usize) -> Self {
        DualState {
            lambda: 0.0,
            b_prev,
            step: 1.0,
        }
    }
}

/// `A^t = argmin_A C_R(A) + λ_t (C(A, b^{t-1}) - v)`, then
/// `λ_{t+1} = max(0, λ_t + step (C(A^t, b^{t-1}) - v))`.
pub fn lagrangian_combinatorial_step(state: &DualState, inst: &Instance, b_observed: usize) -> (usize, DualState) {
    let v = inst.v();
    let lambda = state.lambda;
    let score = |a: usize| inst.reservation_costs[a] + lambda * (inst.oracle.total(a, b_observed) - v);
    let chosen = (0..inst.len())
        .min_by(|&x, &y| score(x).total_cmp(&score(y)))
        .expect("nonempty space");
    let next = DualState {
        lambda: dual_step(lambda, inst.oracle.total(chosen, b_observed), v, state.step),
        b_prev: b_observed,
        step: state.step,
    };
    (chosen, next)
}

pub struct LagrangianCombinatorial {
    name: String,
    state: DualState,
}

impl LagrangianCombinatorial {
    pub fn new(name: impl Into<String>, state: DualState) -> Self {
        LagrangianCombinatorial {
            name: name.into(),
            state,
        }
    }
}

impl OnlinePolicy for LagrangianCombinatorial {
    fn name(&self) -> &str {
        &self.name
    }

    fn lambda(&self) -> Option<f64> {
        Some(self.state.lambda)
    }

    fn step(&mut self, inst: &Instance, b_prev: usize, _rng: &mut dyn RngCore) -> Result<PolicyDecision> {
        let (chosen, next) = lagrangian_combinatorial_step(&self.state, inst, b_prev);
        self.state = next;
        Ok(PolicyDecision::deterministic(inst, chosen, b_prev))
    }
}
