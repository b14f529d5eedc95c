//! Closed-form guarantees for the saddle-point policy started at `λ_1 = 0`:
//! drift constant, multiplier cap, cumulative-violation cap, `K`-benchmark
//! regret cap, and the high-probability slack for realized regret.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::InstanceConstants;

/// Inputs to every bound, besides the instance constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub alpha: f64,
    pub mu: f64,
    pub horizon: usize,
    pub k: usize,
    pub aleph: u64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub params: BoundParams,
    pub theta_bound: f64,
    pub eta: f64,
    pub v: f64,
    /// One-slot drift constant `B = ½ μ² (4Θ² + v²)`.
    pub drift_b: f64,
    /// Largest one-slot multiplier increase `ϱ = μ (2Θ - v)`.
    pub varrho: f64,
    pub chi: f64,
    /// `θ(ℵ) = max(ϱ, χ(ℵ))`
    pub theta_of_aleph: f64,
    /// Multiplier cap `θ ℵ`.
    pub lambda_cap: f64,
    /// Cumulative violation cap `θ ℵ / μ`.
    pub violation_cap: f64,
    pub regret_cap_k: f64,
    pub hp_slack: f64,
}

/// Bound formulas for fixed instance constants and step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCalculator {
    pub theta_bound: f64,
    pub eta: f64,
    pub v: f64,
    pub alpha: f64,
    pub mu: f64,
}

impl BoundCalculator {
    pub fn new(constants: &InstanceConstants, alpha: f64, mu: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step sizes must be positive, got alpha={alpha}, mu={mu}"
            )));
        }
        if !(constants.eta > 0.0) {
            return Err(Error::NoSlaterPoint { eta: constants.eta });
        }
        Ok(BoundCalculator {
            theta_bound: constants.theta_bound,
            eta: constants.eta,
            v: constants.v,
            alpha,
            mu,
        })
    }

    pub fn drift_b(&self) -> f64 {
        drift_constant(self.mu, self.theta_bound, self.v)
    }

    pub fn varrho(&self) -> f64 {
        self.mu * (2.0 * self.theta_bound - self.v)
    }

    pub fn chi(&self, aleph: u64) -> f64 {
        let t = self.theta_bound;
        let a = aleph as f64;
        (self.drift_b() / self.mu + self.alpha * t * t / 4.0 + 1.0 / (2.0 * self.alpha * (a + 1.0)) + t)
            / (self.eta * a)
            + self.varrho() * (a + 2.0) / (2.0 * a)
    }

    pub fn theta_of_aleph(&self, aleph: u64) -> f64 {
        self.varrho().max(self.chi(aleph))
    }

    pub fn lambda_cap(&self, aleph: u64) -> f64 {
        self.theta_of_aleph(aleph) * aleph as f64
    }

    pub fn violation_cap(&self, aleph: u64) -> f64 {
        self.lambda_cap(aleph) / self.mu
    }

    /// `ℵ ∈ 1..=aleph_max` with the smallest multiplier cap.
    pub fn tightest_aleph(&self, aleph_max: u64) -> u64 {
        (1..=aleph_max.max(1))
            .min_by(|&x, &y| self.lambda_cap(x).total_cmp(&self.lambda_cap(y)))
            .expect("nonempty range")
    }

    pub fn regret_cap(&self, horizon: usize, k: usize) -> f64 {
        let t = self.theta_bound;
        let v = self.v;
        let kf = k as f64;
        let tf = horizon as f64;
        self.mu * (2.0 * t + v).powi(2) * (kf - 1.0) * (2.0 * kf - 1.0) / 6.0
            + (tf - kf) * (0.5 * kf * (4.0 * t * t + v * v) * self.mu + t * t * self.alpha / 4.0)
            + kf * (kf - 1.0) * t
            + 1.0 / self.alpha
    }
}

/// `B = ½ μ² (4Θ² + v²)`.
pub fn drift_constant(mu: f64, theta_bound: f64, v: f64) -> f64 {
    0.5 * mu * mu * (4.0 * theta_bound * theta_bound + v * v)
}

/// `√(2 ln(1/δ) T Θ²)`.
pub fn hp_slack(delta: f64, horizon: usize, theta_bound: f64) -> f64 {
    (2.0 * (1.0 / delta).ln() * horizon as f64 * theta_bound * theta_bound).sqrt()
}

pub fn bound_report(constants: &InstanceConstants, params: BoundParams) -> Result<BoundReport> {
    let BoundParams {
        alpha,
        mu,
        horizon,
        k,
        aleph,
        delta,
    } = params;
    if aleph == 0 {
        return Err(Error::InvalidParameter("aleph must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if k == 0 || k > horizon {
        return Err(Error::InvalidParameter(format!("K={k} must lie in 1..={horizon}")));
    }
    let calc = BoundCalculator::new(constants, alpha, mu)?;
    Ok(BoundReport {
        params,
        theta_bound: constants.theta_bound,
        eta: constants.eta,
        v: constants.v,
        drift_b: calc.drift_b(),
        varrho: calc.varrho(),
        chi: calc.chi(aleph),
        theta_of_aleph: calc.theta_of_aleph(aleph),
        lambda_cap: calc.lambda_cap(aleph),
        violation_cap: calc.violation_cap(aleph),
        regret_cap_k: calc.regret_cap(horizon, k),
        hp_slack: hp_slack(delta, horizon, constants.theta_bound),
    })
}

/// Parameter schedule `α = ε^ι`, `μ = ε^γ`, `T' = ⌈(1/ε)^κ⌉` and the orders
/// of the resulting time-averaged regret and violation guarantees for
/// `K = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub epsilon: f64,
    pub iota: f64,
    pub gamma: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGuarantee {
    pub alpha: f64,
    pub mu: f64,
    pub min_horizon: u64,
    /// `ε^γ + ε^ι + ε^(κ-ι)`, up to constants.
    pub regret_rate: f64,
    /// `ε^(ι+κ-γ) + ε^(κ-ι-γ)`
    pub violation_rate: f64,
}

impl EpsilonSchedule {
    pub fn evaluate(&self) -> Result<EpsilonGuarantee> {
        let eps = self.epsilon;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {eps}")));
        }
        let min_horizon = (1.0 / eps).powf(self.kappa).ceil();
        if !min_horizon.is_finite() || min_horizon > u64::MAX as f64 {
            return Err(Error::InvalidParameter("horizon overflows".into()));
        }
        Ok(EpsilonGuarantee {
            alpha: eps.powf(self.iota),
            mu: eps.powf(self.gamma),
            min_horizon: min_horizon as u64,
            regret_rate: eps.powf(self.gamma) + eps.powf(self.iota) + eps.powf(self.kappa - self.iota),
            violation_rate: eps.powf(self.iota + self.kappa - self.gamma)
                + eps.powf(self.kappa - self.iota - self.gamma),
        })
    }
}
