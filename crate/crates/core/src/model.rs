//! Network instance, per-server cost functions and the enumerated
//! reservation space.
//!
//! A reservation assigns every server `n` an integer level in `1..=m_n`.
//! The space of all reservations is the Cartesian product of those ranges
//! and is enumerated in mixed-radix order with the last server varying
//! fastest. A reservation's position in that order is its *flat index*,
//! which is how distributions, cost tables and ledgers refer to it.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on `|R| = Π m_n`.
pub const DEFAULT_SPACE_CEILING: usize = 1_000_000;

/// A scalar cost function on integer job/resource counts.
///
/// Every kind evaluates to exactly `0.0` for `x <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum CostFn {
    /// `coef * x^exponent`
    Power { coef: f64, exponent: f64 },
    /// `ln((x + shift) / scale)`
    LogAffine { shift: f64, scale: f64 },
    /// `values[x - 1]`; arguments past the end reuse the last entry.
    Table(Vec<f64>),
}

impl CostFn {
    pub fn power(coef: f64, exponent: f64) -> Self {
        CostFn::Power { coef, exponent }
    }

    pub fn log_affine(shift: f64, scale: f64) -> Self {
        CostFn::LogAffine { shift, scale }
    }

    pub fn zero() -> Self {
        CostFn::Table(Vec::new())
    }

    pub fn eval(&self, x: i64) -> f64 {
        if x <= 0 {
            return 0.0;
        }
        match self {
            CostFn::Power { coef, exponent } => {
                let xf = x as f64;
                // powi keeps integer exponents exact on small integers
                if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
                    coef * xf.powi(*exponent as i32)
                } else {
                    coef * xf.powf(*exponent)
                }
            }
            CostFn::LogAffine { shift, scale } => ((x as f64 + shift) / scale).ln(),
            CostFn::Table(values) => match values.len() {
                0 => 0.0,
                len => values[(x as usize - 1).min(len - 1)],
            },
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("{what}: {msg}")));
        match self {
            CostFn::Power { coef, exponent } => {
                if !coef.is_finite() || !exponent.is_finite() {
                    return bad("power parameters must be finite".into());
                }
            }
            CostFn::LogAffine { shift, scale } => {
                if !shift.is_finite() || !scale.is_finite() || *scale <= 0.0 {
                    return bad("log-affine needs a finite shift and a positive scale".into());
                }
                if 1.0 + shift <= 0.0 {
                    return bad(format!("log-affine undefined at x=1 (shift={shift})"));
                }
            }
            CostFn::Table(values) => {
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return bad(format!("table entry {i} is not finite"));
                }
            }
        }
        Ok(())
    }
}

/// One server: its capacity `m_n` and its reservation, violation and
/// transfer cost functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Server {
    pub capacity: u32,
    #[serde(rename = "f_R")]
    pub reservation_cost: CostFn,
    #[serde(rename = "f_V")]
    pub violation_cost: CostFn,
    #[serde(rename = "f_T")]
    pub transfer_cost: CostFn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub servers: Vec<Server>,
    /// Per-slot budget for violation plus transfer cost.
    pub v: f64,
}

impl NetworkConfig {
    /// The two-server instance used for the reference experiment:
    /// capacities (7, 8), budget 2, reservation costs `0.3x²` and `0.1x³`,
    /// violation costs `0.1x²` and `0.2x²`, transfer costs `ln(x+1)` and
    /// `ln((x+1)/2)`.
    pub fn two_server_example() -> Self {
        NetworkConfig {
            servers: vec![
                Server {
                    capacity: 7,
                    reservation_cost: CostFn::power(0.3, 2.0),
                    violation_cost: CostFn::power(0.1, 2.0),
                    transfer_cost: CostFn::log_affine(1.0, 1.0),
                },
                Server {
                    capacity: 8,
                    reservation_cost: CostFn::power(0.1, 3.0),
                    violation_cost: CostFn::power(0.2, 2.0),
                    transfer_cost: CostFn::log_affine(1.0, 2.0),
                },
            ],
            v: 2.0,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: NetworkConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn capacities(&self) -> Vec<u32> {
        self.servers.iter().map(|s| s.capacity).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.servers.is_empty() {
            return Err(Error::InvalidConfig("at least one server is required".into()));
        }
        if !self.v.is_finite() || self.v < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "threshold v must be finite and nonnegative, got {}",
                self.v
            )));
        }
        for (n, server) in self.servers.iter().enumerate() {
            if server.capacity == 0 {
                return Err(Error::InvalidConfig(format!("server {n} has zero capacity")));
            }
            server.reservation_cost.validate(&format!("server {n} f_R"))?;
            server.violation_cost.validate(&format!("server {n} f_V"))?;
            server.transfer_cost.validate(&format!("server {n} f_T"))?;
        }
        Ok(())
    }

    /// `C_R(a) = Σ_n f^R_n(a_n)`.
    pub fn reservation_cost(&self, a: &Reservation) -> f64 {
        self.servers
            .iter()
            .zip(a.values())
            .map(|(s, &x)| s.reservation_cost.eval(x as i64))
            .sum()
    }
}

/// Per-server resource levels. Also used for job requests, which live in
/// the same space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Reservation(Vec<u32>);

pub type JobRequest = Reservation;

impl Reservation {
    pub fn new(values: Vec<u32>) -> Self {
        Reservation(values)
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

impl From<Vec<u32>> for Reservation {
    fn from(values: Vec<u32>) -> Self {
        Reservation(values)
    }
}

impl fmt::Display for Reservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// The enumerated reservation space `Π {1..m_n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReservationSpace {
    capacities: Vec<u32>,
    strides: Vec<usize>,
    len: usize,
}

impl ReservationSpace {
    pub fn new(config: &NetworkConfig) -> Result<Self> {
        Self::with_ceiling(config, DEFAULT_SPACE_CEILING)
    }

    pub fn with_ceiling(config: &NetworkConfig, ceiling: usize) -> Result<Self> {
        config.validate()?;
        Self::from_capacities(&config.capacities(), ceiling)
    }

    pub fn from_capacities(capacities: &[u32], ceiling: usize) -> Result<Self> {
        if capacities.is_empty() {
            return Err(Error::InvalidConfig("at least one server is required".into()));
        }
        if capacities.contains(&0) {
            return Err(Error::InvalidConfig("capacities must be positive".into()));
        }
        let size: u128 = capacities.iter().map(|&m| m as u128).product();
        if size > ceiling as u128 {
            return Err(Error::SpaceTooLarge { size, ceiling });
        }
        let mut strides = vec![1usize; capacities.len()];
        for n in (0..capacities.len().saturating_sub(1)).rev() {
            strides[n] = strides[n + 1] * capacities[n + 1] as usize;
        }
        Ok(ReservationSpace {
            capacities: capacities.to_vec(),
            strides,
            len: size as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacities
    }

    pub fn num_servers(&self) -> usize {
        self.capacities.len()
    }

    pub fn check(&self, a: &Reservation) -> Result<()> {
        if a.len() != self.capacities.len() {
            return Err(Error::InvalidReservation {
                values: a.values().to_vec(),
                reason: format!("expected {} servers", self.capacities.len()),
            });
        }
        for (n, (&x, &m)) in a.values().iter().zip(&self.capacities).enumerate() {
            if x < 1 || x > m {
                return Err(Error::InvalidReservation {
                    values: a.values().to_vec(),
                    reason: format!("server {n} value {x} outside 1..={m}"),
                });
            }
        }
        Ok(())
    }

    pub fn index_of(&self, a: &Reservation) -> Result<usize> {
        self.check(a)?;
        Ok(a.values()
            .iter()
            .zip(&self.strides)
            .map(|(&x, &s)| (x as usize - 1) * s)
            .sum())
    }

    pub fn reservation_at(&self, index: usize) -> Result<Reservation> {
        if index >= self.len {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.len,
            });
        }
        let values = self
            .strides
            .iter()
            .zip(&self.capacities)
            .map(|(&s, &m)| ((index / s) % m as usize) as u32 + 1)
            .collect();
        Ok(Reservation(values))
    }

    pub fn iter(&self) -> impl Iterator<Item = Reservation> + '_ {
        (0..self.len).map(move |i| self.reservation_at(i).expect("index in range"))
    }

    /// Index of the componentwise-maximal reservation `(m_1, …, m_N)`.
    pub fn full_index(&self) -> usize {
        self.len - 1
    }
}

/// All reservations in canonical order; position equals flat index.
pub fn enumerate_reservations(config: &NetworkConfig) -> Result<Vec<Reservation>> {
    let space = ReservationSpace::new(config)?;
    Ok(space.iter().collect())
}

/// `C_R` for every reservation, in flat-index order.
pub fn reservation_cost_vector(config: &NetworkConfig, space: &ReservationSpace) -> Vec<f64> {
    space.iter().map(|a| config.reservation_cost(&a)).collect()
}
