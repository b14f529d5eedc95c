//! Online randomized resource reservation over a network of coupled
//! servers.
//!
//! Reservations are drawn from a distribution over the finite reservation
//! space, updated every slot by a proximal primal step and a projected dual
//! ascent step on a long-term budget for violation and transfer costs.
//! Deterministic baselines, hindsight benchmarks, regret and violation
//! metrics, theoretical bound calculators and an experiment harness are
//! included.

pub mod algorithms;
pub mod benchmarks;
pub mod error;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod model;
pub mod simplex;
pub mod transfer;
pub mod workload;

pub use error::{Error, Result};
pub use instance::Instance;
pub use model::{CostFn, JobRequest, NetworkConfig, Reservation, ReservationSpace, Server};
pub use simplex::Distribution;
pub use transfer::{CostOracle, TransferPlan};
