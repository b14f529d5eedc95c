use crate::error::Result;
use crate::model::{reservation_cost_vector, NetworkConfig, Reservation, ReservationSpace};
use crate::transfer::CostOracle;

/// A validated network together with its enumerated space, the `C_R`
/// vector and the memoized `C(a, b)` table. Read-only once built.
pub struct Instance {
    pub config: NetworkConfig,
    pub space: ReservationSpace,
    pub reservation_costs: Vec<f64>,
    pub oracle: CostOracle,
}

impl Instance {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        let space = ReservationSpace::new(&config)?;
        let reservation_costs = reservation_cost_vector(&config, &space);
        let oracle = CostOracle::new(&config, &space);
        Ok(Instance {
            config,
            space,
            reservation_costs,
            oracle,
        })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn v(&self) -> f64 {
        self.config.v
    }

    pub fn index_of(&self, a: &Reservation) -> Result<usize> {
        self.space.index_of(a)
    }

    pub fn reservation_at(&self, index: usize) -> Result<Reservation> {
        self.space.reservation_at(index)
    }
}
