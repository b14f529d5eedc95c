use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{DualState, LagrangianCombinatorial, Lazy, Naive, OnlinePolicy, SaddlePoint, SaddleState};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::{NetworkConfig, Reservation};
use crate::simplex::Distribution;
use crate::workload::WorkloadSpec;

/// Starting distribution `P^0` of the saddle-point policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    #[default]
    Uniform,
    /// Point mass at the initial request `b^0`.
    Point,
}

fn unit_step() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyKind {
    SaddlePoint {
        alpha: f64,
        mu: f64,
        #[serde(default)]
        lambda_init: f64,
        #[serde(default)]
        init: InitMode,
    },
    Lazy,
    Naive,
    Lagrangian {
        #[serde(default = "unit_step")]
        dual_step: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: PolicyKind,
}

impl PolicySpec {
    pub fn build(&self, inst: &Instance, b0: usize) -> Result<Box<dyn OnlinePolicy>> {
        Ok(match &self.kind {
            PolicyKind::SaddlePoint {
                alpha,
                mu,
                lambda_init,
                init,
            } => {
                let p0 = match init {
                    InitMode::Uniform => Distribution::uniform(inst.len()),
                    InitMode::Point => Distribution::point_mass(inst.len(), b0),
                };
                let state = SaddleState::new(p0, *lambda_init, b0, *alpha, *mu)?;
                Box::new(SaddlePoint::new(&self.name, state))
            }
            PolicyKind::Lazy => Box::new(Lazy::new(&self.name)),
            PolicyKind::Naive => Box::new(Naive::new(&self.name)),
            PolicyKind::Lagrangian { dual_step } => {
                if !(*dual_step > 0.0 && dual_step.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "policy {}: dual step must be positive, got {dual_step}",
                        self.name
                    )));
                }
                let state = DualState {
                    step: *dual_step,
                    ..DualState::new(b0)
                };
                Box::new(LagrangianCombinatorial::new(&self.name, state))
            }
        })
    }

    /// `(α, μ)` for saddle-point policies.
    pub fn step_sizes(&self) -> Option<(f64, f64)> {
        match self.kind {
            PolicyKind::SaddlePoint { alpha, mu, .. } => Some((alpha, mu)),
            _ => None,
        }
    }
}

/// A benchmark window length: a number, or `"T"` for the horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowLength {
    Fixed(usize),
    Symbolic(String),
}

impl WindowLength {
    pub fn resolve(&self, horizon: usize) -> Result<usize> {
        let k = match self {
            WindowLength::Fixed(k) => *k,
            WindowLength::Symbolic(s) if s == "T" => horizon,
            WindowLength::Symbolic(s) => {
                return Err(Error::InvalidParameter(format!("window length {s:?} is neither a number nor \"T\"")))
            }
        };
        if k == 0 || k > horizon {
            return Err(Error::InvalidParameter(format!("window length {k} must lie in 1..={horizon}")));
        }
        Ok(k)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "T" {
            return Ok(WindowLength::Symbolic("T".into()));
        }
        s.parse()
            .map(WindowLength::Fixed)
            .map_err(|_| Error::InvalidParameter(format!("window length {s:?} is neither a number nor \"T\"")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    #[serde(default = "default_aleph_max")]
    pub aleph_max: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_aleph_max() -> u64 {
    200
}

fn default_delta() -> f64 {
    0.1
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            aleph_max: default_aleph_max(),
            delta: default_delta(),
        }
    }
}

fn default_ks() -> Vec<WindowLength> {
    vec![WindowLength::Fixed(1), WindowLength::Symbolic("T".into())]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub workload: WorkloadSpec,
    pub horizon: usize,
    pub policies: Vec<PolicySpec>,
    #[serde(default = "default_ks")]
    pub benchmark_ks: Vec<WindowLength>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// `b^0`, used by the first decision; all ones when absent.
    #[serde(default)]
    pub initial_request: Option<Vec<u32>>,
    /// Offsets the workload seed by each run seed, so seeds differ in
    /// their request streams as well as in sampling.
    #[serde(default = "yes")]
    pub vary_workload_with_seed: bool,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads and validates a config; relative trace paths are taken
    /// relative to the config file.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::MissingInput(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            cfg.workload.resolve_paths(dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidConfig("at least one policy is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        for (i, p) in self.policies.iter().enumerate() {
            let safe = !p.name.is_empty()
                && p.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
            if !safe {
                return Err(Error::InvalidConfig(format!(
                    "policy name {:?} must be nonempty and use only [A-Za-z0-9._-]",
                    p.name
                )));
            }
            if self.policies[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::InvalidConfig(format!("duplicate policy name {:?}", p.name)));
            }
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(Error::InvalidConfig("duplicate seeds".into()));
        }
        self.window_lengths()?;
        if let Some(b0) = &self.initial_request {
            crate::model::ReservationSpace::from_capacities(&self.network.capacities(), usize::MAX)?
                .check(&Reservation::new(b0.clone()))?;
        }
        if !(self.bounds.delta > 0.0 && self.bounds.delta < 1.0) || self.bounds.aleph_max == 0 {
            return Err(Error::InvalidConfig("bounds need aleph_max ≥ 1 and delta in (0, 1)".into()));
        }
        Ok(())
    }

    /// Resolved, deduplicated window lengths in config order.
    pub fn window_lengths(&self) -> Result<Vec<usize>> {
        let mut ks = Vec::new();
        for w in &self.benchmark_ks {
            let k = w.resolve(self.horizon)?;
            if !ks.contains(&k) {
                ks.push(k);
            }
        }
        Ok(ks)
    }

    pub fn initial_request(&self) -> Reservation {
        Reservation::new(
            self.initial_request
                .clone()
                .unwrap_or_else(|| vec![1; self.network.num_servers()]),
        )
    }

    pub fn workload_for_seed(&self, seed: u64) -> WorkloadSpec {
        if self.vary_workload_with_seed {
            self.workload.offset_seed(seed)
        } else {
            self.workload.clone()
        }
    }

    /// Keeps only the named policies, in the given order.
    pub fn select_policies(&mut self, names: &[String]) -> Result<()> {
        let mut chosen = Vec::with_capacity(names.len());
        for name in names {
            let spec = self
                .policies
                .iter()
                .find(|p| &p.name == name)
                .ok_or_else(|| Error::InvalidConfig(format!("no policy named {name:?}")))?;
            chosen.push(spec.clone());
        }
        self.policies = chosen;
        self.validate()
    }
}
