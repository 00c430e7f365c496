use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use vln_attack::attack::AttackConfig;
use vln_attack::detector::DEFAULT_TRIALS;
use vln_attack::planner::{DEFAULT_ALPHA, DEFAULT_TEMPERATURE};
use vln_attack::worldgen::WorldParams;

use crate::UsageError;

/// Everything a batch experiment depends on. Written next to its results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scenarios: usize,
    pub world: WorldParams,
    pub alpha: f64,
    pub temperature: f64,
    /// `None` calibrates the boost stop threshold per world.
    pub attack: Option<AttackConfig>,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(seed: u64, scenarios: usize, world: WorldParams) -> Self {
        Self {
            seed,
            scenarios,
            world,
            alpha: DEFAULT_ALPHA,
            temperature: DEFAULT_TEMPERATURE,
            attack: None,
            sigmas: Vec::new(),
            trials: DEFAULT_TRIALS,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        let wrap = |e: vln_attack::Error| UsageError(e.to_string());
        self.world.validate().map_err(wrap)?;
        if let Some(a) = &self.attack {
            a.validate().map_err(wrap)?;
        }
        if self.scenarios == 0 {
            return Err(UsageError("at least one scenario is required".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(UsageError(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(UsageError(format!("temperature must be > 0, got {}", self.temperature)));
        }
        if self.sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) || self.trials == 0 {
            return Err(UsageError("sigmas must be positive and trials at least 1".into()));
        }
        Ok(())
    }

    /// Seed of scenario `k`.
    pub fn scenario_seed(&self, k: usize) -> u64 {
        self.seed.wrapping_add(k as u64)
    }
}
