//! Model configuration files for the command line tool.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::EngineOptions;
use crate::error::{Error, Result};
use crate::fractional::FracOrder;
use crate::model::{FarimaModel, ModelOptions};
use crate::rational::{FactorOptions, RationalMatrix};

/// User-facing model definition: d, the rational factor g and run settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: f64,
    pub g: RationalMatrix,
    /// Target accuracy of the engine.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Entrywise agreement required between engine and oracle.
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    /// Initial grid of the spectral factorization (power of two).
    #[serde(default)]
    pub grid: Option<usize>,
    /// Half-width of the phase-ratio Laurent window.
    #[serde(default)]
    pub window: Option<usize>,
    /// Horizons n.
    #[serde(default)]
    pub n_list: Vec<usize>,
    /// Boundedness verdict threshold.
    #[serde(default = "default_verdict_factor")]
    pub verdict_factor: f64,
    /// Index range [lo, hi] of the `beta` dump; defaults to [0, max(n_list, 64)].
    #[serde(default)]
    pub beta_range: Option<[i64; 2]>,
    /// Number of coefficients in the `coeffs` dump; defaults to max(n_list, 64).
    #[serde(default)]
    pub coeff_count: Option<usize>,
}

fn default_tol() -> f64 {
    1e-11
}

fn default_oracle_tol() -> f64 {
    1e-6
}

fn default_verdict_factor() -> f64 {
    1.5
}

impl ModelConfig {
    /// Minimal configuration with defaults for everything but d and g.
    pub fn new(d: f64, g: RationalMatrix) -> Self {
        ModelConfig {
            d,
            g,
            tol: default_tol(),
            oracle_tol: default_oracle_tol(),
            grid: None,
            window: None,
            n_list: Vec::new(),
            verdict_factor: default_verdict_factor(),
            beta_range: None,
            coeff_count: None,
        }
    }

    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ModelConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// d ∈ (−1/2, 1/2)∖{0}, condition (C) for g, sane tolerances and sizes.
    pub fn validate(&self) -> Result<()> {
        FracOrder::new(self.d)?;
        self.g.require_condition_c()?;
        for (name, v) in [("tol", self.tol), ("oracle_tol", self.oracle_tol)] {
            if !(v.is_finite() && v > 0.0 && v < 1.0) {
                return Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.verdict_factor.is_finite() && self.verdict_factor >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "verdict_factor must be at least 1, got {}",
                self.verdict_factor
            )));
        }
        if let Some(g) = self.grid {
            if !g.is_power_of_two() || g < 1 << 10 {
                return Err(Error::InvalidInput(format!("grid must be a power of two ≥ 1024, got {g}")));
            }
        }
        if let Some([lo, hi]) = self.beta_range {
            if lo > hi {
                return Err(Error::InvalidInput(format!("beta_range [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }

    pub fn model_options(&self) -> ModelOptions {
        let mut o = ModelOptions::default();
        if let Some(g) = self.grid {
            o.factor = FactorOptions {
                grid: g,
                max_grid: o.factor.max_grid.max(g),
                ..o.factor
            };
        }
        if let Some(w) = self.window {
            o.window = w;
        }
        o
    }

    pub fn engine_options(&self) -> EngineOptions {
        EngineOptions {
            tol: self.tol,
            ..EngineOptions::default()
        }
    }

    pub fn build_model(&self) -> Result<FarimaModel> {
        FarimaModel::new(self.d, self.g.clone(), &self.model_options())
    }

    pub fn max_n(&self) -> usize {
        self.n_list.iter().cloned().max().unwrap_or(0)
    }
}
