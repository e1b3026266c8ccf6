//! Run configuration shared by the suites and the command line.

use crate::quotient::Pairing;
use crate::swann::ThetaConvention;
use crate::tensor::DerivEngine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How first derivatives are taken in the checks that accept a choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    /// Central differences with step `fd_step`.
    Fd,
    /// Forward-mode dual numbers, exact to rounding.
    #[default]
    Dual,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{field} must be positive, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("n must be at least 1")]
    ZeroDimension,
    #[error("{field} must be at least {min}, got {value}")]
    TooSmall { field: &'static str, min: usize, value: usize },
}

/// Settings for a verification run.
///
/// Every field has a default, so an empty file is a valid configuration.
/// Tolerance overrides apply to a whole class of checks; when absent each
/// check keeps its own threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub n: usize,
    pub seed: u64,
    /// Overrides the per-check sample counts.
    pub samples: Option<usize>,
    pub engine: EngineMode,
    pub fd_step: f64,
    pub tol_first_deriv: Option<f64>,
    pub tol_curvature: Option<f64>,
    pub tol_integral_rel: Option<f64>,
    /// Quadrature nodes per side for the Chern pairings; the drift check
    /// also runs at twice this.
    pub grid: usize,
    pub pairing: Pairing,
    pub theta: ThetaConvention,
    /// Record wall-clock milliseconds; off by default so output is reproducible.
    pub timing: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            n: 1,
            seed: 42,
            samples: None,
            engine: EngineMode::Dual,
            fd_step: DerivEngine::FD_STEP,
            tol_first_deriv: None,
            tol_curvature: None,
            tol_integral_rel: None,
            grid: 64,
            pairing: Pairing::Bilinear,
            theta: ThetaConvention::Connection,
            timing: false,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::ZeroDimension);
        }
        if self.fd_step.is_nan() || self.fd_step <= 0.0 {
            return Err(ConfigError::NotPositive { field: "fd_step", value: self.fd_step });
        }
        for (field, tol) in
            [("tol_first_deriv", self.tol_first_deriv), ("tol_curvature", self.tol_curvature), ("tol_integral_rel", self.tol_integral_rel)]
        {
            if let Some(value) = tol {
                if value.is_nan() || value <= 0.0 {
                    return Err(ConfigError::NotPositive { field, value });
                }
            }
        }
        if self.grid < 4 {
            return Err(ConfigError::TooSmall { field: "grid", min: 4, value: self.grid });
        }
        if self.samples == Some(0) {
            return Err(ConfigError::TooSmall { field: "samples", min: 1, value: 0 });
        }
        Ok(())
    }

    /// Engine for first derivatives.
    pub fn engine(&self) -> DerivEngine {
        match self.engine {
            EngineMode::Fd => DerivEngine::CentralFd { h: self.fd_step },
            EngineMode::Dual => DerivEngine::Dual,
        }
    }

    /// Engine for curvature, where nested differences need a larger step.
    pub fn curvature_engine(&self) -> DerivEngine {
        match self.engine {
            EngineMode::Fd => DerivEngine::CentralFd { h: self.fd_step.max(DerivEngine::FD_CURVATURE_STEP) },
            EngineMode::Dual => DerivEngine::Dual,
        }
    }

    pub fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }
}
