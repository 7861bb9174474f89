//! Scenario files: initial framework, parameters and schedules for one run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::{ExogenousSchedule, PotentialParams};
use crate::error::{Error, Result};
use crate::estimators::Gains;
use crate::graph::FrameworkFile;
use crate::rigidity::rigidity_report;
use crate::weights::{weighted_framework, WeightParams};

pub const SCHEMA_VERSION: u32 = 1;

/// The bundled six-agent demo: two steered agents, two obstacle columns.
pub const DEMO_SCENARIO: &str = include_str!("../../scenarios/demo.json");

/// Zero-mean Gaussian measurement noise. Bearing noise is an angle in
/// radians applied to the special agent's relative-position measurements.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    #[serde(default)]
    pub sigma_range: f64,
    #[serde(default)]
    pub sigma_bearing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modes {
    /// Replace consensus outputs in the power iteration by exact averages.
    #[serde(default)]
    pub oracle_consensus: bool,
    /// Drive the controller with the centralized eigenpair and true
    /// relative positions instead of the estimates.
    #[serde(default)]
    pub oracle_eigenpair: bool,
    /// With this off agents only follow their exogenous inputs.
    #[serde(default = "yes")]
    pub control: bool,
}

fn yes() -> bool {
    true
}

impl Default for Modes {
    fn default() -> Self {
        Self {
            oracle_consensus: false,
            oracle_eigenpair: false,
            control: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub framework: FrameworkFile,
    pub weights: WeightParams,
    pub gains: Gains,
    pub potential: PotentialParams,
    pub special_agent: usize,
    pub dt_ctrl: f64,
    pub dt_est: f64,
    pub duration: f64,
    pub seed: u64,
    #[serde(default = "default_warmup")]
    pub warmup: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    /// Norm cap on exogenous inputs.
    #[serde(default = "default_v_max")]
    pub exo_cap: f64,
    #[serde(default)]
    pub exogenous: Vec<ExogenousSchedule>,
    #[serde(default)]
    pub noise: NoiseParams,
    #[serde(default)]
    pub modes: Modes,
    /// Uniform per-coordinate error, in meters, added to the initial
    /// position estimates.
    #[serde(default)]
    pub estimate_perturbation: f64,
    /// Centralized diagnostics are recomputed every this many ticks.
    #[serde(default = "one")]
    pub oracle_every: usize,
    /// Most isolated single ticks below `lambda_min` tolerated after warm-up.
    #[serde(default = "default_spikes")]
    pub spike_tolerance: usize,
    /// Safety-distance shortfall, in meters, tolerated by the monitor.
    #[serde(default = "default_breach")]
    pub breach_tolerance: f64,
}

fn default_warmup() -> f64 {
    2.0
}
fn default_v_max() -> f64 {
    1.0
}
fn one() -> usize {
    1
}
fn default_spikes() -> usize {
    5
}
fn default_breach() -> f64 {
    0.05
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(value)?)
    }

    pub fn demo() -> Self {
        Self::from_json(DEMO_SCENARIO).expect("bundled demo scenario parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn n(&self) -> usize {
        self.framework.n
    }

    /// Number of estimator substeps per control tick.
    pub fn substeps(&self) -> usize {
        (self.dt_ctrl / self.dt_est).round().max(1.0) as usize
    }

    /// Number of control ticks after the initial record.
    pub fn ticks(&self) -> usize {
        (self.duration / self.dt_ctrl).round() as usize
    }

    /// Checks every parameter and the initial rigidity requirement
    /// `λ₇ > lambda_min`.
    // negated comparisons so that NaN fails every check
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let reject = |msg: String| Err(Error::ScenarioRejected(msg));
        if self.schema_version != SCHEMA_VERSION {
            return reject(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let wrap = |e: Error| Error::ScenarioRejected(e.to_string());
        let graph = self.framework.graph().map_err(wrap)?;
        let pos = self.framework.positions().map_err(wrap)?;
        let obs = self.framework.obstacles().map_err(wrap)?;
        self.weights.validate().map_err(wrap)?;
        self.gains.validate().map_err(wrap)?;
        self.potential.validate().map_err(wrap)?;
        let n = graph.n();
        if self.special_agent >= n {
            return reject(format!("special_agent {} out of range", self.special_agent));
        }
        let steps = [self.dt_ctrl, self.dt_est];
        if steps.iter().any(|x| !(x.is_finite() && *x > 0.0)) || self.dt_est > self.dt_ctrl {
            return reject("need 0 < dt_est <= dt_ctrl".into());
        }
        let ratio = self.dt_ctrl / self.dt_est;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return reject("dt_ctrl must be an integer multiple of dt_est".into());
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return reject("duration must be finite and nonnegative".into());
        }
        let positive = [self.v_max, self.exo_cap];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return reject("v_max and exo_cap must be positive".into());
        }
        if !(self.warmup.is_finite() && self.warmup >= 0.0) {
            return reject("warmup must be nonnegative".into());
        }
        if self.oracle_every == 0 {
            return reject("oracle_every must be at least 1".into());
        }
        let noise = [
            self.noise.sigma_range,
            self.noise.sigma_bearing,
            self.estimate_perturbation,
            self.breach_tolerance,
        ];
        if noise.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return reject("noise levels and tolerances must be nonnegative".into());
        }
        for ex in &self.exogenous {
            if ex.agent >= n {
                return reject(format!("exogenous input for unknown agent {}", ex.agent));
            }
            if ex.schedule.iter().any(|s| !(s.t_start <= s.t_end)) {
                return reject(format!("agent {} has a segment ending before it starts", ex.agent));
            }
        }
        let wf = weighted_framework(&graph, &pos, &obs, &self.weights).map_err(wrap)?;
        let report = rigidity_report(&wf);
        if !(report.lambda7 > self.potential.lambda_min) {
            return reject(format!(
                "initial rigidity eigenvalue {:.6} does not exceed lambda_min {}",
                report.lambda7, self.potential.lambda_min
            ));
        }
        Ok(())
    }
}
