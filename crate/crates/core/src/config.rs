//! Run configuration, read from and written to TOML.
//!
//! Every section has defaults, so an empty file is a valid configuration
//! describing the calibrated single-module link used for long sessions. `decoy.nu` and `decoy.mixture` are the
//! authoritative decoy settings; they override `link.nu` and
//! `schedule.mixture`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{DriftParams, DEFAULT_SIGMA_RESIDUAL};
use crate::framing::{DecoyMixture, LinkConfig, SessionSchedule};
use crate::ldpc::{Arithmetic, DensityEvolution, DesignSpec, ErrorModel, SweepConfig, WeightDistribution};
use crate::photonics::{DetectorModel, LinkParams, DEFAULT_NU};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub link: LinkParams,
    pub detector: DetectorSettings,
    pub drift: DriftParams,
    pub stabilizer: StabilizerSettings,
    pub schedule: SessionSchedule,
    pub simulation: SimulationSettings,
    pub decoy: DecoySettings,
    pub ldpc: LdpcSettings,
    pub outputs: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            link: LinkParams::long_run_regime(),
            detector: DetectorSettings::default(),
            drift: DriftParams::default(),
            stabilizer: StabilizerSettings::default(),
            schedule: SessionSchedule::default(),
            simulation: SimulationSettings::default(),
            decoy: DecoySettings::default(),
            ldpc: LdpcSettings::default(),
            outputs: OutputPaths::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSettings {
    pub deadtime: f64,
    pub random_double_click: bool,
    pub efficiency_scale: [f64; 2],
}

impl Default for DetectorSettings {
    fn default() -> Self {
        let d = DetectorModel::default();
        DetectorSettings { deadtime: d.deadtime, random_double_click: d.random_double_click, efficiency_scale: d.efficiency_scale }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilizerSettings {
    pub enabled: bool,
    pub sigma_residual: f64,
}

impl Default for StabilizerSettings {
    fn default() -> Self {
        StabilizerSettings { enabled: true, sigma_residual: DEFAULT_SIGMA_RESIDUAL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    /// Simulated session length in seconds.
    pub duration_s: f64,
    /// Sifted bits retained per intensity class for key output.
    pub keep_keys: usize,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings { duration_s: 60.0, keep_keys: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoySettings {
    pub nu: f64,
    pub mixture: DecoyMixture,
    /// Points of the rate-curve grid over `(0, mu_max]`.
    pub grid_points: usize,
    pub mu_max: f64,
}

impl Default for DecoySettings {
    fn default() -> Self {
        DecoySettings { nu: DEFAULT_NU, mixture: DecoyMixture::default(), grid_points: 150, mu_max: 1.5 }
    }
}

impl DecoySettings {
    /// `grid_points` evenly spaced intensities ending at `mu_max`.
    pub fn grid(&self) -> Vec<f64> {
        (1..=self.grid_points).map(|i| self.mu_max * i as f64 / self.grid_points as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdpcSettings {
    pub n: usize,
    pub m: Option<usize>,
    pub row_weight: usize,
    pub rate_margin: f64,
    pub target_qber: f64,
    /// Explicit `[weight, count]` pairs; searched when absent.
    pub column_weights: Option<WeightDistribution>,
    pub density_evolution: DensityEvolution,
    /// `float`, `fixed12`, `fixed16` or `fixed24`.
    pub arithmetic: String,
    pub max_iter: u32,
    pub qber_grid: Vec<f64>,
    pub trials: u64,
    pub error_model: ErrorModel,
    pub clock_hz: f64,
    pub cycles_per_iteration: f64,
}

impl Default for LdpcSettings {
    fn default() -> Self {
        let s = SweepConfig::default();
        LdpcSettings {
            n: 200,
            m: Some(60),
            row_weight: 12,
            rate_margin: 1.0,
            target_qber: 0.03,
            column_weights: None,
            density_evolution: DensityEvolution::default(),
            arithmetic: "float".into(),
            max_iter: s.max_iter,
            qber_grid: vec![0.025, 0.03, 0.035],
            trials: 10_000,
            error_model: s.error_model,
            clock_hz: s.clock_hz,
            cycles_per_iteration: s.cycles_per_iteration,
        }
    }
}

impl LdpcSettings {
    pub fn arithmetic(&self) -> Result<Arithmetic, ConfigError> {
        Arithmetic::parse(&self.arithmetic).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn design_spec(&self) -> DesignSpec {
        DesignSpec {
            n: self.n,
            target_qber: self.target_qber,
            row_weight: self.row_weight,
            rate_margin: self.rate_margin,
            m: self.m,
            column_weights: self.column_weights.clone(),
            density_evolution: self.density_evolution,
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            max_iter: self.max_iter,
            clock_hz: self.clock_hz,
            cycles_per_iteration: self.cycles_per_iteration,
            error_model: self.error_model,
        }
    }
}

/// Output file names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub session_log: String,
    pub stokes_log: String,
    pub qber_timeline: String,
    pub counts: String,
    pub sequence: String,
    pub rates: String,
    pub matrix: String,
    pub sweep: String,
    pub decoded: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            session_log: "session.jsonl".into(),
            stokes_log: "stokes.csv".into(),
            qber_timeline: "qber_timeline.csv".into(),
            counts: "counts.csv".into(),
            sequence: "sequence.csv".into(),
            rates: "rates.csv".into(),
            matrix: "matrix.alist".into(),
            sweep: "sweep.csv".into(),
            decoded: "decoded.json".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let c: RunConfig = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Link parameters with `decoy.nu` applied.
    pub fn link_params(&self) -> LinkParams {
        LinkParams { nu: self.decoy.nu, ..self.link }
    }

    /// Schedule with `decoy.mixture` applied.
    pub fn session_schedule(&self) -> SessionSchedule {
        SessionSchedule { mixture: self.decoy.mixture, ..self.schedule }
    }

    pub fn link_config(&self) -> LinkConfig {
        LinkConfig {
            detector: DetectorModel {
                params: self.link_params(),
                gate_rate: self.schedule.gate_rate,
                deadtime: self.detector.deadtime,
                random_double_click: self.detector.random_double_click,
                efficiency_scale: self.detector.efficiency_scale,
            },
            drift: self.drift,
            stabilizer_enabled: self.stabilizer.enabled,
            sigma_residual: self.stabilizer.sigma_residual,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        self.link_params().validate().map_err(|e| invalid(e.to_string()))?;
        self.session_schedule().validate().map_err(|e| invalid(e.to_string()))?;
        if !(self.decoy.nu > 0.0 && self.decoy.nu < self.link.mu) {
            return Err(invalid(format!("decoy.nu = {} must lie in (0, link.mu = {})", self.decoy.nu, self.link.mu)));
        }
        if self.decoy.grid_points == 0 || !(self.decoy.mu_max > 0.0) {
            return Err(invalid("decoy grid needs grid_points >= 1 and mu_max > 0".into()));
        }
        if !(self.simulation.duration_s > 0.0) {
            return Err(invalid(format!("simulation.duration_s = {} must be positive", self.simulation.duration_s)));
        }
        if self.detector.deadtime < 0.0
            || self.detector.efficiency_scale.iter().any(|&s| !(0.0..=1.0 / self.link.eta.max(1e-300)).contains(&s))
        {
            return Err(invalid("detector deadtime must be >= 0 and efficiency scales keep eta * scale within [0, 1]".into()));
        }
        if !(self.stabilizer.sigma_residual >= 0.0) {
            return Err(invalid("stabilizer.sigma_residual must be >= 0".into()));
        }
        self.ldpc.arithmetic()?;
        if self.ldpc.max_iter == 0 || self.ldpc.trials == 0 {
            return Err(invalid("ldpc.max_iter and ldpc.trials must be >= 1".into()));
        }
        if self.ldpc.qber_grid.iter().any(|q| !(0.0..0.5).contains(q)) {
            return Err(invalid("ldpc.qber_grid entries must lie in [0, 0.5)".into()));
        }
        Ok(())
    }
}
