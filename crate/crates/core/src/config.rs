//! Experiment configuration: one JSON document.
//!
//! Keys mirror the domain type fields. Power-like quantities accept either a
//! linear value (watts / linear gain) or a decibel spelling with an explicit
//! `_db` / `_dbm` suffix; exactly one spelling must be present, and the
//! conversion happens once at load time.

use serde::{Deserialize, Serialize};

use crate::channel::{Dims, Fading, Geometry, PathLossModel};
use crate::error::{Error, Result};
use crate::model::{SystemParams, Task, UserParams};
use crate::units::{db_to_linear, dbm_to_watts};

/// The algorithms the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    /// Free mode switching (the full algorithm).
    Hybrid,
    /// All units frozen active.
    FullyActive,
    /// All units frozen passive.
    FullyPassive,
    /// Binary offloading: everything computed locally.
    FullyLocal,
    /// Binary offloading: everything offloaded.
    FullyOffloading,
}

impl AlgorithmKind {
    pub fn id(&self) -> &'static str {
        match self {
            AlgorithmKind::Hybrid => "hybrid",
            AlgorithmKind::FullyActive => "fully_active",
            AlgorithmKind::FullyPassive => "fully_passive",
            AlgorithmKind::FullyLocal => "fully_local",
            AlgorithmKind::FullyOffloading => "fully_offloading",
        }
    }
}

/// Convex backend selection for the RIS block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    #[default]
    Surrogate,
}

/// Parameter axis a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    KUsers,
    NUnits,
    PRisMaxDbm,
    PRisMax,
    EMax,
    Tradeoff,
    ExponentRisUser,
    SBits,
}

impl SweepParameter {
    pub fn id(&self) -> &'static str {
        match self {
            SweepParameter::KUsers => "k_users",
            SweepParameter::NUnits => "n_units",
            SweepParameter::PRisMaxDbm => "p_ris_max_dbm",
            SweepParameter::PRisMax => "p_ris_max",
            SweepParameter::EMax => "e_max",
            SweepParameter::Tradeoff => "tradeoff",
            SweepParameter::ExponentRisUser => "exponent_ris_user",
            SweepParameter::SBits => "s_bits",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    /// Maximum outer iterations of the alternating loop.
    pub l_max: usize,
    /// Cost-change convergence threshold.
    pub epsilon: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Convergence { l_max: 50, epsilon: 1e-4 }
    }
}

/// Fully resolved experiment configuration (linear units everywhere).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub geometry: Geometry,
    pub path_loss: PathLossModel,
    pub dims: Dims,
    pub system: SystemParams,
    pub user: UserParams,
    pub task: Task,
    pub fading: Fading,
    pub trials: usize,
    pub master_seed: u64,
    pub backend: BackendChoice,
    pub algorithms: Vec<AlgorithmKind>,
    pub sweep: Option<SweepSpec>,
    pub convergence: Convergence,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        raw.resolve()
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Apply one swept value, returning the modified configuration.
    pub fn with_swept_value(&self, parameter: SweepParameter, value: f64) -> Self {
        let mut cfg = self.clone();
        match parameter {
            SweepParameter::KUsers => cfg.dims.k_users = value.round() as usize,
            SweepParameter::NUnits => cfg.dims.n_units = value.round() as usize,
            SweepParameter::PRisMaxDbm => cfg.system.p_ris_max = dbm_to_watts(value),
            SweepParameter::PRisMax => cfg.system.p_ris_max = value,
            SweepParameter::EMax => cfg.user.e_max = value,
            SweepParameter::Tradeoff => cfg.system.tradeoff = value,
            SweepParameter::ExponentRisUser => cfg.path_loss.exponent_ris_user = value,
            SweepParameter::SBits => cfg.task.s_bits = value,
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.path_loss.validate()?;
        if self.dims.k_users == 0 || self.dims.m_antennas == 0 {
            return Err(Error::Config("K and M must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.system.tradeoff) {
            return Err(Error::Config("tradeoff must lie in [0, 1]".into()));
        }
        if self.convergence.l_max < 1 {
            return Err(Error::Config("l_max must be >= 1".into()));
        }
        if !(self.convergence.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be > 0".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep values must be non-empty".into()));
            }
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithms must be non-empty".into()));
        }
        Ok(())
    }

    /// Reference parameter set: the default simulation scenario.
    pub fn reference() -> Self {
        ExperimentConfig {
            geometry: Geometry {
                ap_position: [0.0, 0.0],
                ris_position: [50.0, 20.0],
                user_positions: None,
                user_circle: Some(crate::channel::UserCircle {
                    center: [50.0, 0.0],
                    radius: 10.0,
                }),
            },
            path_loss: PathLossModel {
                a0: db_to_linear(-30.0),
                d0: 1.0,
                exponent_ap_ris: 2.6,
                exponent_ris_user: 2.2,
                exponent_ap_user: 3.2,
            },
            dims: Dims { k_users: 2, m_antennas: 8, n_units: 6 },
            system: SystemParams {
                bandwidth: 1e6,
                ris_noise_power: dbm_to_watts(-80.0),
                ap_noise_power: dbm_to_watts(-80.0),
                p_circuit: dbm_to_watts(-10.0),
                p_dc: dbm_to_watts(-5.0),
                p_ris_max: dbm_to_watts(10.0),
                tradeoff: 0.5,
                energy_scale: 1.0,
                rho_cap: 14.0,
            },
            user: UserParams {
                e_max: 0.01,
                f_max: 1e9,
                t_max: 0.5,
                kappa: 1e-28,
                p_max: dbm_to_watts(10.0),
            },
            task: Task { s_bits: 1e6, c_cycles: 4e7 },
            fading: Fading::Rayleigh,
            trials: 20,
            master_seed: 1,
            backend: BackendChoice::Surrogate,
            algorithms: vec![
                AlgorithmKind::Hybrid,
                AlgorithmKind::FullyActive,
                AlgorithmKind::FullyPassive,
                AlgorithmKind::FullyLocal,
                AlgorithmKind::FullyOffloading,
            ],
            sweep: None,
            convergence: Convergence::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Raw (on-disk) representation with the dual-unit fields
// ---------------------------------------------------------------------------

fn one_of(name: &str, linear: Option<f64>, db: Option<f64>, db_is_dbm: bool) -> Result<f64> {
    match (linear, db) {
        (Some(v), None) => Ok(v),
        (None, Some(d)) => Ok(if db_is_dbm { dbm_to_watts(d) } else { db_to_linear(d) }),
        (Some(_), Some(_)) => Err(Error::Config(format!(
            "{name}: give either the linear value or the dB spelling, not both"
        ))),
        (None, None) => Err(Error::Config(format!("{name}: missing value"))),
    }
}

#[derive(Deserialize)]
struct RawPathLoss {
    a0: Option<f64>,
    a0_db: Option<f64>,
    d0: f64,
    exponent_ap_ris: f64,
    exponent_ris_user: f64,
    exponent_ap_user: f64,
}

#[derive(Deserialize)]
struct RawSystem {
    bandwidth: f64,
    ris_noise_power: Option<f64>,
    ris_noise_power_dbm: Option<f64>,
    ap_noise_power: Option<f64>,
    ap_noise_power_dbm: Option<f64>,
    p_circuit: Option<f64>,
    p_circuit_dbm: Option<f64>,
    p_dc: Option<f64>,
    p_dc_dbm: Option<f64>,
    p_ris_max: Option<f64>,
    p_ris_max_dbm: Option<f64>,
    tradeoff: f64,
    #[serde(default = "default_energy_scale")]
    energy_scale: f64,
    #[serde(default = "default_rho_cap")]
    rho_cap: f64,
}

fn default_energy_scale() -> f64 {
    1.0
}
fn default_rho_cap() -> f64 {
    14.0
}
fn default_p_max() -> f64 {
    // 10 dBm; the per-user transmit power used by the closed-form solvers
    // and baselines when the config does not override it.
    dbm_to_watts(10.0)
}

#[derive(Deserialize)]
struct RawUser {
    e_max: f64,
    f_max: f64,
    t_max: f64,
    kappa: f64,
    p_max: Option<f64>,
    p_max_dbm: Option<f64>,
}

#[derive(Deserialize)]
struct RawConfig {
    geometry: Geometry,
    path_loss: RawPathLoss,
    dims: Dims,
    system: RawSystem,
    user: RawUser,
    task: Task,
    #[serde(default = "default_fading")]
    fading: Fading,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default)]
    master_seed: u64,
    #[serde(default)]
    backend: BackendChoice,
    #[serde(default = "default_algorithms")]
    algorithms: Vec<AlgorithmKind>,
    #[serde(default)]
    sweep: Option<SweepSpec>,
    #[serde(default)]
    convergence: Convergence,
}

fn default_fading() -> Fading {
    Fading::Rayleigh
}
fn default_trials() -> usize {
    20
}
fn default_algorithms() -> Vec<AlgorithmKind> {
    vec![AlgorithmKind::Hybrid]
}

impl RawConfig {
    fn resolve(self) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            geometry: self.geometry,
            path_loss: PathLossModel {
                a0: one_of("path_loss.a0", self.path_loss.a0, self.path_loss.a0_db, false)?,
                d0: self.path_loss.d0,
                exponent_ap_ris: self.path_loss.exponent_ap_ris,
                exponent_ris_user: self.path_loss.exponent_ris_user,
                exponent_ap_user: self.path_loss.exponent_ap_user,
            },
            dims: self.dims,
            system: SystemParams {
                bandwidth: self.system.bandwidth,
                ris_noise_power: one_of(
                    "system.ris_noise_power",
                    self.system.ris_noise_power,
                    self.system.ris_noise_power_dbm,
                    true,
                )?,
                ap_noise_power: one_of(
                    "system.ap_noise_power",
                    self.system.ap_noise_power,
                    self.system.ap_noise_power_dbm,
                    true,
                )?,
                p_circuit: one_of(
                    "system.p_circuit",
                    self.system.p_circuit,
                    self.system.p_circuit_dbm,
                    true,
                )?,
                p_dc: one_of("system.p_dc", self.system.p_dc, self.system.p_dc_dbm, true)?,
                p_ris_max: one_of(
                    "system.p_ris_max",
                    self.system.p_ris_max,
                    self.system.p_ris_max_dbm,
                    true,
                )?,
                tradeoff: self.system.tradeoff,
                energy_scale: self.system.energy_scale,
                rho_cap: self.system.rho_cap,
            },
            user: UserParams {
                e_max: self.user.e_max,
                f_max: self.user.f_max,
                t_max: self.user.t_max,
                kappa: self.user.kappa,
                p_max: match (self.user.p_max, self.user.p_max_dbm) {
                    (None, None) => default_p_max(),
                    (l, d) => one_of("user.p_max", l, d, true)?,
                },
            },
            task: self.task,
            fading: self.fading,
            trials: self.trials,
            master_seed: self.master_seed,
            backend: self.backend,
            algorithms: self.algorithms,
            sweep: self.sweep,
            convergence: self.convergence,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
