//! JSON run configuration.
//!
//! ```json
//! {
//!   "master_seed": 20240601,
//!   "scenario": { "n_tx": 20, "m_ports": 21, "snr_db": 15.0, ... },
//!   "channel": { "distance_range": [1.0, 10.0], "phase_model": "approx" },
//!   "solver": { "dinkelbach_max_iter": 100, "outer_max_iter": 50, ... },
//!   "experiments": [ { "name": "vs_snr", "sweep": "snr_db", "values": [-5, 0, 5], "trials": 200 } ]
//! }
//! ```
//!
//! Every block and field is optional; unknown keys are rejected. In the
//! scenario block `snr_db` and `p_max` are mutually exclusive, and `d_bs` /
//! `d_u` default to half the wavelength.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::PhaseModel;
use crate::error::{Error, Result};
use crate::geometry::{snr_db_to_p_max, Scenario};
use crate::portopt::DEFAULT_EXHAUSTIVE_CAP;
use crate::txopt::DEFAULT_MAX_ITER;

pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;
pub const DEFAULT_TRIALS: usize = 200;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_tx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_ports: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_active: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_bs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_gain_var: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_t_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_r_paths: Option<usize>,
}

impl ScenarioBlock {
    pub fn resolve(&self) -> Result<Scenario> {
        let d = Scenario::default();
        let wavelength = self.wavelength.unwrap_or(d.wavelength);
        let noise_power = self.noise_power.unwrap_or(d.noise_power);
        let p_max = match (self.p_max, self.snr_db) {
            (Some(_), Some(_)) => return Err(Error::Config("scenario: give either p_max or snr_db, not both".into())),
            (Some(p), None) => p,
            (None, Some(snr)) => snr_db_to_p_max(snr, noise_power),
            (None, None) => snr_db_to_p_max(15.0, noise_power),
        };
        let sc = Scenario {
            n_tx: self.n_tx.unwrap_or(d.n_tx),
            m_ports: self.m_ports.unwrap_or(d.m_ports),
            m_active: self.m_active.unwrap_or(d.m_active),
            d_bs: self.d_bs.unwrap_or(wavelength / 2.0),
            d_u: self.d_u.unwrap_or(wavelength / 2.0),
            wavelength,
            noise_power,
            path_gain_var: self.path_gain_var.unwrap_or(d.path_gain_var),
            p_max,
            p_c: self.p_c.unwrap_or(d.p_c),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            l_t_paths: self.l_t_paths.unwrap_or(d.l_t_paths),
            l_r_paths: self.l_r_paths.unwrap_or(d.l_r_paths),
        };
        sc.validate()?;
        Ok(sc)
    }

    /// Fully populated block for a resolved scenario.
    pub fn from_scenario(sc: &Scenario) -> Self {
        ScenarioBlock {
            n_tx: Some(sc.n_tx),
            m_ports: Some(sc.m_ports),
            m_active: Some(sc.m_active),
            d_bs: Some(sc.d_bs),
            d_u: Some(sc.d_u),
            wavelength: Some(sc.wavelength),
            noise_power: Some(sc.noise_power),
            path_gain_var: Some(sc.path_gain_var),
            p_max: Some(sc.p_max),
            snr_db: None,
            p_c: Some(sc.p_c),
            epsilon: Some(sc.epsilon),
            l_t_paths: Some(sc.l_t_paths),
            l_r_paths: Some(sc.l_r_paths),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelBlock {
    /// Scatterer distances are drawn uniformly from this range (meters).
    pub distance_range: [f64; 2],
    pub phase_model: PhaseModel,
}

impl Default for ChannelBlock {
    fn default() -> Self {
        ChannelBlock { distance_range: [1.0, 10.0], phase_model: PhaseModel::Approx }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// One pass over the slots per outer iteration.
    #[default]
    Single,
    /// Repeat passes until the selection stops changing.
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub dinkelbach_max_iter: usize,
    pub outer_max_iter: usize,
    pub exhaustive_cap: u64,
    pub sweep_mode: SweepMode,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            dinkelbach_max_iter: DEFAULT_MAX_ITER,
            outer_max_iter: 50,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP as u64,
            sweep_mode: SweepMode::Single,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Mean η per outer iteration of the alternating optimizer.
    Convergence,
    /// EE and rate of all schemes against the number of activated ports.
    VsPorts,
    /// EE and rate of all schemes against SNR.
    VsSnr,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::VsPorts => "vs_ports",
            ExperimentKind::VsSnr => "vs_snr",
        }
    }

    pub fn sweep_variable(self) -> &'static str {
        match self {
            ExperimentKind::Convergence | ExperimentKind::VsSnr => "snr_db",
            ExperimentKind::VsPorts => "m_active",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: ExperimentKind,
    pub sweep: String,
    pub values: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_seed() -> u64 {
    DEFAULT_MASTER_SEED
}

pub fn default_experiments() -> Vec<ExperimentSpec> {
    vec![
        ExperimentSpec {
            name: ExperimentKind::Convergence,
            sweep: "snr_db".into(),
            values: vec![5.0, 15.0],
            trials: DEFAULT_TRIALS,
        },
        ExperimentSpec {
            name: ExperimentKind::VsPorts,
            sweep: "m_active".into(),
            values: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 14.0, 21.0],
            trials: DEFAULT_TRIALS,
        },
        ExperimentSpec {
            name: ExperimentKind::VsSnr,
            sweep: "snr_db".into(),
            values: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            trials: DEFAULT_TRIALS,
        },
    ]
}

/// Raw configuration document as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub scenario: ScenarioBlock,
    #[serde(default)]
    pub channel: ChannelBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default = "default_experiments")]
    pub experiments: Vec<ExperimentSpec>,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            master_seed: DEFAULT_MASTER_SEED,
            scenario: ScenarioBlock::default(),
            channel: ChannelBlock::default(),
            solver: SolverBlock::default(),
            experiments: default_experiments(),
        }
    }
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub master_seed: u64,
    pub scenario: Scenario,
    pub channel: ChannelBlock,
    pub solver: SolverBlock,
    pub experiments: Vec<ExperimentSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        ConfigFile::default().resolve().expect("defaults are valid")
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let scenario = self.scenario.resolve()?;
        let [lo, hi] = self.channel.distance_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Config(format!("channel.distance_range [{lo}, {hi}] invalid")));
        }
        if self.solver.dinkelbach_max_iter == 0 || self.solver.outer_max_iter == 0 {
            return Err(Error::Config("solver iteration caps must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for exp in &self.experiments {
            validate_experiment(exp, &scenario)?;
            if !seen.insert(exp.name) {
                return Err(Error::Config(format!("experiment {} listed twice", exp.name.label())));
            }
        }
        Ok(RunConfig {
            master_seed: self.master_seed,
            scenario,
            channel: self.channel.clone(),
            solver: self.solver.clone(),
            experiments: self.experiments.clone(),
        })
    }
}

impl RunConfig {
    /// The equivalent config document with all fields explicit.
    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            master_seed: self.master_seed,
            scenario: ScenarioBlock::from_scenario(&self.scenario),
            channel: self.channel.clone(),
            solver: self.solver.clone(),
            experiments: self.experiments.clone(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("config serializes")
    }
}

fn validate_experiment(exp: &ExperimentSpec, sc: &Scenario) -> Result<()> {
    let name = exp.name.label();
    if exp.sweep != exp.name.sweep_variable() {
        return Err(Error::Config(format!(
            "experiment {name} sweeps {}, got sweep \"{}\"",
            exp.name.sweep_variable(),
            exp.sweep
        )));
    }
    if exp.values.is_empty() {
        return Err(Error::Config(format!("experiment {name} has no sweep values")));
    }
    if exp.trials == 0 {
        return Err(Error::Config(format!("experiment {name} needs at least one trial")));
    }
    if exp.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("experiment {name} has a non-finite sweep value")));
    }
    match exp.name {
        ExperimentKind::VsPorts => {
            for &v in &exp.values {
                if v.fract() != 0.0 || v < 1.0 || v > sc.m_ports as f64 {
                    return Err(Error::Config(format!("m_active value {v} must be an integer in 1..={}", sc.m_ports)));
                }
            }
            if sc.m_ports < 2 {
                return Err(Error::Config("the fixed-antenna baseline needs m_ports >= 2".into()));
            }
        }
        ExperimentKind::VsSnr => {
            if sc.m_ports < 2 {
                return Err(Error::Config("the fixed-antenna baseline needs m_ports >= 2".into()));
            }
        }
        ExperimentKind::Convergence => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_resolves_to_defaults() {
        let cfg = ConfigFile::from_json("{}").unwrap().resolve().unwrap();
        assert_eq!(cfg.scenario, Scenario::default());
        assert_eq!(cfg.experiments.len(), 3);
        assert_eq!(cfg.master_seed, DEFAULT_MASTER_SEED);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ConfigFile::from_json(r#"{"scenaro": {}}"#).is_err());
        assert!(ConfigFile::from_json(r#"{"scenario": {"n_txx": 3}}"#).is_err());
        assert!(ConfigFile::from_json(r#"{"channel": {"phase_model": "spherical"}}"#).is_err());
        assert!(ConfigFile::from_json(
            r#"{"experiments": [{"name": "vs_snr", "sweep": "snr_db", "values": [1], "trails": 3}]}"#
        )
        .is_err());
    }

    #[test]
    fn spacing_follows_wavelength() {
        let cfg = ConfigFile::from_json(r#"{"scenario": {"wavelength": 0.01}}"#).unwrap().resolve().unwrap();
        assert_eq!(cfg.scenario.d_bs, 0.005);
        assert_eq!(cfg.scenario.d_u, 0.005);
    }

    #[test]
    fn snr_and_power_exclusive() {
        let f = ConfigFile::from_json(r#"{"scenario": {"snr_db": 10, "p_max": 1}}"#).unwrap();
        assert!(matches!(f.resolve(), Err(Error::Config(_))));
        let cfg = ConfigFile::from_json(r#"{"scenario": {"snr_db": 10}}"#).unwrap().resolve().unwrap();
        assert!((cfg.scenario.p_max - 0.1).abs() < 1e-15);
    }

    #[test]
    fn invalid_combinations() {
        for doc in [
            r#"{"experiments": [{"name": "vs_ports", "sweep": "snr_db", "values": [1]}]}"#,
            r#"{"experiments": [{"name": "vs_ports", "sweep": "m_active", "values": [22]}]}"#,
            r#"{"experiments": [{"name": "vs_ports", "sweep": "m_active", "values": [2.5]}]}"#,
            r#"{"experiments": [{"name": "vs_snr", "sweep": "snr_db", "values": []}]}"#,
            r#"{"experiments": [{"name": "vs_snr", "sweep": "snr_db", "values": [1], "trials": 0}]}"#,
            r#"{"scenario": {"m_active": 30}}"#,
            r#"{"channel": {"distance_range": [0, 1]}}"#,
            r#"{"experiments": [{"name": "vs_snr", "sweep": "snr_db", "values": [1]},
                                {"name": "vs_snr", "sweep": "snr_db", "values": [2]}]}"#,
        ] {
            let f = ConfigFile::from_json(doc).unwrap();
            assert!(f.resolve().is_err(), "{doc}");
        }
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::default();
        let text = cfg.to_json_pretty();
        let back = ConfigFile::from_json(&text).unwrap().resolve().unwrap();
        assert_eq!(back, cfg);
    }
}
