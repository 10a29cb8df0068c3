//! Run configuration. Keys carry their unit; `*_hz` values are ordinary
//! frequencies and are multiplied by 2π on the way in, so a
//! `"linewidth_hz": 300e3` becomes Γ_L = 2π·300·10³ rad/s.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use optonoise::calibration::ModulatorSpec;
use optonoise::cooling_budget::{Coupling, Damping, PowerChoice};
use optonoise::noise_models::{
    LowPassNoiseModel, NoiseModel, RelaxationOscillationModel, TabulatedNoiseModel,
};
use optonoise::spectra::SpectrumTrace;
use optonoise::timedomain_sim::{DetectorParams, SimConfig, ToneSpec};
use optonoise::welch::WelchConfig;
use optonoise::{CavityParams, DriveParams, MechanicsParams};
use serde::Deserialize;

use crate::error::CliError;

fn rad(hz: f64) -> f64 {
    2.0 * PI * hz
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub laser: Option<LaserSection>,
    pub cavity: Option<CavitySection>,
    pub drive: Option<DriveSection>,
    pub transduce: Option<TransduceSection>,
    pub mechanics: Option<MechanicsSection>,
    pub simulation: Option<SimulationSection>,
    pub detector: Option<DetectorSection>,
    pub tone: Option<ToneSection>,
    pub budget: Option<BudgetSection>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserSection {
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Component {
    White {
        level_rad2_hz: f64,
    },
    LowPass {
        linewidth_hz: f64,
        correlation_rate_hz: f64,
    },
    Relaxation {
        peak_rad2_hz: f64,
        center_hz: f64,
        fwhm_hz: f64,
    },
    /// SpectrumTrace CSV in frequency-noise units; relative paths resolve
    /// against the config file.
    Tabulated {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub kappa_hz: f64,
    pub eta: f64,
    pub wavelength_m: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub power_w: f64,
    pub detuning_hz: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransduceSection {
    /// Analysis frequency of the detuning sweep.
    pub analysis_hz: f64,
    pub detunings_hz: Option<Vec<f64>>,
    pub detuning_min_hz: Option<f64>,
    pub detuning_max_hz: Option<f64>,
    pub detuning_points: Option<usize>,
    pub omega_min_hz: f64,
    pub omega_max_hz: f64,
    pub omega_points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicsSection {
    pub omega_m_hz: f64,
    pub q_m: Option<f64>,
    pub gamma_m_hz: Option<f64>,
    pub temperature_k: f64,
    pub g0_hz: Option<f64>,
    pub g_hz_per_m: Option<f64>,
    pub m_eff_kg: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    pub segment_length: usize,
    #[serde(default = "half")]
    pub overlap: f64,
    #[serde(default)]
    pub seed: u64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub nep_w_per_rthz: f64,
    pub responsivity_a_per_w: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToneSection {
    pub f_mod_hz: f64,
    pub delta_phi_rad: Option<f64>,
    pub v_drive_v: Option<f64>,
    pub v_pi_v: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    /// Fixed input power; the optimum is used when absent.
    pub power_w: Option<f64>,
    #[serde(default = "yes")]
    pub include_backaction: bool,
    pub sweep_min_w: Option<f64>,
    pub sweep_max_w: Option<f64>,
    #[serde(default = "sweep_points")]
    pub sweep_points: usize,
}

fn yes() -> bool {
    true
}

fn sweep_points() -> usize {
    121
}

impl Default for BudgetSection {
    fn default() -> Self {
        Self {
            power_w: None,
            include_backaction: true,
            sweep_min_w: None,
            sweep_max_w: None,
            sweep_points: sweep_points(),
        }
    }
}

/// A parsed config together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub bytes: Vec<u8>,
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig {
        config,
        base_dir,
        bytes,
    })
}

fn require<'a, T>(section: &'a Option<T>, name: &str, command: &str) -> Result<&'a T, CliError> {
    section
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("`{command}` needs a `{name}` section")))
}

impl LoadedConfig {
    pub fn laser(&self, command: &str) -> Result<NoiseModel<f64>, CliError> {
        let laser = require(&self.config.laser, "laser", command)?;
        if laser.components.is_empty() {
            return Err(CliError::Config("laser.components is empty".into()));
        }
        let mut parts = Vec::with_capacity(laser.components.len());
        for c in &laser.components {
            let model: NoiseModel<f64> = match c {
                Component::White { level_rad2_hz } => NoiseModel::white(*level_rad2_hz)?,
                Component::LowPass {
                    linewidth_hz,
                    correlation_rate_hz,
                } => LowPassNoiseModel::new(rad(*linewidth_hz), rad(*correlation_rate_hz))?.into(),
                Component::Relaxation {
                    peak_rad2_hz,
                    center_hz,
                    fwhm_hz,
                } => {
                    RelaxationOscillationModel::new(*peak_rad2_hz, rad(*center_hz), rad(*fwhm_hz))?
                        .into()
                }
                Component::Tabulated { path } => {
                    let full = self.base_dir.join(path);
                    let file = File::open(&full).map_err(|e| {
                        CliError::Config(format!("cannot open {}: {e}", full.display()))
                    })?;
                    TabulatedNoiseModel::new(SpectrumTrace::read_csv(BufReader::new(file))?)?.into()
                }
            };
            parts.push(model);
        }
        if parts.len() == 1 {
            Ok(parts.pop().expect("one component"))
        } else {
            Ok(NoiseModel::composite(parts)?)
        }
    }

    pub fn cavity(&self, command: &str) -> Result<CavityParams, CliError> {
        let c = require(&self.config.cavity, "cavity", command)?;
        Ok(CavityParams::from_wavelength(
            rad(c.kappa_hz),
            c.eta,
            c.wavelength_m,
        )?)
    }

    pub fn drive(&self, command: &str) -> Result<DriveParams, CliError> {
        let d = require(&self.config.drive, "drive", command)?;
        Ok(DriveParams::new(d.power_w, rad(d.detuning_hz))?)
    }

    pub fn transduce(&self) -> Result<&TransduceSection, CliError> {
        require(&self.config.transduce, "transduce", "transduce")
    }

    pub fn mechanics(&self, command: &str) -> Result<MechanicsParams, CliError> {
        let m = require(&self.config.mechanics, "mechanics", command)?;
        let damping = match (m.q_m, m.gamma_m_hz) {
            (Some(q), None) => Damping::Quality(q),
            (None, Some(g)) => Damping::Rate(rad(g)),
            _ => {
                return Err(CliError::Config(
                    "mechanics needs exactly one of `q_m` or `gamma_m_hz`".into(),
                ))
            }
        };
        let coupling = match (m.g0_hz, m.g_hz_per_m) {
            (Some(g0), None) => Coupling::Vacuum(rad(g0)),
            (None, Some(g)) => Coupling::FrequencyPull(rad(g)),
            _ => {
                return Err(CliError::Config(
                    "mechanics needs exactly one of `g0_hz` or `g_hz_per_m`".into(),
                ))
            }
        };
        Ok(MechanicsParams::new(
            rad(m.omega_m_hz),
            damping,
            m.temperature_k,
            coupling,
            m.m_eff_kg,
        )?)
    }

    pub fn simulation(&self, command: &str, seed: Option<u64>) -> Result<SimConfig<f64>, CliError> {
        let s = require(&self.config.simulation, "simulation", command)?;
        let welch = WelchConfig::new(s.segment_length, s.overlap)?;
        Ok(SimConfig::new(
            s.sample_rate_hz,
            s.n_samples,
            seed.unwrap_or(s.seed),
            welch,
        )?)
    }

    pub fn detector(&self, command: &str) -> Result<DetectorParams<f64>, CliError> {
        let d = require(&self.config.detector, "detector", command)?;
        Ok(DetectorParams::new(
            d.nep_w_per_rthz,
            d.responsivity_a_per_w,
        )?)
    }

    pub fn tone(&self) -> Result<Option<ToneSpec<f64>>, CliError> {
        let Some(t) = &self.config.tone else {
            return Ok(None);
        };
        let delta_phi = match (t.delta_phi_rad, t.v_drive_v, t.v_pi_v) {
            (Some(d), None, None) => d,
            (None, Some(v), Some(v_pi)) => {
                optonoise::modulation_index(&ModulatorSpec::new(v_pi)?, v)?.value
            }
            _ => {
                return Err(CliError::Config(
                    "tone needs either `delta_phi_rad` or both `v_drive_v` and `v_pi_v`".into(),
                ))
            }
        };
        if !(delta_phi > 0.0) {
            return Err(CliError::Config(format!(
                "tone modulation index must be > 0, got {delta_phi}"
            )));
        }
        Ok(Some(ToneSpec {
            delta_phi,
            omega_mod: rad(t.f_mod_hz),
        }))
    }

    pub fn budget(&self) -> BudgetSection {
        self.config.budget.clone().unwrap_or_default()
    }

    pub fn power_choice(&self) -> PowerChoice<f64> {
        match self.budget().power_w {
            Some(p) => PowerChoice::Fixed(p),
            None => PowerChoice::Optimize,
        }
    }

    pub fn output_dir(&self, cli_out: Option<&Path>) -> PathBuf {
        cli_out
            .map(Path::to_path_buf)
            .or_else(|| self.config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, serde_json::Error> {
        serde_json::from_str(text)
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(parse(
            r#"{"cavity": {"kappa_hz": 1, "eta": 0.5, "wavelength_m": 1e-6, "extra": 1}}"#
        )
        .is_err());
        assert!(parse(r#"{"bogus": {}}"#).is_err());
        assert!(parse(
            r#"{"laser": {"components": [{"type": "white", "level_rad2_hz": 1, "x": 2}]}}"#
        )
        .is_err());
        assert!(parse(r#"{"laser": {"components": [{"type": "pink"}]}}"#).is_err());
    }

    #[test]
    fn hz_keys_become_angular() {
        let cfg = LoadedConfig {
            config: parse(
                r#"{"laser": {"components": [{"type": "low_pass", "linewidth_hz": 300e3, "correlation_rate_hz": 1e6}]},
                    "cavity": {"kappa_hz": 2e6, "eta": 0.5, "wavelength_m": 1550e-9},
                    "drive": {"power_w": 1e-4, "detuning_hz": -1e6}}"#,
            )
            .unwrap(),
            base_dir: PathBuf::new(),
            bytes: Vec::new(),
        };
        assert_eq!(cfg.cavity("t").unwrap().kappa(), 2.0 * PI * 2e6);
        assert_eq!(cfg.drive("t").unwrap().detuning(), -2.0 * PI * 1e6);
        // low-pass level at DC is 2Γ_L
        assert_eq!(
            cfg.laser("t").unwrap().eval(0.0).unwrap(),
            2.0 * 2.0 * PI * 300e3
        );
        assert!(cfg.mechanics("budget").is_err());
    }

    #[test]
    fn tone_from_modulator_voltage() {
        let cfg = LoadedConfig {
            config: parse(r#"{"tone": {"f_mod_hz": 3.5e6, "v_drive_v": 0.159, "v_pi_v": 5.0}}"#)
                .unwrap(),
            base_dir: PathBuf::new(),
            bytes: Vec::new(),
        };
        let t = cfg.tone().unwrap().unwrap();
        assert!((t.delta_phi - 0.099_902_646_4).abs() < 1e-9);
        let both = LoadedConfig {
            config: parse(r#"{"tone": {"f_mod_hz": 1, "delta_phi_rad": 0.1, "v_drive_v": 1}}"#)
                .unwrap(),
            base_dir: PathBuf::new(),
            bytes: Vec::new(),
        };
        assert!(both.tone().is_err());
    }
}
