//! Laser frequency noise in cavity optomechanics: spectra, noise models,
//! cavity transduction, time-domain Monte-Carlo, calibration and
//! sideband-cooling budgets.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`). The aliases at the
//! crate root fix the scalar to `f64`; the `F32*` variants fix it to `f32`.
//!
//! Conventions: angular frequencies in rad/s, PSDs symmetrized and
//! double-sided per Hz, so a variance is `∫S df` over positive and negative
//! frequencies. `S_ωω = Ω²·S_φφ`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cavity_transduction;
pub mod cooling_budget;
pub mod error;
pub mod noise_models;
pub mod scalar;
pub mod spectra;
pub mod timedomain_sim;
pub mod welch;

pub use calibration::{
    calibrate_spectrum, calibrate_spectrum_with, calibration_tone_psd, modulation_index,
    CalibrationMode, CalibrationOptions, ToneDescriptor,
};
pub use cavity_transduction::{detuning_sweep, transduced_power_psd};
pub use cooling_budget::{budget_report, Coupling, Damping, PowerChoice};
pub use error::{Error, Result};
pub use scalar::Real;
pub use spectra::{
    db_above_quantum_limit, frequency_to_phase_psd, phase_to_frequency_psd,
    quantum_limit_phase_psd, GridKind, Unit, BOLTZMANN, HBAR, SPEED_OF_LIGHT,
};
pub use timedomain_sim::{run_experiment, NoiseStream};
pub use welch::{welch_psd, WelchConfig};

pub type FrequencyGrid = spectra::FrequencyGrid<f64>;
pub type SpectrumTrace = spectra::SpectrumTrace<f64>;
pub type PhysicalConstants = spectra::PhysicalConstants<f64>;
pub type NoiseModel = noise_models::NoiseModel<f64>;
pub type LowPassNoiseModel = noise_models::LowPassNoiseModel<f64>;
pub type RelaxationOscillationModel = noise_models::RelaxationOscillationModel<f64>;
pub type TabulatedNoiseModel = noise_models::TabulatedNoiseModel<f64>;
pub type CavityParams = cavity_transduction::CavityParams<f64>;
pub type DriveParams = cavity_transduction::DriveParams<f64>;
pub type DetuningSweep = cavity_transduction::DetuningSweep<f64>;
pub type SimConfig = timedomain_sim::SimConfig<f64>;
pub type DetectorParams = timedomain_sim::DetectorParams<f64>;
pub type FieldSeries = timedomain_sim::FieldSeries<f64>;
pub type Experiment = timedomain_sim::Experiment<f64>;
pub type ExperimentBundle = timedomain_sim::ExperimentBundle<f64>;
pub type ToneSpec = timedomain_sim::ToneSpec<f64>;
pub type ModulatorSpec = calibration::ModulatorSpec<f64>;
pub type CalibratedSpectrum = calibration::CalibratedSpectrum<f64>;
pub type MechanicsParams = cooling_budget::MechanicsParams<f64>;
pub type CoolingBudgetReport = cooling_budget::CoolingBudgetReport<f64>;

pub type F32SpectrumTrace = spectra::SpectrumTrace<f32>;
pub type F32NoiseModel = noise_models::NoiseModel<f32>;
pub type F32CavityParams = cavity_transduction::CavityParams<f32>;
pub type F32Experiment = timedomain_sim::Experiment<f32>;
pub type F32MechanicsParams = cooling_budget::MechanicsParams<f32>;
