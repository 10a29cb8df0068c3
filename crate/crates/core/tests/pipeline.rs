use std::f64::consts::PI;
use std::fs::File;

use approx::assert_relative_eq;
use optonoise::{
    calibrate_spectrum, frequency_to_phase_psd, run_experiment, transduced_power_psd,
    CalibrationMode, CavityParams, DetectorParams, DriveParams, Experiment, F32CavityParams,
    NoiseModel, SimConfig, SpectrumTrace, TabulatedNoiseModel, ToneSpec, Unit, WelchConfig,
};
use tempfile::TempDir;

const TWO_PI: f64 = 2.0 * PI;
const WHITE: f64 = 1.0e3;

fn experiment(tone: Option<ToneSpec>, seed: u64) -> Experiment {
    let omega_optical = TWO_PI * 299_792_458.0 / 1550e-9;
    Experiment {
        laser: NoiseModel::white(WHITE).unwrap(),
        cavity: CavityParams::new(TWO_PI * 0.5e6, 0.5, omega_optical).unwrap(),
        drive: DriveParams::new(1e-4, -TWO_PI * 1.0e6).unwrap(),
        detector: DetectorParams::new(1e-12, 0.8).unwrap(),
        config: SimConfig::new(64e6, 1 << 20, seed, WelchConfig::new(8192, 0.5).unwrap()).unwrap(),
        tone,
    }
}

fn band(trace: &SpectrumTrace, lo_hz: f64, hi_hz: f64) -> Vec<usize> {
    (0..trace.len())
        .filter(|i| {
            let f = trace.omegas()[*i] / TWO_PI;
            f >= lo_hz && f <= hi_hz
        })
        .collect()
}

#[test]
fn simulated_photocurrent_matches_transduction_formula() {
    let exp = experiment(None, 11);
    let bundle = run_experiment(&exp).unwrap();
    let r2 = exp.detector.responsivity().powi(2);
    let idx = band(&bundle.raw, 0.3e6, 4.0e6);
    let ratios: Vec<f64> = idx
        .iter()
        .map(|i| {
            let w = bundle.raw.omegas()[*i];
            let net = bundle.raw.values()[*i] - bundle.background.values()[*i];
            net / (r2 * transduced_power_psd(&exp.cavity, &exp.drive, w, WHITE))
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert_relative_eq!(mean, 1.0, max_relative = 0.03);
    assert_relative_eq!(
        bundle.mean_photocurrent,
        0.8 * 1e-4 * exp.cavity.steady_state_transmission(exp.drive.detuning()),
        max_relative = 1e-2
    );
}

#[test]
fn deconvolved_calibration_recovers_white_level_across_band() {
    let tone = ToneSpec {
        delta_phi: 0.1,
        omega_mod: TWO_PI * 3.0e6,
    };
    let exp = experiment(Some(tone), 5);
    let bundle = run_experiment(&exp).unwrap();
    let descriptor = bundle.tone.unwrap();
    let mode = CalibrationMode::Deconvolved {
        cavity: exp.cavity,
        detuning: exp.drive.detuning(),
    };
    let cal = calibrate_spectrum(&bundle.raw, &bundle.background, &descriptor, &mode).unwrap();
    assert_eq!(cal.trace.unit(), Unit::FrequencyNoise);
    let mut idx = band(&cal.trace, 0.5e6, 5.5e6);
    // the second harmonic of the tone sits at 6 MHz, stay below it
    idx.retain(|i| (*i as isize - cal.tone_index as isize).abs() > 3);
    let mean = idx.iter().map(|i| cal.trace.values()[*i]).sum::<f64>() / idx.len() as f64;
    assert_relative_eq!(mean, WHITE, max_relative = 0.05);
    assert_relative_eq!(cal.level_at_tone, WHITE, max_relative = 0.1);
}

#[test]
fn tabulated_file_drives_the_same_spectrum_as_its_source() {
    let dir = TempDir::new().unwrap();
    let omegas: Vec<f64> = (1..=200).map(|k| TWO_PI * 1e5 * k as f64).collect();
    let values: Vec<f64> = omegas
        .iter()
        .map(|w| 1e4 / (1.0 + (w / (TWO_PI * 5e6)).powi(2)))
        .collect();
    let grid = optonoise::FrequencyGrid::from_values(omegas.clone()).unwrap();
    let source = SpectrumTrace::new(grid, values.clone(), Unit::FrequencyNoise)
        .unwrap()
        .with_rbw(1e5)
        .unwrap();
    let path = dir.path().join("laser.csv");
    source.write_csv(File::create(&path).unwrap()).unwrap();

    let loaded = SpectrumTrace::read_csv(File::open(&path).unwrap()).unwrap();
    assert_eq!(loaded.rbw(), Some(1e5));
    let model = TabulatedNoiseModel::new(loaded).unwrap();
    for (w, v) in omegas.iter().zip(&values) {
        assert_relative_eq!(model.eval(*w).unwrap(), *v, max_relative = 1e-8);
    }
    let mid = 0.5 * (omegas[10] + omegas[11]);
    let interp = model.eval(mid).unwrap();
    assert!(interp < values[10] && interp > values[11]);

    let phase = frequency_to_phase_psd(&source).unwrap();
    for (i, w) in omegas.iter().enumerate() {
        assert_relative_eq!(phase.values()[i] * w * w, values[i], max_relative = 1e-12);
    }
}

#[test]
fn single_precision_transduction_tracks_double() {
    let omega_optical = TWO_PI * 299_792_458.0 / 1550e-9;
    let c64 = CavityParams::new(TWO_PI * 4e6, 0.5, omega_optical).unwrap();
    let c32 = F32CavityParams::new((TWO_PI * 4e6) as f32, 0.5, omega_optical as f32).unwrap();
    for d in [-9e6, -2e6, -0.3e6, 0.7e6, 5e6] {
        for f in [0.2e6, 1e6, 3.5e6, 8e6] {
            let (d, w) = (TWO_PI * d, TWO_PI * f);
            let g64 = c64.transduction_gain(d, w);
            let g32 = c32.transduction_gain(d as f32, w as f32) as f64;
            assert_relative_eq!(g32, g64, max_relative = 1e-4);
        }
    }
}
