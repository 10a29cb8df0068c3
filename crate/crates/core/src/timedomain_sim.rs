//! Monte-Carlo model of the measurement chain: phase-noisy laser, cavity,
//! photodetector and spectrum estimation.
//!
//! The optical carrier is factored out; fields are complex baseband samples
//! in √W (so `|s|²` is the instantaneous power) in the frame rotating at the
//! laser frequency.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::calibration::ToneDescriptor;
use crate::cavity_transduction::{CavityParams, DriveParams};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::noise_models::NoiseModel;
use crate::scalar::{from_usize, Real};
use crate::spectra::{FrequencyGrid, SpectrumTrace, Unit};
use crate::welch::{welch_psd, WelchConfig};

/// Independent random streams of one seeded run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum NoiseStream {
    LaserPhase = 0,
    Detector = 1,
    Background = 2,
}

fn rng_for(seed: u64, stream: NoiseStream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

fn gaussian<T: Real>(rng: &mut ChaCha20Rng) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    sample_rate: T,
    n_samples: usize,
    seed: u64,
    welch: WelchConfig,
}

impl<T: Real> SimConfig<T> {
    /// `sample_rate` in Hz; `n_samples` must be a power of two holding at
    /// least four Welch segments.
    pub fn new(sample_rate: T, n_samples: usize, seed: u64, welch: WelchConfig) -> Result<Self> {
        ensure_positive("sample_rate", sample_rate.as_f64())?;
        if !n_samples.is_power_of_two() {
            return Err(Error::InvalidParameter {
                name: "n_samples",
                reason: format!("must be a power of two, got {n_samples}"),
            });
        }
        if n_samples < 4 * welch.segment_length() {
            return Err(Error::InvalidParameter {
                name: "n_samples",
                reason: format!(
                    "{n_samples} samples is fewer than four segments of {}",
                    welch.segment_length()
                ),
            });
        }
        Ok(Self {
            sample_rate,
            n_samples,
            seed,
            welch,
        })
    }

    pub fn sample_rate(&self) -> T {
        self.sample_rate
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn welch(&self) -> &WelchConfig {
        &self.welch
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dt(&self) -> T {
        T::one() / self.sample_rate
    }

    /// Angular Nyquist frequency `π·fs`.
    pub fn nyquist(&self) -> T {
        T::PI() * self.sample_rate
    }

    /// Requires `fs ≥ 4·Ω_max/2π`.
    pub fn check_analysis_band(&self, max_omega: T) -> Result<()> {
        let needed = T::lit(4.0) * max_omega / T::two_pi();
        if self.sample_rate < needed {
            return Err(Error::InvalidParameter {
                name: "sample_rate",
                reason: format!(
                    "{} Hz is below 4x the highest analysis frequency ({} Hz required)",
                    self.sample_rate, needed
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams<T> {
    nep: T,
    responsivity: T,
}

impl<T: Real> DetectorParams<T> {
    /// `nep` in W/√Hz, `responsivity` in A/W.
    pub fn new(nep: T, responsivity: T) -> Result<Self> {
        ensure_non_negative("nep", nep.as_f64())?;
        ensure_positive("responsivity", responsivity.as_f64())?;
        Ok(Self { nep, responsivity })
    }

    pub fn nep(&self) -> T {
        self.nep
    }

    pub fn responsivity(&self) -> T {
        self.responsivity
    }

    /// Photocurrent noise floor `(R·NEP)²`, A²/Hz.
    pub fn noise_floor(&self) -> T {
        let x = self.responsivity * self.nep;
        x * x
    }
}

/// Complex baseband field samples in √W.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSeries<T> {
    samples: Vec<Complex<T>>,
    sample_rate: T,
}

impl<T: Real> FieldSeries<T> {
    pub fn new(samples: Vec<Complex<T>>, sample_rate: T) -> Result<Self> {
        ensure_positive("sample_rate", sample_rate.as_f64())?;
        if samples
            .iter()
            .any(|s| !s.re.is_finite() || !s.im.is_finite())
        {
            return Err(Error::NonFinite {
                name: "field sample",
            });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Constant-amplitude field `√P·e^{iφ(t)}`.
    pub fn from_phase(power: T, phase: &[T], sample_rate: T) -> Result<Self> {
        ensure_non_negative("power", power.as_f64())?;
        let amp = power.sqrt();
        let samples = phase.iter().map(|p| Complex::from_polar(amp, *p)).collect();
        Self::new(samples, sample_rate)
    }

    /// Laser blocked.
    pub fn dark(n: usize, sample_rate: T) -> Result<Self> {
        Self::new(vec![Complex::new(T::zero(), T::zero()); n], sample_rate)
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn sample_rate(&self) -> T {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Instantaneous power `|s|²`, W.
    pub fn power(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }
}

/// Gaussian phase series whose PSD equals `S_ωω(Ω)/Ω²` in expectation.
///
/// Each positive-frequency DFT bin is drawn as a complex Gaussian with
/// `E|X_k|² = S_φφ(Ω_k)·fs·N`, mirrored with Hermitian symmetry; the Nyquist
/// bin is real and the DC bin is zero. The model is evaluated on
/// `Ω_k = 2π·k·fs/N` for `k = 1..=N/2`.
pub fn synthesize_phase_noise<T: Real>(
    model: &NoiseModel<T>,
    config: &SimConfig<T>,
) -> Result<Vec<T>> {
    let n = config.n_samples();
    let fs = config.sample_rate();
    let half = n / 2;
    let df = fs / from_usize::<T>(n);
    let omegas: Vec<T> = (1..=half)
        .map(|k| T::two_pi() * df * from_usize(k))
        .collect();
    let target = model.eval_grid(&FrequencyGrid::from_values(omegas)?)?;

    let mut rng = rng_for(config.seed(), NoiseStream::LaserPhase);
    let scale = fs * from_usize::<T>(n);
    let mut spectrum = vec![Complex::new(T::zero(), T::zero()); n];
    let two = T::lit(2.0);
    for (k, (omega, s_ww)) in target.omegas().iter().zip(target.values()).enumerate() {
        let k = k + 1;
        let var = *s_ww / (*omega * *omega) * scale;
        if k < half {
            let sd = (var / two).sqrt();
            let re = gaussian::<T>(&mut rng) * sd;
            let im = gaussian::<T>(&mut rng) * sd;
            spectrum[k] = Complex::new(re, im);
            spectrum[n - k] = Complex::new(re, -im);
        } else {
            spectrum[k] = Complex::new(gaussian::<T>(&mut rng) * var.sqrt(), T::zero());
        }
    }
    FftPlanner::<T>::new()
        .plan_fft_inverse(n)
        .process(&mut spectrum);
    let inv_n = T::one() / from_usize::<T>(n);
    Ok(spectrum.into_iter().map(|c| c.re * inv_n).collect())
}

/// Adds the coherent calibration modulation `δφ·cos(Ω_mod·t)`.
pub fn add_calibration_tone<T: Real>(
    phase: &[T],
    delta_phi: T,
    omega_mod: T,
    sample_rate: T,
) -> Result<Vec<T>> {
    ensure_positive("sample_rate", sample_rate.as_f64())?;
    ensure_non_negative("modulation frequency", omega_mod.as_f64())?;
    let nyquist = T::PI() * sample_rate;
    if omega_mod >= nyquist {
        return Err(Error::Aliasing {
            omega_mod: omega_mod.as_f64(),
            nyquist: nyquist.as_f64(),
        });
    }
    let dt = T::one() / sample_rate;
    Ok(phase
        .iter()
        .enumerate()
        .map(|(j, p)| *p + delta_phi * (omega_mod * dt * from_usize(j)).cos())
        .collect())
}

/// Propagates a field through the cavity and returns the transmitted field.
///
/// The intracavity amplitude is advanced exactly for an input held constant
/// over each sample interval: `a[n+1] = e^{λT}a[n] + (e^{λT}−1)/λ·√(ηκ)·s[n]`
/// with `λ = iΔ − κ/2`. Output samples use the interval average
/// `(a[n] + a[n+1])/2`, which centers the cavity path on the held input and
/// keeps the sampled response within ~1e-4 of the continuous one for
/// `κT < 0.1`. The recursion starts in the steady state of the first sample.
pub fn cavity_filter<T: Real>(
    input: &FieldSeries<T>,
    cavity: &CavityParams<T>,
    detuning: T,
) -> Result<FieldSeries<T>> {
    let dt = T::one() / input.sample_rate();
    let kappa_dt = cavity.kappa() * dt;
    if !(kappa_dt < T::lit(0.1)) {
        return Err(Error::UnresolvedCavity {
            kappa_dt: kappa_dt.as_f64(),
        });
    }
    let nyquist = T::PI() * input.sample_rate();
    if !(detuning.abs() < nyquist) {
        return Err(Error::InvalidParameter {
            name: "detuning",
            reason: format!("|{detuning}| rad/s exceeds the Nyquist limit {nyquist} rad/s"),
        });
    }
    let lambda = Complex::new(-cavity.kappa() / T::lit(2.0), detuning);
    let prop = (lambda * dt).exp();
    let drive = (prop - T::one()) / lambda;
    let coupling = (cavity.eta() * cavity.kappa()).sqrt();
    let half = T::lit(0.5);

    let samples = input.samples();
    let mut out = Vec::with_capacity(samples.len());
    let mut a = match samples.first() {
        Some(s0) => -(*s0 * coupling) / lambda,
        None => Complex::new(T::zero(), T::zero()),
    };
    for s in samples {
        let next = prop * a + drive * (*s * coupling);
        out.push(*s - (a + next) * (coupling * half));
        a = next;
    }
    FieldSeries::new(out, input.sample_rate())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection<T> {
    /// Photocurrent samples, A.
    pub photocurrent: Vec<T>,
    /// Welch estimate, A²/Hz, with the estimator's RBW recorded.
    pub psd: SpectrumTrace<T>,
    pub segments: usize,
}

/// Square-law detection with additive white detector noise of PSD `(R·NEP)²`.
pub fn detect<T: Real>(
    output: &FieldSeries<T>,
    detector: &DetectorParams<T>,
    config: &SimConfig<T>,
) -> Result<Detection<T>> {
    detect_on_stream(output, detector, config, NoiseStream::Detector)
}

pub fn detect_on_stream<T: Real>(
    output: &FieldSeries<T>,
    detector: &DetectorParams<T>,
    config: &SimConfig<T>,
    stream: NoiseStream,
) -> Result<Detection<T>> {
    let fs = config.sample_rate();
    let sigma = detector.responsivity() * detector.nep() * fs.sqrt();
    let r = detector.responsivity();
    let mut rng = rng_for(config.seed(), stream);
    let photocurrent: Vec<T> = output
        .samples()
        .iter()
        .map(|s| {
            let noise = if sigma > T::zero() {
                gaussian::<T>(&mut rng) * sigma
            } else {
                T::zero()
            };
            r * s.norm_sqr() + noise
        })
        .collect();
    let est = welch_psd(&photocurrent, fs, config.welch(), Unit::Photocurrent)?;
    Ok(Detection {
        photocurrent,
        psd: est.trace,
        segments: est.segments,
    })
}

/// Coherent phase modulation applied on top of the laser noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneSpec<T> {
    /// Modulation index, rad.
    pub delta_phi: T,
    /// Modulation frequency, rad/s.
    pub omega_mod: T,
}

/// Everything needed for one simulated measurement.
#[derive(Debug, Clone)]
pub struct Experiment<T> {
    pub laser: NoiseModel<T>,
    pub cavity: CavityParams<T>,
    pub drive: DriveParams<T>,
    pub detector: DetectorParams<T>,
    pub config: SimConfig<T>,
    pub tone: Option<ToneSpec<T>>,
}

/// Outputs of [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentBundle<T> {
    /// Photocurrent PSD with the laser on.
    pub raw: SpectrumTrace<T>,
    /// Photocurrent PSD with the laser blocked.
    pub background: SpectrumTrace<T>,
    pub tone: Option<ToneDescriptor<T>>,
    pub segments: usize,
    /// Mean photocurrent with the laser on, A.
    pub mean_photocurrent: T,
}

pub fn run_experiment<T: Real>(exp: &Experiment<T>) -> Result<ExperimentBundle<T>> {
    let cfg = &exp.config;
    let fs = cfg.sample_rate();
    let mut phase = synthesize_phase_noise(&exp.laser, cfg)?;
    if let Some(tone) = exp.tone {
        cfg.check_analysis_band(tone.omega_mod)?;
        phase = add_calibration_tone(&phase, tone.delta_phi, tone.omega_mod, fs)?;
    }
    let field = FieldSeries::from_phase(exp.drive.power(), &phase, fs)?;
    drop(phase);
    let transmitted = cavity_filter(&field, &exp.cavity, exp.drive.detuning())?;
    drop(field);
    let raw = detect_on_stream(&transmitted, &exp.detector, cfg, NoiseStream::Detector)?;
    let mean_photocurrent =
        raw.photocurrent.iter().copied().sum::<T>() / from_usize::<T>(raw.photocurrent.len());
    let dark = FieldSeries::dark(cfg.n_samples(), fs)?;
    let background = detect_on_stream(&dark, &exp.detector, cfg, NoiseStream::Background)?;
    let rbw = raw.psd.rbw().expect("welch traces carry an rbw");
    let tone = exp
        .tone
        .map(|t| ToneDescriptor::new(t.delta_phi, t.omega_mod, rbw))
        .transpose()?;
    Ok(ExperimentBundle {
        raw: raw.psd,
        background: background.psd,
        tone,
        segments: raw.segments,
        mean_photocurrent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise_models::{RelaxationOscillationModel, TabulatedNoiseModel};
    use crate::welch::integrate_two_sided;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn cfg(n: usize, seg: usize, seed: u64) -> SimConfig<f64> {
        SimConfig::new(1e8, n, seed, WelchConfig::hann(seg).unwrap()).unwrap()
    }

    #[test]
    fn config_validation() {
        let w = WelchConfig::hann(256).unwrap();
        assert!(SimConfig::new(1e6, 1000, 0, w).is_err());
        assert!(SimConfig::new(1e6, 512, 0, w).is_err());
        assert!(SimConfig::new(0.0, 4096, 0, w).is_err());
        let c = SimConfig::new(1e6, 1024, 0, w).unwrap();
        assert!(c.check_analysis_band(2.0 * PI * 250e3).is_ok());
        assert!(c.check_analysis_band(2.0 * PI * 251e3).is_err());
    }

    #[test]
    fn zero_model_gives_zero_phase() {
        let phi = synthesize_phase_noise(&NoiseModel::zero(), &cfg(1 << 12, 256, 1)).unwrap();
        assert!(phi.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn synthesis_is_seed_deterministic() {
        let m = NoiseModel::white(1e4).unwrap();
        let a = synthesize_phase_noise(&m, &cfg(1 << 12, 256, 9)).unwrap();
        let b = synthesize_phase_noise(&m, &cfg(1 << 12, 256, 9)).unwrap();
        let c = synthesize_phase_noise(&m, &cfg(1 << 12, 256, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn tone_rejects_aliasing_and_zero_index_is_identity() {
        let phi = vec![0.1, 0.2, 0.3];
        assert!(matches!(
            add_calibration_tone(&phi, 0.1, 2.0 * PI * 0.5e6, 1e6),
            Err(Error::Aliasing { .. })
        ));
        assert_eq!(add_calibration_tone(&phi, 0.0, 1.0, 1e6).unwrap(), phi);
    }

    #[test]
    fn cavity_filter_steady_state() {
        let fs = 1e9;
        let c = CavityParams::new(2.0 * PI * 2e6, 0.5, 1.0).unwrap();
        let field = FieldSeries::new(vec![Complex::new(1.0, 0.0); 2000], fs).unwrap();
        for d in [0.0, -c.kappa() / 2.0, 3.0 * c.kappa()] {
            let out = cavity_filter(&field, &c, d).unwrap();
            let p = out.samples().last().unwrap().norm_sqr();
            assert_relative_eq!(p, c.steady_state_transmission(d), epsilon = 1e-12);
        }
        let out = cavity_filter(&field, &c, 0.0).unwrap();
        assert!(out.power().iter().all(|p| *p < 1e-20));
        let far = cavity_filter(&field, &c, 100.0 * c.kappa()).unwrap();
        assert_relative_eq!(
            far.power()[100],
            c.steady_state_transmission(100.0 * c.kappa()),
            max_relative = 1e-9
        );
        assert!(far.power()[100] > 0.999);
        let over = CavityParams::new(c.kappa(), 1.0, 1.0).unwrap();
        let out = cavity_filter(&field, &over, 0.0).unwrap();
        assert_relative_eq!(out.power()[1999], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn cavity_filter_resolution_guard() {
        let c = CavityParams::new(2.0 * PI * 2e6, 0.5, 1.0).unwrap();
        let field = FieldSeries::new(vec![Complex::new(1.0, 0.0); 8], 1e7).unwrap();
        assert!(matches!(
            cavity_filter(&field, &c, 0.0),
            Err(Error::UnresolvedCavity { .. })
        ));
    }

    #[test]
    fn modulated_transmission_matches_sideband_algebra() {
        // small coherent phase modulation; frequency-domain oracle:
        // δP(t) = 2 Re[A e^{−iΩt}], A = i(δφ/2)·P·(t0*·t(Ω) − t0·t(−Ω)*)
        let fs = 2.56e8;
        let n = 1 << 16;
        let c = CavityParams::new(2.0 * PI * 2e6, 0.5, 1.0).unwrap();
        let d = -c.kappa() / 2.0;
        let f_mod = 3.5e6;
        let w = 2.0 * PI * f_mod;
        let dphi = 1e-3;
        let phi = add_calibration_tone(&vec![0.0; n], dphi, w, fs).unwrap();
        let out = cavity_filter(&FieldSeries::from_phase(1.0, &phi, fs).unwrap(), &c, d).unwrap();
        let p = out.power();
        // lock-in over an integer number of periods after the transient
        let start = 1 << 14;
        let periods = ((n - start) as f64 * f_mod / fs).floor();
        let len = (periods * fs / f_mod).round() as usize;
        let mut acc = Complex::new(0.0, 0.0);
        for j in start..start + len {
            let t = j as f64 / fs;
            acc += p[j] * Complex::new(0.0, w * t).exp();
        }
        let measured = 2.0 * acc.norm() / len as f64;
        let t0 = c.transmission(d, 0.0);
        let h = t0.conj() * c.transmission(d, w) - t0 * c.transmission(d, -w).conj();
        let expected = 2.0 * (dphi / 2.0) * h.norm();
        assert_relative_eq!(measured, expected, max_relative = 5e-3);
    }

    #[test]
    fn dark_detector_is_white_at_nep_floor() {
        let c = cfg(1 << 18, 1024, 3);
        let det = DetectorParams::new(24e-12, 0.8).unwrap();
        let dark = FieldSeries::dark(c.n_samples(), c.sample_rate()).unwrap();
        let d = detect(&dark, &det, &c).unwrap();
        let floor = det.noise_floor();
        let v = &d.psd.values()[2..510];
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert_relative_eq!(mean, floor, max_relative = 0.1);
        assert!(v.iter().all(|x| (x / floor - 1.0).abs() < 0.3));
    }

    #[test]
    fn noiseless_constant_field() {
        let c = cfg(1 << 14, 1024, 3);
        let det = DetectorParams::new(0.0, 0.8).unwrap();
        let field =
            FieldSeries::from_phase(2e-3, &vec![0.0; c.n_samples()], c.sample_rate()).unwrap();
        let d = detect(&field, &det, &c).unwrap();
        assert!(d.psd.values()[1..].iter().all(|v| *v < 1e-30));
        let mean = d.photocurrent.iter().sum::<f64>() / d.photocurrent.len() as f64;
        assert_relative_eq!(mean, 1.6e-3, max_relative = 1e-12);
    }

    #[test]
    fn parseval_for_synthesized_phase() {
        // S_ωω ∝ Ω² is white phase noise: variance c·fs·(N−1)/N
        let c = cfg(1 << 18, 2048, 11);
        let coef = 1e-20;
        let df = c.sample_rate() / c.n_samples() as f64;
        let grid = FrequencyGrid::logarithmic(2.0 * PI * df, PI * c.sample_rate(), 64).unwrap();
        let values = grid.values().iter().map(|w| coef * w * w).collect();
        let trace = SpectrumTrace::new(grid, values, Unit::FrequencyNoise).unwrap();
        let model: NoiseModel<f64> = TabulatedNoiseModel::new(trace).unwrap().into();
        let phi = synthesize_phase_noise(&model, &c).unwrap();
        let var = phi.iter().map(|p| p * p).sum::<f64>() / phi.len() as f64;
        assert_relative_eq!(var, coef * c.sample_rate(), max_relative = 0.01);
        let est = welch_psd(&phi, c.sample_rate(), c.welch(), Unit::PhaseNoise).unwrap();
        assert_relative_eq!(integrate_two_sided(&est), var, max_relative = 0.02);
    }

    #[test]
    fn synthesized_phase_follows_model_in_band() {
        let c = cfg(1 << 18, 2048, 12);
        let model: NoiseModel<f64> =
            RelaxationOscillationModel::new(50.0, 2.0 * PI * 10e6, 2.0 * PI * 4e6)
                .unwrap()
                .into();
        let phi = synthesize_phase_noise(&model, &c).unwrap();
        let est = welch_psd(&phi, c.sample_rate(), c.welch(), Unit::PhaseNoise).unwrap();
        assert!(est.segments >= 100);
        let (mut ratio, mut count) = (0.0, 0);
        for (w, v) in est.trace.omegas().iter().zip(est.trace.values()) {
            if *w > 2.0 * PI * 7e6 && *w < 2.0 * PI * 13e6 {
                ratio += v / (model.eval(*w).unwrap() / (w * w));
                count += 1;
            }
        }
        assert_relative_eq!(ratio / count as f64, 1.0, max_relative = 0.02);
    }

    #[test]
    fn single_precision_pipeline_runs() {
        let c = SimConfig::<f32>::new(1e9, 1 << 12, 5, WelchConfig::hann(256).unwrap()).unwrap();
        let m = NoiseModel::white(1e3f32).unwrap();
        let phi = synthesize_phase_noise(&m, &c).unwrap();
        let cav = CavityParams::new(2.0 * std::f32::consts::PI * 2e6, 0.5, 1.0).unwrap();
        let out = cavity_filter(
            &FieldSeries::from_phase(1e-3, &phi, 1e9).unwrap(),
            &cav,
            -cav.kappa() / 2.0,
        )
        .unwrap();
        let d = detect(&out, &DetectorParams::new(0.0, 1.0).unwrap(), &c).unwrap();
        assert!(d.psd.values().iter().all(|v| v.is_finite()));
    }
}
