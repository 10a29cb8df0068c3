//! Absolute frequency-noise calibration of photocurrent spectra with a known
//! phase-modulation tone.
//!
//! A coherent modulation `δφ·cos(Ω_mod·t)` has phase-noise area `δφ²/4` at
//! `+Ω_mod`, i.e. frequency-noise area `Ω_mod²δφ²/4`. Comparing the detected
//! tone area with the detected noise density transfers that absolute scale to
//! the rest of the spectrum. Responsivity, optical power and detector gain
//! cancel in the ratio.

use serde::{Deserialize, Serialize};

use crate::cavity_transduction::CavityParams;
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::scalar::{from_usize, Real};
use crate::spectra::{SpectrumTrace, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneDescriptor<T> {
    /// Modulation index, rad.
    pub delta_phi: T,
    /// Modulation frequency, rad/s.
    pub omega_mod: T,
    /// Resolution bandwidth of the recording, Hz.
    pub rbw: T,
}

impl<T: Real> ToneDescriptor<T> {
    pub fn new(delta_phi: T, omega_mod: T, rbw: T) -> Result<Self> {
        ensure_positive("modulation index", delta_phi.as_f64())?;
        ensure_positive("modulation frequency", omega_mod.as_f64())?;
        ensure_positive("rbw", rbw.as_f64())?;
        Ok(Self {
            delta_phi,
            omega_mod,
            rbw,
        })
    }
}

/// Phase modulator characterized by its half-wave voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatorSpec<T> {
    v_pi: T,
    tolerance: T,
}

impl<T: Real> ModulatorSpec<T> {
    /// Default fractional uncertainty of `V_π`: measured and datasheet values
    /// typically agree within 10 %.
    pub const DEFAULT_TOLERANCE: f64 = 0.10;

    pub fn new(v_pi: T) -> Result<Self> {
        Self::with_tolerance(v_pi, T::lit(Self::DEFAULT_TOLERANCE))
    }

    pub fn with_tolerance(v_pi: T, tolerance: T) -> Result<Self> {
        ensure_positive("V_pi", v_pi.as_f64())?;
        ensure_non_negative("V_pi tolerance", tolerance.as_f64())?;
        Ok(Self { v_pi, tolerance })
    }

    pub fn v_pi(&self) -> T {
        self.v_pi
    }

    pub fn tolerance(&self) -> T {
        self.tolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationIndex<T> {
    pub value: T,
    pub fractional_uncertainty: T,
}

/// `δφ = π·V_drive/V_π`; the fractional uncertainty is that of `V_π`.
pub fn modulation_index<T: Real>(
    modulator: &ModulatorSpec<T>,
    v_drive: T,
) -> Result<ModulationIndex<T>> {
    ensure_non_negative("drive voltage", v_drive.as_f64())?;
    Ok(ModulationIndex {
        value: T::PI() * v_drive / modulator.v_pi(),
        fractional_uncertainty: modulator.tolerance(),
    })
}

/// Apparent frequency-noise height of the tone in one resolution bandwidth:
/// `Ω_mod²·δφ²/(4·RBW)`, rad²·Hz.
pub fn calibration_tone_psd<T: Real>(tone: &ToneDescriptor<T>) -> T {
    tone.omega_mod * tone.omega_mod * tone.delta_phi * tone.delta_phi / (T::lit(4.0) * tone.rbw)
}

/// How the tone-derived scale is extended away from `Ω_mod`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationMode<T> {
    /// Flat transduction assumed; valid near `Ω_mod`.
    RatioAtTone,
    /// Divides out the cavity's frequency-dependent transduction at the
    /// measurement detuning.
    Deconvolved {
        cavity: CavityParams<T>,
        detuning: T,
    },
}

impl<T> CalibrationMode<T> {
    pub fn label(&self) -> &'static str {
        match self {
            CalibrationMode::RatioAtTone => "ratio-at-tone",
            CalibrationMode::Deconvolved { .. } => "transduction-deconvolved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Bins on each side of the tone peak integrated as tone power.
    pub cluster_half_width: usize,
    /// Bins on each side, beyond the cluster, used to estimate the noise under the tone.
    pub neighbor_bins: usize,
    /// Minimum ratio of tone-peak bin to the local noise level.
    pub min_snr: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            cluster_half_width: 3,
            neighbor_bins: 48,
            min_snr: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedSpectrum<T> {
    /// `S_ωω` in rad²·Hz; tone bins are kept and show the calibration peak.
    pub trace: SpectrumTrace<T>,
    pub mode: &'static str,
    /// Noise level under the tone, rad²·Hz.
    pub level_at_tone: T,
    /// Background-subtracted tone power, detected units × Hz.
    pub tone_area: T,
    pub tone_index: usize,
    pub snr: T,
}

fn grids_match<T: Real>(a: &SpectrumTrace<T>, b: &SpectrumTrace<T>) -> bool {
    a.omegas() == b.omegas()
}

/// Background-subtracts `raw`, measures the tone, and rescales to `S_ωω`.
pub fn calibrate_spectrum<T: Real>(
    raw: &SpectrumTrace<T>,
    background: &SpectrumTrace<T>,
    tone: &ToneDescriptor<T>,
    mode: &CalibrationMode<T>,
) -> Result<CalibratedSpectrum<T>> {
    calibrate_spectrum_with(raw, background, tone, mode, &CalibrationOptions::default())
}

pub fn calibrate_spectrum_with<T: Real>(
    raw: &SpectrumTrace<T>,
    background: &SpectrumTrace<T>,
    tone: &ToneDescriptor<T>,
    mode: &CalibrationMode<T>,
    opts: &CalibrationOptions,
) -> Result<CalibratedSpectrum<T>> {
    if !grids_match(raw, background) {
        return Err(Error::GridMismatch);
    }
    if raw.unit() != background.unit() {
        return Err(Error::UnitMismatch {
            expected: raw.unit(),
            found: background.unit(),
        });
    }
    let omegas = raw.omegas();
    let net: Vec<T> = raw
        .values()
        .iter()
        .zip(background.values())
        .map(|(r, b)| (*r - *b).max(T::zero()))
        .collect();

    let not_found = || Error::ToneNotFound {
        omega_mod: tone.omega_mod.as_f64(),
    };
    let n = net.len();
    let half = opts.cluster_half_width;
    if tone.omega_mod < omegas[0] || tone.omega_mod > omegas[n - 1] {
        return Err(not_found());
    }
    let guess = raw.grid().nearest_index(tone.omega_mod);
    let lo = guess.saturating_sub(half);
    let hi = (guess + half).min(n - 1);
    let peak = (lo..=hi)
        .max_by(|a, b| net[*a].partial_cmp(&net[*b]).expect("finite PSD"))
        .expect("non-empty search window");
    if net[peak] <= T::zero() {
        return Err(not_found());
    }
    if peak < half + 1 || peak + half + 1 >= n {
        return Err(not_found());
    }

    let noise_at =
        local_noise(omegas, &net, peak, half, opts.neighbor_bins).ok_or_else(not_found)?;
    let (noise_level, noise_at_center) = noise_at;
    let snr = if noise_level > T::zero() {
        net[peak] / noise_level
    } else {
        T::infinity()
    };
    if !(snr > T::lit(opts.min_snr)) {
        return Err(Error::WeakTone {
            snr: snr.as_f64(),
            required: opts.min_snr,
        });
    }

    let bin_width =
        (omegas[peak + half] - omegas[peak - half]) / (from_usize::<T>(2 * half) * T::two_pi());
    let area = (peak - half..=peak + half)
        .map(|k| net[k] - noise_at_center(omegas[k]))
        .sum::<T>()
        * bin_width;
    if !(area > T::zero()) {
        return Err(not_found());
    }

    let tone_area_ww =
        tone.omega_mod * tone.omega_mod * tone.delta_phi * tone.delta_phi / T::lit(4.0);
    let scale = tone_area_ww / area;
    let level_at_tone = noise_at_center(tone.omega_mod).max(T::zero()) * scale;

    let values: Vec<T> = match mode {
        CalibrationMode::RatioAtTone => net.iter().map(|v| *v * scale).collect(),
        CalibrationMode::Deconvolved { cavity, detuning } => {
            let reference = cavity.transduction_gain(*detuning, tone.omega_mod);
            if !(reference > T::zero()) {
                return Err(Error::InvalidParameter {
                    name: "detuning",
                    reason: "transduction vanishes at the tone frequency".into(),
                });
            }
            omegas
                .iter()
                .zip(&net)
                .map(|(w, v)| {
                    let g = cavity.transduction_gain(*detuning, *w);
                    if g > T::zero() {
                        *v * scale * reference / g
                    } else {
                        T::zero()
                    }
                })
                .collect()
        }
    };
    let mut trace = SpectrumTrace::new(raw.grid().clone(), values, Unit::FrequencyNoise)?;
    if let Some(rbw) = raw.rbw() {
        trace = trace.with_rbw(rbw)?;
    }
    Ok(CalibratedSpectrum {
        trace,
        mode: mode.label(),
        level_at_tone,
        tone_area: area,
        tone_index: peak,
        snr,
    })
}

/// Estimates the noise continuum under the tone cluster from bins on both
/// sides. Returns the mean neighbor level and a quadratic least-squares fit
/// (in frequency offset) used to interpolate under the cluster.
#[allow(clippy::type_complexity)]
fn local_noise<T: Real>(
    omegas: &[T],
    net: &[T],
    peak: usize,
    half: usize,
    neighbors: usize,
) -> Option<(T, Box<dyn Fn(T) -> T>)> {
    let n = net.len();
    let mut idx: Vec<usize> = Vec::with_capacity(2 * neighbors);
    for off in half + 1..=half + neighbors {
        // skip the DC bin, it carries the detrending residue
        if peak >= off && peak - off >= 1 {
            idx.push(peak - off);
        }
        if peak + off < n {
            idx.push(peak + off);
        }
    }
    if idx.len() < 4 {
        return None;
    }
    let center = omegas[peak];
    let span = omegas[peak + 1] - omegas[peak];
    let mean = idx.iter().map(|k| net[*k]).sum::<T>() / from_usize::<T>(idx.len());

    // normal equations for c0 + c1 x + c2 x², x in bins from the peak
    let mut m = [[T::zero(); 3]; 3];
    let mut rhs = [T::zero(); 3];
    for k in &idx {
        let x = (omegas[*k] - center) / span;
        let basis = [T::one(), x, x * x];
        for r in 0..3 {
            rhs[r] = rhs[r] + basis[r] * net[*k];
            for c in 0..3 {
                m[r][c] = m[r][c] + basis[r] * basis[c];
            }
        }
    }
    let coef = solve3(m, rhs)?;
    let fit = move |w: T| {
        let x = (w - center) / span;
        coef[0] + coef[1] * x + coef[2] * x * x
    };
    Some((mean, Box::new(fit)))
}

fn solve3<T: Real>(mut m: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    for col in 0..3 {
        let pivot =
            (col..3).max_by(|a, c| m[*a][col].abs().partial_cmp(&m[*c][col].abs()).unwrap())?;
        if m[pivot][col] == T::zero() {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for c in col..3 {
                m[row][c] = m[row][c] - f * m[col][c];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for c in row + 1..3 {
            acc = acc - m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}
