//! Single-mode optical cavity: intracavity response and the conversion of
//! laser frequency noise into transmitted power noise.
//!
//! Detuning is `Δ = ω_laser − ω_cavity`; the red (cooling) sideband sits at
//! `Δ = −Ω_m`. The field obeys `da/dt = (iΔ − κ/2)a + √(ηκ)·s_in` in the
//! frame rotating at the laser frequency, and the transmitted field is
//! `s_out = s_in − √(ηκ)·a`.

use std::io::Write;

use num_complex::Complex;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::scalar::Real;
use crate::spectra::{optical_angular_frequency, write_curve_csv, Unit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams<T> {
    kappa: T,
    eta: T,
    omega_optical: T,
}

impl<T: Real> CavityParams<T> {
    /// `kappa`: energy decay rate (rad/s); `eta = κ_ex/κ` in (0, 1];
    /// `omega_optical`: carrier angular frequency (rad/s).
    pub fn new(kappa: T, eta: T, omega_optical: T) -> Result<Self> {
        ensure_positive("kappa", kappa.as_f64())?;
        ensure_positive("eta", eta.as_f64())?;
        if eta > T::one() {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: format!("coupling ratio must be <= 1, got {eta}"),
            });
        }
        ensure_positive("optical angular frequency", omega_optical.as_f64())?;
        Ok(Self {
            kappa,
            eta,
            omega_optical,
        })
    }

    pub fn from_wavelength(kappa: T, eta: T, wavelength_m: T) -> Result<Self> {
        Self::new(kappa, eta, optical_angular_frequency(wavelength_m)?)
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn omega_optical(&self) -> T {
        self.omega_optical
    }

    /// Intracavity response per unit `√(ηκ)·s_in` for a field component
    /// oscillating as `e^{−iΩt}` in the rotating frame:
    /// `1/(−i(Δ + Ω) + κ/2)` (units of seconds).
    pub fn intracavity_amplitude(&self, detuning: T, omega: T) -> Complex<T> {
        Complex::new(T::one(), T::zero())
            / Complex::new(self.kappa / T::lit(2.0), -(detuning + omega))
    }

    /// Amplitude transmission `1 − ηκ/(κ/2 − i(Δ + Ω))` of the same component.
    pub fn transmission(&self, detuning: T, omega: T) -> Complex<T> {
        Complex::new(T::one(), T::zero())
            - self.intracavity_amplitude(detuning, omega) * (self.eta * self.kappa)
    }

    /// Power transmission of a monochromatic input at detuning `Δ`.
    pub fn steady_state_transmission(&self, detuning: T) -> T {
        self.transmission(detuning, T::zero()).norm_sqr()
    }

    /// Transmitted power noise per unit frequency noise and per W² of input power.
    ///
    /// ```text
    ///         4 η² Δ² κ² ((1−η)² κ² + Ω²)
    /// ───────────────────────────────────────────────────────
    /// (Δ² + κ²/4)² ((Δ−Ω)² + κ²/4) ((Δ+Ω)² + κ²/4)
    /// ```
    ///
    /// This is the exact linear response of the transmitted power to a small
    /// phase modulation; the carrier Lorentzian enters squared, which keeps
    /// the result in W²/Hz.
    pub fn transduction_gain(&self, detuning: T, omega: T) -> T {
        // work in units of κ so the eighth powers stay inside f32 range
        let k = self.kappa;
        let e = self.eta;
        let d = detuning / k;
        let w = omega / k;
        let hw2 = T::lit(0.25);
        let d2 = d * d;
        let carrier = d2 + hw2;
        let lower = (d - w) * (d - w) + hw2;
        let upper = (d + w) * (d + w) + hw2;
        let one_minus = T::one() - e;
        let num = T::lit(4.0) * e * e * d2 * (one_minus * one_minus + w * w);
        num / (carrier * carrier * (lower * upper)) / (k * k)
    }
}

/// Launch conditions: input power (W) and laser detuning (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams<T> {
    power: T,
    detuning: T,
}

impl<T: Real> DriveParams<T> {
    pub fn new(power: T, detuning: T) -> Result<Self> {
        ensure_non_negative("power", power.as_f64())?;
        if !detuning.is_finite() {
            return Err(Error::NonFinite { name: "detuning" });
        }
        Ok(Self { power, detuning })
    }

    pub fn power(&self) -> T {
        self.power
    }

    pub fn detuning(&self) -> T {
        self.detuning
    }

    pub fn with_detuning(self, detuning: T) -> Result<Self> {
        Self::new(self.power, detuning)
    }
}

/// Double-sided PSD (W²/Hz) of transmitted power fluctuations produced by
/// frequency noise `s_omega_omega` (rad²·Hz) at analysis frequency `omega`.
pub fn transduced_power_psd<T: Real>(
    cavity: &CavityParams<T>,
    drive: &DriveParams<T>,
    omega: T,
    s_omega_omega: T,
) -> T {
    let p = drive.power();
    p * p * cavity.transduction_gain(drive.detuning(), omega) * s_omega_omega
}

/// Transduced power PSD as a function of detuning at fixed analysis frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningSweep<T> {
    pub detunings: Vec<T>,
    pub values: Vec<T>,
    /// Detunings of the interior local maxima, ascending.
    pub maxima: Vec<T>,
}

impl<T: Real> DetuningSweep<T> {
    /// Largest-magnitude maximum on each side of resonance, if present.
    pub fn outer_maxima(&self) -> (Option<T>, Option<T>) {
        let lo = self.maxima.iter().copied().find(|d| *d < T::zero());
        let hi = self.maxima.iter().copied().rev().find(|d| *d > T::zero());
        (lo, hi)
    }

    /// CSV with header `delta_rad_per_s,value,W2_per_Hz`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_curve_csv(
            writer,
            "delta_rad_per_s",
            Unit::Power,
            None,
            &self.detunings,
            &self.values,
        )
    }
}

/// Evaluates [`transduced_power_psd`] across `detunings` at fixed `omega`.
pub fn detuning_sweep<T: Real>(
    cavity: &CavityParams<T>,
    power: T,
    omega: T,
    s_omega_omega: T,
    detunings: &[T],
) -> Result<DetuningSweep<T>> {
    if detunings.is_empty() {
        return Err(Error::InvalidParameter {
            name: "detuning grid",
            reason: "must not be empty".into(),
        });
    }
    let values = detunings
        .iter()
        .map(|d| {
            let drive = DriveParams::new(power, *d)?;
            Ok(transduced_power_psd(cavity, &drive, omega, s_omega_omega))
        })
        .collect::<Result<Vec<T>>>()?;
    let maxima = values
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] && w[1] >= w[2] && w[1] > T::zero())
        .map(|(i, _)| detunings[i + 1])
        .collect();
    Ok(DetuningSweep {
        detunings: detunings.to_vec(),
        values,
        maxima,
    })
}
