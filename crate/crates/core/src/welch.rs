//! Welch PSD estimation: Hann-windowed, overlapped, mean-removed segments.
//!
//! The estimate is double-sided and reported on the non-negative bins
//! `f_k = k·fs/N`, `k = 0..=N/2`. Normalizing each periodogram by
//! `fs·Σw²` compensates the window power gain, so the estimator integrates
//! to the signal variance and a sinusoid of amplitude `A` deposits `A²/4`
//! of area around its frequency.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{ensure_positive, Error, Result};
use crate::scalar::{from_usize, Real};
use crate::spectra::{FrequencyGrid, SpectrumTrace, Unit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchConfig {
    segment_length: usize,
    overlap: f64,
}

impl WelchConfig {
    /// Hann window with the given overlap fraction in `[0, 1)`.
    pub fn new(segment_length: usize, overlap: f64) -> Result<Self> {
        if segment_length < 4 || !segment_length.is_power_of_two() {
            return Err(Error::InvalidParameter {
                name: "segment_length",
                reason: format!("must be a power of two >= 4, got {segment_length}"),
            });
        }
        if !(0.0..1.0).contains(&overlap) {
            return Err(Error::InvalidParameter {
                name: "overlap",
                reason: format!("must lie in [0, 1), got {overlap}"),
            });
        }
        Ok(Self {
            segment_length,
            overlap,
        })
    }

    /// Half-overlapping Hann segments.
    pub fn hann(segment_length: usize) -> Result<Self> {
        Self::new(segment_length, 0.5)
    }

    pub fn segment_length(&self) -> usize {
        self.segment_length
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn step(&self) -> usize {
        let overlap = (self.segment_length as f64 * self.overlap).round() as usize;
        (self.segment_length - overlap).max(1)
    }

    /// Number of segments averaged for a record of `n` samples.
    pub fn segment_count(&self, n: usize) -> usize {
        if n < self.segment_length {
            0
        } else {
            (n - self.segment_length) / self.step() + 1
        }
    }

    /// Equivalent noise bandwidth of one bin, Hz.
    pub fn enbw<T: Real>(&self, sample_rate: T) -> T {
        let w = hann_window::<T>(self.segment_length);
        let s1: T = w.iter().copied().sum();
        let s2: T = w.iter().map(|x| *x * *x).sum();
        sample_rate * s2 / (s1 * s1)
    }
}

/// Periodic (DFT-even) Hann window.
pub fn hann_window<T: Real>(n: usize) -> Vec<T> {
    let n_t = from_usize::<T>(n);
    (0..n)
        .map(|j| {
            let x = T::two_pi() * from_usize::<T>(j) / n_t;
            T::lit(0.5) * (T::one() - x.cos())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelchEstimate<T> {
    pub trace: SpectrumTrace<T>,
    pub segments: usize,
    /// Spacing between adjacent bins, Hz.
    pub bin_width: T,
}

pub fn welch_psd<T: Real>(
    signal: &[T],
    sample_rate: T,
    config: &WelchConfig,
    unit: Unit,
) -> Result<WelchEstimate<T>> {
    ensure_positive("sample_rate", sample_rate.as_f64())?;
    let n = config.segment_length();
    let segments = config.segment_count(signal.len());
    if segments == 0 {
        return Err(Error::InvalidParameter {
            name: "signal",
            reason: format!("{} samples shorter than one segment of {n}", signal.len()),
        });
    }
    let window = hann_window::<T>(n);
    let w2: T = window.iter().map(|w| *w * *w).sum();
    let fft = FftPlanner::<T>::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    let half = n / 2;
    let mut acc = vec![T::zero(); half + 1];
    let n_t = from_usize::<T>(n);

    for seg in 0..segments {
        let chunk = &signal[seg * config.step()..seg * config.step() + n];
        let mean = chunk.iter().copied().sum::<T>() / n_t;
        for ((b, x), w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex::new((*x - mean) * *w, T::zero());
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a = *a + b.norm_sqr();
        }
    }

    let norm = T::one() / (from_usize::<T>(segments) * sample_rate * w2);
    let bin_width = sample_rate / n_t;
    let omegas = (0..=half)
        .map(|k| T::two_pi() * bin_width * from_usize(k))
        .collect();
    let values = acc.into_iter().map(|a| a * norm).collect();
    let trace = SpectrumTrace::new(FrequencyGrid::from_values(omegas)?, values, unit)?
        .with_rbw(config.enbw(sample_rate))?;
    Ok(WelchEstimate {
        trace,
        segments,
        bin_width,
    })
}

/// Two-sided integral `∫S df` of a non-negative-bin Welch trace: DC and
/// Nyquist bins count once, interior bins twice.
pub fn integrate_two_sided<T: Real>(estimate: &WelchEstimate<T>) -> T {
    let v = estimate.trace.values();
    let last = v.len() - 1;
    let interior: T = v[1..last].iter().copied().sum();
    (v[0] + v[last] + T::lit(2.0) * interior) * estimate.bin_width
}
