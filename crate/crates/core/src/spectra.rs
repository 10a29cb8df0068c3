//! Spectral bookkeeping: frequency grids, PSD traces, unit tags and the
//! phase/frequency noise conversions.
//!
//! Conventions used throughout the crate:
//!
//! * frequencies are angular (rad/s);
//! * every PSD is symmetrized and double-sided, normalized per ordinary
//!   hertz, so a real stationary signal `x` satisfies
//!   `var(x) = ∫_{-∞}^{∞} S(f) df = 2 ∫_0^∞ S(f) df`;
//! * frequency noise `S_ωω` therefore carries units rad²·Hz and phase noise
//!   `S_φφ` units rad²/Hz.

use std::fmt;
use std::io::{BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::scalar::{from_usize, Real};

/// CODATA 2018 exact and recommended values.
pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical constants in the working scalar type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants<T> {
    /// Reduced Planck constant, J·s.
    pub hbar: T,
    /// Boltzmann constant, J/K.
    pub k_b: T,
    /// Speed of light in vacuum, m/s.
    pub c: T,
}

impl<T: Real> PhysicalConstants<T> {
    pub fn codata2018() -> Self {
        Self {
            hbar: T::lit(HBAR),
            k_b: T::lit(BOLTZMANN),
            c: T::lit(SPEED_OF_LIGHT),
        }
    }
}

/// Optical angular frequency `2πc/λ` for a vacuum wavelength in metres.
pub fn optical_angular_frequency<T: Real>(wavelength_m: T) -> Result<T> {
    ensure_positive("wavelength", wavelength_m.as_f64())?;
    let c = PhysicalConstants::<T>::codata2018().c;
    Ok(T::two_pi() * c / wavelength_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Linear,
    Logarithmic,
    Irregular,
}

/// Strictly increasing, non-negative angular frequencies (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid<T> {
    values: Vec<T>,
    kind: GridKind,
}

impl<T: Real> FrequencyGrid<T> {
    /// Wraps arbitrary sample points; they must be finite, non-negative,
    /// strictly increasing and at least two.
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        Self::with_kind(values, GridKind::Irregular)
    }

    fn with_kind(values: Vec<T>, kind: GridKind) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < T::zero() {
                return Err(Error::InvalidGrid(format!(
                    "point {i} is {v}; points must be finite and >= 0"
                )));
            }
        }
        if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self { values, kind })
    }

    /// `n` equally spaced points from `start` to `stop` inclusive.
    pub fn linear(start: T, stop: T, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {n}"
            )));
        }
        let step = (stop - start) / from_usize::<T>(n - 1);
        let values = (0..n)
            .map(|i| {
                if i == n - 1 {
                    stop
                } else {
                    start + step * from_usize(i)
                }
            })
            .collect();
        Self::with_kind(values, GridKind::Linear)
    }

    /// `n` geometrically spaced points from `start` to `stop` inclusive; `start > 0`.
    pub fn logarithmic(start: T, stop: T, n: usize) -> Result<Self> {
        if start <= T::zero() {
            return Err(Error::InvalidGrid(
                "logarithmic grid must start above 0".into(),
            ));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {n}"
            )));
        }
        let (l0, l1) = (start.ln(), stop.ln());
        let step = (l1 - l0) / from_usize::<T>(n - 1);
        let values = (0..n)
            .map(|i| match i {
                0 => start,
                _ if i == n - 1 => stop,
                _ => (l0 + step * from_usize(i)).exp(),
            })
            .collect();
        Self::with_kind(values, GridKind::Logarithmic)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// Index of the grid point closest to `omega`.
    pub fn nearest_index(&self, omega: T) -> usize {
        let idx = self.values.partition_point(|v| *v < omega);
        if idx == 0 {
            0
        } else if idx >= self.values.len() {
            self.values.len() - 1
        } else if (omega - self.values[idx - 1]) <= (self.values[idx] - omega) {
            idx - 1
        } else {
            idx
        }
    }
}

/// Physical unit carried by a [`SpectrumTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Frequency noise `S_ωω`, rad²·Hz.
    FrequencyNoise,
    /// Phase noise `S_φφ`, rad²/Hz.
    PhaseNoise,
    /// Detected optical power noise, W²/Hz.
    Power,
    /// Photocurrent noise, A²/Hz.
    Photocurrent,
}

impl Unit {
    /// Token used in CSV headers and manifests.
    pub fn token(self) -> &'static str {
        match self {
            Unit::FrequencyNoise => "rad2_Hz",
            Unit::PhaseNoise => "rad2_per_Hz",
            Unit::Power => "W2_per_Hz",
            Unit::Photocurrent => "A2_per_Hz",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        [
            Unit::FrequencyNoise,
            Unit::PhaseNoise,
            Unit::Power,
            Unit::Photocurrent,
        ]
        .into_iter()
        .find(|u| u.token() == token)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Unit::FrequencyNoise => "rad^2 Hz",
            Unit::PhaseNoise => "rad^2/Hz",
            Unit::Power => "W^2/Hz",
            Unit::Photocurrent => "A^2/Hz",
        };
        f.write_str(s)
    }
}

/// PSD samples over a frequency grid, with an explicit unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace<T> {
    grid: FrequencyGrid<T>,
    values: Vec<T>,
    unit: Unit,
    rbw: Option<T>,
}

impl<T: Real> SpectrumTrace<T> {
    pub fn new(grid: FrequencyGrid<T>, values: Vec<T>, unit: Unit) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::LengthMismatch {
                grid: grid.len(),
                values: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < T::zero()) {
            return Err(Error::Format(format!(
                "PSD values must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self {
            grid,
            values,
            unit,
            rbw: None,
        })
    }

    /// Records the resolution bandwidth (Hz) of the estimator that produced the trace.
    pub fn with_rbw(mut self, rbw_hz: T) -> Result<Self> {
        ensure_positive("rbw", rbw_hz.as_f64())?;
        self.rbw = Some(rbw_hz);
        Ok(self)
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn omegas(&self) -> &[T] {
        self.grid.values()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn rbw(&self) -> Option<T> {
        self.rbw
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multiplies every sample by a non-negative factor, keeping grid, unit and rbw.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        crate::error::ensure_non_negative("scale factor", factor.as_f64())?;
        Ok(Self {
            values: self.values.iter().map(|v| *v * factor).collect(),
            ..self.clone()
        })
    }

    pub(crate) fn map_values(&self, unit: Unit, f: impl Fn(T, T) -> T) -> Result<Self> {
        let values = self
            .grid
            .values()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| f(*w, *v))
            .collect();
        let mut out = Self::new(self.grid.clone(), values, unit)?;
        out.rbw = self.rbw;
        Ok(out)
    }

    fn require_unit(&self, expected: Unit) -> Result<()> {
        if self.unit != expected {
            return Err(Error::UnitMismatch {
                expected,
                found: self.unit,
            });
        }
        Ok(())
    }

    /// Writes the trace as CSV with header `omega_rad_per_s,value,<unit token>`.
    /// An `rbw` is written as a leading `# rbw_hz=` comment line.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_curve_csv(
            writer,
            "omega_rad_per_s",
            self.unit,
            self.rbw,
            self.grid.values(),
            &self.values,
        )
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (axis, unit, rbw, xs, ys) = read_curve_csv::<T, R>(reader)?;
        if axis != "omega_rad_per_s" {
            return Err(Error::Format(format!(
                "expected first column omega_rad_per_s, found {axis}"
            )));
        }
        let trace = Self::new(FrequencyGrid::from_values(xs)?, ys, unit)?;
        match rbw {
            Some(r) => trace.with_rbw(r),
            None => Ok(trace),
        }
    }
}

fn format_sci<T: Real>(x: T) -> String {
    format!("{:e}", x.as_f64())
}

pub(crate) fn write_curve_csv<T: Real, W: Write>(
    writer: W,
    axis: &str,
    unit: Unit,
    rbw: Option<T>,
    xs: &[T],
    ys: &[T],
) -> Result<()> {
    let mut writer = writer;
    if let Some(r) = rbw {
        writeln!(writer, "# rbw_hz={}", format_sci(r))?;
    }
    let mut csv = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    csv.write_record([axis, "value", unit.token()])?;
    for (x, y) in xs.iter().zip(ys) {
        csv.write_record([format_sci(*x), format_sci(*y)])?;
    }
    csv.flush()?;
    Ok(())
}

type Curve<T> = (String, Unit, Option<T>, Vec<T>, Vec<T>);

pub(crate) fn read_curve_csv<T: Real, R: Read>(reader: R) -> Result<Curve<T>> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let mut rbw = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(v) = line.trim_start_matches('#').trim().strip_prefix("rbw_hz=") {
            let r: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad rbw value {v:?}")))?;
            rbw = Some(T::lit(r));
        }
    }
    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = csv.headers()?.clone();
    if headers.len() != 3 || &headers[1] != "value" {
        return Err(Error::Format(format!(
            "expected header `<axis>,value,<unit>`, found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let unit = Unit::from_token(&headers[2])
        .ok_or_else(|| Error::Format(format!("unknown unit token {:?}", &headers[2])))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for record in csv.records() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Format(format!("short row {record:?}")));
        }
        let parse = |s: &str| -> Result<T> {
            s.trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|_| Error::Format(format!("not a number: {s:?}")))
        };
        xs.push(parse(&record[0])?);
        ys.push(parse(&record[1])?);
    }
    Ok((headers[0].to_string(), unit, rbw, xs, ys))
}

/// `S_ωω(Ω) = S_φφ(Ω)·Ω²`.
pub fn phase_to_frequency_psd<T: Real>(trace: &SpectrumTrace<T>) -> Result<SpectrumTrace<T>> {
    trace.require_unit(Unit::PhaseNoise)?;
    trace.map_values(Unit::FrequencyNoise, |w, s| s * w * w)
}

/// `S_φφ(Ω) = S_ωω(Ω)/Ω²`; rejects grids containing Ω = 0.
pub fn frequency_to_phase_psd<T: Real>(trace: &SpectrumTrace<T>) -> Result<SpectrumTrace<T>> {
    trace.require_unit(Unit::FrequencyNoise)?;
    if let Some(index) = trace.omegas().iter().position(|w| *w == T::zero()) {
        return Err(Error::ZeroFrequency { index });
    }
    trace.map_values(Unit::PhaseNoise, |w, s| s / (w * w))
}

/// Shot-noise phase PSD `ħω/(4P)` of a coherent beam of power `power` (W),
/// independent of analysis frequency.
pub fn quantum_limit_phase_psd<T: Real>(power: T, omega_optical: T) -> Result<T> {
    ensure_positive("power", power.as_f64())?;
    ensure_positive("optical angular frequency", omega_optical.as_f64())?;
    let hbar = PhysicalConstants::<T>::codata2018().hbar;
    Ok(hbar * omega_optical / (T::lit(4.0) * power))
}

/// Excess of a frequency-noise level over the quantum phase-noise limit, in dB.
pub fn db_above_quantum_limit<T: Real>(
    s_omega_omega: T,
    omega: T,
    power: T,
    omega_optical: T,
) -> Result<T> {
    ensure_positive("frequency-noise PSD", s_omega_omega.as_f64())?;
    ensure_positive("analysis frequency", omega.as_f64())?;
    let limit = quantum_limit_phase_psd(power, omega_optical)?;
    let phase = s_omega_omega / (omega * omega);
    Ok(T::lit(10.0) * (phase / limit).log10())
}
