//! Laser frequency-noise models, evaluated to `S_ωω(Ω)` in rad²·Hz.

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::scalar::Real;
use crate::spectra::{FrequencyGrid, SpectrumTrace, Unit};

/// Exponentially correlated frequency noise: `S_ωω = 2Γ_L γ_c²/(Ω² + γ_c²)`.
///
/// `linewidth` (Γ_L) and `correlation_rate` (γ_c) are both in rad/s. A laser
/// quoted with a "300 kHz linewidth" is entered as `Γ_L = 2π·300e3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPassNoiseModel<T> {
    linewidth: T,
    correlation_rate: T,
}

impl<T: Real> LowPassNoiseModel<T> {
    pub fn new(linewidth: T, correlation_rate: T) -> Result<Self> {
        ensure_non_negative("linewidth", linewidth.as_f64())?;
        ensure_positive("correlation rate", correlation_rate.as_f64())?;
        Ok(Self {
            linewidth,
            correlation_rate,
        })
    }

    pub fn linewidth(&self) -> T {
        self.linewidth
    }

    pub fn correlation_rate(&self) -> T {
        self.correlation_rate
    }

    pub fn eval(&self, omega: T) -> T {
        let g2 = self.correlation_rate * self.correlation_rate;
        T::lit(2.0) * self.linewidth * g2 / (omega * omega + g2)
    }
}

/// Symmetric Lorentzian excess peak standing in for the diode laser's
/// relaxation-oscillation noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationOscillationModel<T> {
    peak: T,
    center: T,
    fwhm: T,
}

impl<T: Real> RelaxationOscillationModel<T> {
    /// `peak` in rad²·Hz; `center` and `fwhm` in rad/s.
    pub fn new(peak: T, center: T, fwhm: T) -> Result<Self> {
        ensure_positive("peak level", peak.as_f64())?;
        ensure_positive("peak center", center.as_f64())?;
        ensure_positive("peak width", fwhm.as_f64())?;
        Ok(Self { peak, center, fwhm })
    }

    /// Level and position observed on external-cavity diode lasers at 1550 nm:
    /// 1.6e7 rad²·Hz at 2π·3.5 GHz. The 2π·1 GHz width is an estimate read off
    /// the published spectra, not a measured parameter.
    pub fn measured_ecdl() -> Self {
        let two_pi = T::two_pi();
        Self {
            peak: T::lit(1.6e7),
            center: two_pi * T::lit(3.5e9),
            fwhm: two_pi * T::lit(1.0e9),
        }
    }

    pub fn peak(&self) -> T {
        self.peak
    }

    pub fn center(&self) -> T {
        self.center
    }

    pub fn fwhm(&self) -> T {
        self.fwhm
    }

    pub fn eval(&self, omega: T) -> T {
        let hw = self.fwhm / T::lit(2.0);
        let x = (omega - self.center) / hw;
        self.peak / (T::one() + x * x)
    }
}

/// Measured spectrum interpolated linearly in log-log coordinates.
///
/// Queries outside the tabulated range are errors; zero-valued knots are
/// interpolated linearly since their logarithm is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedNoiseModel<T> {
    trace: SpectrumTrace<T>,
}

impl<T: Real> TabulatedNoiseModel<T> {
    pub fn new(trace: SpectrumTrace<T>) -> Result<Self> {
        if trace.unit() != Unit::FrequencyNoise {
            return Err(Error::UnitMismatch {
                expected: Unit::FrequencyNoise,
                found: trace.unit(),
            });
        }
        Ok(Self { trace })
    }

    pub fn trace(&self) -> &SpectrumTrace<T> {
        &self.trace
    }

    pub fn eval(&self, omega: T) -> Result<T> {
        let xs = self.trace.omegas();
        let ys = self.trace.values();
        let (min, max) = (xs[0], xs[xs.len() - 1]);
        if !(omega >= min && omega <= max) {
            return Err(Error::OutOfRange {
                omega: omega.as_f64(),
                min: min.as_f64(),
                max: max.as_f64(),
            });
        }
        let hi = xs.partition_point(|x| *x < omega);
        if xs[hi] == omega {
            return Ok(ys[hi]);
        }
        let lo = hi - 1;
        let (x0, x1, y0, y1) = (xs[lo], xs[hi], ys[lo], ys[hi]);
        if x0 > T::zero() && y0 > T::zero() && y1 > T::zero() {
            let t = (omega.ln() - x0.ln()) / (x1.ln() - x0.ln());
            Ok((y0.ln() + t * (y1.ln() - y0.ln())).exp())
        } else {
            let t = (omega - x0) / (x1 - x0);
            Ok(y0 + t * (y1 - y0))
        }
    }
}

/// Any supported frequency-noise model.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel<T> {
    /// Frequency-independent level in rad²·Hz.
    White(T),
    LowPass(LowPassNoiseModel<T>),
    Relaxation(RelaxationOscillationModel<T>),
    Tabulated(TabulatedNoiseModel<T>),
    /// Sum of independent contributions.
    Composite(Vec<NoiseModel<T>>),
}

impl<T: Real> NoiseModel<T> {
    pub fn white(level: T) -> Result<Self> {
        ensure_non_negative("white noise level", level.as_f64())?;
        Ok(Self::White(level))
    }

    pub fn zero() -> Self {
        Self::White(T::zero())
    }

    pub fn composite(components: Vec<NoiseModel<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter {
                name: "composite model",
                reason: "needs at least one component".into(),
            });
        }
        Ok(Self::Composite(components))
    }

    /// `S_ωω(Ω)` in rad²·Hz.
    pub fn eval(&self, omega: T) -> Result<T> {
        if !(omega >= T::zero()) {
            return Err(Error::Negative {
                name: "analysis frequency",
                value: omega.as_f64(),
            });
        }
        match self {
            NoiseModel::White(level) => Ok(*level),
            NoiseModel::LowPass(m) => Ok(m.eval(omega)),
            NoiseModel::Relaxation(m) => Ok(m.eval(omega)),
            NoiseModel::Tabulated(m) => m.eval(omega),
            NoiseModel::Composite(parts) => parts
                .iter()
                .try_fold(T::zero(), |acc, p| Ok(acc + p.eval(omega)?)),
        }
    }

    /// Evaluates the model on every grid point.
    pub fn eval_grid(&self, grid: &FrequencyGrid<T>) -> Result<SpectrumTrace<T>> {
        let values = grid
            .values()
            .iter()
            .map(|w| self.eval(*w))
            .collect::<Result<Vec<_>>>()?;
        SpectrumTrace::new(grid.clone(), values, Unit::FrequencyNoise)
    }
}

impl<T> From<LowPassNoiseModel<T>> for NoiseModel<T> {
    fn from(m: LowPassNoiseModel<T>) -> Self {
        Self::LowPass(m)
    }
}

impl<T> From<RelaxationOscillationModel<T>> for NoiseModel<T> {
    fn from(m: RelaxationOscillationModel<T>) -> Self {
        Self::Relaxation(m)
    }
}

impl<T> From<TabulatedNoiseModel<T>> for NoiseModel<T> {
    fn from(m: TabulatedNoiseModel<T>) -> Self {
        Self::Tabulated(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn lowpass_reference_points() {
        let m = LowPassNoiseModel::new(2.0 * PI * 300e3, 2.0 * PI * 1e6).unwrap();
        assert_relative_eq!(m.eval(0.0), 2.0 * m.linewidth());
        assert_relative_eq!(
            m.eval(m.correlation_rate()),
            m.linewidth(),
            max_relative = 1e-15
        );
        let wide = LowPassNoiseModel::new(m.linewidth(), 1e30).unwrap();
        assert_relative_eq!(wide.eval(1e9), 2.0 * m.linewidth(), max_relative = 1e-12);
    }

    #[test]
    fn lowpass_rejects_invalid() {
        assert!(LowPassNoiseModel::new(-1.0, 1.0).is_err());
        assert!(LowPassNoiseModel::new(1.0, 0.0).is_err());
        assert!(LowPassNoiseModel::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn relaxation_peak_shape() {
        let m = RelaxationOscillationModel::<f64>::measured_ecdl();
        assert_eq!(m.eval(m.center()), 1.6e7);
        assert_relative_eq!(
            m.eval(m.center() + m.fwhm() / 2.0),
            0.8e7,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            m.eval(m.center() - m.fwhm() / 2.0),
            0.8e7,
            max_relative = 1e-12
        );
        assert_relative_eq!(m.center(), 2.0 * PI * 3.5e9);
        assert!(RelaxationOscillationModel::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn composite_is_sum() {
        let w = NoiseModel::white(3.0).unwrap();
        let c = NoiseModel::composite(vec![w.clone(), w]).unwrap();
        for omega in [0.0, 1.0, 1e9] {
            assert_eq!(c.eval(omega).unwrap(), 6.0);
        }
        assert!(NoiseModel::<f64>::composite(vec![]).is_err());
    }

    fn two_point_table(s1: f64, s2: f64) -> TabulatedNoiseModel<f64> {
        let t = SpectrumTrace::new(
            FrequencyGrid::from_values(vec![1e3, 1e7]).unwrap(),
            vec![s1, s2],
            Unit::FrequencyNoise,
        )
        .unwrap();
        TabulatedNoiseModel::new(t).unwrap()
    }

    #[test]
    fn tabulated_knots_and_midpoint() {
        let m = two_point_table(4.0, 25.0);
        assert_eq!(m.eval(1e3).unwrap(), 4.0);
        assert_eq!(m.eval(1e7).unwrap(), 25.0);
        // geometric midpoint of the abscissae maps to geometric mean of the values
        assert_relative_eq!(m.eval(1e5).unwrap(), 10.0, max_relative = 1e-12);
    }

    #[test]
    fn tabulated_power_law_is_exact() {
        let xs: Vec<f64> = vec![1.0, 10.0, 1e3, 1e6];
        let ys = xs.iter().map(|x| 7.0 * x.powf(-1.5)).collect();
        let t = SpectrumTrace::new(
            FrequencyGrid::from_values(xs).unwrap(),
            ys,
            Unit::FrequencyNoise,
        )
        .unwrap();
        let m = TabulatedNoiseModel::new(t).unwrap();
        for x in [2.0, 33.0, 4e4, 9e5] {
            assert_relative_eq!(
                m.eval(x).unwrap(),
                7.0 * f64::powf(x, -1.5),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn tabulated_refuses_extrapolation() {
        let m: NoiseModel<f64> = two_point_table(1.0, 1.0).into();
        assert!(matches!(m.eval(999.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(m.eval(1.1e7), Err(Error::OutOfRange { .. })));
        let grid = FrequencyGrid::linear(0.0, 1e6, 10).unwrap();
        assert!(m.eval_grid(&grid).is_err());
    }

    #[test]
    fn tabulated_requires_frequency_noise_unit() {
        let t = SpectrumTrace::new(
            FrequencyGrid::from_values(vec![1.0, 2.0]).unwrap(),
            vec![1.0, 1.0],
            Unit::PhaseNoise,
        )
        .unwrap();
        assert!(TabulatedNoiseModel::new(t).is_err());
    }

    #[test]
    fn eval_grid_matches_pointwise() {
        let m: NoiseModel<f64> = RelaxationOscillationModel::measured_ecdl().into();
        let grid = FrequencyGrid::logarithmic(1e6, 1e11, 50).unwrap();
        let tr = m.eval_grid(&grid).unwrap();
        assert_eq!(tr.unit(), Unit::FrequencyNoise);
        for (w, v) in grid.values().iter().zip(tr.values()) {
            assert_eq!(*v, m.eval(*w).unwrap());
        }
    }

    proptest! {
        #[test]
        fn lowpass_monotone_and_non_negative(
            gl in 0.0f64..1e9, gc in 1e-3f64..1e12, a in 0.0f64..1e12, b in 0.0f64..1e12
        ) {
            let m = LowPassNoiseModel::new(gl, gc).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(m.eval(hi) <= m.eval(lo));
            prop_assert!(m.eval(hi) >= 0.0);
        }

        #[test]
        fn composite_linearity(
            gl in 0.0f64..1e6, gc in 1.0f64..1e9, p in 1.0f64..1e8, c in 1.0f64..1e10,
            f in 1.0f64..1e10, w in 0.0f64..1e3, omega in 0.0f64..1e11
        ) {
            let parts: Vec<NoiseModel<f64>> = vec![
                LowPassNoiseModel::new(gl, gc).unwrap().into(),
                RelaxationOscillationModel::new(p, c, f).unwrap().into(),
                NoiseModel::white(w).unwrap(),
            ];
            let sum: f64 = parts.iter().map(|m| m.eval(omega).unwrap()).sum();
            let total = NoiseModel::composite(parts).unwrap().eval(omega).unwrap();
            prop_assert!(total >= 0.0);
            prop_assert!((total - sum).abs() <= 1e-15 * sum.abs());
        }
    }
}
