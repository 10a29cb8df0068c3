//! Resolved-sideband cooling budget in the presence of laser frequency noise.
//!
//! All rates are energy rates in rad/s. With `a = ηP/(ħωΩ_m²)` the budget
//! reduces to `n_f(P) = n̄_th·Γ_m/(4g₀²a) + a·S_ωω(Ω_m)`, whose minimum over
//! power is `√(n̄_th·Γ_m·S_ωω/g₀²)`; ground-state cooling then needs
//! `S_ωω(Ω_m) < g₀²/γ` with `γ = n̄_th·Γ_m = k_B·T/(ħ·Q_m)`.

use log::warn;
use serde::Serialize;

use crate::cavity_transduction::CavityParams;
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::noise_models::NoiseModel;
use crate::scalar::Real;
use crate::spectra::PhysicalConstants;

/// κ/Ω_m above which the resolved-sideband formulas are flagged.
pub const RESOLVED_SIDEBAND_LIMIT: f64 = 0.5;

/// Relative agreement required between the closed-form and numerical optimum.
pub const OPTIMUM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping<T> {
    /// Energy dissipation rate Γ_m, rad/s.
    Rate(T),
    /// Quality factor Q_m = Ω_m/Γ_m.
    Quality(T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling<T> {
    /// Vacuum coupling rate g₀, rad/s.
    Vacuum(T),
    /// Frequency pull G = ∂ω_c/∂x, rad/s/m. Needs the effective mass.
    FrequencyPull(T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanicsParams<T> {
    omega_m: T,
    gamma_m: T,
    temperature: T,
    g0: T,
    frequency_pull: Option<T>,
    m_eff: Option<T>,
}

impl<T: Real> MechanicsParams<T> {
    /// Whichever of g₀ or G is given, the other is derived through
    /// `g₀ = G·√(ħ/2m_effΩ_m)` when the effective mass is known.
    pub fn new(
        omega_m: T,
        damping: Damping<T>,
        temperature: T,
        coupling: Coupling<T>,
        m_eff: Option<T>,
    ) -> Result<Self> {
        ensure_positive("mechanical frequency", omega_m.as_f64())?;
        ensure_non_negative("temperature", temperature.as_f64())?;
        let gamma_m = match damping {
            Damping::Rate(g) => {
                ensure_positive("mechanical damping rate", g.as_f64())?;
                g
            }
            Damping::Quality(q) => {
                ensure_positive("mechanical quality factor", q.as_f64())?;
                omega_m / q
            }
        };
        if let Some(m) = m_eff {
            ensure_positive("effective mass", m.as_f64())?;
        }
        let hbar = PhysicalConstants::<T>::codata2018().hbar;
        let zpf = |m: T| (hbar / (T::lit(2.0) * m * omega_m)).sqrt();
        let (g0, frequency_pull) = match coupling {
            Coupling::Vacuum(g0) => {
                ensure_positive("g0", g0.as_f64())?;
                (g0, m_eff.map(|m| g0 / zpf(m)))
            }
            Coupling::FrequencyPull(g) => {
                ensure_positive("frequency pull G", g.as_f64())?;
                let m = m_eff.ok_or(Error::MissingEffectiveMass("deriving g0 from G"))?;
                (g * zpf(m), Some(g))
            }
        };
        Ok(Self {
            omega_m,
            gamma_m,
            temperature,
            g0,
            frequency_pull,
            m_eff,
        })
    }

    pub fn omega_m(&self) -> T {
        self.omega_m
    }

    pub fn gamma_m(&self) -> T {
        self.gamma_m
    }

    pub fn quality_factor(&self) -> T {
        self.omega_m / self.gamma_m
    }

    pub fn temperature(&self) -> T {
        self.temperature
    }

    pub fn g0(&self) -> T {
        self.g0
    }

    pub fn frequency_pull(&self) -> Option<T> {
        self.frequency_pull
    }

    pub fn m_eff(&self) -> Option<T> {
        self.m_eff
    }
}

/// Thermal phonon number `k_B·T/(ħΩ_m)` (high-temperature limit).
pub fn thermal_occupancy<T: Real>(temperature: T, omega_m: T) -> T {
    let k = PhysicalConstants::<T>::codata2018();
    k.k_b * temperature / (k.hbar * omega_m)
}

pub fn is_resolved_sideband<T: Real>(kappa: T, omega_m: T) -> bool {
    kappa / omega_m <= T::lit(RESOLVED_SIDEBAND_LIMIT)
}

/// Quantum backaction floor `κ²/(16Ω_m²)`.
pub fn backaction_limit<T: Real>(kappa: T, omega_m: T) -> T {
    if !is_resolved_sideband(kappa, omega_m) {
        warn!(
            "kappa/Omega_m = {} exceeds {RESOLVED_SIDEBAND_LIMIT}; resolved-sideband formulas are outside their validity",
            kappa / omega_m
        );
    }
    kappa * kappa / (T::lit(16.0) * omega_m * omega_m)
}

/// Radiation-pressure force noise `4η²G²P²/(ω²Ω²)·S_ωω/Ω²`, N²/Hz.
pub fn force_noise_psd<T: Real>(
    mech: &MechanicsParams<T>,
    eta: T,
    power: T,
    omega_optical: T,
    omega: T,
    s_omega_omega: T,
) -> Result<T> {
    if omega == T::zero() {
        return Err(Error::ZeroFrequency { index: 0 });
    }
    let g = mech
        .frequency_pull()
        .ok_or(Error::MissingEffectiveMass("the absolute force noise"))?;
    let w2 = omega * omega;
    Ok(
        T::lit(4.0) * eta * eta * g * g * power * power / (omega_optical * omega_optical * w2)
            * s_omega_omega
            / w2,
    )
}

/// Optical damping `2ηG²P/(m_eff Ω_m³ ω)`, evaluated as `4ηg₀²P/(ħΩ_m²ω)` so
/// that it needs no effective mass.
pub fn cooling_rate<T: Real>(mech: &MechanicsParams<T>, eta: T, power: T, omega_optical: T) -> T {
    let hbar = PhysicalConstants::<T>::codata2018().hbar;
    let wm = mech.omega_m();
    T::lit(4.0) * eta * mech.g0() * mech.g0() * power / (hbar * wm * wm * omega_optical)
}

/// Mean intracavity photon number `ηκP/(ħωΩ_m²)` at the red sideband.
pub fn intracavity_photons<T: Real>(eta: T, kappa: T, power: T, omega_optical: T, omega_m: T) -> T {
    let hbar = PhysicalConstants::<T>::codata2018().hbar;
    eta * kappa * power / (hbar * omega_optical * omega_m * omega_m)
}

/// Phonons added by frequency noise: `n̄_p·S_ωω(Ω_m)/κ`.
pub fn excess_occupancy<T: Real>(n_photons: T, kappa: T, s_at_omega_m: T) -> T {
    n_photons * s_at_omega_m / kappa
}

/// Effective occupancy of the laser bath `S_FF/(2m_effΓ_mħΩ_m)`.
pub fn laser_bath_occupancy<T: Real>(mech: &MechanicsParams<T>, s_ff: T) -> Result<T> {
    let m = mech
        .m_eff()
        .ok_or(Error::MissingEffectiveMass("the laser bath occupancy"))?;
    let hbar = PhysicalConstants::<T>::codata2018().hbar;
    Ok(s_ff / (T::lit(2.0) * m * mech.gamma_m() * hbar * mech.omega_m()))
}

/// `n_f(P) = n̄_th·Γ_m/Γ_cool + n̄_p·S_ωω/κ`, plus the backaction floor when requested.
pub fn final_occupancy<T: Real>(
    mech: &MechanicsParams<T>,
    cavity: &CavityParams<T>,
    power: T,
    s_at_omega_m: T,
    include_backaction: bool,
) -> Result<T> {
    ensure_non_negative("power", power.as_f64())?;
    ensure_non_negative("frequency noise", s_at_omega_m.as_f64())?;
    if power == T::zero() {
        return Err(Error::NoCooling);
    }
    let w = cavity.omega_optical();
    let n_th = thermal_occupancy(mech.temperature(), mech.omega_m());
    let gamma_cool = cooling_rate(mech, cavity.eta(), power, w);
    let n_p = intracavity_photons(cavity.eta(), cavity.kappa(), power, w, mech.omega_m());
    let mut n =
        n_th * mech.gamma_m() / gamma_cool + excess_occupancy(n_p, cavity.kappa(), s_at_omega_m);
    if include_backaction {
        n = n + backaction_limit(cavity.kappa(), mech.omega_m());
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateCondition<T> {
    /// Largest tolerable `S_ωω(Ω_m)`, rad²·Hz.
    pub threshold: T,
    /// Thermal decoherence rate `k_B·T/(ħQ_m)`, rad/s.
    pub gamma: T,
}

pub fn ground_state_condition<T: Real>(mech: &MechanicsParams<T>) -> GroundStateCondition<T> {
    let k = PhysicalConstants::<T>::codata2018();
    let gamma = k.k_b * mech.temperature() / (k.hbar * mech.quality_factor());
    GroundStateCondition {
        threshold: mech.g0() * mech.g0() / gamma,
        gamma,
    }
}

/// Closed-form minimum `√(n̄_th·Γ_m·S_ωω/g₀²)` (no backaction).
pub fn minimum_occupancy_closed_form<T: Real>(mech: &MechanicsParams<T>, s_at_omega_m: T) -> T {
    let n_th = thermal_occupancy(mech.temperature(), mech.omega_m());
    (n_th * mech.gamma_m() * s_at_omega_m / (mech.g0() * mech.g0())).sqrt()
}

/// Power at which thermal and noise-induced occupancies balance.
pub fn balance_power<T: Real>(
    mech: &MechanicsParams<T>,
    cavity: &CavityParams<T>,
    s_at_omega_m: T,
) -> T {
    let hbar = PhysicalConstants::<T>::codata2018().hbar;
    let n_th = thermal_occupancy(mech.temperature(), mech.omega_m());
    let a = (n_th * mech.gamma_m() / (T::lit(4.0) * mech.g0() * mech.g0() * s_at_omega_m)).sqrt();
    a * hbar * cavity.omega_optical() * mech.omega_m() * mech.omega_m() / cavity.eta()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPower<T> {
    /// Numerically optimal input power, W.
    pub power: T,
    /// Minimum of `n_f(P)` found by golden-section search (no backaction).
    pub n_min_numeric: T,
    /// Closed-form minimum (no backaction).
    pub n_min_closed_form: T,
}

/// Golden-section minimization of `f` over `[lo, hi]`, returning `(x, f(x))`.
pub fn golden_section<T: Real>(
    f: impl Fn(T) -> T,
    lo: T,
    hi: T,
    rel_tol: T,
    max_iter: usize,
) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..max_iter {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimizes `n_f(P)` (backaction excluded) over log-power, bracketed two
/// decades either side of the balance point, and cross-checks the closed form.
pub fn optimal_power<T: Real>(
    mech: &MechanicsParams<T>,
    cavity: &CavityParams<T>,
    s_at_omega_m: T,
) -> Result<OptimalPower<T>> {
    ensure_positive("frequency noise at Omega_m", s_at_omega_m.as_f64())?;
    let p_bal = balance_power(mech, cavity, s_at_omega_m);
    let ln_bal = p_bal.ln();
    let span = T::lit(100.0).ln();
    let n_f = |ln_p: T| {
        final_occupancy(mech, cavity, ln_p.exp(), s_at_omega_m, false).unwrap_or(T::infinity())
    };
    let tol = T::lit(4.0) * T::epsilon().sqrt();
    let (ln_p, n_min) = golden_section(n_f, ln_bal - span, ln_bal + span, tol, 200);
    let closed = minimum_occupancy_closed_form(mech, s_at_omega_m);
    let relative = ((n_min - closed) / closed).abs();
    if !(relative <= T::lit(OPTIMUM_TOLERANCE)) {
        return Err(Error::Inconsistent {
            closed_form: closed.as_f64(),
            numeric: n_min.as_f64(),
            relative: relative.as_f64(),
        });
    }
    Ok(OptimalPower {
        power: ln_p.exp(),
        n_min_numeric: n_min,
        n_min_closed_form: closed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerChoice<T> {
    Fixed(T),
    Optimize,
}

/// Aggregated budget. Serialized keys carry their SI unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoolingBudgetReport<T> {
    #[serde(rename = "n_th")]
    pub n_th: T,
    #[serde(rename = "power_w")]
    pub power: T,
    #[serde(rename = "n_photons")]
    pub n_photons: T,
    #[serde(rename = "gamma_cool_rad_per_s")]
    pub gamma_cool: T,
    #[serde(rename = "gamma_m_rad_per_s")]
    pub gamma_m: T,
    #[serde(rename = "s_ff_laser_n2_per_hz")]
    pub s_ff_laser: Option<T>,
    #[serde(rename = "n_laser_bath")]
    pub n_laser_bath: Option<T>,
    #[serde(rename = "n_excess")]
    pub n_excess: T,
    #[serde(rename = "n_final")]
    pub n_final: T,
    #[serde(rename = "optimal_power_w")]
    pub optimal_power: Option<T>,
    #[serde(rename = "n_final_min")]
    pub n_final_min: T,
    #[serde(rename = "n_backaction")]
    pub n_backaction: T,
    #[serde(rename = "s_omega_omega_at_omega_m_rad2_hz")]
    pub s_at_omega_m: T,
    #[serde(rename = "s_omega_omega_threshold_rad2_hz")]
    pub s_threshold: T,
    #[serde(rename = "gamma_decoherence_rad_per_s")]
    pub gamma_decoherence: T,
    #[serde(rename = "backaction_included")]
    pub backaction_included: bool,
    #[serde(rename = "resolved_sideband")]
    pub resolved_sideband: bool,
    #[serde(rename = "feasible")]
    pub feasible: bool,
}

pub fn budget_report<T: Real>(
    mech: &MechanicsParams<T>,
    cavity: &CavityParams<T>,
    power: PowerChoice<T>,
    laser: &NoiseModel<T>,
    include_backaction: bool,
) -> Result<CoolingBudgetReport<T>> {
    let wm = mech.omega_m();
    let s = laser.eval(wm)?;
    let condition = ground_state_condition(mech);
    let n_ba = backaction_limit(cavity.kappa(), wm);
    let ba = if include_backaction { n_ba } else { T::zero() };

    let optimum = if s > T::zero() {
        Some(optimal_power(mech, cavity, s)?)
    } else {
        None
    };
    let n_final_min = match optimum {
        Some(o) => o.n_min_closed_form + ba,
        None => ba,
    };
    let p = match power {
        PowerChoice::Fixed(p) => {
            ensure_positive("power", p.as_f64())?;
            p
        }
        PowerChoice::Optimize => match optimum {
            Some(o) => o.power,
            None => {
                return Err(Error::InvalidParameter {
                    name: "power",
                    reason: "no finite optimum without frequency noise; give a fixed power".into(),
                })
            }
        },
    };
    let w = cavity.omega_optical();
    let eta = cavity.eta();
    let n_photons = intracavity_photons(eta, cavity.kappa(), p, w, wm);
    let s_ff_laser = match mech.frequency_pull() {
        Some(_) => Some(force_noise_psd(mech, eta, p, w, wm, s)?),
        None => None,
    };
    let n_laser_bath = s_ff_laser
        .map(|sff| laser_bath_occupancy(mech, sff))
        .transpose()?;
    Ok(CoolingBudgetReport {
        n_th: thermal_occupancy(mech.temperature(), wm),
        power: p,
        n_photons,
        gamma_cool: cooling_rate(mech, eta, p, w),
        gamma_m: mech.gamma_m(),
        s_ff_laser,
        n_laser_bath,
        n_excess: excess_occupancy(n_photons, cavity.kappa(), s),
        n_final: final_occupancy(mech, cavity, p, s, include_backaction)?,
        optimal_power: optimum.map(|o| o.power),
        n_final_min,
        n_backaction: n_ba,
        s_at_omega_m: s,
        s_threshold: condition.threshold,
        gamma_decoherence: condition.gamma,
        backaction_included: include_backaction,
        resolved_sideband: is_resolved_sideband(cavity.kappa(), wm),
        feasible: s < condition.threshold,
    })
}

/// Reference nanobeam parameters: g₀/2π = 0.91 MHz, Ω_m/2π = 3.68 GHz,
/// Q_m = 5·10⁴, T = 30 K, optional m_eff = 311 fg.
pub fn nanobeam_reference<T: Real>(with_mass: bool) -> MechanicsParams<T> {
    let two_pi = T::two_pi();
    MechanicsParams::new(
        two_pi * T::lit(3.68e9),
        Damping::Quality(T::lit(5.0e4)),
        T::lit(30.0),
        Coupling::Vacuum(two_pi * T::lit(0.91e6)),
        with_mass.then(|| T::lit(311e-18)),
    )
    .expect("reference parameters are valid")
}
