//! Larmor power radiated by the avalanche charge, treated as a single
//! accelerating point charge. Diagnostic only: waveform synthesis uses a
//! configured amplitude rather than this power.

use crate::error::{Error, Module, Result};

/// Speed of light in cm/s, for the Gaussian (CGS) form of the Larmor formula.
pub const SPEED_OF_LIGHT_CGS: f64 = 2.997_924_58e10;

/// Statcoulombs per coulomb.
pub const STATCOULOMB_PER_COULOMB: f64 = 2.997_924_58e9;

/// Upper bound on v/c for the non-relativistic formula.
pub const MAX_SPEED_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitSystem {
    /// Charge in statcoulombs, acceleration in cm/s², power in erg/s.
    Gaussian,
    /// c = 1; every quantity dimensionless.
    Normalized,
}

impl UnitSystem {
    pub fn speed_of_light(self) -> f64 {
        match self {
            UnitSystem::Gaussian => SPEED_OF_LIGHT_CGS,
            UnitSystem::Normalized => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointChargeKinematics {
    pub charge: f64,
    pub acceleration: f64,
    pub speed_ratio: f64,
    pub units: UnitSystem,
}

impl PointChargeKinematics {
    /// Builds Gaussian-unit kinematics from an SI charge (e.g. the output of
    /// `discharge_charge`) and an acceleration in cm/s².
    pub fn from_si_charge(charge_coulombs: f64, acceleration_cgs: f64, speed_ratio: f64) -> Self {
        Self {
            charge: charge_coulombs * STATCOULOMB_PER_COULOMB,
            acceleration: acceleration_cgs,
            speed_ratio,
            units: UnitSystem::Gaussian,
        }
    }
}

/// `P = (2/3) Q² (dv/dt)² / c³`, valid for v/c ≪ 1.
pub fn radiated_power(k: &PointChargeKinematics) -> Result<f64> {
    if !(k.charge.is_finite() && k.acceleration.is_finite() && k.speed_ratio.is_finite()) {
        return Err(Error::invalid(Module::Emission, "kinematics must be finite"));
    }
    if k.charge < 0.0 {
        return Err(Error::invalid(
            Module::Emission,
            format!("charge must be >= 0, got {}", k.charge),
        ));
    }
    if k.speed_ratio < 0.0 || k.speed_ratio >= MAX_SPEED_RATIO {
        return Err(Error::Regime {
            speed_ratio: k.speed_ratio,
        });
    }
    let c = k.units.speed_of_light();
    Ok(2.0 / 3.0 * k.charge * k.charge * k.acceleration * k.acceleration / (c * c * c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normalized(charge: f64, acceleration: f64) -> PointChargeKinematics {
        PointChargeKinematics {
            charge,
            acceleration,
            speed_ratio: 0.01,
            units: UnitSystem::Normalized,
        }
    }

    #[test]
    fn unit_substitution() {
        let p = radiated_power(&normalized(1.0, 1.0)).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_acceleration_no_power() {
        assert_eq!(radiated_power(&normalized(3.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_scaling_and_even_in_acceleration() {
        let p = radiated_power(&normalized(1.5, 2.5)).unwrap();
        let p2q = radiated_power(&normalized(3.0, 2.5)).unwrap();
        let p2a = radiated_power(&normalized(1.5, 5.0)).unwrap();
        let neg = radiated_power(&normalized(1.5, -2.5)).unwrap();
        assert!((p2q / p - 4.0).abs() < 1e-12);
        assert!((p2a / p - 4.0).abs() < 1e-12);
        assert_eq!(p, neg);
    }

    #[test]
    fn relativistic_regime_rejected() {
        let mut k = normalized(1.0, 1.0);
        k.speed_ratio = 0.1;
        assert!(matches!(radiated_power(&k), Err(Error::Regime { .. })));
    }

    #[test]
    fn gaussian_units_from_si_charge() {
        // 0.1 nC at 1e20 cm/s²
        let k = PointChargeKinematics::from_si_charge(1e-10, 1e20, 0.001);
        let q = 1e-10 * STATCOULOMB_PER_COULOMB;
        let expected = 2.0 / 3.0 * q * q * 1e40 / SPEED_OF_LIGHT_CGS.powi(3);
        let p = radiated_power(&k).unwrap();
        assert!((p - expected).abs() <= 1e-12 * expected);
    }
}
