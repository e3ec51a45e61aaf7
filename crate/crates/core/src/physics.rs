//! Physical constants (CGS-Gaussian) and closed-form Kepler/hydrogen formulas.

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

/// One Ångström in centimetres.
pub const ANGSTROM: f64 = 1.0e-8;

/// Electron/Coulomb constants in CGS-Gaussian units.
///
/// `e` is the charge magnitude in statcoulomb, `m` the electron mass in grams,
/// `c` the speed of light in cm/s and `hbar` the reduced Planck constant in erg·s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    pub e: f64,
    pub m: f64,
    pub c: f64,
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            e: 4.80320e-10,
            m: 9.10938e-28,
            c: 2.99792e10,
            hbar: 1.05457e-27,
        }
    }
}

impl PhysicalConstants {
    /// Returns the name of the first non-positive or non-finite field, if any.
    pub fn invalid_field(&self) -> Option<&'static str> {
        [("e", self.e), ("m", self.m), ("c", self.c), ("hbar", self.hbar)]
            .into_iter()
            .find(|(_, v)| !(v.is_finite() && *v > 0.0))
            .map(|(k, _)| k)
    }

    /// e²/m, the Kepler parameter of the electron–nucleus pair (cm³/s²).
    pub fn kepler_mu(&self) -> f64 {
        self.e * self.e / self.m
    }

    /// 4e⁴/(m²c³): the rate at which r³ shrinks on a radiating circular orbit (cm³/s).
    pub fn radiative_r3_rate(&self) -> f64 {
        4.0 * self.e.powi(4) / (self.m * self.m * self.c.powi(3))
    }
}

/// ħ²/(m e²).
pub fn bohr_radius(constants: &PhysicalConstants) -> f64 {
    constants.hbar * constants.hbar / (constants.m * constants.e * constants.e)
}

/// Angular frequency of a circular Kepler orbit of radius `r`: e/(m r³)^½.
pub fn circular_frequency(r: f64, constants: &PhysicalConstants) -> Result<f64, DomainError> {
    check_radius(r)?;
    Ok((constants.kepler_mu() / (r * r * r)).sqrt())
}

/// Speed of a circular Kepler orbit of radius `r`: (e²/(m r))^½.
pub fn circular_speed(r: f64, constants: &PhysicalConstants) -> Result<f64, DomainError> {
    check_radius(r)?;
    Ok((constants.kepler_mu() / r).sqrt())
}

/// Radius whose circular-orbit frequency equals `omega`.
pub fn circular_radius(omega: f64, constants: &PhysicalConstants) -> Result<f64, DomainError> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(DomainError::NonPositiveFrequency(omega));
    }
    Ok((constants.kepler_mu() / (omega * omega)).cbrt())
}

/// Ground-state radial probability density 4r²/a³·exp(−2r/a), in 1/cm.
pub fn qm_radial_density(r: f64, bohr: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    4.0 * r * r / bohr.powi(3) * (-2.0 * r / bohr).exp()
}

fn check_radius(r: f64) -> Result<(), DomainError> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(DomainError::NonPositiveRadius(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn bohr_radius_matches_hydrogen() {
        let a = bohr_radius(&k());
        assert_relative_eq!(a, 0.529e-8, max_relative = 5e-3);
    }

    #[test]
    fn bohr_radius_scaling() {
        let base = bohr_radius(&k());
        let doubled_e = PhysicalConstants { e: 2.0 * k().e, ..k() };
        let doubled_hbar = PhysicalConstants { hbar: 2.0 * k().hbar, ..k() };
        let doubled_m = PhysicalConstants { m: 2.0 * k().m, ..k() };
        assert_relative_eq!(bohr_radius(&doubled_e), base / 4.0, max_relative = 1e-14);
        assert_relative_eq!(bohr_radius(&doubled_hbar), base * 4.0, max_relative = 1e-14);
        assert_relative_eq!(bohr_radius(&doubled_m), base / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn circular_frequency_reference_points() {
        let w = circular_frequency(0.1 * ANGSTROM, &k()).unwrap();
        assert_relative_eq!(w, 5.03e17, max_relative = 1e-2);
        let w = circular_frequency(1.06e-5, &k()).unwrap();
        assert_relative_eq!(w, 4.61e11, max_relative = 1e-2);
        // sqrt(e²/(m a³)) evaluated by hand: a = 5.29177e-9 cm, e²/m = 2.532634e8
        let a = bohr_radius(&k());
        let w = circular_frequency(a, &k()).unwrap();
        assert_relative_eq!(w, 4.1341e16, max_relative = 1e-3);
    }

    #[test]
    fn circular_frequency_rejects_bad_radius() {
        assert!(circular_frequency(0.0, &k()).is_err());
        assert!(circular_frequency(-1e-9, &k()).is_err());
        assert!(circular_speed(0.0, &k()).is_err());
    }

    #[test]
    fn circular_speed_reference_and_scaling() {
        let a = bohr_radius(&k());
        let v = circular_speed(a, &k()).unwrap();
        assert_relative_eq!(v, 2.1877e8, max_relative = 1e-3);
        assert_relative_eq!(circular_speed(4.0 * a, &k()).unwrap(), v / 2.0, max_relative = 1e-14);
        let w = circular_frequency(a, &k()).unwrap();
        assert_relative_eq!(v / w, a, max_relative = 1e-14);
    }

    #[test]
    fn frequency_identity_over_radius_range() {
        let c = k();
        for i in 0..=40 {
            let r = 10f64.powf(-9.0 + 4.0 * i as f64 / 40.0);
            let w = circular_frequency(r, &c).unwrap();
            assert_relative_eq!(w * w * c.m * r.powi(3), c.e * c.e, max_relative = 1e-12);
        }
    }

    #[test]
    fn circular_radius_inverts_frequency() {
        let c = k();
        let r = circular_radius(4.61e11, &c).unwrap();
        assert_relative_eq!(r, 1.06e-5, max_relative = 1e-2);
        let back = circular_frequency(r, &c).unwrap();
        assert_relative_eq!(back, 4.61e11, max_relative = 1e-13);
    }

    #[test]
    fn qm_density_shape() {
        let a = 0.529 * ANGSTROM;
        assert_eq!(qm_radial_density(0.0, a), 0.0);
        let peak = qm_radial_density(a, a);
        // (4/a)·e⁻² in 1/Å
        assert_relative_eq!(peak * ANGSTROM, 1.0232, max_relative = 1e-3);
        for f in [0.9, 0.99, 1.01, 1.1] {
            assert!(qm_radial_density(f * a, a) < peak);
        }
    }

    #[test]
    fn qm_density_normalised() {
        // composite Simpson on [0, 20a]
        let a = bohr_radius(&k());
        let n = 20_000;
        let h = 20.0 * a / n as f64;
        let mut sum = qm_radial_density(0.0, a) + qm_radial_density(20.0 * a, a);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * qm_radial_density(i as f64 * h, a);
        }
        let integral = sum * h / 3.0;
        assert!((integral - 1.0).abs() < 1e-6, "integral = {integral}");
    }
}
