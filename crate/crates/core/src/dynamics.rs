//! Planar equation of motion: Coulomb binding, radiation reaction with the
//! Coulomb acceleration substituted into the third-derivative term, and the
//! Lorentz force of the zero-point field projected onto the x–y plane.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::config::{FieldMode, RunConfig};
use crate::error::DynamicsError;
use crate::field::{eval_fields, window_indices, FieldRealization, WindowCache, WindowRange};
use crate::physics::{circular_speed, PhysicalConstants};

/// Below this radius the Coulomb term is treated as singular (cm).
pub const COULOMB_FLOOR: f64 = 1.0e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
    pub t: f64,
}

impl ParticleState {
    pub fn new(position: Vector2<f64>, velocity: Vector2<f64>, t: f64) -> Self {
        Self { position, velocity, t }
    }

    /// Counter-clockwise circular orbit through (r, 0) at t = 0.
    pub fn circular(r: f64, constants: &PhysicalConstants) -> Self {
        let v = circular_speed(r, constants).expect("positive radius");
        Self::new(Vector2::new(r, 0.0), Vector2::new(0.0, v), 0.0)
    }

    pub fn radius(&self) -> f64 {
        self.position.norm()
    }

    /// Kepler energy ½mv² − e²/r (erg).
    pub fn energy(&self, constants: &PhysicalConstants) -> f64 {
        0.5 * constants.m * self.velocity.norm_squared() - constants.e * constants.e / self.radius()
    }

    /// m(z × v)_z (erg·s).
    pub fn angular_momentum(&self, constants: &PhysicalConstants) -> f64 {
        constants.m * self.position.perp(&self.velocity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDerivative {
    pub dposition: Vector2<f64>,
    pub dvelocity: Vector2<f64>,
}

impl PhaseDerivative {
    pub fn is_finite(&self) -> bool {
        self.dposition.iter().chain(self.dvelocity.iter()).all(|v| v.is_finite())
    }
}

fn checked_radius(z: &Vector2<f64>) -> Result<f64, DynamicsError> {
    let r = z.norm();
    if r < COULOMB_FLOOR || !r.is_finite() {
        Err(DynamicsError::Singularity {
            radius: r,
            floor: COULOMB_FLOOR,
        })
    } else {
        Ok(r)
    }
}

/// −e² z / (m |z|³).
pub fn coulomb_accel(z: &Vector2<f64>, constants: &PhysicalConstants) -> Result<Vector2<f64>, DynamicsError> {
    let r = checked_radius(z)?;
    Ok(z * (-constants.kepler_mu() / (r * r * r)))
}

/// (2/3)(e²/(m c³))·d/dt(−e² z/(m|z|³)), expanded:
/// −(2/3)(e⁴/(m²c³))·[v/|z|³ − 3 z (z·v)/|z|⁵].
pub fn radiation_reaction_accel(
    z: &Vector2<f64>,
    v: &Vector2<f64>,
    constants: &PhysicalConstants,
) -> Result<Vector2<f64>, DynamicsError> {
    let r = checked_radius(z)?;
    let k = constants;
    let strength = 2.0 / 3.0 * k.e.powi(4) / (k.m * k.m * k.c.powi(3));
    let r3 = r * r * r;
    let jerk = v / r3 - z * (3.0 * z.dot(v) / (r3 * r * r));
    Ok(jerk * -strength)
}

/// Full 3-D (−e/m)(E + v×B/c), before projection.
pub fn lorentz_accel_3d(
    v: &Vector2<f64>,
    e: &Vector3<f64>,
    b: &Vector3<f64>,
    constants: &PhysicalConstants,
) -> Vector3<f64> {
    let v3 = Vector3::new(v.x, v.y, 0.0);
    (e + v3.cross(b) / constants.c) * (-constants.e / constants.m)
}

/// In-plane part of the Lorentz acceleration on the electron (charge −e).
pub fn lorentz_accel(
    v: &Vector2<f64>,
    e: &Vector3<f64>,
    b: &Vector3<f64>,
    constants: &PhysicalConstants,
) -> Vector2<f64> {
    lorentz_accel_3d(v, e, b, constants).xy()
}

/// The parts of `RunConfig` the right-hand side depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsConfig {
    pub constants: PhysicalConstants,
    pub window_fraction: f64,
    pub field_mode: FieldMode,
    pub radiation_reaction: bool,
}

impl From<&RunConfig> for DynamicsConfig {
    fn from(c: &RunConfig) -> Self {
        Self {
            constants: c.constants,
            window_fraction: c.window_fraction,
            field_mode: c.field_mode,
            radiation_reaction: c.radiation_reaction,
        }
    }
}

impl DynamicsConfig {
    /// Retained modes for an electron at radius `r`.
    pub fn window_at(&self, r: f64, realization: &FieldRealization) -> WindowRange {
        match self.field_mode {
            FieldMode::Full => realization.full_window(),
            // radius and fraction are validated upstream; an invalid pair keeps nothing
            FieldMode::Window => window_indices(r, self.window_fraction, realization).unwrap_or(WindowRange::EMPTY),
        }
    }
}

fn assemble(
    state: &ParticleState,
    field: &crate::field::FieldSample,
    config: &DynamicsConfig,
) -> Result<PhaseDerivative, DynamicsError> {
    let k = &config.constants;
    let mut accel = coulomb_accel(&state.position, k)?;
    if config.radiation_reaction {
        accel += radiation_reaction_accel(&state.position, &state.velocity, k)?;
    }
    accel += lorentz_accel(&state.velocity, &field.e, &field.b, k);
    let d = PhaseDerivative {
        dposition: state.velocity,
        dvelocity: accel,
    };
    if d.is_finite() {
        Ok(d)
    } else {
        Err(DynamicsError::NonFinite { t: state.t })
    }
}

/// Right-hand side with the window taken from the current radius.
pub fn total_derivative(
    state: &ParticleState,
    realization: &FieldRealization,
    config: &DynamicsConfig,
) -> Result<PhaseDerivative, DynamicsError> {
    let r = checked_radius(&state.position)?;
    let window = config.window_at(r, realization);
    let field = eval_fields(state.t, window, realization);
    assemble(state, &field, config)
}

/// How an `ElectronSystem` picks its modes at the start of each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowPolicy {
    /// From the radius, per `DynamicsConfig::window_at`.
    FromRadius,
    /// A fixed range regardless of radius.
    Fixed(WindowRange),
}

/// Right-hand side for one trajectory. The window is chosen once per step
/// from the radius at the step start and kept for every stage of that step.
pub struct ElectronSystem<'a> {
    realization: &'a FieldRealization,
    config: DynamicsConfig,
    policy: WindowPolicy,
    cache: WindowCache,
}

impl<'a> ElectronSystem<'a> {
    pub fn new(realization: &'a FieldRealization, config: DynamicsConfig) -> Self {
        Self {
            realization,
            config,
            policy: WindowPolicy::FromRadius,
            cache: WindowCache::new(),
        }
    }

    pub fn with_policy(mut self, policy: WindowPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn window(&self) -> WindowRange {
        self.cache.range()
    }

    pub fn config(&self) -> &DynamicsConfig {
        &self.config
    }
}

impl crate::integrator::OdeSystem for ElectronSystem<'_> {
    fn begin_step(&mut self, state: &ParticleState) -> bool {
        if self.realization.is_silent() {
            return self.cache.set_window(WindowRange::EMPTY, self.realization);
        }
        let window = match self.policy {
            WindowPolicy::Fixed(w) => w,
            WindowPolicy::FromRadius => self.config.window_at(state.radius(), self.realization),
        };
        self.cache.set_window(window, self.realization)
    }

    fn derivative(&mut self, state: &ParticleState) -> Result<PhaseDerivative, DynamicsError> {
        let field = self.cache.eval(state.t, self.realization);
        assemble(state, &field, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CavityConfig;
    use crate::integrator::OdeSystem;
    use crate::physics::{bohr_radius, ANGSTROM};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn k() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn rotate(v: &Vector2<f64>, angle: f64) -> Vector2<f64> {
        let (s, c) = angle.sin_cos();
        Vector2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    #[test]
    fn coulomb_at_bohr_radius() {
        let c = k();
        let a = bohr_radius(&c);
        let acc = coulomb_accel(&Vector2::new(a, 0.0), &c).unwrap();
        assert_relative_eq!(acc.norm(), 9.0443e24, max_relative = 1e-3);
        assert_relative_eq!(acc.x, -acc.norm());
        assert_eq!(acc.y, 0.0);
        let far = coulomb_accel(&Vector2::new(2.0 * a, 0.0), &c).unwrap();
        assert_relative_eq!(far.norm(), acc.norm() / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn coulomb_singularity() {
        let err = coulomb_accel(&Vector2::new(1e-12, 0.0), &k()).unwrap_err();
        assert!(matches!(err, DynamicsError::Singularity { .. }));
        assert!(radiation_reaction_accel(&Vector2::zeros(), &Vector2::new(1.0, 0.0), &k()).is_err());
    }

    #[test]
    fn radiation_reaction_special_cases() {
        let c = k();
        let z = Vector2::new(0.3e-8, 0.4e-8);
        assert_eq!(radiation_reaction_accel(&z, &Vector2::zeros(), &c).unwrap(), Vector2::zeros());
        let st = ParticleState::circular(bohr_radius(&c), &c);
        let rr = radiation_reaction_accel(&st.position, &st.velocity, &c).unwrap();
        let r = st.radius();
        let expected = st.velocity * (-2.0 / 3.0 * c.e.powi(4) / (c.m * c.m * c.c.powi(3)) / r.powi(3));
        assert_relative_eq!(rr.y, expected.y, max_relative = 1e-14);
        assert_eq!(rr.x, 0.0);
        assert!(rr.dot(&st.velocity) < 0.0);
    }

    #[test]
    fn radiation_reaction_is_derivative_of_coulomb() {
        // central difference of a_C(z + v h) in h
        let c = k();
        let z = Vector2::new(0.41e-8, -0.22e-8);
        let v = Vector2::new(1.3e8, 0.7e8);
        let h = 1e-21;
        let ap = coulomb_accel(&(z + v * h), &c).unwrap();
        let am = coulomb_accel(&(z - v * h), &c).unwrap();
        let numeric = (ap - am) / (2.0 * h) * (2.0 / 3.0 * c.e * c.e / (c.m * c.c.powi(3)));
        let analytic = radiation_reaction_accel(&z, &v, &c).unwrap();
        assert_relative_eq!(numeric.x, analytic.x, max_relative = 1e-6);
        assert_relative_eq!(numeric.y, analytic.y, max_relative = 1e-6);
    }

    #[test]
    fn decay_rate_from_power_balance() {
        // P = F·v on a circular orbit; dE/dr = e²/(2r²) ⇒ d(r³)/dt = 3r²·P/(dE/dr)
        let c = k();
        let a = bohr_radius(&c);
        let st = ParticleState::circular(a, &c);
        let rr = radiation_reaction_accel(&st.position, &st.velocity, &c).unwrap();
        let power = c.m * rr.dot(&st.velocity);
        let dr3_dt = 3.0 * a * a * power / (c.e * c.e / (2.0 * a * a));
        assert_relative_eq!(dr3_dt, -c.radiative_r3_rate(), max_relative = 1e-12);
        // a_B³ / rate ≈ 1.56e-11 s
        assert_relative_eq!(a.powi(3) / c.radiative_r3_rate(), 1.556e-11, max_relative = 2e-3);
    }

    #[test]
    fn lorentz_cases() {
        let c = k();
        let zero = Vector3::zeros();
        let acc = lorentz_accel(&Vector2::zeros(), &Vector3::new(2.0, 0.0, 0.0), &zero, &c);
        assert_relative_eq!(acc.x, -c.e * 2.0 / c.m, max_relative = 1e-15);
        assert_eq!(acc.y, 0.0);

        let v = Vector2::new(1e8, 0.0);
        let b = Vector3::new(0.0, 50.0, 0.0);
        let full = lorentz_accel_3d(&v, &zero, &b, &c);
        assert!(full.z != 0.0);
        assert_eq!(lorentz_accel(&v, &zero, &b, &c), Vector2::zeros());

        let acc = lorentz_accel(&Vector2::zeros(), &Vector3::new(0.0, 1e3, 0.0), &zero, &c);
        // e/m ≈ 5.2728e17 statC/g
        assert_relative_eq!(acc.y, -5.2728e20, max_relative = 1e-4);
    }

    #[test]
    fn in_plane_fields_only_push_out_of_plane_magnetically() {
        let c = k();
        let v = Vector2::new(-3e7, 2e8);
        let b = Vector3::new(17.0, -4.0, 0.0);
        let e = Vector3::new(3.0, 1.0, 0.0);
        let full = lorentz_accel_3d(&v, &e, &b, &c);
        let electric = lorentz_accel_3d(&Vector2::zeros(), &e, &Vector3::zeros(), &c);
        assert_eq!(full.xy(), electric.xy());
        assert_eq!(electric.z, 0.0);
    }

    #[test]
    fn silent_field_reduces_to_two_terms() {
        let c = k();
        let real = FieldRealization::new(3, CavityConfig::default(), c).with_amplitude_scale(0.0);
        let cfg = DynamicsConfig {
            constants: c,
            window_fraction: 0.03,
            field_mode: FieldMode::Window,
            radiation_reaction: true,
        };
        let st = ParticleState::circular(bohr_radius(&c), &c);
        let d = total_derivative(&st, &real, &cfg).unwrap();
        let expected = coulomb_accel(&st.position, &c).unwrap()
            + radiation_reaction_accel(&st.position, &st.velocity, &c).unwrap();
        assert_relative_eq!((d.dvelocity - expected).norm(), 0.0, epsilon = 1e-9 * expected.norm());
        assert_eq!(d.dposition, st.velocity);
    }

    #[test]
    fn zero_fraction_window_contributes_nothing() {
        let c = k();
        let real = FieldRealization::new(3, CavityConfig::default(), c);
        let cfg = DynamicsConfig {
            constants: c,
            window_fraction: 0.0,
            field_mode: FieldMode::Window,
            radiation_reaction: false,
        };
        let st = ParticleState::circular(bohr_radius(&c), &c);
        assert!(window_indices(st.radius(), 0.0, &real).unwrap().is_empty());
        let d = total_derivative(&st, &real, &cfg).unwrap();
        assert_eq!(d.dvelocity, coulomb_accel(&st.position, &c).unwrap());
    }

    #[test]
    fn covering_window_equals_full_sum_bitwise() {
        let c = k();
        let real = FieldRealization::new(12, CavityConfig::reduced(), c);
        let windowed = DynamicsConfig {
            constants: c,
            window_fraction: 0.95,
            field_mode: FieldMode::Window,
            radiation_reaction: true,
        };
        let full = DynamicsConfig {
            field_mode: FieldMode::Full,
            ..windowed
        };
        let mut st = ParticleState::circular(1.5 * ANGSTROM, &c);
        st.t = 2.7e-15;
        assert_eq!(windowed.window_at(st.radius(), &real), real.full_window());
        let a = total_derivative(&st, &real, &windowed).unwrap();
        let b = total_derivative(&st, &real, &full).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn superposition_of_three_terms() {
        let c = k();
        let real = FieldRealization::new(5, CavityConfig::reduced(), c);
        let cfg = DynamicsConfig {
            constants: c,
            window_fraction: 0.03,
            field_mode: FieldMode::Full,
            radiation_reaction: true,
        };
        let st = ParticleState::new(Vector2::new(0.4e-8, 0.3e-8), Vector2::new(-1.2e8, 1.7e8), 4.4e-15);
        let d = total_derivative(&st, &real, &cfg).unwrap();
        let f = eval_fields(st.t, real.full_window(), &real);
        let sum = coulomb_accel(&st.position, &c).unwrap()
            + radiation_reaction_accel(&st.position, &st.velocity, &c).unwrap()
            + lorentz_accel(&st.velocity, &f.e, &f.b, &c);
        assert!((d.dvelocity - sum).norm() <= 1e-14 * sum.norm());
    }

    #[test]
    fn system_freezes_window_per_step() {
        let c = k();
        let real = FieldRealization::new(5, CavityConfig::default(), c);
        let cfg = DynamicsConfig {
            constants: c,
            window_fraction: 0.03,
            field_mode: FieldMode::Window,
            radiation_reaction: true,
        };
        let mut sys = ElectronSystem::new(&real, cfg);
        let st = ParticleState::circular(bohr_radius(&c), &c);
        assert!(sys.begin_step(&st));
        let w = sys.window();
        assert_eq!(w, window_indices(st.radius(), 0.03, &real).unwrap());
        // a stage at a slightly different radius still uses the step's window
        let mut moved = st;
        moved.position *= 1.01;
        let from_system = sys.derivative(&moved).unwrap();
        let field = eval_fields(moved.t, w, &real);
        assert_eq!(from_system, assemble(&moved, &field, &cfg).unwrap());
        assert!(!sys.begin_step(&st));
    }

    proptest! {
        #[test]
        fn coulomb_is_rotation_equivariant(x in 0.1f64..3.0, y in -3.0f64..3.0, angle in 0.0f64..6.3) {
            let c = k();
            let z = Vector2::new(x, y) * ANGSTROM;
            let rotated = coulomb_accel(&rotate(&z, angle), &c).unwrap();
            let expected = rotate(&coulomb_accel(&z, &c).unwrap(), angle);
            prop_assert!((rotated - expected).norm() <= 1e-12 * expected.norm());
        }
    }
}
