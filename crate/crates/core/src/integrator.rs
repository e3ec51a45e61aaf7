//! Embedded Dormand–Prince 5(4) integrator with adaptive step control and
//! radial guard events.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{ParticleState, PhaseDerivative};
use crate::error::{ConfigError, DynamicsError};

pub const TABLEAU_NAME: &str = "dormand-prince-5(4)";

/// Largest factor by which a step may grow after an accepted attempt.
pub const MAX_GROWTH: f64 = 5.0;
/// Smallest factor by which a rejected step shrinks.
pub const MIN_SHRINK: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    /// cm
    pub abs_tol_pos: f64,
    /// cm/s
    pub abs_tol_vel: f64,
    /// s
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub safety: f64,
    /// Consecutive rejections tolerated before the run is declared stiff.
    pub max_rejects: u32,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            // energy drift over 100 Kepler periods at a_B is about 150·rel_tol
            rel_tol: 1.0e-11,
            abs_tol_pos: 1.0e-20,
            // rel_tol × circular speed at the Bohr radius
            abs_tol_vel: 2.188e-3,
            dt_init: 1.0e-18,
            dt_min: 1.0e-25,
            dt_max: 1.0e-16,
            safety: 0.9,
            max_rejects: 60,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::new(format!("integrator.{key}"), format!("must be positive, got {v:e}")))
            }
        };
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol_pos", self.abs_tol_pos)?;
        positive("abs_tol_vel", self.abs_tol_vel)?;
        positive("dt_min", self.dt_min)?;
        if !(self.dt_min <= self.dt_init && self.dt_init <= self.dt_max && self.dt_max.is_finite()) {
            return Err(ConfigError::new("integrator.dt_init", "need dt_min <= dt_init <= dt_max"));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(ConfigError::new("integrator.safety", "must lie in (0, 1)"));
        }
        if self.max_rejects == 0 {
            return Err(ConfigError::new("integrator.max_rejects", "must be at least 1"));
        }
        Ok(())
    }

    /// Same config with both tolerances multiplied by `factor`.
    pub fn scaled_tolerances(mut self, factor: f64) -> Self {
        self.rel_tol *= factor;
        self.abs_tol_pos *= factor;
        self.abs_tol_vel *= factor;
        self
    }
}

/// Right-hand side of the first-order system.
pub trait OdeSystem {
    /// Called once per step, before any stage is evaluated. Returns true if
    /// the right-hand side may differ from the previous step's.
    fn begin_step(&mut self, _state: &ParticleState) -> bool {
        true
    }

    fn derivative(&mut self, state: &ParticleState) -> Result<PhaseDerivative, DynamicsError>;
}

impl<F> OdeSystem for F
where
    F: FnMut(&ParticleState) -> Result<PhaseDerivative, DynamicsError>,
{
    fn derivative(&mut self, state: &ParticleState) -> Result<PhaseDerivative, DynamicsError> {
        self(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// New state if accepted, otherwise the input state.
    pub state: ParticleState,
    pub dt_next: f64,
    pub accepted: bool,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminationKind {
    /// Fell inside the inner guard radius or hit the Coulomb singularity.
    Collapse,
    /// Left through the outer guard radius.
    Ionization,
    /// Step-size control failed.
    Stiffness,
}

impl fmt::Display for TerminationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationKind::Collapse => "collapse",
            TerminationKind::Ionization => "ionization",
            TerminationKind::Stiffness => "stiffness",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at t = {t:e} s, r = {r:e} cm: {detail}", t = state.t, r = state.radius())]
pub struct Termination {
    pub kind: TerminationKind,
    pub state: ParticleState,
    pub detail: String,
}

// Dormand & Prince (1980) coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
/// Fifth-order weights (also the seventh stage row).
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// b5 − b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combine(y: &ParticleState, h: f64, weights: &[f64], k: &[PhaseDerivative], t: f64) -> ParticleState {
    let mut out = *y;
    for (w, ki) in weights.iter().zip(k) {
        if *w != 0.0 {
            out.position += ki.dposition * (h * w);
            out.velocity += ki.dvelocity * (h * w);
        }
    }
    out.t = t;
    out
}

struct Attempt {
    outcome: StepOutcome,
    k1: PhaseDerivative,
    k7: PhaseDerivative,
}

fn controller(dt: f64, err: f64, config: &IntegratorConfig) -> f64 {
    let factor = if err == 0.0 {
        MAX_GROWTH
    } else {
        (config.safety * err.powf(-0.2)).clamp(MIN_SHRINK, MAX_GROWTH)
    };
    (dt * factor).clamp(config.dt_min, config.dt_max)
}

fn attempt_with<S: OdeSystem + ?Sized>(
    state: &ParticleState,
    h: f64,
    system: &mut S,
    config: &IntegratorConfig,
    k1: Option<PhaseDerivative>,
) -> Result<Attempt, DynamicsError> {
    let t0 = state.t;
    let k1 = match k1 {
        Some(k) => k,
        None => system.derivative(state)?,
    };
    let mut k = [k1; 7];
    k[1] = system.derivative(&combine(state, h, &A2, &k[..1], t0 + C[1] * h))?;
    k[2] = system.derivative(&combine(state, h, &A3, &k[..2], t0 + C[2] * h))?;
    k[3] = system.derivative(&combine(state, h, &A4, &k[..3], t0 + C[3] * h))?;
    k[4] = system.derivative(&combine(state, h, &A5, &k[..4], t0 + C[4] * h))?;
    k[5] = system.derivative(&combine(state, h, &A6, &k[..5], t0 + C[5] * h))?;
    let y5 = combine(state, h, &B5, &k[..6], t0 + h);
    k[6] = system.derivative(&y5)?;

    let mut err = 0.0f64;
    for comp in 0..4 {
        let (delta, scale) = {
            let mut d = 0.0;
            for (e, ki) in E.iter().zip(&k) {
                let v = if comp < 2 { ki.dposition[comp] } else { ki.dvelocity[comp - 2] };
                d += e * v;
            }
            let (y, atol) = if comp < 2 {
                (y5.position[comp], config.abs_tol_pos)
            } else {
                (y5.velocity[comp - 2], config.abs_tol_vel)
            };
            (h * d, atol + config.rel_tol * y.abs())
        };
        err = err.max(delta.abs() / scale);
    }
    let accepted = err <= 1.0;
    Ok(Attempt {
        outcome: StepOutcome {
            state: if accepted { y5 } else { *state },
            dt_next: controller(h, err, config),
            accepted,
            error_estimate: err,
        },
        k1,
        k7: k[6],
    })
}

/// One embedded 5(4) attempt of size `dt` from `state`.
pub fn attempt_step<S: OdeSystem + ?Sized>(
    state: &ParticleState,
    dt: f64,
    system: &mut S,
    config: &IntegratorConfig,
) -> Result<StepOutcome, DynamicsError> {
    attempt_with(state, dt, system, config, None).map(|a| a.outcome)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
}

/// Stateful driver: carries the proposed step size between calls.
#[derive(Debug, Clone)]
pub struct Integrator {
    config: IntegratorConfig,
    dt: f64,
    guards: Option<(f64, f64)>,
    fsal: Option<(ParticleState, PhaseDerivative)>,
    pub stats: IntegratorStats,
}

impl Integrator {
    pub fn new(config: IntegratorConfig) -> Self {
        Self {
            dt: config.dt_init,
            config,
            guards: None,
            fsal: None,
            stats: IntegratorStats::default(),
        }
    }

    /// Terminate when the radius leaves [r_min, r_max] after an accepted step.
    pub fn with_guards(mut self, r_min: f64, r_max: f64) -> Self {
        self.guards = Some((r_min, r_max));
        self
    }

    /// Resume with a previously proposed step size.
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt.clamp(self.config.dt_min, self.config.dt_max);
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    /// One accepted step from `state`, never passing `t_limit`.
    pub fn step<S: OdeSystem + ?Sized>(
        &mut self,
        state: &ParticleState,
        t_limit: f64,
        system: &mut S,
    ) -> Result<ParticleState, Termination> {
        let changed = system.begin_step(state);
        let mut k1 = match self.fsal.take() {
            Some((s, k)) if !changed && s == *state => Some(k),
            _ => None,
        };
        let mut rejects = 0u32;
        loop {
            let remaining = t_limit - state.t;
            let truncated = self.dt >= remaining;
            let h = if truncated { remaining } else { self.dt };
            let fresh = if k1.is_some() { 6 } else { 7 };
            let attempt = attempt_with(state, h, system, &self.config, k1).map_err(|e| Termination {
                kind: match e {
                    DynamicsError::Singularity { .. } => TerminationKind::Collapse,
                    DynamicsError::NonFinite { .. } => TerminationKind::Stiffness,
                },
                state: *state,
                detail: e.to_string(),
            })?;
            self.stats.evaluations += fresh;
            k1 = Some(attempt.k1);
            let out = attempt.outcome;
            if out.accepted {
                self.stats.accepted += 1;
                let mut next = out.state;
                if truncated {
                    next.t = t_limit;
                    // a clipped step says little about the next full one
                    if h > 0.5 * self.dt {
                        self.dt = self.dt.min(out.dt_next);
                    }
                } else {
                    self.dt = out.dt_next;
                    self.fsal = Some((next, attempt.k7));
                }
                return Ok(next);
            }
            self.stats.rejected += 1;
            rejects += 1;
            self.dt = out.dt_next;
            if rejects > self.config.max_rejects {
                return Err(Termination {
                    kind: TerminationKind::Stiffness,
                    state: *state,
                    detail: format!(
                        "{rejects} consecutive rejections, last error estimate {:.3e} at dt = {h:e} s",
                        out.error_estimate
                    ),
                });
            }
        }
    }

    pub fn check_guards(&self, state: &ParticleState) -> Result<(), Termination> {
        let Some((lo, hi)) = self.guards else {
            return Ok(());
        };
        let r = state.radius();
        let kind = if r < lo {
            TerminationKind::Collapse
        } else if r > hi {
            TerminationKind::Ionization
        } else {
            return Ok(());
        };
        Err(Termination {
            kind,
            state: *state,
            detail: format!("radius left guard band [{lo:e}, {hi:e}] cm"),
        })
    }

    /// Integrate to exactly `t_target`, calling `observer(before, after, dt)`
    /// after every accepted step.
    pub fn advance<S, O>(
        &mut self,
        state: ParticleState,
        t_target: f64,
        system: &mut S,
        mut observer: O,
    ) -> Result<ParticleState, Termination>
    where
        S: OdeSystem + ?Sized,
        O: FnMut(&ParticleState, &ParticleState, f64),
    {
        let mut current = state;
        while current.t < t_target {
            let next = self.step(&current, t_target, system)?;
            observer(&current, &next, next.t - current.t);
            self.check_guards(&next)?;
            current = next;
        }
        Ok(current)
    }
}
