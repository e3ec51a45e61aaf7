//! Self-checks against closed-form behaviour: radiative collapse without
//! fields, Kepler invariants without any dissipation, and the sample
//! statistics of the mode coefficients.

use std::io::{self, Write};

use serde::Serialize;

use crate::config::RunConfig;
use crate::dynamics::{DynamicsConfig, ElectronSystem, ParticleState};
use crate::ensemble::realization_for;
use crate::error::ConfigError;
use crate::field::{mode_frequency, Direction, FieldRealization, ModeId, Polarization};
use crate::integrator::{Integrator, Termination, TerminationKind};
use crate::physics::{bohr_radius, circular_frequency};

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("integration failed: {0}")]
    Integration(#[from] Termination),
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub r_start: f64,
    pub r_stop: f64,
    /// Least-squares slope of r³ against t (cm³/s).
    pub fitted_slope: f64,
    /// −4e⁴/(m²c³).
    pub analytic_slope: f64,
    pub relative_slope_error: f64,
    /// Time at which the radius first fell below `r_stop`.
    pub decay_time: f64,
    /// (r0³ − r_stop³) / (4e⁴/(m²c³)).
    pub analytic_decay_time: f64,
    pub accepted_steps: u64,
    pub samples: usize,
}

/// Fields off, radiation reaction on, from the circular orbit at a_B down to
/// `r_stop`. r³ is sampled every `sample_interval` for the fit.
pub fn decay_check(config: &RunConfig, r_stop: f64, sample_interval: f64) -> Result<DecayReport, CheckError> {
    let mut c = config.clone().radiative_decay();
    c.r0 = bohr_radius(&c.constants);
    c.validate()?;
    if !(r_stop > 0.0 && r_stop < c.r0) {
        return Err(ConfigError::new("r_stop", "must lie in (0, a_B)").into());
    }
    let realization = realization_for(&c, c.seed);
    let mut system = ElectronSystem::new(&realization, DynamicsConfig::from(&c));
    // the guard is the stopping rule
    let mut integrator = Integrator::new(c.integrator).with_guards(r_stop, f64::INFINITY);
    let rate = c.constants.radiative_r3_rate();
    let t_bound = 2.0 * c.r0.powi(3) / rate;

    let mut samples = vec![(0.0, c.r0.powi(3))];
    let mut state = ParticleState::circular(c.r0, &c.constants);
    let mut next_sample = sample_interval;
    let decay_time = loop {
        match integrator.step(&state, t_bound, &mut system) {
            Ok(next) => {
                state = next;
                if state.t >= next_sample {
                    samples.push((state.t, state.radius().powi(3)));
                    next_sample += sample_interval;
                }
                if let Err(term) = integrator.check_guards(&state) {
                    if term.kind == TerminationKind::Collapse {
                        break state.t;
                    }
                    return Err(term.into());
                }
                if state.t >= t_bound {
                    return Err(Termination {
                        kind: TerminationKind::Stiffness,
                        state,
                        detail: "no collapse within twice the analytic decay time".into(),
                    }
                    .into());
                }
            }
            Err(term) => return Err(term.into()),
        }
    };

    let n = samples.len() as f64;
    let mean_t = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_y = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y) in &samples {
        sxy += (t - mean_t) * (y - mean_y);
        sxx += (t - mean_t) * (t - mean_t);
    }
    let fitted = sxy / sxx;
    let analytic = -rate;
    Ok(DecayReport {
        r_start: c.r0,
        r_stop,
        fitted_slope: fitted,
        analytic_slope: analytic,
        relative_slope_error: (fitted - analytic).abs() / rate,
        decay_time,
        analytic_decay_time: (c.r0.powi(3) - r_stop.powi(3)) / rate,
        accepted_steps: integrator.stats.accepted,
        samples: samples.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KeplerReport {
    pub r0: f64,
    pub orbits: f64,
    pub period: f64,
    /// max |E(t) − E(0)| / |E(0)| over accepted steps.
    pub energy_drift: f64,
    /// max |L(t) − L(0)| / |L(0)| over accepted steps.
    pub angular_momentum_drift: f64,
    pub accepted_steps: u64,
}

/// Fields and radiation reaction off; circular orbit at `config.r0`.
pub fn kepler_check(config: &RunConfig, orbits: f64) -> Result<KeplerReport, CheckError> {
    let c = config.clone().kepler();
    c.validate()?;
    let k = c.constants;
    let omega = circular_frequency(c.r0, &k).map_err(|e| ConfigError::new("r0", e.to_string()))?;
    let period = 2.0 * std::f64::consts::PI / omega;
    let realization = FieldRealization::new(c.seed, c.cavity, k).with_amplitude_scale(0.0);
    let mut system = ElectronSystem::new(&realization, DynamicsConfig::from(&c));
    let mut integrator = Integrator::new(c.integrator);
    let start = ParticleState::circular(c.r0, &k);
    let (e0, l0) = (start.energy(&k), start.angular_momentum(&k));
    let (mut de, mut dl) = (0.0f64, 0.0f64);
    integrator.advance(start, orbits * period, &mut system, |_, s, _| {
        de = de.max((s.energy(&k) - e0).abs() / e0.abs());
        dl = dl.max((s.angular_momentum(&k) - l0).abs() / l0.abs());
    })?;
    Ok(KeplerReport {
        r0: c.r0,
        orbits,
        period,
        energy_drift: de,
        angular_momentum_drift: dl,
        accepted_steps: integrator.stats.accepted,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentSummary {
    /// Mean of the standardized coefficient (coefficient / √(2πħω)).
    pub mean: f64,
    /// |mean|·√N; below 3 means consistent with zero at 3σ.
    pub mean_z: f64,
    /// Sample variance of the standardized coefficient.
    pub variance_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldStatsReport {
    pub seed: u64,
    pub n_start: u64,
    pub modes: u64,
    pub a: MomentSummary,
    pub b: MomentSummary,
}

fn summarize(xs: &[f64]) -> MomentSummary {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    MomentSummary {
        mean,
        mean_z: mean.abs() * n.sqrt(),
        variance_ratio: var,
    }
}

/// Modes are enumerated index-major from `n_start`: both directions and both
/// polarizations of each lattice index before the next.
pub fn mode_ids(n_start: u64, count: u64) -> impl Iterator<Item = ModeId> {
    (0..count).map(move |i| {
        let n = n_start + i / 4;
        let direction = Direction::ALL[((i / 2) % 2) as usize];
        let polarization = if i % 2 == 0 { Polarization::X } else { Polarization::Y };
        ModeId::new(n, direction, polarization)
    })
}

pub fn field_stats(config: &RunConfig, n_start: u64, modes: u64) -> Result<FieldStatsReport, CheckError> {
    config.validate()?;
    if modes < 2 {
        return Err(ConfigError::new("modes", "need at least two modes").into());
    }
    let real = FieldRealization::new(config.seed, config.cavity, config.constants);
    let last = n_start + (modes - 1) / 4;
    if n_start < 1 || last > real.n_max {
        return Err(ConfigError::new("n_start", format!("modes must lie in [1, {}]", real.n_max)).into());
    }
    let (mut a, mut b) = (Vec::with_capacity(modes as usize), Vec::with_capacity(modes as usize));
    for id in mode_ids(n_start, modes) {
        let omega = mode_frequency(id.n, &config.cavity, &config.constants).expect("index checked above");
        let sigma = (2.0 * std::f64::consts::PI * config.constants.hbar * omega).sqrt();
        let amp = real.amplitudes(id);
        a.push(amp.a / sigma);
        b.push(amp.b / sigma);
    }
    Ok(FieldStatsReport {
        seed: config.seed,
        n_start,
        modes,
        a: summarize(&a),
        b: summarize(&b),
    })
}

/// CSV of raw coefficients: `n,direction,polarization,omega,A,B`.
pub fn dump_modes<W: Write>(config: &RunConfig, n_start: u64, modes: u64, mut out: W) -> io::Result<()> {
    let real = FieldRealization::new(config.seed, config.cavity, config.constants);
    writeln!(out, "n,direction,polarization,omega,A,B")?;
    for id in mode_ids(n_start, modes) {
        if id.n > real.n_max {
            break;
        }
        let omega = id.n as f64 * real.omega_min();
        let amp = real.amplitudes(id);
        writeln!(
            out,
            "{},{},{},{:.16e},{:.16e},{:.16e}",
            id.n,
            id.direction.label(),
            id.polarization.label(),
            omega,
            amp.a,
            amp.b
        )?;
    }
    Ok(())
}
