//! Windowed field evaluation against the full mode sum on a short cavity.
//!
//! Three trajectories share seed, initial state and sample times:
//! the full sum read from a precomputed table, the same full range pushed
//! through the sliding window cache, and the radius-dependent window.

use std::time::Instant;

use serde::Serialize;

use crate::config::{FieldMode, RunConfig};
use crate::dynamics::{DynamicsConfig, ElectronSystem, ParticleState, WindowPolicy};
use crate::ensemble::realization_for;
use crate::error::ConfigError;
use crate::integrator::{Integrator, IntegratorStats, Termination};
use crate::physics::ANGSTROM;

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    /// Cavity length along z (cm); the transverse sizes come from the config.
    pub l_z: f64,
    pub horizon: f64,
    /// Comparison points, evenly spaced over the horizon.
    pub samples: usize,
    /// Each timing is the best of this many repetitions.
    pub repeats: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            l_z: 4085.0 * ANGSTROM,
            horizon: 1.0e-14,
            samples: 1000,
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryTiming {
    pub wall_seconds: f64,
    pub stats: IntegratorStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub l_z: f64,
    pub horizon: f64,
    pub n_max: u64,
    pub window_fraction: f64,
    pub full: TrajectoryTiming,
    pub covering: TrajectoryTiming,
    pub windowed: TrajectoryTiming,
    /// Covering-window samples equal the full-sum samples bit for bit.
    pub covering_identical: bool,
    /// max |r_window − r_full| / r0 over the samples.
    pub max_radial_deviation: f64,
    /// max |z_window − z_full| / r0 over the samples.
    pub max_position_deviation: f64,
    /// Full-sum wall time over windowed wall time.
    pub speedup: f64,
}

fn sampled_run(
    config: &RunConfig,
    realization: &crate::field::FieldRealization,
    policy: WindowPolicy,
    times: &[f64],
) -> Result<(Vec<ParticleState>, IntegratorStats), Termination> {
    let mut system = ElectronSystem::new(realization, DynamicsConfig::from(config)).with_policy(policy);
    let mut integrator = Integrator::new(config.integrator);
    let mut state = ParticleState::circular(config.r0, &config.constants);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        state = integrator.advance(state, t, &mut system, |_, _, _| {})?;
        out.push(state);
    }
    Ok((out, integrator.stats))
}

fn timed(
    repeats: usize,
    mut run: impl FnMut() -> Result<(Vec<ParticleState>, IntegratorStats), Termination>,
) -> Result<(Vec<ParticleState>, TrajectoryTiming), Termination> {
    let mut best = f64::INFINITY;
    let mut last = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let r = run()?;
        best = best.min(start.elapsed().as_secs_f64());
        last = Some(r);
    }
    let (states, stats) = last.expect("at least one repetition");
    Ok((states, TrajectoryTiming { wall_seconds: best, stats }))
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("trajectory ended early: {0}")]
    Terminated(#[from] Termination),
}

pub fn bench_window_vs_full(config: &RunConfig, options: &BenchOptions) -> Result<BenchReport, BenchError> {
    let mut base = config.clone();
    base.cavity.l_z = options.l_z;
    base.t_end = options.horizon;
    base.snapshot_times.clear();
    base.validate()?;
    if !(options.horizon > 0.0) || options.samples == 0 {
        return Err(ConfigError::new("horizon", "need a positive horizon and at least one sample").into());
    }
    let times: Vec<f64> = (1..=options.samples)
        .map(|i| options.horizon * i as f64 / options.samples as f64)
        .collect();

    let mut full_cfg = base.clone();
    full_cfg.field_mode = FieldMode::Full;
    let full_real = realization_for(&full_cfg, base.seed);
    let everything = WindowPolicy::Fixed(full_real.full_window());
    let (full_states, full) = timed(options.repeats, || {
        sampled_run(&full_cfg, &full_real, WindowPolicy::FromRadius, &times)
    })?;

    let mut win_cfg = base.clone();
    win_cfg.field_mode = FieldMode::Window;
    let win_real = realization_for(&win_cfg, base.seed);
    let (cover_states, covering) = timed(options.repeats, || sampled_run(&win_cfg, &win_real, everything, &times))?;
    let (win_states, windowed) = timed(options.repeats, || {
        sampled_run(&win_cfg, &win_real, WindowPolicy::FromRadius, &times)
    })?;

    let r0 = base.r0;
    let mut max_radial: f64 = 0.0;
    let mut max_position: f64 = 0.0;
    for (w, f) in win_states.iter().zip(&full_states) {
        max_radial = max_radial.max((w.radius() - f.radius()).abs() / r0);
        max_position = max_position.max((w.position - f.position).norm() / r0);
    }

    Ok(BenchReport {
        seed: base.seed,
        l_z: options.l_z,
        horizon: options.horizon,
        n_max: full_real.n_max,
        window_fraction: base.window_fraction,
        covering_identical: cover_states == full_states && covering.stats == full.stats,
        speedup: full.wall_seconds / windowed.wall_seconds,
        full,
        covering,
        windowed,
        max_radial_deviation: max_radial,
        max_position_deviation: max_position,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_bench_is_consistent() {
        let mut c = RunConfig::default();
        c.seed = 5;
        let report = bench_window_vs_full(
            &c,
            &BenchOptions {
                horizon: 2.0e-16,
                samples: 10,
                repeats: 1,
                ..BenchOptions::default()
            },
        )
        .unwrap();
        assert!(report.covering_identical);
        assert_eq!(report.covering.stats, report.full.stats);
        assert!(report.n_max > 100 && report.n_max < 120);
        assert!(report.max_radial_deviation.is_finite() && report.max_position_deviation >= report.max_radial_deviation);
        assert!(report.full.stats.accepted > 0 && report.speedup > 0.0);
    }

    #[test]
    fn bad_horizon_is_rejected() {
        let opts = BenchOptions {
            horizon: 0.0,
            ..BenchOptions::default()
        };
        assert!(matches!(
            bench_window_vs_full(&RunConfig::default(), &opts),
            Err(BenchError::Config(_))
        ));
    }
}
