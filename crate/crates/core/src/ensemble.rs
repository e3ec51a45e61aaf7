//! Multi-seed trajectory campaigns and their radial densities.
//!
//! Each run starts on the circular orbit through (r0, 0), moving
//! counter-clockwise, and is advanced to `t_end` while residence time is
//! attributed to the bin of the mid-step radius. Snapshot times truncate
//! steps so every snapshot histogram covers exactly [0, t_snap].

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{FieldMode, RunConfig};
use crate::dynamics::{DynamicsConfig, ElectronSystem, ParticleState};
use crate::error::{ConfigError, HistogramError};
use crate::field::FieldRealization;
use crate::histogram::{l1_to_qm, DensityTable, RadialHistogram};
use crate::integrator::{Integrator, IntegratorStats, Termination, TerminationKind};
use crate::physics::{bohr_radius, ANGSTROM};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Histogram(#[from] HistogramError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("checkpoint {path} is unreadable: {source}")]
    Checkpoint { path: PathBuf, source: serde_json::Error },
    #[error("checkpoint {0} was written with a different configuration")]
    CheckpointMismatch(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Where and how a run reports beyond its return value.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for `seed_<s>.json` checkpoints; resumes from them if present.
    pub checkpoint_dir: Option<PathBuf>,
    /// Directory for per-step traces (only when `trace.per_step` is set).
    pub trace_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationRecord {
    pub kind: TerminationKind,
    pub t: f64,
    pub r: f64,
    pub detail: String,
}

impl From<&Termination> for TerminationRecord {
    fn from(t: &Termination) -> Self {
        Self {
            kind: t.kind,
            t: t.state.t,
            r: t.state.radius(),
            detail: t.detail.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub final_state: ParticleState,
    pub termination: Option<TerminationRecord>,
    pub stats: IntegratorStats,
    /// One per configured snapshot time; runs that ended early repeat their
    /// last histogram.
    pub snapshots: Vec<RadialHistogram>,
    pub histogram: RadialHistogram,
    /// (t, r) at the configured stride.
    pub trajectory: Vec<(f64, f64)>,
    pub r_min_seen: f64,
    pub r_max_seen: f64,
}

impl RunOutcome {
    pub fn end_time(&self) -> f64 {
        self.final_state.t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotReport {
    pub t_nominal: f64,
    /// Mean over runs of the time actually covered (earlier for terminated runs).
    pub t_avg: f64,
    pub density: DensityTable,
    pub l1_to_qm: f64,
    pub run_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub runs: Vec<RunOutcome>,
    pub snapshots: Vec<SnapshotReport>,
    /// Final histograms of all runs merged in seed-list order.
    pub combined: RadialHistogram,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    seed: u64,
    config: serde_json::Value,
    state: ParticleState,
    dt: f64,
    stats: IntegratorStats,
    histogram: RadialHistogram,
    snapshots: Vec<RadialHistogram>,
    trajectory: Vec<(f64, f64)>,
    next_sample: f64,
    r_min_seen: f64,
    r_max_seen: f64,
    termination: Option<TerminationRecord>,
    step_trace_len: u64,
}

/// Config fields that may change between a checkpoint and its resumption.
fn resumable_identity(config: &RunConfig) -> serde_json::Value {
    let mut c = config.clone();
    c.t_end = 0.0;
    c.progress_interval = 0.0;
    c.checkpoint_interval = 0.0;
    c.runs = 0;
    c.seeds.clear();
    serde_json::to_value(c).expect("config serializes")
}

fn checkpoint_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed}.json"))
}

fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<(), CampaignError> {
    let tmp = path.with_extension("json.tmp");
    let text = serde_json::to_vec(ck).expect("checkpoint serializes");
    fs::write(&tmp, text).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn read_checkpoint(path: &Path) -> Result<Option<Checkpoint>, CampaignError> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|source| CampaignError::Checkpoint {
                path: path.to_path_buf(),
                source,
            }),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(path)(e)),
    }
}

/// Builds the field realization a run with `seed` uses.
pub fn realization_for(config: &RunConfig, seed: u64) -> FieldRealization {
    let real = FieldRealization::new(seed, config.cavity, config.constants)
        .with_amplitude_scale(config.field_scale);
    if config.field_mode == FieldMode::Full && !real.is_silent() {
        real.with_table()
    } else {
        real
    }
}

struct RunState {
    state: ParticleState,
    histogram: RadialHistogram,
    snapshots: Vec<RadialHistogram>,
    trajectory: Vec<(f64, f64)>,
    next_sample: f64,
    r_min_seen: f64,
    r_max_seen: f64,
    termination: Option<TerminationRecord>,
}

/// Evolves one seed from r0 to `config.t_end`.
pub fn run_single(config: &RunConfig, seed: u64, options: &RunOptions) -> Result<RunOutcome, CampaignError> {
    config.validate()?;
    let k = &config.constants;
    let realization = realization_for(config, seed);
    let mut system = ElectronSystem::new(&realization, DynamicsConfig::from(config));
    let mut integrator = Integrator::new(config.integrator).with_guards(config.r_min_guard, config.r_max_guard);

    let start = ParticleState::circular(config.r0, k);
    let mut run = RunState {
        state: start,
        histogram: RadialHistogram::from_config(&config.histogram)?,
        snapshots: Vec::new(),
        trajectory: vec![(0.0, config.r0)],
        next_sample: config.trace.stride,
        r_min_seen: config.r0,
        r_max_seen: config.r0,
        termination: None,
    };

    let identity = resumable_identity(config);
    let ck_path = options.checkpoint_dir.as_ref().map(|d| checkpoint_path(d, seed));
    let mut step_trace_len = 0u64;
    if let Some(path) = &ck_path {
        if let Some(ck) = read_checkpoint(path)? {
            if ck.seed != seed || ck.config != identity {
                return Err(CampaignError::CheckpointMismatch(path.clone()));
            }
            run = RunState {
                state: ck.state,
                histogram: ck.histogram,
                snapshots: ck.snapshots,
                trajectory: ck.trajectory,
                next_sample: ck.next_sample,
                r_min_seen: ck.r_min_seen,
                r_max_seen: ck.r_max_seen,
                termination: ck.termination,
            };
            integrator = integrator.with_dt(ck.dt);
            integrator.stats = ck.stats;
            step_trace_len = ck.step_trace_len;
        }
    }

    let mut step_trace = match (&options.trace_dir, config.trace.per_step) {
        (Some(dir), true) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            let path = dir.join(format!("seed_{seed}_steps.csv"));
            let file = fs::OpenOptions::new()
                .create(true)
                .write(true)
                .truncate(false)
                .open(&path)
                .map_err(io_err(&path))?;
            file.set_len(step_trace_len).map_err(io_err(&path))?;
            let mut w = BufWriter::new(file);
            if step_trace_len == 0 {
                writeln!(w, "t,x,y,vx,vy,r,dt").map_err(io_err(&path))?;
            } else {
                use std::io::Seek;
                w.seek(io::SeekFrom::End(0)).map_err(io_err(&path))?;
            }
            Some((path, w))
        }
        _ => None,
    };

    let save = |run: &RunState,
                integrator: &Integrator,
                trace: &mut Option<(PathBuf, BufWriter<fs::File>)>|
     -> Result<(), CampaignError> {
        let Some(path) = &ck_path else { return Ok(()) };
        let mut trace_len = 0;
        if let Some((tp, w)) = trace {
            w.flush().map_err(io_err(tp))?;
            trace_len = w.get_ref().metadata().map_err(io_err(tp))?.len();
        }
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        write_checkpoint(
            path,
            &Checkpoint {
                seed,
                config: identity.clone(),
                state: run.state,
                dt: integrator.dt(),
                stats: integrator.stats,
                histogram: run.histogram.clone(),
                snapshots: run.snapshots.clone(),
                trajectory: run.trajectory.clone(),
                next_sample: run.next_sample,
                r_min_seen: run.r_min_seen,
                r_max_seen: run.r_max_seen,
                termination: run.termination.clone(),
                step_trace_len: trace_len,
            },
        )
    };

    let stride = config.trace.stride;
    let mut next_checkpoint = if config.checkpoint_interval > 0.0 {
        ((run.state.t / config.checkpoint_interval).floor() + 1.0) * config.checkpoint_interval
    } else {
        f64::INFINITY
    };
    let wall = Instant::now();
    let mut next_progress = config.progress_interval;

    while run.termination.is_none() && run.state.t < config.t_end {
        let limit = config
            .snapshot_times
            .get(run.snapshots.len())
            .copied()
            .unwrap_or(config.t_end);
        let before = run.state;
        let next = match integrator.step(&before, limit, &mut system) {
            Ok(s) => s,
            Err(term) => {
                run.termination = Some(TerminationRecord::from(&term));
                break;
            }
        };
        let dt = next.t - before.t;
        let (r0, r1) = (before.radius(), next.radius());
        run.histogram.accumulate(0.5 * (r0 + r1), dt);
        run.r_min_seen = run.r_min_seen.min(r1);
        run.r_max_seen = run.r_max_seen.max(r1);
        if let Some((path, w)) = &mut step_trace {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                next.t, next.position.x, next.position.y, next.velocity.x, next.velocity.y, r1, dt
            )
            .map_err(io_err(path))?;
        }
        run.state = next;
        if next.t >= run.next_sample {
            run.trajectory.push((next.t, r1));
            run.next_sample = ((next.t / stride).floor() + 1.0) * stride;
        }
        if let Err(term) = integrator.check_guards(&next) {
            run.termination = Some(TerminationRecord::from(&term));
            break;
        }
        while run.snapshots.len() < config.snapshot_times.len()
            && run.state.t >= config.snapshot_times[run.snapshots.len()]
        {
            run.snapshots.push(run.histogram.clone());
        }
        if run.state.t >= next_checkpoint {
            save(&run, &integrator, &mut step_trace)?;
            next_checkpoint = ((run.state.t / config.checkpoint_interval).floor() + 1.0) * config.checkpoint_interval;
        }
        if config.progress_interval > 0.0 && wall.elapsed().as_secs_f64() >= next_progress {
            next_progress += config.progress_interval;
            eprintln!(
                "[seed {seed}] t = {:.4e} s ({:.1}%), r = {:.4} Å, steps = {}",
                run.state.t,
                100.0 * run.state.t / config.t_end,
                r1 / ANGSTROM,
                integrator.stats.accepted
            );
        }
    }

    if run.trajectory.last().is_some_and(|&(t, _)| t < run.state.t) {
        run.trajectory.push((run.state.t, run.state.radius()));
    }
    while run.snapshots.len() < config.snapshot_times.len() && run.termination.is_some() {
        run.snapshots.push(run.histogram.clone());
    }
    if let Some((path, w)) = &mut step_trace {
        w.flush().map_err(io_err(path))?;
    }
    if ck_path.is_some() && (run.state.t > start.t || run.termination.is_some()) {
        save(&run, &integrator, &mut step_trace)?;
    }

    Ok(RunOutcome {
        seed,
        final_state: run.state,
        termination: run.termination,
        stats: integrator.stats,
        snapshots: run.snapshots,
        histogram: run.histogram,
        trajectory: run.trajectory,
        r_min_seen: run.r_min_seen,
        r_max_seen: run.r_max_seen,
    })
}

/// Merged density at each snapshot time, combining runs in list order.
pub fn snapshot_reports(config: &RunConfig, runs: &[RunOutcome]) -> Result<Vec<SnapshotReport>, CampaignError> {
    let bohr = bohr_radius(&config.constants);
    let mut reports = Vec::with_capacity(config.snapshot_times.len());
    for (i, &t_nominal) in config.snapshot_times.iter().enumerate() {
        let mut merged = RadialHistogram::from_config(&config.histogram)?;
        let mut t_sum = 0.0;
        let mut count = 0;
        for run in runs {
            if let Some(h) = run.snapshots.get(i) {
                merged.merge_from(h)?;
                t_sum += t_nominal.min(run.end_time());
                count += 1;
            }
        }
        if count == 0 || merged.total_time() == 0.0 {
            continue;
        }
        let density = merged.normalize()?;
        reports.push(SnapshotReport {
            t_nominal,
            t_avg: t_sum / count as f64,
            l1_to_qm: l1_to_qm(&density, bohr),
            density,
            run_count: count,
        });
    }
    Ok(reports)
}

/// Runs every seed (in parallel on the current rayon pool) and merges.
pub fn run_campaign(config: &RunConfig, seeds: &[u64], options: &RunOptions) -> Result<CampaignResult, CampaignError> {
    config.validate()?;
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(ConfigError::new("seeds", "seeds must be distinct").into());
    }
    let runs = seeds
        .par_iter()
        .map(|&s| run_single(config, s, options))
        .collect::<Result<Vec<_>, _>>()?;
    let snapshots = snapshot_reports(config, &runs)?;
    let mut combined = RadialHistogram::from_config(&config.histogram)?;
    for r in &runs {
        combined.merge_from(&r.histogram)?;
    }
    Ok(CampaignResult {
        runs,
        snapshots,
        combined,
    })
}
