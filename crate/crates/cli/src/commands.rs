use std::io::{self, Write};
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use sedsim::bench::{bench_window_vs_full, BenchError, BenchOptions};
use sedsim::checks::{decay_check, dump_modes, field_stats, kepler_check, CheckError};
use sedsim::ensemble::{run_campaign, CampaignError, RunOptions};
use sedsim::physics::ANGSTROM;

use crate::output::{ensure_dir, write_csv, write_density, write_json, write_manifest};
use crate::{CliError, Command, CommandSpec};

pub const DEFAULT_OUT: &str = "sedsim-out";

pub const SLOPE_TOLERANCE: f64 = 0.01;
pub const DRIFT_TOLERANCE: f64 = 1e-8;
pub const VARIANCE_BAND: (f64, f64) = (0.97, 1.03);
pub const MEAN_SIGMAS: f64 = 3.0;
pub const BENCH_MAX_DEVIATION: f64 = 0.01;
pub const BENCH_MIN_SPEEDUP: f64 = 10.0;

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Config(c) => CliError::Config(c),
            CampaignError::Io { path, source } => CliError::io(&path, source),
            CampaignError::Checkpoint { path, source } => CliError::io(&path, source),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<CheckError> for CliError {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::Config(c) => CliError::Config(c),
            CheckError::Integration(t) => CliError::Numerical(t.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Config(c) => CliError::Config(c),
            BenchError::Terminated(t) => CliError::Numerical(t.to_string()),
        }
    }
}

/// Runs the subcommand on a pool of `spec.workers` threads.
pub fn dispatch(spec: &CommandSpec) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", spec.workers)))?;
    pool.install(|| match &spec.command {
        Command::Run => run(spec),
        Command::Decay { r_stop, sample_interval } => decay(spec, *r_stop, *sample_interval),
        Command::Kepler { orbits } => kepler(spec, *orbits),
        Command::Fieldstats { n_start, modes } => fieldstats(spec, *n_start, *modes),
        Command::Bench {
            bench_lz,
            horizon,
            samples,
            repeats,
        } => bench(
            spec,
            BenchOptions {
                l_z: *bench_lz,
                horizon: *horizon,
                samples: *samples,
                repeats: *repeats,
            },
        ),
        Command::DumpModes { n_start, modes } => dump(spec, *n_start, *modes),
    })
}

/// Writes manifest and report when an output directory was given.
fn record(spec: &CommandSpec, report: &impl Serialize) -> Result<(), CliError> {
    if let Some(dir) = &spec.out_dir {
        ensure_dir(dir)?;
        write_manifest(dir, spec, &[spec.config.seed])?;
        write_json(&dir.join("report.json"), report)?;
    }
    Ok(())
}

fn verdict(ok: bool, what: impl FnOnce() -> String) -> Result<(), CliError> {
    println!("result: {}", if ok { "PASS" } else { "FAIL" });
    if ok {
        Ok(())
    } else {
        Err(CliError::CheckFailed(what()))
    }
}

fn run(spec: &CommandSpec) -> Result<(), CliError> {
    let config = &spec.config;
    let out = spec.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let runs_dir = out.join("runs");
    ensure_dir(&runs_dir)?;
    let seeds = config.campaign_seeds();
    write_manifest(&out, spec, &seeds)?;
    let options = RunOptions {
        checkpoint_dir: Some(out.join("checkpoints")),
        trace_dir: Some(runs_dir.clone()),
    };
    let result = run_campaign(config, &seeds, &options)?;

    for run in &result.runs {
        write_csv(
            &runs_dir.join(format!("seed_{}_trajectory.csv", run.seed)),
            "t,r",
            run.trajectory.iter().map(|&(t, r)| [t, r]),
        )?;
        if run.histogram.total_time() > 0.0 {
            let density = run.histogram.normalize().expect("non-empty histogram");
            write_density(
                &runs_dir.join(format!("seed_{}_histogram.csv", run.seed)),
                &density,
                &config.constants,
                false,
            )?;
        }
    }
    for (i, snap) in result.snapshots.iter().enumerate() {
        write_density(&out.join(format!("snapshot_{i}.csv")), &snap.density, &config.constants, true)?;
        println!(
            "snapshot {i}: t = {:.4e} s (mean covered {:.4e} s), runs = {}, l1_to_qm = {:.6}, peak = {:.4} Å",
            snap.t_nominal,
            snap.t_avg,
            snap.run_count,
            snap.l1_to_qm,
            snap.density.peak_radius().unwrap_or(f64::NAN) / ANGSTROM
        );
    }
    let events: Vec<_> = result
        .runs
        .iter()
        .map(|r| {
            json!({
                "seed": r.seed,
                "end_time": r.end_time(),
                "final_radius": r.final_state.radius(),
                "r_min": r.r_min_seen,
                "r_max": r.r_max_seen,
                "termination": r.termination,
                "stats": r.stats,
            })
        })
        .collect();
    let combined = if result.combined.total_time() > 0.0 {
        let d = result.combined.normalize().expect("non-empty histogram");
        write_density(&out.join("combined.csv"), &d, &config.constants, true)?;
        Some(json!({
            "l1_to_qm": sedsim::histogram::l1_to_qm(&d, sedsim::physics::bohr_radius(&config.constants)),
            "peak_radius": d.peak_radius(),
            "out_of_range_time": result.combined.out_of_range_time(),
        }))
    } else {
        None
    };
    let snapshots: Vec<_> = result
        .snapshots
        .iter()
        .map(|s| {
            json!({
                "t_nominal": s.t_nominal,
                "t_avg": s.t_avg,
                "l1_to_qm": s.l1_to_qm,
                "run_count": s.run_count,
                "peak_radius": s.density.peak_radius(),
            })
        })
        .collect();
    write_json(
        &out.join("metrics.json"),
        &json!({ "snapshots": snapshots, "combined": combined, "runs": events }),
    )?;

    let terminated: Vec<String> = result
        .runs
        .iter()
        .filter_map(|r| {
            r.termination
                .as_ref()
                .map(|t| format!("seed {} {} at t = {:.4e} s", r.seed, t.kind, t.t))
        })
        .collect();
    if terminated.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(terminated.join("; ")))
    }
}

fn decay(spec: &CommandSpec, r_stop: f64, sample_interval: f64) -> Result<(), CliError> {
    let rep = decay_check(&spec.config, r_stop * ANGSTROM, sample_interval)?;
    println!("fitted slope d(r^3)/dt   = {:.6e} cm^3/s", rep.fitted_slope);
    println!("analytic -4e^4/(m^2c^3)  = {:.6e} cm^3/s", rep.analytic_slope);
    println!("relative difference      = {:.3e}", rep.relative_slope_error);
    println!(
        "time to {:.3} Å           = {:.6e} s (analytic {:.6e} s)",
        r_stop, rep.decay_time, rep.analytic_decay_time
    );
    record(spec, &rep)?;
    let time_err = (rep.decay_time - rep.analytic_decay_time).abs() / rep.analytic_decay_time;
    verdict(rep.relative_slope_error < SLOPE_TOLERANCE && time_err < SLOPE_TOLERANCE, || {
        format!(
            "slope off by {:.3e}, decay time off by {time_err:.3e}",
            rep.relative_slope_error
        )
    })
}

fn kepler(spec: &CommandSpec, orbits: f64) -> Result<(), CliError> {
    let rep = kepler_check(&spec.config, orbits)?;
    println!("orbits                    = {}", rep.orbits);
    println!("max relative energy drift = {:.3e}", rep.energy_drift);
    println!("max relative L drift      = {:.3e}", rep.angular_momentum_drift);
    println!("accepted steps            = {}", rep.accepted_steps);
    record(spec, &rep)?;
    verdict(
        rep.energy_drift < DRIFT_TOLERANCE && rep.angular_momentum_drift < DRIFT_TOLERANCE,
        || format!("drift above {DRIFT_TOLERANCE:e}"),
    )
}

fn fieldstats(spec: &CommandSpec, n_start: u64, modes: u64) -> Result<(), CliError> {
    let rep = field_stats(&spec.config, n_start, modes)?;
    for (name, m) in [("A", &rep.a), ("B", &rep.b)] {
        println!(
            "{name}: variance / 2πħω = {:.5}, mean = {:.3e} σ ({:.2} standard errors)",
            m.variance_ratio, m.mean, m.mean_z
        );
    }
    record(spec, &rep)?;
    let within = |v: f64| v >= VARIANCE_BAND.0 && v <= VARIANCE_BAND.1;
    verdict(
        within(rep.a.variance_ratio)
            && within(rep.b.variance_ratio)
            && rep.a.mean_z < MEAN_SIGMAS
            && rep.b.mean_z < MEAN_SIGMAS,
        || "coefficient moments outside tolerance".into(),
    )
}

fn bench(spec: &CommandSpec, options: BenchOptions) -> Result<(), CliError> {
    let rep = bench_window_vs_full(&spec.config, &options)?;
    println!("lattice size                 = {}", rep.n_max);
    println!("covering window identical    = {}", rep.covering_identical);
    println!(
        "wall time full / window      = {:.4e} s / {:.4e} s (speedup {:.2})",
        rep.full.wall_seconds, rep.windowed.wall_seconds, rep.speedup
    );
    println!("max radial deviation / r0    = {:.4e}", rep.max_radial_deviation);
    println!("max position deviation / r0  = {:.4e}", rep.max_position_deviation);
    record(spec, &rep)?;
    verdict(
        rep.covering_identical && rep.max_radial_deviation < BENCH_MAX_DEVIATION && rep.speedup > BENCH_MIN_SPEEDUP,
        || "window approximation outside tolerance".into(),
    )
}

fn dump(spec: &CommandSpec, n_start: u64, modes: u64) -> Result<(), CliError> {
    match &spec.out_dir {
        Some(dir) => {
            ensure_dir(dir)?;
            write_manifest(dir, spec, &[spec.config.seed])?;
            let path = dir.join("modes.csv");
            let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            let mut w = io::BufWriter::new(file);
            dump_modes(&spec.config, n_start, modes, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(&path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            dump_modes(&spec.config, n_start, modes, &mut lock)
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))
        }
    }
}
