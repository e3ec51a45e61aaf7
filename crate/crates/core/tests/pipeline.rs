use sedsim::config::{CavityConfig, RunConfig};
use sedsim::dynamics::ParticleState;
use sedsim::ensemble::{run_campaign, run_single, RunOptions};
use sedsim::field::{window_indices, FieldRealization};
use sedsim::physics::{bohr_radius, PhysicalConstants, ANGSTROM};

fn quiet(mut c: RunConfig) -> RunConfig {
    c.progress_interval = 0.0;
    c.checkpoint_interval = 0.0;
    c
}

#[test]
fn config_round_trips_through_json() {
    let mut c = RunConfig::default();
    c.seeds = vec![3, 1, 4];
    c.cavity = CavityConfig::reduced();
    let text = serde_json::to_string(&c).unwrap();
    let back: RunConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, c);
    assert!(serde_json::from_str::<RunConfig>(r#"{"cavity": {"l_w": 1.0}}"#).is_err());
    let partial: RunConfig = serde_json::from_str(r#"{"integrator": {"rel_tol": 1e-10}}"#).unwrap();
    assert_eq!(partial.integrator.rel_tol, 1e-10);
    assert_eq!(partial.integrator.safety, RunConfig::default().integrator.safety);
}

#[test]
fn reference_window_at_bohr_radius() {
    let k = PhysicalConstants::default();
    let real = FieldRealization::new(1, CavityConfig::default(), k);
    let a = bohr_radius(&k);
    let w = window_indices(a, 0.03, &real).unwrap();
    let omega = |r: f64| (k.e * k.e / (k.m * r * r * r)).sqrt();
    let w0 = 2.0 * std::f64::consts::PI * k.c / CavityConfig::default().l_z;
    assert_eq!(w.n_lo, (omega(1.03 * a) / w0).ceil() as u64);
    assert_eq!(w.n_hi, (omega(0.97 * a) / w0).floor() as u64);
    // about 8×10³ lattice frequencies per direction and polarization
    assert!((w.len() as f64 / 8.0e3 - 1.0).abs() < 0.05, "{w:?}");
}

#[test]
fn unperturbed_orbit_fills_one_bin() {
    let mut c = quiet(RunConfig::default()).kepler();
    c.r0 = 0.525 * ANGSTROM;
    c.t_end = 5e-15;
    c.snapshot_times = vec![1e-15, 5e-15];
    let res = run_campaign(&c, &[1, 2], &RunOptions::default()).unwrap();
    let d = res.combined.normalize().unwrap();
    let peak = d.points.iter().max_by(|a, b| a.p.total_cmp(&b.p)).unwrap();
    assert!((peak.r - 0.525 * ANGSTROM).abs() < 0.01 * ANGSTROM);
    assert!((peak.p * d.bin_width - 1.0).abs() < 1e-12);
    for run in &res.runs {
        assert!((run.final_state.radius() / c.r0 - 1.0).abs() < 1e-8);
    }
}

#[test]
fn same_seed_same_trajectory_across_calls() {
    let mut c = quiet(RunConfig::default());
    c.t_end = 3e-16;
    c.snapshot_times.clear();
    let a = run_single(&c, 21, &RunOptions::default()).unwrap();
    let b = run_single(&c, 21, &RunOptions::default()).unwrap();
    let other = run_single(&c, 22, &RunOptions::default()).unwrap();
    assert_eq!(a.final_state, b.final_state);
    assert_ne!(a.final_state, other.final_state);
    let start = ParticleState::circular(c.r0, &c.constants);
    assert_ne!(a.final_state.position, start.position);
}
