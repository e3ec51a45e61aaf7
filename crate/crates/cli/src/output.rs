use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use sedsim::histogram::DensityTable;
use sedsim::integrator::TABLEAU_NAME;
use sedsim::physics::{bohr_radius, qm_radial_density, PhysicalConstants};

use crate::{CliError, CommandSpec};

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Writes a CSV with `header` and one row per item, floats at 17 significant digits.
pub fn write_csv<I, R>(path: &Path, header: &str, rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let body = || -> std::io::Result<()> {
        writeln!(w, "{header}")?;
        for row in rows {
            let mut first = true;
            for x in row.as_ref() {
                if !first {
                    w.write_all(b",")?;
                }
                first = false;
                write!(w, "{x:.16e}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    };
    body().map_err(|e| CliError::io(path, e))
}

pub fn write_density(path: &Path, density: &DensityTable, constants: &PhysicalConstants, with_qm: bool) -> Result<(), CliError> {
    let bohr = bohr_radius(constants);
    if with_qm {
        write_csv(
            path,
            "r_center,P_sim,P_qm",
            density.points.iter().map(|p| [p.r, p.p, qm_radial_density(p.r, bohr)]),
        )
    } else {
        write_csv(path, "r_center,P", density.points.iter().map(|p| [p.r, p.p]))
    }
}

/// Everything needed to repeat the invocation bit for bit.
pub fn write_manifest(dir: &Path, spec: &CommandSpec, seeds: &[u64]) -> Result<(), CliError> {
    let manifest = json!({
        "program": "sedsim",
        "version": env!("CARGO_PKG_VERSION"),
        "command": spec.command.name(),
        "defaults": spec.defaults,
        "config_file": spec.config_path,
        "overrides": spec.overrides,
        "config": spec.config,
        "seeds": seeds,
        "workers": spec.workers,
        "integrator": TABLEAU_NAME,
        "initial_condition": "circular orbit from (r0, 0), counter-clockwise at circular speed",
        "radius_attribution": "midpoint radius of each accepted step",
        "window_refresh": "window fixed at the radius of each step start",
    });
    write_json(&dir.join("manifest.json"), &manifest)
}
