//! Run configuration records. Every field has a JSON key; omitted keys fall
//! back to the defaults below, which reproduce the reference cavity and
//! initial condition (37.4 Å × 37.4 Å × 40 850 000 Å, f = 0.03, r0 = 0.53 Å).

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::integrator::IntegratorConfig;
use crate::physics::{circular_frequency, PhysicalConstants, ANGSTROM};

/// Rectilinear cavity. Only the ±ẑ lattice along `l_z` is populated; `l_x`
/// and `l_y` enter through the normalisation volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityConfig {
    pub l_x: f64,
    pub l_y: f64,
    pub l_z: f64,
    /// Smallest resolved circular-orbit radius; fixes the top of the lattice.
    pub r_cutoff: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            l_x: 37.4 * ANGSTROM,
            l_y: 37.4 * ANGSTROM,
            l_z: 40_850_000.0 * ANGSTROM,
            r_cutoff: 0.1 * ANGSTROM,
        }
    }
}

impl CavityConfig {
    /// The shortened cavity used for full-summation comparisons (L_z = 4085 Å).
    pub fn reduced() -> Self {
        Self {
            l_z: 4085.0 * ANGSTROM,
            ..Self::default()
        }
    }

    pub fn volume(&self) -> f64 {
        self.l_x * self.l_y * self.l_z
    }

    /// 2πc/L_z, the lattice spacing and lowest mode frequency.
    pub fn omega_min(&self, constants: &PhysicalConstants) -> f64 {
        2.0 * std::f64::consts::PI * constants.c / self.l_z
    }

    pub fn omega_max(&self, constants: &PhysicalConstants) -> f64 {
        circular_frequency(self.r_cutoff, constants).unwrap_or(0.0)
    }

    pub fn validate(&self, constants: &PhysicalConstants) -> Result<(), ConfigError> {
        for (key, v) in [
            ("cavity.l_x", self.l_x),
            ("cavity.l_y", self.l_y),
            ("cavity.l_z", self.l_z),
            ("cavity.r_cutoff", self.r_cutoff),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(key, format!("must be positive, got {v:e}")));
            }
        }
        if self.l_z < self.l_x || self.l_z < self.l_y {
            return Err(ConfigError::new(
                "cavity.l_z",
                "must be at least as long as l_x and l_y",
            ));
        }
        if self.omega_max(constants) < self.omega_min(constants) {
            return Err(ConfigError::new(
                "cavity.r_cutoff",
                "cutoff frequency lies below the lowest cavity mode; no modes would exist",
            ));
        }
        Ok(())
    }
}

/// How the zero-point field sum is restricted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FieldMode {
    /// Only modes resonant with circular orbits in [r(1−f), r(1+f)].
    #[default]
    Window,
    /// Every lattice mode up to ω_max.
    Full,
}

impl std::str::FromStr for FieldMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "window" => Ok(Self::Window),
            "full" => Ok(Self::Full),
            other => Err(format!("unknown field mode `{other}` (expected window|full)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramConfig {
    pub bin_width: f64,
    pub r_max: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            bin_width: 0.01 * ANGSTROM,
            r_max: 5.0 * ANGSTROM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    /// Simulated-time spacing of the (t, r) trajectory summary.
    pub stride: f64,
    /// Write every accepted step (t, x, y, vx, vy, r, dt). Large.
    pub per_step: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            stride: 1.0e-15,
            per_step: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub constants: PhysicalConstants,
    pub cavity: CavityConfig,
    pub window_fraction: f64,
    pub field_mode: FieldMode,
    /// Base seed; used alone for single runs.
    pub seed: u64,
    /// Campaign size when `seeds` is empty: seeds are `seed, seed+1, …`.
    pub runs: usize,
    /// Explicit campaign seed list; overrides `seed`/`runs` when non-empty.
    pub seeds: Vec<u64>,
    pub r0: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub integrator: IntegratorConfig,
    pub histogram: HistogramConfig,
    pub r_min_guard: f64,
    pub r_max_guard: f64,
    pub radiation_reaction: bool,
    /// Multiplies every field amplitude. 0 switches the field off.
    pub field_scale: f64,
    pub trace: TraceConfig,
    /// Simulated seconds between checkpoints (0 disables).
    pub checkpoint_interval: f64,
    /// Wall-clock seconds between progress lines on stderr (0 disables).
    pub progress_interval: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            constants: PhysicalConstants::default(),
            cavity: CavityConfig::default(),
            window_fraction: 0.03,
            field_mode: FieldMode::Window,
            seed: 1,
            runs: 11,
            seeds: Vec::new(),
            r0: 0.53 * ANGSTROM,
            t_end: 7.252e-12,
            snapshot_times: vec![1.417e-12, 4.500e-12, 5.705e-12, 7.252e-12],
            integrator: IntegratorConfig::default(),
            histogram: HistogramConfig::default(),
            r_min_guard: 0.05 * ANGSTROM,
            r_max_guard: 500.0 * ANGSTROM,
            radiation_reaction: true,
            field_scale: 1.0,
            trace: TraceConfig::default(),
            checkpoint_interval: 1.0e-12,
            progress_interval: 30.0,
        }
    }
}

impl RunConfig {
    /// Effective campaign seed list.
    pub fn campaign_seeds(&self) -> Vec<u64> {
        if !self.seeds.is_empty() {
            self.seeds.clone()
        } else {
            (0..self.runs as u64).map(|i| self.seed.wrapping_add(i)).collect()
        }
    }

    /// Fields off, radiation reaction on.
    pub fn radiative_decay(mut self) -> Self {
        self.field_scale = 0.0;
        self.radiation_reaction = true;
        self
    }

    /// Fields off, radiation reaction off: a pure Kepler problem.
    pub fn kepler(mut self) -> Self {
        self.field_scale = 0.0;
        self.radiation_reaction = false;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(k) = self.constants.invalid_field() {
            return Err(ConfigError::new(format!("constants.{k}"), "must be positive"));
        }
        self.cavity.validate(&self.constants)?;
        let f = self.window_fraction;
        if !(f.is_finite() && (0.0..1.0).contains(&f)) {
            return Err(ConfigError::new("window_fraction", format!("must lie in [0, 1), got {f}")));
        }
        if !(self.field_scale.is_finite() && self.field_scale >= 0.0) {
            return Err(ConfigError::new("field_scale", "must be finite and non-negative"));
        }
        if !(self.r_min_guard > 0.0 && self.r_min_guard < self.r0 && self.r0 < self.r_max_guard) {
            return Err(ConfigError::new(
                "r0",
                format!(
                    "must satisfy r_min_guard < r0 < r_max_guard ({:e} < {:e} < {:e})",
                    self.r_min_guard, self.r0, self.r_max_guard
                ),
            ));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(ConfigError::new("t_end", "must be finite and non-negative"));
        }
        if self.snapshot_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::new("snapshot_times", "must be strictly ascending"));
        }
        if let Some(&bad) = self
            .snapshot_times
            .iter()
            .find(|&&t| !(t > 0.0 && t <= self.t_end))
        {
            return Err(ConfigError::new(
                "snapshot_times",
                format!("{bad:e} is outside (0, t_end = {:e}]", self.t_end),
            ));
        }
        self.integrator.validate()?;
        let h = &self.histogram;
        if !(h.bin_width > 0.0 && h.r_max > h.bin_width && h.bin_width.is_finite() && h.r_max.is_finite()) {
            return Err(ConfigError::new("histogram.bin_width", "need 0 < bin_width < r_max"));
        }
        if !(self.trace.stride.is_finite() && self.trace.stride > 0.0) {
            return Err(ConfigError::new("trace.stride", "must be positive"));
        }
        if !(self.checkpoint_interval.is_finite() && self.checkpoint_interval >= 0.0) {
            return Err(ConfigError::new("checkpoint_interval", "must be non-negative"));
        }
        if !(self.progress_interval.is_finite() && self.progress_interval >= 0.0) {
            return Err(ConfigError::new("progress_interval", "must be non-negative"));
        }
        if self.seeds.is_empty() && self.runs == 0 {
            return Err(ConfigError::new("runs", "must be at least 1"));
        }
        let seeds = self.campaign_seeds();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::new("seeds", "seeds must be distinct"));
        }
        Ok(())
    }
}
