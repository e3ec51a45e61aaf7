//! Zero-point radiation in the quasi-one-dimensional cavity.
//!
//! Only waves travelling along ±ẑ are kept, on the lattice ω_n = n·2πc/L_z,
//! n = 1..=n_max with n_max = ⌊ω_max/ω_min⌋. Each (n, direction, polarization)
//! carries a pair of real Gaussian coefficients (A, B) with ⟨A²⟩ = ⟨B²⟩ = 2πħω_n,
//! drawn from a counter-keyed stream so the whole realization is a pure
//! function of the seed and never has to be stored.
//!
//! The electron is confined to z = 0, so k·x vanishes for every retained wave
//! and the phase of mode n is simply −ω_n t.

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::config::CavityConfig;
use crate::error::DomainError;
use crate::physics::{circular_frequency, PhysicalConstants};
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    PlusZ,
    MinusZ,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::PlusZ, Direction::MinusZ];

    pub fn unit(self) -> Vector3<f64> {
        match self {
            Direction::PlusZ => Vector3::z(),
            Direction::MinusZ => -Vector3::z(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::PlusZ => "+z",
            Direction::MinusZ => "-z",
        }
    }

    fn index(self) -> u64 {
        match self {
            Direction::PlusZ => 0,
            Direction::MinusZ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    X,
    Y,
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::X, Polarization::Y];

    /// ε̂ for this polarization; the same pair serves both propagation directions.
    pub fn unit(self) -> Vector3<f64> {
        match self {
            Polarization::X => Vector3::x(),
            Polarization::Y => Vector3::y(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Polarization::X => "x",
            Polarization::Y => "y",
        }
    }

    fn index(self) -> u64 {
        match self {
            Polarization::X => 0,
            Polarization::Y => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeId {
    pub n: u64,
    pub direction: Direction,
    pub polarization: Polarization,
}

impl ModeId {
    pub fn new(n: u64, direction: Direction, polarization: Polarization) -> Self {
        Self {
            n,
            direction,
            polarization,
        }
    }

    fn counter(&self) -> u64 {
        ((self.n - 1) * 2 + self.direction.index()) * 2 + self.polarization.index()
    }
}

/// Expansion coefficients of one wave, before the 1/√V normalisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAmplitudes {
    pub a: f64,
    pub b: f64,
}

/// Inclusive range of lattice indices retained in the field sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowRange {
    pub n_lo: u64,
    pub n_hi: u64,
}

impl WindowRange {
    pub const EMPTY: WindowRange = WindowRange { n_lo: 1, n_hi: 0 };

    pub fn full(n_max: u64) -> Self {
        Self { n_lo: 1, n_hi: n_max }
    }

    pub fn is_empty(&self) -> bool {
        self.n_lo > self.n_hi
    }

    pub fn len(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            self.n_hi - self.n_lo + 1
        }
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.n_lo && n <= self.n_hi
    }

    /// True when every index of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &WindowRange) -> bool {
        self.is_empty() || (other.contains(self.n_lo) && other.contains(self.n_hi))
    }
}

/// ω_n = n·2πc/L_z.
pub fn mode_frequency(
    n: u64,
    cavity: &CavityConfig,
    constants: &PhysicalConstants,
) -> Result<f64, DomainError> {
    if n < 1 {
        return Err(DomainError::ModeIndex(n));
    }
    Ok(n as f64 * cavity.omega_min(constants))
}

/// ⌊ω_max/ω_min⌋.
pub fn lattice_size(cavity: &CavityConfig, constants: &PhysicalConstants) -> u64 {
    (cavity.omega_max(constants) / cavity.omega_min(constants)).floor() as u64
}

/// Number of plane waves: one per direction per lattice frequency, with the
/// two polarizations counted inside each wave.
pub fn mode_count(cavity: &CavityConfig, constants: &PhysicalConstants) -> u64 {
    2 * lattice_size(cavity, constants)
}

/// Count with each polarization treated as a separate wave.
pub fn polarized_mode_count(cavity: &CavityConfig, constants: &PhysicalConstants) -> u64 {
    4 * lattice_size(cavity, constants)
}

/// Coefficients of `mode` for the realization keyed by `seed`.
pub fn amplitudes(
    seed: u64,
    mode: ModeId,
    cavity: &CavityConfig,
    constants: &PhysicalConstants,
) -> ModeAmplitudes {
    amplitudes_with(&CounterRng::new(seed), mode, cavity, constants)
}

fn amplitudes_with(
    rng: &CounterRng,
    mode: ModeId,
    cavity: &CavityConfig,
    constants: &PhysicalConstants,
) -> ModeAmplitudes {
    let omega = mode.n as f64 * cavity.omega_min(constants);
    let sigma = (2.0 * std::f64::consts::PI * constants.hbar * omega).sqrt();
    let (ga, gb) = rng.normal_pair(mode.counter());
    ModeAmplitudes {
        a: sigma * ga,
        b: sigma * gb,
    }
}

/// Frequencies of circular orbits at r(1+f) and r(1−f): the (low, high) window edges.
pub fn window_bounds(
    r: f64,
    f: f64,
    constants: &PhysicalConstants,
) -> Result<(f64, f64), DomainError> {
    if !(f.is_finite() && (0.0..1.0).contains(&f)) {
        return Err(DomainError::WindowFraction(f));
    }
    let lo = circular_frequency(r * (1.0 + f), constants)?;
    let hi = circular_frequency(r * (1.0 - f), constants)?;
    Ok((lo, hi))
}

/// Lattice indices whose frequency lies inside `window_bounds(r, f)`, clamped to [1, n_max].
pub fn window_indices(
    r: f64,
    f: f64,
    realization: &FieldRealization,
) -> Result<WindowRange, DomainError> {
    let (lo, hi) = window_bounds(r, f, &realization.constants)?;
    let w0 = realization.omega_min;
    // float -> int casts saturate, so huge ratios clamp cleanly
    let n_lo = ((lo / w0).ceil() as u64).max(1);
    let n_hi = ((hi / w0).floor() as u64).min(realization.n_max);
    if n_lo > n_hi {
        Ok(WindowRange::EMPTY)
    } else {
        Ok(WindowRange { n_lo, n_hi })
    }
}

/// E and B at the electron, in statvolt/cm and gauss.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    pub e: Vector3<f64>,
    pub b: Vector3<f64>,
}

/// The four waves sharing lattice index n, folded into per-component
/// cosine/sine coefficients. For each field component the contribution is
/// `cos_coeff·cos(ω_n t) − sin_coeff·sin(ω_n t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeCoefficients {
    pub ex: [f64; 2],
    pub ey: [f64; 2],
    pub bx: [f64; 2],
    pub by: [f64; 2],
}

impl ModeCoefficients {
    fn scaled(mut self, s: f64) -> Self {
        for c in [&mut self.ex, &mut self.ey, &mut self.bx, &mut self.by] {
            c[0] *= s;
            c[1] *= s;
        }
        self
    }
}

/// Seeded zero-point field for one trajectory. Immutable once built.
#[derive(Debug, Clone)]
pub struct FieldRealization {
    pub seed: u64,
    pub cavity: CavityConfig,
    pub constants: PhysicalConstants,
    pub n_max: u64,
    pub volume: f64,
    omega_min: f64,
    inv_sqrt_volume: f64,
    amplitude_scale: f64,
    rng: CounterRng,
    table: Option<Arc<Vec<ModeCoefficients>>>,
}

impl FieldRealization {
    pub fn new(seed: u64, cavity: CavityConfig, constants: PhysicalConstants) -> Self {
        let volume = cavity.volume();
        Self {
            seed,
            cavity,
            constants,
            n_max: lattice_size(&cavity, &constants),
            volume,
            omega_min: cavity.omega_min(&constants),
            inv_sqrt_volume: 1.0 / volume.sqrt(),
            amplitude_scale: 1.0,
            rng: CounterRng::new(seed),
            table: None,
        }
    }

    /// Multiply every coefficient by `scale` (0 turns the field off).
    pub fn with_amplitude_scale(mut self, scale: f64) -> Self {
        self.amplitude_scale = scale;
        self.table = None;
        self
    }

    /// Precompute coefficients for the whole lattice (n_max × 64 bytes).
    pub fn with_table(mut self) -> Self {
        let table: Vec<_> = (1..=self.n_max).map(|n| self.generate(n)).collect();
        self.table = Some(Arc::new(table));
        self
    }

    pub fn has_table(&self) -> bool {
        self.table.is_some()
    }

    pub fn amplitude_scale(&self) -> f64 {
        self.amplitude_scale
    }

    pub fn is_silent(&self) -> bool {
        self.amplitude_scale == 0.0
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn full_window(&self) -> WindowRange {
        WindowRange::full(self.n_max)
    }

    /// Scaled coefficients of a single wave.
    pub fn amplitudes(&self, mode: ModeId) -> ModeAmplitudes {
        let raw = amplitudes_with(&self.rng, mode, &self.cavity, &self.constants);
        ModeAmplitudes {
            a: raw.a * self.amplitude_scale,
            b: raw.b * self.amplitude_scale,
        }
    }

    fn generate(&self, n: u64) -> ModeCoefficients {
        let amp = |d, p| amplitudes_with(&self.rng, ModeId::new(n, d, p), &self.cavity, &self.constants);
        let px = amp(Direction::PlusZ, Polarization::X);
        let mx = amp(Direction::MinusZ, Polarization::X);
        let py = amp(Direction::PlusZ, Polarization::Y);
        let my = amp(Direction::MinusZ, Polarization::Y);
        // ẑ×x̂ = ŷ, ẑ×ŷ = −x̂; the −ẑ waves flip both
        ModeCoefficients {
            ex: [px.a + mx.a, px.b + mx.b],
            ey: [py.a + my.a, py.b + my.b],
            bx: [my.a - py.a, my.b - py.b],
            by: [px.a - mx.a, px.b - mx.b],
        }
        .scaled(self.amplitude_scale)
    }

    /// Folded coefficients for lattice index `n` (1-based).
    pub fn coefficients(&self, n: u64) -> ModeCoefficients {
        match &self.table {
            Some(t) => t[(n - 1) as usize],
            None => self.generate(n),
        }
    }
}

/// Fields at the electron at time `t` from the modes in `window`.
pub fn eval_fields(t: f64, window: WindowRange, realization: &FieldRealization) -> FieldSample {
    if window.is_empty() || realization.is_silent() {
        return FieldSample::default();
    }
    let hi = window.n_hi.min(realization.n_max);
    let coeffs = (window.n_lo..=hi).map(|n| realization.coefficients(n));
    sum_modes(coeffs, window.n_lo, realization.omega_min, realization.inv_sqrt_volume, t)
}

const ANCHOR_STRIDE: u64 = 64;

/// Sums folded coefficients starting at index `n_lo`. cos/sin of ω_n t are
/// advanced by rotation with the lattice step and re-anchored from a direct
/// evaluation whenever (n − 1) is a multiple of `ANCHOR_STRIDE`, so the
/// result depends only on the absolute indices summed.
fn sum_modes<I>(coeffs: I, n_lo: u64, omega_min: f64, inv_sqrt_volume: f64, t: f64) -> FieldSample
where
    I: IntoIterator<Item = ModeCoefficients>,
{
    // lattice-step rotation, evaluated only once a rotation is needed
    let mut step: Option<(f64, f64)> = None;
    let (mut s, mut c) = (0.0, 0.0);
    let mut acc = [0.0f64; 4];
    for (k, m) in coeffs.into_iter().enumerate() {
        let n = n_lo + k as u64;
        if k == 0 || (n - 1).is_multiple_of(ANCHOR_STRIDE) {
            (s, c) = ((n as f64 * omega_min) * t).sin_cos();
        } else {
            let (ds, dc) = *step.get_or_insert_with(|| (omega_min * t).sin_cos());
            let c_next = c * dc - s * ds;
            s = s * dc + c * ds;
            c = c_next;
        }
        acc[0] += m.ex[0] * c - m.ex[1] * s;
        acc[1] += m.ey[0] * c - m.ey[1] * s;
        acc[2] += m.bx[0] * c - m.bx[1] * s;
        acc[3] += m.by[0] * c - m.by[1] * s;
    }
    FieldSample {
        e: Vector3::new(acc[0], acc[1], 0.0) * inv_sqrt_volume,
        b: Vector3::new(acc[2], acc[3], 0.0) * inv_sqrt_volume,
    }
}

/// Per-trajectory coefficient cache for a sliding window. When the window
/// moves only the indices entering it are generated.
#[derive(Debug, Clone, Default)]
pub struct WindowCache {
    range: Option<WindowRange>,
    coeffs: VecDeque<ModeCoefficients>,
}

impl WindowCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn range(&self) -> WindowRange {
        self.range.unwrap_or(WindowRange::EMPTY)
    }

    /// Point the cache at `window`; returns true if the range changed.
    pub fn set_window(&mut self, window: WindowRange, realization: &FieldRealization) -> bool {
        let window = if window.is_empty() { WindowRange::EMPTY } else { window };
        if self.range == Some(window) {
            return false;
        }
        let old = self.range();
        let overlaps = !window.is_empty()
            && !old.is_empty()
            && window.n_lo <= old.n_hi
            && old.n_lo <= window.n_hi;
        if !overlaps {
            self.coeffs.clear();
            if !window.is_empty() {
                self.coeffs
                    .extend((window.n_lo..=window.n_hi).map(|n| realization.coefficients(n)));
            }
        } else {
            // shrink, then grow at either end
            for _ in old.n_lo..window.n_lo.max(old.n_lo) {
                self.coeffs.pop_front();
            }
            for _ in window.n_hi.min(old.n_hi)..old.n_hi {
                self.coeffs.pop_back();
            }
            for n in (window.n_lo..old.n_lo).rev() {
                self.coeffs.push_front(realization.coefficients(n));
            }
            for n in old.n_hi + 1..=window.n_hi {
                self.coeffs.push_back(realization.coefficients(n));
            }
        }
        self.range = Some(window);
        debug_assert_eq!(self.coeffs.len() as u64, window.len());
        true
    }

    /// Same result as `eval_fields(t, self.range(), realization)`.
    pub fn eval(&self, t: f64, realization: &FieldRealization) -> FieldSample {
        let w = self.range();
        if w.is_empty() || realization.is_silent() {
            return FieldSample::default();
        }
        sum_modes(
            self.coeffs.iter().copied(),
            w.n_lo,
            realization.omega_min,
            realization.inv_sqrt_volume,
            t,
        )
    }
}
