//! Classical hydrogen in a zero-point radiation background.
//!
//! A point electron orbits a fixed proton under Coulomb attraction,
//! Abraham–Lorentz radiation reaction and the Lorentz force of a random
//! classical field built from plane waves on a cavity lattice. Trajectories are
//! integrated with an adaptive Dormand–Prince pair and reduced to
//! time-weighted radial densities for comparison with the quantum ground
//! state.

pub mod bench;
pub mod checks;
pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod field;
pub mod histogram;
pub mod integrator;
pub mod physics;
pub mod rng;

pub use config::{CavityConfig, FieldMode, HistogramConfig, RunConfig, TraceConfig};
pub use dynamics::{DynamicsConfig, ElectronSystem, ParticleState, WindowPolicy};
pub use ensemble::{run_campaign, run_single, CampaignError, CampaignResult, RunOptions, RunOutcome};
pub use error::{ConfigError, DomainError, DynamicsError, HistogramError};
pub use field::{FieldRealization, ModeId, WindowRange};
pub use histogram::{DensityTable, RadialHistogram};
pub use integrator::{Integrator, IntegratorConfig, Termination, TerminationKind};
pub use physics::{PhysicalConstants, ANGSTROM};
