//! Multi-order-parameter Allen-Cahn grain growth.
//!
//! Each grain `i` owns a scalar field η_i ∈ [0, 1] that is 1 inside the grain
//! and 0 elsewhere. The free energy
//!
//! ```text
//! F = Σ_r [ Σ_i (-η_i²/2 + η_i⁴/4) + Σ_{i<j} η_i² η_j² + Σ_i (κ/2) |∇η_i|² ]
//! ```
//!
//! is minimized by the non-conserved gradient flow
//! `∂η_i/∂t = -L (-η_i + η_i³ + 2 η_i Σ_{j≠i} η_j² - κ ∇²η_i)`,
//! integrated with explicit Euler and a 5-point Laplacian on a periodic grid.
//!
//! Fields are stored only inside per-grain active boxes, which grow when the
//! diffuse tail of a field reaches their edge and are re-tightened
//! periodically. A dense mode keeps every box at full grid size and serves as
//! the reference for the sparse path.

mod checkpoint;
mod energy;
mod field;
mod params;
mod state;
mod step;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointField, CheckpointHeader};
pub use energy::{free_energy, EnergyReport};
pub use field::{ActiveBox, GrainField};
pub use params::{BoundaryCondition, SimParams};
pub use state::PhaseFieldState;
pub use step::{evolve, EvolutionSeries, Snapshot, StepMode, StepOptions};

/// Margin added around the tight grain bounding box at initialization.
pub const INIT_MARGIN: usize = 8;
/// A box side grows once any value on that edge exceeds this magnitude.
pub const GROW_THRESHOLD: f64 = 1e-14;
/// Pixels added to a box side per growth event.
pub const GROW_STEP: usize = 4;
/// Sparse boxes are re-tightened every this many steps.
pub const RETIGHTEN_EVERY: u64 = 50;
/// Values at or below this magnitude are dropped when boxes are re-tightened.
pub const RETIGHTEN_THRESHOLD: f64 = 1e-14;
/// Margin kept around the re-tightened support.
pub const RETIGHTEN_MARGIN: usize = 2;
/// A field whose maximum falls below this value is removed.
pub const DEATH_THRESHOLD: f64 = 1e-4;
