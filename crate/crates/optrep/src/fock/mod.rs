//! Sparse exact representation of multimode bosonic states.

mod mixed;
mod registry;
mod state;

pub use mixed::MixedState;
pub use registry::{pair_registry, FreqTag, ModeRegistry, Pol, RegistryBuilder, DEFAULT_N_MAX};
pub use state::{FockState, NumberOutcome, Occupation, NORM_TOL, PRUNE_EPS};
