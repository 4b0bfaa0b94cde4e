//! Exact linear-optical simulation of a photonic entanglement repeater.
//!
//! The crate has two layers that check each other:
//!
//! * an exact sparse Fock-state engine ([`fock`]) together with the optical
//!   elements ([`elements`]), entanglement sources ([`sources`]) and heralded
//!   gates ([`gates`]) built on top of it, and
//! * closed-form success-rate and component-count formulas ([`analytics`])
//!   plus a Monte Carlo protocol harness ([`protocol`]) that reproduces those
//!   numbers by sampling the exact amplitudes.
//!
//! Conventions frozen across the crate (tests depend on them):
//!
//! * Polarization slots are ordered H before V; occupations serialize in
//!   registry order, so state dumps are bit-comparable across runs.
//! * A linear polarizing beam splitter transmits H and reflects V; a circular
//!   one transmits R = (H + iV)/√2 and reflects L = (H − iV)/√2. Reflection
//!   from the first port to the second carries a factor +i, the reverse
//!   direction −i, which makes every splitter its own inverse.
//! * Detectors are polarization-resolving buckets with no dark counts; a
//!   bucket holding n photons clicks with probability 1 − (1 − η)ⁿ.
//! * Amplitudes below [`fock::PRUNE_EPS`] are dropped from sparse states;
//!   oracle comparisons can disable this via
//!   [`fock::FockState::with_prune_eps`].

pub mod analytics;
pub mod elements;
pub mod error;
pub mod fock;
pub mod gates;
pub mod params;
pub mod policy;
pub mod protocol;
pub mod sources;

pub use error::{Error, Result};
pub use fock::{FockState, MixedState, ModeRegistry, Occupation, Pol};
pub use params::{BellKind, ChannelParams, GunParams, NoiseParams, PdcParams};
pub use policy::Policy;
