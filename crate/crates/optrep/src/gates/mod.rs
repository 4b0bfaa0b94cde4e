//! The three heralded building blocks: the probabilistic CNOT, the
//! single-photon presence check, and the partial Bell analyzer.

mod analyzer;
mod cnot;
mod qnd;

pub use analyzer::{bell_analyzer, AnalyzerBranch, BellVerdict};
pub use cnot::{derive_correction_table, pittman_cnot, PatternCorrection, CNOT_CORRECTIONS};
pub use qnd::{qnd_presence, QND_DETECTORS, QND_GUNS};

use crate::elements::{mat2_mul, DetectorRecord, Mat2, MAT_ID, MAT_S, MAT_SDG, MAT_X, MAT_Z};
use crate::fock::FockState;

/// Result of one branch of a heralded component.
#[derive(Clone, Debug)]
pub struct HeraldOutcome {
    pub success: bool,
    pub records: Vec<DetectorRecord>,
    /// Exact, unconditioned probability of this branch.
    pub branch_probability: f64,
    pub post_state: FockState,
    /// Outcome-conditioned local corrections that were applied, as
    /// (mode, unitary tag) pairs.
    pub corrections_applied: Vec<(String, Correction)>,
}

/// Single-qubit correction tags; together with global phases these exhaust
/// the group generated by X and the quarter-wave phase S.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Correction {
    Id,
    S,
    Z,
    Sdg,
    X,
    SX,
    ZX,
    SdgX,
}

impl Correction {
    pub const ALL: [Correction; 8] = [
        Correction::Id,
        Correction::S,
        Correction::Z,
        Correction::Sdg,
        Correction::X,
        Correction::SX,
        Correction::ZX,
        Correction::SdgX,
    ];

    /// Operator product, rightmost factor applied first.
    pub fn matrix(self) -> Mat2 {
        match self {
            Correction::Id => MAT_ID,
            Correction::S => MAT_S,
            Correction::Z => MAT_Z,
            Correction::Sdg => MAT_SDG,
            Correction::X => MAT_X,
            Correction::SX => mat2_mul(&MAT_S, &MAT_X),
            Correction::ZX => mat2_mul(&MAT_Z, &MAT_X),
            Correction::SdgX => mat2_mul(&MAT_SDG, &MAT_X),
        }
    }
}

impl std::fmt::Display for Correction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Correction::Id => "I",
            Correction::S => "S",
            Correction::Z => "Z",
            Correction::Sdg => "S†",
            Correction::X => "X",
            Correction::SX => "SX",
            Correction::ZX => "ZX",
            Correction::SdgX => "S†X",
        };
        write!(f, "{s}")
    }
}
