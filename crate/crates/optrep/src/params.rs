//! Shared parameter records for sources, channels and rate formulas.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four maximally entangled polarization states.
///
/// Φ± = (|H,H⟩ ± |V,V⟩)/√2 and Ψ± = (|H,V⟩ ± |V,H⟩)/√2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];
}

impl std::fmt::Display for BellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BellKind::PhiPlus => write!(f, "Phi+"),
            BellKind::PhiMinus => write!(f, "Phi-"),
            BellKind::PsiPlus => write!(f, "Psi+"),
            BellKind::PsiMinus => write!(f, "Psi-"),
        }
    }
}

/// Triggered pair source: fires exactly one Bell pair with probability
/// `p_s`, vacuum otherwise, never more than one pair.
#[derive(Clone, Debug)]
pub struct GunParams {
    pub p_s: f64,
    pub emitted_kind: BellKind,
    /// Frequency tags of the two emitted photons; they must differ and must
    /// match the registry tags of the modes the gun fires into.
    pub freq_pair: (String, String),
}

impl GunParams {
    pub fn new(p_s: f64, emitted_kind: BellKind, freq_pair: (&str, &str)) -> Result<GunParams> {
        if !(0.0..=1.0).contains(&p_s) {
            return Err(Error::Domain(format!("p_s = {p_s} outside [0, 1]")));
        }
        if freq_pair.0 == freq_pair.1 {
            return Err(Error::Domain(
                "the gun's two photons must carry distinct frequency tags".into(),
            ));
        }
        Ok(GunParams {
            p_s,
            emitted_kind,
            freq_pair: (freq_pair.0.to_string(), freq_pair.1.to_string()),
        })
    }

    /// Deterministic ideal source, used by gates for ancilla pairs.
    pub fn ideal(kind: BellKind, freq_pair: (&str, &str)) -> GunParams {
        GunParams::new(1.0, kind, freq_pair).expect("valid ideal gun")
    }
}

/// Down-converter drive: `epsilon` is the pair-creation amplitude, |ε| < 1;
/// `n_max` truncates the expansion at that many pairs.
#[derive(Clone, Debug)]
pub struct PdcParams {
    pub epsilon: Complex64,
    pub n_max: u32,
}

impl PdcParams {
    pub fn new(epsilon: Complex64, n_max: u32) -> Result<PdcParams> {
        if epsilon.norm() >= 1.0 {
            return Err(Error::Domain(format!(
                "|epsilon| = {} must be < 1",
                epsilon.norm()
            )));
        }
        Ok(PdcParams { epsilon, n_max })
    }
}

/// Pair-transit noise: `gamma` is the dephasing probability, `zeta` the
/// pair survival factor.
///
/// Both act at the pair level: a distributed pair survives with probability
/// ζ and a surviving pair is dephasing-free with probability 1 − γ, so two
/// pairs reproduce the ζ²(1 − γ)² of the purification rate. A per-photon
/// loss reading would give ζ⁴ for two pairs and is not what the rate
/// formula uses.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ChannelParams {
    pub gamma: f64,
    pub zeta: f64,
}

impl ChannelParams {
    pub fn new(gamma: f64, zeta: f64) -> Result<ChannelParams> {
        for (name, v) in [("gamma", gamma), ("zeta", zeta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(ChannelParams { gamma, zeta })
    }
}

/// The six scalars of the closed-form success rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p_s: f64,
    pub eta: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub p_cnot: f64,
    pub p_qnd: f64,
}

impl NoiseParams {
    /// Worked-example values: p_s = 0.9, γ = 1/2, ζ = √2/2, p_cnot = 1/4,
    /// p_qnd = 1/8, with the detector efficiency chosen per run.
    pub fn defaults_with_eta(eta: f64) -> NoiseParams {
        NoiseParams {
            p_s: 0.9,
            eta,
            gamma: 0.5,
            zeta: std::f64::consts::FRAC_1_SQRT_2,
            p_cnot: 0.25,
            p_qnd: 0.125,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_s", self.p_s),
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("zeta", self.zeta),
            ("p_cnot", self.p_cnot),
            ("p_qnd", self.p_qnd),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn channel(&self) -> ChannelParams {
        ChannelParams {
            gamma: self.gamma,
            zeta: self.zeta,
        }
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams::defaults_with_eta(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_checks() {
        assert!(GunParams::new(1.2, BellKind::PhiPlus, ("w1", "w2")).is_err());
        assert!(GunParams::new(0.9, BellKind::PhiPlus, ("w1", "w1")).is_err());
        assert!(PdcParams::new(Complex64::new(1.0, 0.0), 4).is_err());
        assert!(ChannelParams::new(-0.1, 0.5).is_err());
        let mut p = NoiseParams::default();
        p.eta = 1.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn defaults_match_the_worked_example() {
        let p = NoiseParams::defaults_with_eta(0.8);
        assert_eq!(p.p_s, 0.9);
        assert_eq!(p.gamma, 0.5);
        assert!((p.zeta - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(p.p_cnot, 0.25);
        assert_eq!(p.p_qnd, 0.125);
        assert_eq!(p.eta, 0.8);
    }
}
