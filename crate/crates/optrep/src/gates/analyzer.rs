//! Partial Bell analyzer: a balanced beam splitter followed by two
//! polarization-resolving detectors.
//!
//! Ψ− photons anti-bunch (one photon per output port with orthogonal
//! polarizations), Ψ+ photons bunch into one port with both polarizations
//! present, and Φ± photons bunch into a single bucket, which the analyzer
//! cannot tell apart — those land in `Fail`. Identification requires a
//! two-fold click coincidence, so each outcome carries an η² factor.

use crate::elements::{apply_balanced_bs, detect_resolved, BeamSplitterBasis, DetectionBranch};
use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::gates::HeraldOutcome;
use crate::policy::Policy;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellVerdict {
    PsiPlus,
    PsiMinus,
    Fail,
}

impl std::fmt::Display for BellVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BellVerdict::PsiPlus => write!(f, "Psi+"),
            BellVerdict::PsiMinus => write!(f, "Psi-"),
            BellVerdict::Fail => write!(f, "Fail"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnalyzerBranch {
    pub verdict: BellVerdict,
    pub outcome: HeraldOutcome,
}

fn classify(a: &DetectionBranch, b: &DetectionBranch) -> BellVerdict {
    let (na, nb) = (a.n1 + a.n2, b.n1 + b.n2);
    // Anti-bunched, orthogonal polarizations, both seen: Ψ−.
    if na == 1 && nb == 1 {
        let cross = (a.n1 == 1 && b.n2 == 1) || (a.n2 == 1 && b.n1 == 1);
        let resolved = a.record.resolved_pol.is_some() && b.record.resolved_pol.is_some();
        if cross && resolved {
            return BellVerdict::PsiMinus;
        }
        return BellVerdict::Fail;
    }
    // Bunched with both polarizations in one port, both buckets clicked: Ψ+.
    let bunched_pair = |p: &DetectionBranch, other: &DetectionBranch| {
        p.n1 == 1 && p.n2 == 1 && p.clicked1 && p.clicked2 && other.n1 + other.n2 == 0
    };
    if bunched_pair(a, b) || bunched_pair(b, a) {
        return BellVerdict::PsiPlus;
    }
    BellVerdict::Fail
}

/// Projects the two meeting modes onto the analyzer's outcome, consuming
/// both photons. The post state carries whatever the rest of the registry
/// held, conditioned on the click pattern.
pub fn bell_analyzer(
    state: &FockState,
    mode_a: &str,
    mode_b: &str,
    eta: f64,
    policy: &mut Policy,
) -> Result<Vec<AnalyzerBranch>> {
    let reg = state.registry();
    let (ia, ib) = (reg.mode_index(mode_a)?, reg.mode_index(mode_b)?);
    for (occ, _) in state.terms() {
        if occ.total_in(ia) != 1 || occ.total_in(ib) != 1 {
            return Err(Error::Contract(format!(
                "the analyzer expects exactly one photon in each of `{mode_a}` and `{mode_b}`"
            )));
        }
    }
    let mixed = apply_balanced_bs(state, mode_a, mode_b)?;
    let mut branches = Vec::new();
    for da in detect_resolved(&mixed, mode_a, BeamSplitterBasis::Linear, eta, policy)? {
        for db in detect_resolved(&da.post, mode_b, BeamSplitterBasis::Linear, eta, policy)? {
            let verdict = classify(&da, &db);
            branches.push(AnalyzerBranch {
                verdict,
                outcome: HeraldOutcome {
                    success: verdict != BellVerdict::Fail,
                    records: vec![da.record.clone(), db.record.clone()],
                    branch_probability: da.probability * db.probability,
                    post_state: db.post,
                    corrections_applied: Vec::new(),
                },
            });
        }
    }
    Ok(branches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::fock::{pair_registry, ModeRegistry};
    use crate::params::BellKind;
    use crate::sources::bell_state;
    use approx::assert_abs_diff_eq;

    fn verdict_probability(
        branches: &[AnalyzerBranch],
        verdict: BellVerdict,
    ) -> f64 {
        branches
            .iter()
            .filter(|b| b.verdict == verdict)
            .map(|b| b.outcome.branch_probability)
            .sum()
    }

    #[test]
    fn psi_states_are_identified_with_certainty() {
        let reg = pair_registry("a", "b");
        for (kind, verdict) in [
            (BellKind::PsiMinus, BellVerdict::PsiMinus),
            (BellKind::PsiPlus, BellVerdict::PsiPlus),
        ] {
            let input = bell_state(&reg, kind, "a", "b").unwrap();
            let branches =
                bell_analyzer(&input, "a", "b", 1.0, &mut Policy::Exhaustive).unwrap();
            let total: f64 = branches.iter().map(|b| b.outcome.branch_probability).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(verdict_probability(&branches, verdict), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn phi_states_always_fail() {
        let reg = pair_registry("a", "b");
        for kind in [BellKind::PhiPlus, BellKind::PhiMinus] {
            let input = bell_state(&reg, kind, "a", "b").unwrap();
            let branches =
                bell_analyzer(&input, "a", "b", 1.0, &mut Policy::Exhaustive).unwrap();
            assert_abs_diff_eq!(
                verdict_probability(&branches, BellVerdict::Fail),
                1.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn uniform_bell_input_succeeds_half_the_time() {
        let reg = pair_registry("a", "b");
        let mut success = 0.0;
        for kind in BellKind::ALL {
            let input = bell_state(&reg, kind, "a", "b").unwrap();
            let branches =
                bell_analyzer(&input, "a", "b", 1.0, &mut Policy::Exhaustive).unwrap();
            success += 0.25
                * branches
                    .iter()
                    .filter(|b| b.verdict != BellVerdict::Fail)
                    .map(|b| b.outcome.branch_probability)
                    .sum::<f64>();
        }
        assert_abs_diff_eq!(success, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn identification_scales_as_eta_squared() {
        let reg = pair_registry("a", "b");
        let input = bell_state(&reg, BellKind::PsiMinus, "a", "b").unwrap();
        let eta = 0.8;
        let branches = bell_analyzer(&input, "a", "b", eta, &mut Policy::Exhaustive).unwrap();
        assert_abs_diff_eq!(
            verdict_probability(&branches, BellVerdict::PsiMinus),
            eta * eta,
            epsilon = 1e-12
        );
    }

    #[test]
    fn unequal_frequency_tags_are_rejected() {
        let reg = ModeRegistry::builder()
            .tag("w1")
            .tag("w2")
            .mode("a", "w1")
            .mode("b", "w2")
            .build()
            .unwrap();
        // A photon in each mode: interference would mix distinguishable
        // frequencies.
        let input = FockState::vacuum(&reg)
            .apply_creation("a", crate::fock::Pol::H)
            .unwrap()
            .apply_creation("b", crate::fock::Pol::V)
            .unwrap();
        assert!(matches!(
            bell_analyzer(&input, "a", "b", 1.0, &mut Policy::Exhaustive),
            Err(Error::FrequencyMismatch { .. })
        ));
    }

    #[test]
    fn wrong_photon_number_is_a_contract_violation() {
        let reg = pair_registry("a", "b");
        let vac = FockState::vacuum(&reg);
        assert!(matches!(
            bell_analyzer(&vac, "a", "b", 1.0, &mut Policy::Exhaustive),
            Err(Error::Contract(_))
        ));
    }
}
