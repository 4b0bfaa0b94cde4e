//! Heralded optical CNOT built from four polarizing beam splitters and an
//! entangled ancilla pair.
//!
//! Circuit: the control meets one ancilla photon at a linear splitter and
//! the splitter's second output is detected in the circular basis (D₂); the
//! target meets the other ancilla photon at a circular splitter whose second
//! output is detected in the linear basis (D₁). The circular splitter stage
//! is sandwiched between fixed quarter-wave retarders (S on each input leg,
//! S† on each output leg): without them the heralded map is controlled-Y up
//! to local phases, which no outcome-conditioned local correction turns into
//! a CNOT.
//!
//! Acceptance requires exactly one photon at each herald detector with a
//! resolved polarization, and the ancilla source to have fired; the
//! outcome-conditioned corrections below were derived once by exhaustive
//! exact simulation under the crate's splitter conventions and are
//! regression-tested against [`derive_correction_table`].

use num_complex::Complex64;

use crate::elements::{
    apply_local_unitary, apply_pbs, detect_resolved, BeamSplitterBasis, Mat2, ResolvedPol,
    MAT_S, MAT_SDG,
};
use crate::error::{Error, Result};
use crate::fock::{FockState, ModeRegistry, Pol};
use crate::gates::{Correction, HeraldOutcome};
use crate::params::{BellKind, GunParams};
use crate::policy::Policy;
use crate::sources::fire_gun_into;

/// Correction pair for one accepted herald pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatternCorrection {
    /// D₂ outcome (circular basis, control side).
    pub d2: ResolvedPol,
    /// D₁ outcome (linear basis, target side).
    pub d1: ResolvedPol,
    pub control: Correction,
    pub target: Correction,
}

/// Frozen correction table, keyed by (D₂, D₁) outcome.
pub const CNOT_CORRECTIONS: [PatternCorrection; 4] = [
    PatternCorrection {
        d2: ResolvedPol::R,
        d1: ResolvedPol::H,
        control: Correction::S,
        target: Correction::Id,
    },
    PatternCorrection {
        d2: ResolvedPol::R,
        d1: ResolvedPol::V,
        control: Correction::S,
        target: Correction::X,
    },
    PatternCorrection {
        d2: ResolvedPol::L,
        d1: ResolvedPol::H,
        control: Correction::Sdg,
        target: Correction::Id,
    },
    PatternCorrection {
        d2: ResolvedPol::L,
        d1: ResolvedPol::V,
        control: Correction::Sdg,
        target: Correction::X,
    },
];

fn lookup_correction(
    table: &[PatternCorrection; 4],
    d2: ResolvedPol,
    d1: ResolvedPol,
) -> Option<&PatternCorrection> {
    table.iter().find(|p| p.d2 == d2 && p.d1 == d1)
}

fn ancilla_labels(reg: &ModeRegistry, control: &str, target: &str) -> (String, String) {
    let mut x = format!("{control}.anc");
    let mut y = format!("{target}.anc");
    while reg.mode_index(&x).is_ok() {
        x.push('\'');
    }
    while reg.mode_index(&y).is_ok() || y == x {
        y.push('\'');
    }
    (x, y)
}

struct CnotLeaf {
    probability: f64,
    state: FockState,
    records: Vec<crate::elements::DetectorRecord>,
    gun_fired: bool,
    d2: Option<ResolvedPol>,
    d1: Option<ResolvedPol>,
}

/// Runs the raw interferometer without applying corrections.
///
/// Each leaf carries the exact branch probability, the detector records and
/// the (possibly unaccepted) post state on the extended registry with the
/// ancilla modes already consumed.
fn run_circuit(
    state: &FockState,
    control: &str,
    target: &str,
    gun: &GunParams,
    eta: f64,
    policy: &mut Policy,
) -> Result<(Vec<CnotLeaf>, String, String)> {
    let reg = state.registry();
    for (occ, _) in state.terms() {
        let (ic, it) = (reg.mode_index(control)?, reg.mode_index(target)?);
        if occ.total_in(ic) != 1 || occ.total_in(it) != 1 {
            return Err(Error::Contract(
                "control and target must each hold exactly one photon; \
                 screen inputs with the presence check first"
                    .into(),
            ));
        }
    }
    if gun.emitted_kind != BellKind::PhiPlus {
        return Err(Error::Contract(
            "the ancilla source must emit Phi+ pairs".into(),
        ));
    }
    let tag_c = reg.tag_name(reg.tag(control)?).to_string();
    let tag_t = reg.tag_name(reg.tag(target)?).to_string();
    if (gun.freq_pair.0.as_str(), gun.freq_pair.1.as_str())
        != (tag_c.as_str(), tag_t.as_str())
    {
        return Err(Error::Contract(format!(
            "ancilla gun must emit tags ({tag_c}, {tag_t}) to interfere with the inputs"
        )));
    }

    let (anc_x, anc_y) = ancilla_labels(reg, control, target);
    let ext = reg.with_modes(&[(&anc_x, &tag_c), (&anc_y, &tag_t)])?;
    let lifted = state.padded_to(&ext)?;

    // Stage 1: ancilla pair.
    let gun_branches = fire_gun_into(&lifted, &anc_x, &anc_y, gun, policy)?;

    let mut leaves = Vec::new();
    for (gun_branch, mut s) in gun_branches {
        let p_gun = gun_branch.probability;
        // Stage 2: control-side splitter, then D₂ in the circular basis.
        s = apply_pbs(&s, control, &anc_x, BeamSplitterBasis::Linear)?;
        for d2_branch in detect_resolved(&s, &anc_x, BeamSplitterBasis::Circular, eta, policy)? {
            // Stage 3: retarders, target-side circular splitter, retarders.
            let mut t = apply_local_unitary(&d2_branch.post, target, &MAT_S)?;
            t = apply_local_unitary(&t, &anc_y, &MAT_S)?;
            t = apply_pbs(&t, target, &anc_y, BeamSplitterBasis::Circular)?;
            t = apply_local_unitary(&t, target, &MAT_SDG)?;
            t = apply_local_unitary(&t, &anc_y, &MAT_SDG)?;
            // Stage 4: D₁ in the linear basis.
            for d1_branch in detect_resolved(&t, &anc_y, BeamSplitterBasis::Linear, eta, policy)? {
                let d2_ok = d2_branch.n1 + d2_branch.n2 == 1;
                let d1_ok = d1_branch.n1 + d1_branch.n2 == 1;
                leaves.push(CnotLeaf {
                    probability: p_gun * d2_branch.probability * d1_branch.probability,
                    state: d1_branch.post,
                    records: vec![d2_branch.record.clone(), d1_branch.record.clone()],
                    gun_fired: gun_branch.fired,
                    d2: if d2_ok { d2_branch.record.resolved_pol } else { None },
                    d1: if d1_ok { d1_branch.record.resolved_pol } else { None },
                });
            }
        }
    }
    Ok((leaves, anc_x, anc_y))
}

/// Heralded CNOT between two single-photon polarization qubits.
///
/// On an accepted pattern (ancilla fired, exactly one photon resolved at
/// each herald detector) the frozen corrections make the control–target map
/// an exact CNOT; the total acceptance probability is 1/4 at unit detector
/// efficiency and unit source probability, scaling as p_s·η² otherwise.
pub fn pittman_cnot(
    state: &FockState,
    control: &str,
    target: &str,
    gun: &GunParams,
    eta: f64,
    policy: &mut Policy,
) -> Result<Vec<HeraldOutcome>> {
    let (leaves, anc_x, anc_y) = run_circuit(state, control, target, gun, eta, policy)?;
    let mut outcomes = Vec::with_capacity(leaves.len());
    for leaf in leaves {
        let accepted = leaf.gun_fired
            && matches!(leaf.d2, Some(ResolvedPol::R | ResolvedPol::L))
            && matches!(leaf.d1, Some(ResolvedPol::H | ResolvedPol::V));
        let mut corrections = Vec::new();
        let post = if accepted {
            let pat = lookup_correction(&CNOT_CORRECTIONS, leaf.d2.unwrap(), leaf.d1.unwrap())
                .expect("table covers all accepted patterns");
            let mut s = apply_local_unitary(&leaf.state, control, &pat.control.matrix())?;
            s = apply_local_unitary(&s, target, &pat.target.matrix())?;
            corrections.push((control.to_string(), pat.control));
            corrections.push((target.to_string(), pat.target));
            s
        } else {
            leaf.state
        };
        outcomes.push(HeraldOutcome {
            success: accepted,
            records: leaf.records,
            branch_probability: leaf.probability,
            post_state: post.drop_empty_modes(&[&anc_x, &anc_y])?,
            corrections_applied: corrections,
        });
    }
    Ok(outcomes)
}

/// Re-derives the outcome-conditioned corrections by exhaustive exact
/// simulation of the raw interferometer at unit efficiency.
///
/// For each accepted pattern this reconstructs the heralded linear map on
/// the computational basis, searches the single-qubit correction group for
/// the pair that turns it into λ·CNOT, and checks |λ| = 1/4. The result
/// must equal [`CNOT_CORRECTIONS`].
pub fn derive_correction_table() -> Result<[PatternCorrection; 4]> {
    let reg = ModeRegistry::builder()
        .tag("w1")
        .tag("w2")
        .mode("c", "w1")
        .mode("t", "w2")
        .build()?;
    let gun = GunParams::ideal(BellKind::PhiPlus, ("w1", "w2"));

    // Columns of the heralded map per pattern, indexed by 2·control + target.
    let mut maps: std::collections::HashMap<(ResolvedPol, ResolvedPol), [[Complex64; 4]; 4]> =
        std::collections::HashMap::new();
    for (col, (pc, pt)) in [
        (Pol::H, Pol::H),
        (Pol::H, Pol::V),
        (Pol::V, Pol::H),
        (Pol::V, Pol::V),
    ]
    .into_iter()
    .enumerate()
    {
        let input = FockState::vacuum(&reg)
            .apply_creation("c", pc)?
            .apply_creation("t", pt)?;
        let (leaves, anc_x, anc_y) =
            run_circuit(&input, "c", "t", &gun, 1.0, &mut Policy::Exhaustive)?;
        for leaf in leaves {
            let (Some(d2), Some(d1)) = (leaf.d2, leaf.d1) else {
                continue;
            };
            let out = leaf.state.drop_empty_modes(&[&anc_x, &anc_y])?;
            let entry = maps.entry((d2, d1)).or_insert([[Complex64::default(); 4]; 4]);
            let scale = Complex64::new(leaf.probability.sqrt(), 0.0);
            for (row, (rc, rt)) in [
                (Pol::H, Pol::H),
                (Pol::H, Pol::V),
                (Pol::V, Pol::H),
                (Pol::V, Pol::V),
            ]
            .into_iter()
            .enumerate()
            {
                let basis = FockState::vacuum(&reg)
                    .apply_creation("c", rc)?
                    .apply_creation("t", rt)?;
                entry[row][col] = basis.inner(&out)? * scale;
            }
        }
    }

    let cnot_perm = [0usize, 1, 3, 2];
    let mut table = Vec::new();
    for d2 in [ResolvedPol::R, ResolvedPol::L] {
        for d1 in [ResolvedPol::H, ResolvedPol::V] {
            let m = maps.get(&(d2, d1)).ok_or_else(|| {
                Error::Contract(format!("pattern ({d2}, {d1}) never occurred"))
            })?;
            let mut found = None;
            'search: for cc in Correction::ALL {
                for ct in Correction::ALL {
                    if let Some(lambda) = correction_makes_cnot(m, &cc.matrix(), &ct.matrix(), &cnot_perm)
                    {
                        if (lambda.norm() - 0.25).abs() < 1e-10 {
                            found = Some(PatternCorrection {
                                d2,
                                d1,
                                control: cc,
                                target: ct,
                            });
                            break 'search;
                        }
                    }
                }
            }
            table.push(found.ok_or_else(|| {
                Error::Contract(format!(
                    "no correction pair maps pattern ({d2}, {d1}) onto a CNOT"
                ))
            })?);
        }
    }
    Ok([table[0], table[1], table[2], table[3]])
}

/// If (C ⊗ T)·M = λ·CNOT for some scalar λ, returns λ.
fn correction_makes_cnot(
    m: &[[Complex64; 4]; 4],
    c: &Mat2,
    t: &Mat2,
    cnot_perm: &[usize; 4],
) -> Option<Complex64> {
    // G = (C ⊗ T) · M with rows indexed by 2·control + target.
    let mut g = [[Complex64::default(); 4]; 4];
    for rc in 0..2 {
        for rt in 0..2 {
            for kc in 0..2 {
                for kt in 0..2 {
                    let w = c[rc][kc] * t[rt][kt];
                    if w.norm_sqr() == 0.0 {
                        continue;
                    }
                    for col in 0..4 {
                        g[2 * rc + rt][col] += w * m[2 * kc + kt][col];
                    }
                }
            }
        }
    }
    // CNOT sends column j to row cnot_perm[j]; all other entries vanish.
    let lambda = g[cnot_perm[0]][0];
    if lambda.norm() < 1e-12 {
        return None;
    }
    for (col, &row_expect) in cnot_perm.iter().enumerate() {
        for row in 0..4 {
            let expect = if row == row_expect { lambda } else { Complex64::default() };
            if (g[row][col] - expect).norm() > 1e-10 {
                return None;
            }
        }
    }
    Some(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_qubit_registry() -> ModeRegistry {
        ModeRegistry::builder()
            .tag("w1")
            .tag("w2")
            .mode("c", "w1")
            .mode("t", "w2")
            .build()
            .unwrap()
    }

    fn basis_input(reg: &ModeRegistry, pc: Pol, pt: Pol) -> FockState {
        FockState::vacuum(reg)
            .apply_creation("c", pc)
            .unwrap()
            .apply_creation("t", pt)
            .unwrap()
    }

    #[test]
    fn frozen_table_matches_rederivation() {
        let derived = derive_correction_table().unwrap();
        for (d, frozen) in derived.iter().zip(CNOT_CORRECTIONS.iter()) {
            assert_eq!(
                d, frozen,
                "derived ({}, {}) -> control {}, target {}; frozen control {}, target {}",
                d.d2, d.d1, d.control, d.target, frozen.control, frozen.target
            );
        }
    }

    #[test]
    fn truth_table_at_quarter_probability() {
        let reg = two_qubit_registry();
        let gun = GunParams::ideal(BellKind::PhiPlus, ("w1", "w2"));
        let table = [
            (Pol::H, Pol::H, Pol::H, Pol::H),
            (Pol::H, Pol::V, Pol::H, Pol::V),
            (Pol::V, Pol::H, Pol::V, Pol::V),
            (Pol::V, Pol::V, Pol::V, Pol::H),
        ];
        for (pc, pt, oc, ot) in table {
            let input = basis_input(&reg, pc, pt);
            let expected = basis_input(&reg, oc, ot);
            let outcomes =
                pittman_cnot(&input, "c", "t", &gun, 1.0, &mut Policy::Exhaustive).unwrap();
            let total: f64 = outcomes.iter().map(|o| o.branch_probability).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            let accepted: f64 = outcomes
                .iter()
                .filter(|o| o.success)
                .map(|o| o.branch_probability)
                .sum();
            assert_abs_diff_eq!(accepted, 0.25, epsilon = 1e-12);
            for o in outcomes.iter().filter(|o| o.success) {
                assert_abs_diff_eq!(
                    o.post_state.fidelity(&expected).unwrap(),
                    1.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn entangling_action_on_control_superposition() {
        let reg = two_qubit_registry();
        let gun = GunParams::ideal(BellKind::PhiPlus, ("w1", "w2"));
        let inv = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let input = basis_input(&reg, Pol::H, Pol::H)
            .add(&basis_input(&reg, Pol::V, Pol::H))
            .unwrap()
            .scaled(inv);
        let expected = basis_input(&reg, Pol::H, Pol::H)
            .add(&basis_input(&reg, Pol::V, Pol::V))
            .unwrap()
            .scaled(inv);
        let outcomes =
            pittman_cnot(&input, "c", "t", &gun, 1.0, &mut Policy::Exhaustive).unwrap();
        let accepted: f64 = outcomes
            .iter()
            .filter(|o| o.success)
            .map(|o| o.branch_probability)
            .sum();
        assert_abs_diff_eq!(accepted, 0.25, epsilon = 1e-12);
        for o in outcomes.iter().filter(|o| o.success) {
            assert!(o.post_state.fidelity(&expected).unwrap() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn acceptance_scales_as_eta_squared_times_ps() {
        let reg = two_qubit_registry();
        let gun = GunParams::new(0.9, BellKind::PhiPlus, ("w1", "w2")).unwrap();
        let input = basis_input(&reg, Pol::V, Pol::H);
        let eta = 0.8;
        let outcomes =
            pittman_cnot(&input, "c", "t", &gun, eta, &mut Policy::Exhaustive).unwrap();
        let accepted: f64 = outcomes
            .iter()
            .filter(|o| o.success)
            .map(|o| o.branch_probability)
            .sum();
        assert_abs_diff_eq!(accepted, 0.25 * eta * eta * 0.9, epsilon = 1e-12);
    }

    #[test]
    fn sampled_mode_returns_single_branch() {
        let reg = two_qubit_registry();
        let gun = GunParams::ideal(BellKind::PhiPlus, ("w1", "w2"));
        let input = basis_input(&reg, Pol::H, Pol::H);
        let mut rng = crate::policy::trial_rng(3, 0);
        let outcomes =
            pittman_cnot(&input, "c", "t", &gun, 1.0, &mut Policy::Sample(&mut rng)).unwrap();
        assert_eq!(outcomes.len(), 1);
    }

    #[test]
    fn missing_input_photon_is_a_contract_violation() {
        let reg = two_qubit_registry();
        let gun = GunParams::ideal(BellKind::PhiPlus, ("w1", "w2"));
        let vac = FockState::vacuum(&reg);
        assert!(matches!(
            pittman_cnot(&vac, "c", "t", &gun, 1.0, &mut Policy::Exhaustive),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn ancilla_gun_must_match_input_tags() {
        let reg = two_qubit_registry();
        let input = basis_input(&reg, Pol::H, Pol::H);
        let wrong = GunParams::ideal(BellKind::PhiPlus, ("w2", "w1"));
        assert!(pittman_cnot(&input, "c", "t", &wrong, 1.0, &mut Policy::Exhaustive).is_err());
        let wrong_kind = GunParams::ideal(BellKind::PsiMinus, ("w1", "w2"));
        assert!(
            pittman_cnot(&input, "c", "t", &wrong_kind, 1.0, &mut Policy::Exhaustive).is_err()
        );
    }
}
