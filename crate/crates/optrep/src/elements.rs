//! Optical components and noise channels.
//!
//! Conventions (frozen; the CNOT correction table is derived under them):
//!
//! * linear PBS: transmits H, reflects V;
//! * circular PBS: transmits R = (H + iV)/√2, reflects L = (H − iV)/√2;
//! * reflection from the first port to the second carries +i, the reverse
//!   −i, so each splitter is its own inverse;
//! * detectors are bucket detectors behind a polarization splitter, no dark
//!   counts, click probability 1 − (1 − η)ⁿ for n photons in a bucket.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockState, MixedState, Occupation, Pol};
use crate::params::ChannelParams;
use crate::policy::Policy;

/// Which polarization pair a splitter separates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BeamSplitterBasis {
    Linear,
    Circular,
}

/// Polarization reported by a resolving detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ResolvedPol {
    H,
    V,
    R,
    L,
}

impl std::fmt::Display for ResolvedPol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResolvedPol::H => write!(f, "H"),
            ResolvedPol::V => write!(f, "V"),
            ResolvedPol::R => write!(f, "R"),
            ResolvedPol::L => write!(f, "L"),
        }
    }
}

/// Outcome of one polarization-resolving detection unit.
#[derive(Clone, Debug)]
pub struct DetectorRecord {
    pub mode: String,
    pub clicked: bool,
    pub basis: BeamSplitterBasis,
    /// Present only when exactly one bucket clicked.
    pub resolved_pol: Option<ResolvedPol>,
    pub efficiency: f64,
}

pub type Mat2 = [[Complex64; 2]; 2];

const I0: Complex64 = Complex64::new(0.0, 0.0);
const R1: Complex64 = Complex64::new(1.0, 0.0);
const IM: Complex64 = Complex64::new(0.0, 1.0);

pub const MAT_ID: Mat2 = [[R1, I0], [I0, R1]];
pub const MAT_X: Mat2 = [[I0, R1], [R1, I0]];
pub const MAT_Y: Mat2 = [[I0, Complex64::new(0.0, -1.0)], [IM, I0]];
pub const MAT_Z: Mat2 = [[R1, I0], [I0, Complex64::new(-1.0, 0.0)]];
/// Phase gate diag(1, i).
pub const MAT_S: Mat2 = [[R1, I0], [I0, IM]];
/// Phase gate diag(1, −i).
pub const MAT_SDG: Mat2 = [[R1, I0], [I0, Complex64::new(0.0, -1.0)]];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[I0; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn mat2_adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn unitarity_deviation(u: &Mat2) -> f64 {
    let p = mat2_mul(&mat2_adjoint(u), u);
    let mut dev: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let expect = if r == c { R1 } else { I0 };
            dev = dev.max((p[r][c] - expect).norm());
        }
    }
    dev
}

/// Frame rotation sending R to the H slot and L to the V slot.
fn circular_frame() -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        [Complex64::new(s, 0.0), Complex64::new(0.0, -s)],
        [Complex64::new(s, 0.0), Complex64::new(0.0, s)],
    ]
}

/// Raises `FrequencyMismatch` unless the two ports may interfere.
fn check_equal_frequencies(state: &FockState, port_a: &str, port_b: &str) -> Result<()> {
    let reg = state.registry();
    let tag_a = reg.tag(port_a)?;
    let tag_b = reg.tag(port_b)?;
    if tag_a == tag_b {
        return Ok(());
    }
    let (ia, ib) = (reg.mode_index(port_a)?, reg.mode_index(port_b)?);
    for (occ, _) in state.terms() {
        if occ.total_in(ia) > 0 && occ.total_in(ib) > 0 {
            return Err(Error::FrequencyMismatch {
                port_a: port_a.to_string(),
                port_b: port_b.to_string(),
                tag_a: reg.tag_name(tag_a).to_string(),
                tag_b: reg.tag_name(tag_b).to_string(),
            });
        }
    }
    Ok(())
}

/// Polarization content of one mode transformed by a 2×2 unitary on {H, V};
/// multiphoton terms transform by the induced representation.
pub fn apply_local_unitary(state: &FockState, mode: &str, u: &Mat2) -> Result<FockState> {
    let dev = unitarity_deviation(u);
    if dev >= 1e-12 {
        return Err(Error::NotUnitary { deviation: dev });
    }
    apply_mode_map(state, mode, u)
}

fn apply_mode_map(state: &FockState, mode: &str, u: &Mat2) -> Result<FockState> {
    let reg = state.registry();
    let m = reg.mode_index(mode)?;
    let slots = [reg.slot(m, Pol::H), reg.slot(m, Pol::V)];
    let matrix = vec![vec![u[0][0], u[0][1]], vec![u[1][0], u[1][1]]];
    state.apply_slot_linear_map(&slots, &matrix)
}


/// Two-port polarizing beam splitter.
///
/// In the splitter's eigenbasis one polarization transmits (a→a, b→b) and
/// the orthogonal one reflects (a→b with +i, b→a with −i). Unitary on the
/// two-port subspace and self-inverse.
pub fn apply_pbs(
    state: &FockState,
    port_a: &str,
    port_b: &str,
    basis: BeamSplitterBasis,
) -> Result<FockState> {
    if port_a == port_b {
        return Err(Error::Contract("beam splitter ports must differ".into()));
    }
    check_equal_frequencies(state, port_a, port_b)?;
    match basis {
        BeamSplitterBasis::Linear => apply_linear_pbs(state, port_a, port_b),
        BeamSplitterBasis::Circular => {
            // Conjugate the linear splitter by the circular frame on both
            // ports: the R/L slots take the role of H/V.
            let w = circular_frame();
            let w_dag = mat2_adjoint(&w);
            let mut s = apply_mode_map(state, port_a, &w)?;
            s = apply_mode_map(&s, port_b, &w)?;
            s = apply_linear_pbs(&s, port_a, port_b)?;
            s = apply_mode_map(&s, port_a, &w_dag)?;
            apply_mode_map(&s, port_b, &w_dag)
        }
    }
}

fn apply_linear_pbs(state: &FockState, port_a: &str, port_b: &str) -> Result<FockState> {
    let reg = state.registry();
    let (ma, mb) = (reg.mode_index(port_a)?, reg.mode_index(port_b)?);
    let (av, bv) = (reg.slot(ma, Pol::V), reg.slot(mb, Pol::V));
    let mut out = Vec::with_capacity(state.num_terms());
    for (occ, amp) in state.terms() {
        let q = occ.count(av);
        let s = occ.count(bv);
        // a†_V ↦ i b†_V and b†_V ↦ −i a†_V: counts swap, phase i^q · (−i)^s.
        let phase = IM.powu(q) * (-IM).powu(s);
        let swapped = occ.with_slot(av, s).with_slot(bv, q);
        out.push((swapped, amp * phase));
    }
    Ok(FockState::from_terms(reg, state.prune_eps(), out))
}

/// Non-polarizing 50/50 beam splitter on two ports (both polarizations mix
/// identically): a† ↦ (a† + ib†)/√2, b† ↦ (ia† + b†)/√2.
pub fn apply_balanced_bs(state: &FockState, port_a: &str, port_b: &str) -> Result<FockState> {
    if port_a == port_b {
        return Err(Error::Contract("beam splitter ports must differ".into()));
    }
    check_equal_frequencies(state, port_a, port_b)?;
    let reg = state.registry();
    let (ma, mb) = (reg.mode_index(port_a)?, reg.mode_index(port_b)?);
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let matrix = vec![vec![s, IM * s], vec![IM * s, s]];
    let mut out = state.clone();
    for pol in Pol::BOTH {
        let slots = [reg.slot(ma, pol), reg.slot(mb, pol)];
        out = out.apply_slot_linear_map(&slots, &matrix)?;
    }
    Ok(out)
}

/// Routes the photons of `in_mode` to the output whose declared frequency
/// tag matches; polarization is untouched.
///
/// A beam carrying both frequencies is represented as one registry mode per
/// frequency channel; split each channel with its own call.
pub fn dichroic_split(
    state: &FockState,
    in_mode: &str,
    out_low: &str,
    out_high: &str,
) -> Result<FockState> {
    let reg = state.registry();
    let t_in = reg.tag(in_mode)?;
    let t_lo = reg.tag(out_low)?;
    let t_hi = reg.tag(out_high)?;
    if t_lo == t_hi {
        return Err(Error::Routing(format!(
            "dichroic outputs `{out_low}` and `{out_high}` must carry distinct tags"
        )));
    }
    let dest = if t_in == t_lo {
        out_low
    } else if t_in == t_hi {
        out_high
    } else {
        return Err(Error::Routing(format!(
            "input tag {} matches neither output ({} / {})",
            reg.tag_name(t_in),
            reg.tag_name(t_lo),
            reg.tag_name(t_hi)
        )));
    };
    let (mi, md) = (reg.mode_index(in_mode)?, reg.mode_index(dest)?);
    let mut out = Vec::with_capacity(state.num_terms());
    for (occ, amp) in state.terms() {
        if occ.total_in(md) != 0 && occ.total_in(mi) != 0 {
            return Err(Error::Routing(format!(
                "dichroic output `{dest}` is already occupied"
            )));
        }
        let mut moved = occ.clone();
        for pol in Pol::BOTH {
            let from = reg.slot(mi, pol);
            let to = reg.slot(md, pol);
            let n = moved.count(from);
            if n > 0 {
                moved = moved.with_slot(from, 0).with_slot(to, n);
            }
        }
        out.push((moved, *amp));
    }
    Ok(FockState::from_terms(reg, state.prune_eps(), out))
}

/// One branch of a number-resolved, polarization-resolved detection.
#[derive(Clone, Debug)]
pub struct DetectionBranch {
    /// Photon count in the transmit-basis bucket (H or R).
    pub n1: u32,
    /// Photon count in the orthogonal bucket (V or L).
    pub n2: u32,
    pub clicked1: bool,
    pub clicked2: bool,
    pub probability: f64,
    pub record: DetectorRecord,
    /// State conditioned on the outcome, with the detected mode emptied.
    pub post: FockState,
}

/// Exact detection model: project the mode onto a joint photon-number
/// outcome in the requested basis, then thin each bucket's click with the
/// detector efficiency. All photons in the mode are consumed.
pub fn detect_resolved(
    state: &FockState,
    mode: &str,
    basis: BeamSplitterBasis,
    eta: f64,
    policy: &mut Policy,
) -> Result<Vec<DetectionBranch>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta = {eta} outside [0, 1]")));
    }
    state.require_normalized()?;
    let rotated = match basis {
        BeamSplitterBasis::Linear => state.clone(),
        BeamSplitterBasis::Circular => apply_mode_map(state, mode, &circular_frame())?,
    };
    let reg = rotated.registry();
    let m = reg.mode_index(mode)?;
    let (s1, s2) = (reg.slot(m, Pol::H), reg.slot(m, Pol::V));

    // Group terms by the joint (n1, n2) occupation of the mode.
    let mut groups: std::collections::BTreeMap<(u32, u32), Vec<(Occupation, Complex64)>> =
        std::collections::BTreeMap::new();
    for (occ, amp) in rotated.terms() {
        groups
            .entry((occ.count(s1), occ.count(s2)))
            .or_default()
            .push((occ.clone(), *amp));
    }

    let (pol1, pol2) = match basis {
        BeamSplitterBasis::Linear => (ResolvedPol::H, ResolvedPol::V),
        BeamSplitterBasis::Circular => (ResolvedPol::R, ResolvedPol::L),
    };
    let mut branches = Vec::new();
    for ((n1, n2), terms) in groups {
        let p_number: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
        let scale = Complex64::new(1.0 / p_number.sqrt(), 0.0);
        let post = FockState::from_terms(
            reg,
            rotated.prune_eps(),
            terms
                .into_iter()
                .map(|(o, a)| (o.with_slot(s1, 0).with_slot(s2, 0), a * scale)),
        );
        let p_click1 = 1.0 - (1.0 - eta).powi(n1 as i32);
        let p_click2 = 1.0 - (1.0 - eta).powi(n2 as i32);
        for clicked1 in [false, true] {
            for clicked2 in [false, true] {
                let pc = (if clicked1 { p_click1 } else { 1.0 - p_click1 })
                    * (if clicked2 { p_click2 } else { 1.0 - p_click2 });
                if pc == 0.0 {
                    continue;
                }
                let resolved_pol = match (clicked1, clicked2) {
                    (true, false) => Some(pol1),
                    (false, true) => Some(pol2),
                    _ => None,
                };
                branches.push(DetectionBranch {
                    n1,
                    n2,
                    clicked1,
                    clicked2,
                    probability: p_number * pc,
                    record: DetectorRecord {
                        mode: mode.to_string(),
                        clicked: clicked1 || clicked2,
                        basis,
                        resolved_pol,
                        efficiency: eta,
                    },
                    post: post.clone(),
                });
            }
        }
    }
    Ok(policy.choose(branches, |b| b.probability))
}

/// Bucket detection behind a polarization splitter in the requested basis.
///
/// Click probability for n photons in a bucket is 1 − (1 − η)ⁿ; no dark
/// counts; the post-state is conditioned on the record and the mode is
/// consumed.
pub fn detect(
    state: &FockState,
    mode: &str,
    basis: BeamSplitterBasis,
    eta: f64,
    policy: &mut Policy,
) -> Result<Vec<(DetectorRecord, FockState, f64)>> {
    Ok(detect_resolved(state, mode, basis, eta, policy)?
        .into_iter()
        .map(|b| (b.record, b.post, b.probability))
        .collect())
}

/// One branch of a pair transit through the noisy channel.
#[derive(Clone, Debug)]
pub struct TransitBranch {
    pub survived: bool,
    pub dephased: bool,
    pub probability: f64,
    pub post: FockState,
}

/// Transit of one distributed pair through the channel.
///
/// The pair survives with probability ζ; a surviving pair is dephasing-free
/// with probability 1 − γ, otherwise the designated far photon picks up a Z
/// flip. The loss branch leaves vacuum.
pub fn channel_transit(
    pair_state: &FockState,
    far_mode: &str,
    params: &ChannelParams,
    policy: &mut Policy,
) -> Result<Vec<TransitBranch>> {
    pair_state.require_normalized()?;
    for (occ, _) in pair_state.terms() {
        if occ.total() != 2 {
            return Err(Error::Contract(format!(
                "channel transit expects exactly one distributed pair, found a term with {} photons",
                occ.total()
            )));
        }
    }
    let reg = pair_state.registry();
    reg.mode_index(far_mode)?;
    let mut branches = Vec::new();
    let p_lost = 1.0 - params.zeta;
    if p_lost > 0.0 {
        branches.push(TransitBranch {
            survived: false,
            dephased: false,
            probability: p_lost,
            post: FockState::vacuum(reg),
        });
    }
    let p_clean = params.zeta * (1.0 - params.gamma);
    if p_clean > 0.0 {
        branches.push(TransitBranch {
            survived: true,
            dephased: false,
            probability: p_clean,
            post: pair_state.clone(),
        });
    }
    let p_dephased = params.zeta * params.gamma;
    if p_dephased > 0.0 {
        branches.push(TransitBranch {
            survived: true,
            dephased: true,
            probability: p_dephased,
            post: apply_local_unitary(pair_state, far_mode, &MAT_Z)?,
        });
    }
    Ok(policy.choose(branches, |b| b.probability))
}

/// Full transit ensemble as a mixture.
pub fn transit_mixture(branches: &[TransitBranch]) -> Result<MixedState> {
    MixedState::new(
        branches
            .iter()
            .map(|b| (b.probability, b.post.clone()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{pair_registry, ModeRegistry};
    use crate::params::BellKind;
    use crate::policy::trial_rng;
    use crate::sources::bell_state;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn one_photon(reg: &ModeRegistry, mode: &str, pol: Pol) -> FockState {
        FockState::vacuum(reg).apply_creation(mode, pol).unwrap()
    }

    #[test]
    fn linear_pbs_transmits_h_and_reflects_v() {
        let reg = pair_registry("a", "b");
        let h_in = one_photon(&reg, "a", Pol::H);
        let h_out = apply_pbs(&h_in, "a", "b", BeamSplitterBasis::Linear).unwrap();
        assert_abs_diff_eq!(h_out.fidelity(&h_in).unwrap(), 1.0, epsilon = 1e-12);

        let v_in = one_photon(&reg, "a", Pol::V);
        let v_out = apply_pbs(&v_in, "a", "b", BeamSplitterBasis::Linear).unwrap();
        // All amplitude leaves port a for port b.
        let expect = one_photon(&reg, "b", Pol::V);
        assert_abs_diff_eq!(v_out.fidelity(&expect).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn circular_pbs_splits_h_across_both_ports() {
        // |H⟩ = (|R⟩ + |L⟩)/√2: R transmits, L reflects, 1/2 each.
        let reg = pair_registry("a", "b");
        let h_in = one_photon(&reg, "a", Pol::H);
        let out = apply_pbs(&h_in, "a", "b", BeamSplitterBasis::Circular).unwrap();
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
        let outcomes = out
            .measure_photon_number("a", &mut Policy::Exhaustive)
            .unwrap();
        for o in &outcomes {
            assert_abs_diff_eq!(o.probability, 0.5, epsilon = 1e-12);
        }
        assert_eq!(outcomes.len(), 2);
    }

    #[test]
    fn both_splitter_kinds_are_involutions() {
        let reg = pair_registry("a", "b");
        let mut rng = trial_rng(11, 0);
        for basis in [BeamSplitterBasis::Linear, BeamSplitterBasis::Circular] {
            for _ in 0..20 {
                // Random two-port state with up to two photons per slot.
                let mut s = FockState::vacuum(&reg);
                for _ in 0..rng.random_range(1..=3) {
                    let mode = if rng.random::<bool>() { "a" } else { "b" };
                    let pol = if rng.random::<bool>() { Pol::H } else { Pol::V };
                    s = s.apply_creation(mode, pol).unwrap();
                }
                let s = s.normalized().unwrap();
                let once = apply_pbs(&s, "a", "b", basis).unwrap();
                assert_abs_diff_eq!(once.norm(), 1.0, epsilon = 1e-12);
                let twice = apply_pbs(&once, "a", "b", basis).unwrap();
                // Elementwise restoration.
                for (occ, amp) in s.terms() {
                    assert_abs_diff_eq!((twice.amplitude(occ) - amp).norm(), 0.0, epsilon = 1e-12);
                }
                assert_eq!(twice.num_terms(), s.num_terms());
            }
        }
    }

    #[test]
    fn local_unitaries_move_between_bell_states() {
        let reg = pair_registry("a", "b");
        let phi_plus = bell_state(&reg, BellKind::PhiPlus, "a", "b").unwrap();
        let x_on_b = apply_local_unitary(&phi_plus, "b", &MAT_X).unwrap();
        let psi_plus = bell_state(&reg, BellKind::PsiPlus, "a", "b").unwrap();
        assert_abs_diff_eq!(x_on_b.fidelity(&psi_plus).unwrap(), 1.0, epsilon = 1e-12);

        let z_on_b = apply_local_unitary(&phi_plus, "b", &MAT_Z).unwrap();
        let phi_minus = bell_state(&reg, BellKind::PhiMinus, "a", "b").unwrap();
        assert_abs_diff_eq!(z_on_b.fidelity(&phi_minus).unwrap(), 1.0, epsilon = 1e-12);

        let id = apply_local_unitary(&phi_plus, "b", &MAT_ID).unwrap();
        for (occ, amp) in phi_plus.terms() {
            assert_abs_diff_eq!((id.amplitude(occ) - amp).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn non_unitary_matrix_is_rejected() {
        let reg = pair_registry("a", "b");
        let s = one_photon(&reg, "a", Pol::H);
        let bad = [[R1, R1], [I0, R1]];
        assert!(matches!(
            apply_local_unitary(&s, "a", &bad),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn frequency_mismatch_requires_photons_at_both_ports() {
        let reg = ModeRegistry::builder()
            .tag("w1")
            .tag("w2")
            .mode("a", "w1")
            .mode("b", "w2")
            .build()
            .unwrap();
        // One photon only at port a: routing is tag-unambiguous, allowed.
        let single = one_photon(&reg, "a", Pol::V);
        assert!(apply_pbs(&single, "a", "b", BeamSplitterBasis::Linear).is_ok());
        // Photons at both ports with unequal tags: rejected.
        let both = single.apply_creation("b", Pol::H).unwrap();
        assert!(matches!(
            apply_pbs(&both, "a", "b", BeamSplitterBasis::Linear),
            Err(Error::FrequencyMismatch { .. })
        ));
    }

    #[test]
    fn dichroic_routes_by_tag_and_preserves_entanglement() {
        // A gun pair in one spatial beam, represented as its two frequency
        // channels, split onto two stations.
        let reg = ModeRegistry::builder()
            .tag("w1")
            .tag("w2")
            .mode("beam_lo", "w1")
            .mode("beam_hi", "w2")
            .mode("alice", "w1")
            .mode("bob", "w2")
            .build()
            .unwrap();
        let pair = bell_state(&reg, BellKind::PhiPlus, "beam_lo", "beam_hi").unwrap();
        let split = dichroic_split(&pair, "beam_lo", "alice", "bob").unwrap();
        let split = dichroic_split(&split, "beam_hi", "alice", "bob").unwrap();
        let target = bell_state(&reg, BellKind::PhiPlus, "alice", "bob").unwrap();
        assert_abs_diff_eq!(split.fidelity(&target).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dichroic_vacuum_and_single_photon() {
        let reg = ModeRegistry::builder()
            .tag("w1")
            .tag("w2")
            .mode("in", "w1")
            .mode("lo", "w1")
            .mode("hi", "w2")
            .build()
            .unwrap();
        let vac = FockState::vacuum(&reg);
        let out = dichroic_split(&vac, "in", "lo", "hi").unwrap();
        assert_abs_diff_eq!(out.fidelity(&vac).unwrap(), 1.0, epsilon = 1e-15);

        let photon = one_photon(&reg, "in", Pol::H);
        let routed = dichroic_split(&photon, "in", "lo", "hi").unwrap();
        let expect = one_photon(&reg, "lo", Pol::H);
        assert_abs_diff_eq!(routed.fidelity(&expect).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dichroic_unknown_tag_is_a_routing_error() {
        let reg = ModeRegistry::builder()
            .tag("w1")
            .tag("w2")
            .tag("w3")
            .mode("in", "w3")
            .mode("lo", "w1")
            .mode("hi", "w2")
            .build()
            .unwrap();
        let photon = one_photon(&reg, "in", Pol::H);
        assert!(matches!(
            dichroic_split(&photon, "in", "lo", "hi"),
            Err(Error::Routing(_))
        ));
    }

    #[test]
    fn detection_examples() {
        let reg = pair_registry("a", "b");
        // η = 1, |1_H⟩: certain click resolved H.
        let h = one_photon(&reg, "a", Pol::H);
        let branches = detect(&h, "a", BeamSplitterBasis::Linear, 1.0, &mut Policy::Exhaustive)
            .unwrap();
        let clicked: Vec<_> = branches.iter().filter(|(r, _, _)| r.clicked).collect();
        assert_eq!(clicked.len(), 1);
        assert_abs_diff_eq!(clicked[0].2, 1.0, epsilon = 1e-12);
        assert_eq!(clicked[0].0.resolved_pol, Some(ResolvedPol::H));

        // η = 0.8, one photon: click probability 0.8.
        let branches = detect(&h, "a", BeamSplitterBasis::Linear, 0.8, &mut Policy::Exhaustive)
            .unwrap();
        let p_click: f64 = branches
            .iter()
            .filter(|(r, _, _)| r.clicked)
            .map(|(_, _, p)| p)
            .sum();
        assert_abs_diff_eq!(p_click, 0.8, epsilon = 1e-12);

        // Vacuum: no dark counts.
        let vac = FockState::vacuum(&reg);
        let branches = detect(&vac, "a", BeamSplitterBasis::Linear, 0.7, &mut Policy::Exhaustive)
            .unwrap();
        assert_eq!(branches.len(), 1);
        assert!(!branches[0].0.clicked);
        assert_abs_diff_eq!(branches[0].2, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn detection_branches_sum_to_one_for_any_eta() {
        let reg = pair_registry("a", "b");
        let s = bell_state(&reg, BellKind::PhiPlus, "a", "b").unwrap();
        for eta in [0.0, 0.3, 0.5, 0.9, 1.0] {
            let branches =
                detect_resolved(&s, "a", BeamSplitterBasis::Circular, eta, &mut Policy::Exhaustive)
                    .unwrap();
            let total: f64 = branches.iter().map(|b| b.probability).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_photon_bucket_click_probability() {
        let reg = pair_registry("a", "b");
        let two = FockState::vacuum(&reg)
            .apply_creation("a", Pol::H)
            .unwrap()
            .apply_creation("a", Pol::H)
            .unwrap()
            .normalized()
            .unwrap();
        let eta = 0.6;
        let branches =
            detect_resolved(&two, "a", BeamSplitterBasis::Linear, eta, &mut Policy::Exhaustive)
                .unwrap();
        let p_click: f64 = branches
            .iter()
            .filter(|b| b.clicked1)
            .map(|b| b.probability)
            .sum();
        assert_abs_diff_eq!(p_click, 1.0 - (1.0 - eta) * (1.0 - eta), epsilon = 1e-12);
    }

    #[test]
    fn channel_transit_branch_structure() {
        let reg = pair_registry("a", "b");
        let pair = bell_state(&reg, BellKind::PhiPlus, "a", "b").unwrap();

        // Noiseless channel: unchanged with certainty.
        let ideal = ChannelParams::new(0.0, 1.0).unwrap();
        let branches = channel_transit(&pair, "b", &ideal, &mut Policy::Exhaustive).unwrap();
        assert_eq!(branches.len(), 1);
        assert!(branches[0].survived && !branches[0].dephased);
        assert_abs_diff_eq!(branches[0].probability, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(branches[0].post.fidelity(&pair).unwrap(), 1.0, epsilon = 1e-12);

        // Worked-example parameters: usable probability ζ(1 − γ) = √2/4 per
        // pair, so two pairs reproduce the ζ²(1 − γ)² = 1/8 factor.
        let noisy = ChannelParams::new(0.5, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let branches = channel_transit(&pair, "b", &noisy, &mut Policy::Exhaustive).unwrap();
        let usable: f64 = branches
            .iter()
            .filter(|b| b.survived && !b.dephased)
            .map(|b| b.probability)
            .sum();
        assert_abs_diff_eq!(usable, 2f64.sqrt() / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(usable * usable, 0.125, epsilon = 1e-12);
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);

        // A dephased Φ⁺ is exactly Φ⁻.
        let dephased = branches.iter().find(|b| b.dephased).unwrap();
        let phi_minus = bell_state(&reg, BellKind::PhiMinus, "a", "b").unwrap();
        assert_abs_diff_eq!(dephased.post.fidelity(&pair).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            dephased.post.fidelity(&phi_minus).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        // ζ = 0: the pair never survives.
        let opaque = ChannelParams::new(0.2, 0.0).unwrap();
        let branches = channel_transit(&pair, "b", &opaque, &mut Policy::Exhaustive).unwrap();
        assert!(branches.iter().all(|b| !b.survived));

        let mix = transit_mixture(&branches).unwrap();
        assert_eq!(mix.branches().len(), branches.len());
    }

    #[test]
    fn channel_transit_rejects_non_pairs() {
        let reg = pair_registry("a", "b");
        let single = one_photon(&reg, "a", Pol::H);
        let params = ChannelParams::new(0.1, 0.9).unwrap();
        assert!(matches!(
            channel_transit(&single, "a", &params, &mut Policy::Exhaustive),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn balanced_splitter_bunches_identical_photons() {
        // Two identical photons entering opposite ports always exit
        // together.
        let reg = pair_registry("a", "b");
        let input = FockState::vacuum(&reg)
            .apply_creation("a", Pol::H)
            .unwrap()
            .apply_creation("b", Pol::H)
            .unwrap();
        let out = apply_balanced_bs(&input, "a", "b").unwrap();
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
        for (occ, _) in out.terms() {
            let (na, nb) = (occ.total_in(0), occ.total_in(1));
            assert!(
                (na == 2 && nb == 0) || (na == 0 && nb == 2),
                "coincidence term survived Hong-Ou-Mandel interference"
            );
        }
    }
}
