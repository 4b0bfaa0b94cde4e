//! Property tests for the engine's structural invariants.

use num_complex::Complex64;
use optrep::elements::{apply_pbs, detect_resolved, BeamSplitterBasis};
use optrep::fock::{FockState, ModeRegistry, Pol};
use optrep::policy::Policy;
use proptest::prelude::*;

fn registry() -> ModeRegistry {
    ModeRegistry::builder()
        .truncation(6)
        .tag("w1")
        .mode("a", "w1")
        .mode("b", "w1")
        .build()
        .unwrap()
}

#[derive(Clone, Debug)]
struct TermSpec {
    counts: [u8; 4],
    re: f64,
    im: f64,
}

fn term_strategy() -> impl Strategy<Value = TermSpec> {
    (
        prop::array::uniform4(0u8..=2),
        -1.0f64..1.0,
        -1.0f64..1.0,
    )
        .prop_map(|(counts, re, im)| TermSpec { counts, re, im })
        .prop_filter("at least one nonzero amplitude", |t| {
            t.re.abs() + t.im.abs() > 1e-3
        })
}

fn build_state(reg: &ModeRegistry, terms: &[TermSpec]) -> Option<FockState> {
    let mut acc = FockState::vacuum(reg).scaled(Complex64::default()).with_prune_eps(0.0);
    for t in terms {
        let mut term = FockState::vacuum(reg).with_prune_eps(0.0);
        for (slot, &count) in t.counts.iter().enumerate() {
            let mode = if slot < 2 { "a" } else { "b" };
            let pol = if slot % 2 == 0 { Pol::H } else { Pol::V };
            for _ in 0..count {
                term = term.apply_creation(mode, pol).ok()?;
            }
        }
        acc = acc
            .add(&term.normalized().ok()?.scaled(Complex64::new(t.re, t.im)))
            .ok()?;
    }
    acc.normalized().ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_norm_is_multiplicative(
        ta in prop::collection::vec(term_strategy(), 1..4),
        tb in prop::collection::vec(term_strategy(), 1..4),
    ) {
        let ra = ModeRegistry::builder().truncation(6).tag("w1")
            .mode("a", "w1").mode("b", "w1").build().unwrap();
        let rb = ModeRegistry::builder().truncation(6).tag("w1")
            .mode("c", "w1").mode("d", "w1").build().unwrap();
        let (Some(a), Some(b)) = (build_state(&ra, &ta), build_state_cd(&rb, &tb)) else {
            return Ok(());
        };
        // Scale away from unit norm to make multiplicativity non-trivial.
        let a = a.scaled(Complex64::new(0.7, 0.4));
        let b = b.scaled(Complex64::new(-0.3, 1.1));
        let t = a.tensor(&b).unwrap();
        prop_assert!((t.norm() - a.norm() * b.norm()).abs() < 1e-10);
    }

    #[test]
    fn measurement_branches_sum_to_one(
        terms in prop::collection::vec(term_strategy(), 1..5),
    ) {
        let reg = registry();
        let Some(state) = build_state(&reg, &terms) else { return Ok(()); };
        for mode in ["a", "b"] {
            let outcomes = state.measure_photon_number(mode, &mut Policy::Exhaustive).unwrap();
            let total: f64 = outcomes.iter().map(|o| o.probability).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn splitters_preserve_norm(
        terms in prop::collection::vec(term_strategy(), 1..4),
        circular in any::<bool>(),
    ) {
        let reg = registry();
        let Some(state) = build_state(&reg, &terms) else { return Ok(()); };
        let basis = if circular {
            BeamSplitterBasis::Circular
        } else {
            BeamSplitterBasis::Linear
        };
        // Totals up to 8 can pile into one port; only run within headroom.
        let joint: u32 = state.terms().map(|(o, _)| o.total()).max().unwrap_or(0);
        prop_assume!(joint <= 6);
        let Ok(out) = apply_pbs(&state, "a", "b", basis) else { return Ok(()); };
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detection_branches_sum_to_one(
        terms in prop::collection::vec(term_strategy(), 1..4),
        eta in 0.0f64..=1.0,
    ) {
        let reg = registry();
        let Some(state) = build_state(&reg, &terms) else { return Ok(()); };
        let branches = detect_resolved(
            &state, "a", BeamSplitterBasis::Linear, eta, &mut Policy::Exhaustive,
        ).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

fn build_state_cd(reg: &ModeRegistry, terms: &[TermSpec]) -> Option<FockState> {
    let mut acc = FockState::vacuum(reg).scaled(Complex64::default()).with_prune_eps(0.0);
    for t in terms {
        let mut term = FockState::vacuum(reg).with_prune_eps(0.0);
        for (slot, &count) in t.counts.iter().enumerate() {
            let mode = if slot < 2 { "c" } else { "d" };
            let pol = if slot % 2 == 0 { Pol::H } else { Pol::V };
            for _ in 0..count {
                term = term.apply_creation(mode, pol).ok()?;
            }
        }
        acc = acc
            .add(&term.normalized().ok()?.scaled(Complex64::new(t.re, t.im)))
            .ok()?;
    }
    acc.normalized().ok()
}
