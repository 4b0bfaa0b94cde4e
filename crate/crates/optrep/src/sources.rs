//! Entanglement sources: the triggered double-photon gun and the parametric
//! down-converter with its multi-pair expansion.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockState, ModeRegistry, Pol};
use crate::params::{BellKind, GunParams, PdcParams};
use crate::policy::Policy;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Exact Bell state on two modes of the registry.
pub fn bell_state(
    reg: &ModeRegistry,
    kind: BellKind,
    mode_a: &str,
    mode_b: &str,
) -> Result<FockState> {
    let v = FockState::vacuum(reg);
    let make = |pa: Pol, pb: Pol| -> Result<FockState> {
        v.apply_creation(mode_a, pa)?.apply_creation(mode_b, pb)
    };
    let (first, second, sign) = match kind {
        BellKind::PhiPlus => ((Pol::H, Pol::H), (Pol::V, Pol::V), 1.0),
        BellKind::PhiMinus => ((Pol::H, Pol::H), (Pol::V, Pol::V), -1.0),
        BellKind::PsiPlus => ((Pol::H, Pol::V), (Pol::V, Pol::H), 1.0),
        BellKind::PsiMinus => ((Pol::H, Pol::V), (Pol::V, Pol::H), -1.0),
    };
    let a = make(first.0, first.1)?;
    let b = make(second.0, second.1)?.scaled(Complex64::new(sign, 0.0));
    Ok(a.add(&b)?.scaled(Complex64::new(SQRT_HALF, 0.0)))
}

/// One branch of a gun trigger.
#[derive(Clone, Debug)]
pub struct GunBranch {
    pub fired: bool,
    pub probability: f64,
    pub state: FockState,
}

/// Triggered pair emission into two empty modes.
///
/// With probability `p_s` the gun emits exactly the declared Bell pair with
/// the declared frequency tags; otherwise it emits vacuum. Multiple-pair
/// emission never happens. The registry tags of the target modes must match
/// the gun's frequency pair.
pub fn fire_gun(
    reg: &ModeRegistry,
    mode_a: &str,
    mode_b: &str,
    params: &GunParams,
    policy: &mut Policy,
) -> Result<Vec<GunBranch>> {
    let tag_a = reg.tag(mode_a)?;
    let tag_b = reg.tag(mode_b)?;
    if reg.tag_name(tag_a) != params.freq_pair.0 || reg.tag_name(tag_b) != params.freq_pair.1 {
        return Err(Error::Contract(format!(
            "gun emits ({}, {}) but modes `{mode_a}`/`{mode_b}` carry ({}, {})",
            params.freq_pair.0,
            params.freq_pair.1,
            reg.tag_name(tag_a),
            reg.tag_name(tag_b),
        )));
    }
    let mut branches = Vec::new();
    if params.p_s > 0.0 {
        branches.push(GunBranch {
            fired: true,
            probability: params.p_s,
            state: bell_state(reg, params.emitted_kind, mode_a, mode_b)?,
        });
    }
    if params.p_s < 1.0 {
        branches.push(GunBranch {
            fired: false,
            probability: 1.0 - params.p_s,
            state: FockState::vacuum(reg),
        });
    }
    Ok(policy.choose(branches, |b| b.probability))
}

/// Fires the gun into an existing state whose target modes must be empty.
pub fn fire_gun_into(
    state: &FockState,
    mode_a: &str,
    mode_b: &str,
    params: &GunParams,
    policy: &mut Policy,
) -> Result<Vec<(GunBranch, FockState)>> {
    let reg = state.registry();
    let (ia, ib) = (reg.mode_index(mode_a)?, reg.mode_index(mode_b)?);
    for (occ, _) in state.terms() {
        if occ.total_in(ia) != 0 || occ.total_in(ib) != 0 {
            return Err(Error::Contract(format!(
                "gun target modes `{mode_a}`/`{mode_b}` must be empty"
            )));
        }
    }
    let branches = fire_gun(reg, mode_a, mode_b, params, policy)?;
    branches
        .into_iter()
        .map(|b| {
            let combined = if b.fired {
                multiply_pair_in(state, &b.state)?
            } else {
                state.clone()
            };
            Ok((b, combined))
        })
        .collect()
}

/// Product of a pair state (on two otherwise-empty modes) with an existing
/// state on the same registry.
fn multiply_pair_in(state: &FockState, pair: &FockState) -> Result<FockState> {
    // Both live on the full registry; the pair has support only on its two
    // modes, so the product is a term-by-term occupation merge.
    let mut combined: Option<FockState> = None;
    for (occ, amp) in pair.terms() {
        let mut part = state.scaled(*amp);
        for slot in 0..occ.slots() {
            for _ in 0..occ.count(slot) {
                let mode = slot / 2;
                let pol = if slot % 2 == 0 { Pol::H } else { Pol::V };
                part = part.apply_creation(state.registry().label(mode), pol)?;
            }
        }
        combined = Some(match combined {
            None => part,
            Some(acc) => acc.add(&part)?,
        });
    }
    combined.ok_or_else(|| Error::Contract("empty pair state".into()))
}

/// L̂₊ = â†_H b̂†_V − â†_V b̂†_H applied once.
pub fn apply_pair_creation(state: &FockState, mode_a: &str, mode_b: &str) -> Result<FockState> {
    let t1 = state
        .apply_creation(mode_a, Pol::H)?
        .apply_creation(mode_b, Pol::V)?;
    let t2 = state
        .apply_creation(mode_a, Pol::V)?
        .apply_creation(mode_b, Pol::H)?;
    t1.add(&t2.scaled(Complex64::new(-1.0, 0.0)))
}

/// L̂₋ = L̂₊† applied once.
pub fn apply_pair_annihilation(
    state: &FockState,
    mode_a: &str,
    mode_b: &str,
) -> Result<FockState> {
    let t1 = state
        .apply_annihilation(mode_a, Pol::H)?
        .apply_annihilation(mode_b, Pol::V)?;
    let t2 = state
        .apply_annihilation(mode_a, Pol::V)?
        .apply_annihilation(mode_b, Pol::H)?;
    t1.add(&t2.scaled(Complex64::new(-1.0, 0.0)))
}

fn two_mode_labels(reg: &ModeRegistry) -> Result<(String, String)> {
    if reg.len() != 2 {
        return Err(Error::Contract(format!(
            "the down-converter drives exactly two modes, registry has {}",
            reg.len()
        )));
    }
    let mut it = reg.labels();
    let a = it.next().unwrap().to_string();
    let b = it.next().unwrap().to_string();
    Ok((a, b))
}

/// 1/√(n!(n+1)!), the multiple-pair normalization: ‖L̂₊ⁿ|0⟩‖ is its inverse.
pub fn pair_sector_norm(n: u32) -> f64 {
    let mut acc = 1.0f64;
    for k in 1..=n {
        acc *= k as f64;
    }
    for k in 1..=(n + 1) {
        acc *= k as f64;
    }
    1.0 / acc.sqrt()
}

/// Truncated multi-pair expansion of the down-converter output.
///
/// The n-pair sector carries amplitude proportional to εⁿ/√(n!(n+1)!) over
/// the unit-normalized sector states, and the truncated sum is renormalized.
/// See [`pdc_state_exponential`] for the exact Hamiltonian exponential,
/// which weights sector n by an additional √(n+1); the two profiles are
/// compared by the `verify-pdc` report.
pub fn pdc_state(reg: &ModeRegistry, params: &PdcParams) -> Result<FockState> {
    let (a, b) = two_mode_labels(reg)?;
    if params.n_max > reg.n_max() {
        return Err(Error::Truncation {
            slot: format!("{a}/{b} pair sectors"),
            n_max: reg.n_max(),
        });
    }
    let mut sector = FockState::vacuum(reg);
    let mut eps_pow = Complex64::new(1.0, 0.0);
    let mut acc: Option<FockState> = None;
    for n in 0..=params.n_max {
        if n > 0 {
            sector = apply_pair_creation(&sector, &a, &b)?;
            eps_pow *= params.epsilon;
        }
        // sector holds L̂₊ⁿ|0⟩ with norm 1/N_n; weighting by N_n² makes the
        // sector amplitude over unit sectors equal to εⁿ·N_n.
        let coeff = eps_pow * pair_sector_norm(n) * pair_sector_norm(n);
        let weighted = sector.scaled(coeff);
        acc = Some(match acc {
            None => weighted,
            Some(t) => t.add(&weighted)?,
        });
    }
    acc.unwrap().normalized()
}

/// Exact truncated-space exponential of the pair-creation Hamiltonian.
///
/// Computes exp(ξL̂₊ − ξ*L̂₋)|0⟩ with tanh|ξ| = |ε| by a convergent Taylor
/// series on the occupation lattice truncated at the registry's n_max, the
/// same operator the dense oracle exponentiates. Its n-pair sector amplitude
/// grows an extra √(n+1) relative to [`pdc_state`].
pub fn pdc_state_exponential(reg: &ModeRegistry, params: &PdcParams) -> Result<FockState> {
    let (a, b) = two_mode_labels(reg)?;
    let r = params.epsilon.norm().atanh();
    let xi = if params.epsilon.norm() == 0.0 {
        Complex64::default()
    } else {
        params.epsilon / params.epsilon.norm() * r
    };
    // |ψ_k⟩ = G^k|0⟩ / k!, summed until the tail is negligible.
    let mut term = FockState::vacuum(reg).with_prune_eps(0.0);
    let mut acc = term.clone();
    for k in 1..200 {
        term = apply_generator_truncated(&term, &a, &b, xi)?
            .scaled(Complex64::new(1.0 / k as f64, 0.0));
        let tail = term.norm();
        acc = acc.add(&term)?;
        if tail < 1e-16 {
            break;
        }
    }
    acc.normalized()
}

/// (ξL̂₊ − ξ*L̂₋)|ψ⟩ on the truncated occupation lattice: components that
/// would leave the lattice are dropped, exactly as in a dense operator
/// built on that lattice.
fn apply_generator_truncated(
    state: &FockState,
    a: &str,
    b: &str,
    xi: Complex64,
) -> Result<FockState> {
    let t1 = state
        .apply_creation_projected(a, Pol::H)?
        .apply_creation_projected(b, Pol::V)?;
    let t2 = state
        .apply_creation_projected(a, Pol::V)?
        .apply_creation_projected(b, Pol::H)?;
    let raised = t1.add(&t2.scaled(Complex64::new(-1.0, 0.0)))?.scaled(xi);
    let lowered = apply_pair_annihilation(state, a, b)?.scaled(-xi.conj());
    raised.add(&lowered)
}

/// Residual norms of the su(1,1) commutators on one basis state.
#[derive(Clone, Debug)]
pub struct Su11Residual {
    pub occupation_label: String,
    pub total_photons: u32,
    /// ‖([L̂₋, L̂₊] − 2L̂₀)|ψ⟩‖ with 2L̂₀ = N̂ + 2.
    pub lowering_raising: f64,
    /// ‖([L̂₀, L̂₊] − L̂₊)|ψ⟩‖.
    pub weight_raising: f64,
}

/// Commutator residuals on every basis state with total photons ≤ n_max − 2,
/// the sector where truncation cannot bite.
pub fn su11_residuals(reg: &ModeRegistry, n_max: u32) -> Result<Vec<Su11Residual>> {
    if n_max < 2 {
        return Err(Error::Contract("su(1,1) residuals need n_max ≥ 2".into()));
    }
    let (a, b) = two_mode_labels(reg)?;
    if n_max > reg.n_max() {
        return Err(Error::Truncation {
            slot: "su(1,1) residual sweep".into(),
            n_max: reg.n_max(),
        });
    }
    let budget = n_max - 2;
    let mut out = Vec::new();
    for occ in enumerate_occupations(4, budget) {
        let mut psi = FockState::vacuum(reg).with_prune_eps(0.0);
        for (slot, &count) in occ.iter().enumerate() {
            let mode = if slot < 2 { &a } else { &b };
            let pol = if slot % 2 == 0 { Pol::H } else { Pol::V };
            for _ in 0..count {
                psi = psi.apply_creation(mode, pol)?;
            }
        }
        let psi = psi.normalized()?;
        let total: u32 = occ.iter().map(|&c| c as u32).sum();

        // [L₋, L₊]|ψ⟩ − (N̂ + 2)|ψ⟩
        let lp = apply_pair_creation(&psi, &a, &b)?;
        let lm_lp = apply_pair_annihilation(&lp, &a, &b)?;
        let lm = apply_pair_annihilation(&psi, &a, &b)?;
        let lp_lm = apply_pair_creation(&lm, &a, &b)?;
        let comm = lm_lp.add(&lp_lm.scaled(Complex64::new(-1.0, 0.0)))?;
        let two_l0 = psi.scaled(Complex64::new((total + 2) as f64, 0.0));
        let res1 = comm.add(&two_l0.scaled(Complex64::new(-1.0, 0.0)))?.norm();

        // [L₀, L₊]|ψ⟩ − L₊|ψ⟩, with L₀ the diagonal operator (N̂ + 2)/2.
        let l0_lp = apply_l0(&lp);
        let lp_l0 = apply_pair_creation(&apply_l0(&psi), &a, &b)?;
        let comm2 = l0_lp.add(&lp_l0.scaled(Complex64::new(-1.0, 0.0)))?;
        let res2 = comm2.add(&lp.scaled(Complex64::new(-1.0, 0.0)))?.norm();

        out.push(Su11Residual {
            occupation_label: format!(
                "{a}:H={},{a}:V={},{b}:H={},{b}:V={}",
                occ[0], occ[1], occ[2], occ[3]
            ),
            total_photons: total,
            lowering_raising: res1,
            weight_raising: res2,
        });
    }
    Ok(out)
}

/// L̂₀ = (N̂ + 2)/2, diagonal in the occupation basis.
fn apply_l0(state: &FockState) -> FockState {
    let terms: Vec<_> = state
        .terms()
        .map(|(occ, amp)| {
            let w = (occ.total() + 2) as f64 / 2.0;
            (occ.clone(), amp * Complex64::new(w, 0.0))
        })
        .collect();
    FockState::from_terms(state.registry(), state.prune_eps(), terms)
}

fn enumerate_occupations(slots: usize, budget: u32) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current = vec![0u8; slots];
    fn rec(slot: usize, remaining: u32, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if slot == current.len() {
            out.push(current.clone());
            return;
        }
        for c in 0..=remaining {
            current[slot] = c as u8;
            rec(slot + 1, remaining - c, current, out);
        }
        current[slot] = 0;
    }
    rec(0, budget, &mut current, &mut out);
    out
}
