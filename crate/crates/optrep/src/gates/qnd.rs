//! Single-photon presence check, modeled as a black box.
//!
//! The device's internal interferometer is not simulated; its contract is:
//! given a mode holding one photon it heralds presence with probability
//! p_qnd·η⁴·p_s² (ideal limit 1/8) while leaving the polarization content
//! untouched, it never heralds on vacuum, and each attempt consumes two
//! pair sources and four detectors.

use num_complex::Complex64;

use crate::elements::{BeamSplitterBasis, DetectorRecord};
use crate::error::{Error, Result};
use crate::fock::{FockState, Occupation};
use crate::gates::HeraldOutcome;
use crate::params::NoiseParams;
use crate::policy::Policy;

/// Pair sources consumed per presence-check attempt.
pub const QND_GUNS: u64 = 2;
/// Detectors consumed per presence-check attempt.
pub const QND_DETECTORS: u64 = 4;

fn device_records(mode: &str, clicked: bool, eta: f64) -> Vec<DetectorRecord> {
    (0..QND_DETECTORS)
        .map(|i| DetectorRecord {
            mode: format!("{mode}[qnd{i}]"),
            clicked,
            basis: BeamSplitterBasis::Linear,
            resolved_pol: None,
            efficiency: eta,
        })
        .collect()
}

/// Heralded presence check on a mode holding zero or one photon.
///
/// Branches: photon present and heralded (probability weight
/// p_qnd·η⁴·p_s² on the one-photon sector, polarization preserved), photon
/// present but not heralded, and no photon (never heralded). Two or more
/// photons in the mode are rejected as unsupported input.
pub fn qnd_presence(
    state: &FockState,
    mode: &str,
    noise: &NoiseParams,
    policy: &mut Policy,
) -> Result<Vec<HeraldOutcome>> {
    noise.validate()?;
    state.require_normalized()?;
    let reg = state.registry();
    let m = reg.mode_index(mode)?;

    let mut one: Vec<(Occupation, Complex64)> = Vec::new();
    let mut zero: Vec<(Occupation, Complex64)> = Vec::new();
    for (occ, amp) in state.terms() {
        match occ.total_in(m) {
            0 => zero.push((occ.clone(), *amp)),
            1 => one.push((occ.clone(), *amp)),
            n => {
                return Err(Error::UnsupportedInput(format!(
                    "presence check saw {n} photons in `{mode}`; pair sources never \
                     emit more than one photon per mode"
                )))
            }
        }
    }
    let p_one: f64 = one.iter().map(|(_, a)| a.norm_sqr()).sum();
    let p_zero: f64 = zero.iter().map(|(_, a)| a.norm_sqr()).sum();
    let q = noise.p_qnd * noise.eta.powi(4) * noise.p_s.powi(2);

    let project = |terms: Vec<(Occupation, Complex64)>, p: f64| -> FockState {
        let scale = Complex64::new(1.0 / p.sqrt(), 0.0);
        FockState::from_terms(
            reg,
            state.prune_eps(),
            terms.into_iter().map(|(o, a)| (o, a * scale)),
        )
    };

    let mut branches = Vec::new();
    if p_one > 0.0 {
        let present = project(one, p_one);
        if q > 0.0 {
            branches.push(HeraldOutcome {
                success: true,
                records: device_records(mode, true, noise.eta),
                branch_probability: p_one * q,
                post_state: present.clone(),
                corrections_applied: Vec::new(),
            });
        }
        if q < 1.0 {
            branches.push(HeraldOutcome {
                success: false,
                records: device_records(mode, false, noise.eta),
                branch_probability: p_one * (1.0 - q),
                post_state: present,
                corrections_applied: Vec::new(),
            });
        }
    }
    if p_zero > 0.0 {
        branches.push(HeraldOutcome {
            success: false,
            records: device_records(mode, false, noise.eta),
            branch_probability: p_zero,
            post_state: project(zero, p_zero),
            corrections_applied: Vec::new(),
        });
    }
    Ok(policy.choose(branches, |b| b.branch_probability))
}
