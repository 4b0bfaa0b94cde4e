//! Probabilistic ensembles of pure states.

use crate::error::{Error, Result};
use crate::fock::state::FockState;

/// Classical mixture of pure states, the carrier for dephased and lossy
/// ensembles produced by the channel model.
#[derive(Clone, Debug)]
pub struct MixedState {
    branches: Vec<(f64, FockState)>,
}

impl MixedState {
    pub fn pure(state: FockState) -> MixedState {
        MixedState {
            branches: vec![(1.0, state)],
        }
    }

    pub fn new(branches: Vec<(f64, FockState)>) -> Result<MixedState> {
        if branches.is_empty() {
            return Err(Error::Contract("mixture needs at least one branch".into()));
        }
        let mut total = 0.0;
        for (w, _) in &branches {
            if *w < 0.0 {
                return Err(Error::Domain(format!("negative branch weight {w}")));
            }
            total += w;
        }
        if (total - 1.0).abs() >= 1e-12 {
            return Err(Error::Domain(format!(
                "branch weights sum to {total}, expected 1"
            )));
        }
        Ok(MixedState { branches })
    }

    pub fn branches(&self) -> &[(f64, FockState)] {
        &self.branches
    }

    /// Σᵢ wᵢ |⟨target|ψᵢ⟩|².
    pub fn fidelity(&self, target: &FockState) -> Result<f64> {
        let mut acc = 0.0;
        for (w, psi) in &self.branches {
            acc += w * psi.fidelity(target)?;
        }
        Ok(acc)
    }
}
