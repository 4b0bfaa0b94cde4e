//! Closed-form success rates and component counts.
//!
//! Two conventions are carried side by side everywhere:
//!
//! * `include_qnd = true` — the literal purification rate
//!   p_s⁶·η¹⁰·(1−γ)²·ζ²·p_cnot²·p_qnd;
//! * `include_qnd = false` — the same product without the p_qnd factor,
//!   which is the convention the component-count table is consistent with.
//!
//! The two differ by exactly 1/p_qnd = 8 at the default parameters; reports
//! flag the discrepancy instead of silently picking a side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::NoiseParams;

/// Counts of pair sources and detectors consumed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentTally {
    pub guns: u64,
    pub detectors: u64,
}

impl std::ops::Add for ComponentTally {
    type Output = ComponentTally;
    fn add(self, rhs: ComponentTally) -> ComponentTally {
        ComponentTally {
            guns: self.guns + rhs.guns,
            detectors: self.detectors + rhs.detectors,
        }
    }
}

impl std::ops::AddAssign for ComponentTally {
    fn add_assign(&mut self, rhs: ComponentTally) {
        self.guns += rhs.guns;
        self.detectors += rhs.detectors;
    }
}

impl ComponentTally {
    pub fn scaled(self, k: u64) -> ComponentTally {
        ComponentTally {
            guns: self.guns * k,
            detectors: self.detectors * k,
        }
    }
}

/// Per-attempt consumption of one purifier: two source guns, two guns in
/// the presence check, one gun per CNOT; four presence-check detectors and
/// three per CNOT (two heralds plus the target verification).
pub const PURIFIER_TALLY: ComponentTally = ComponentTally {
    guns: 6,
    detectors: 10,
};

/// Per-attempt consumption of one swapper: the two-fold coincidence.
pub const SWAPPER_TALLY: ComponentTally = ComponentTally {
    guns: 0,
    detectors: 2,
};

/// Probability that one link-level purification attempt succeeds.
pub fn p_pur(params: &NoiseParams, include_qnd: bool) -> Result<f64> {
    params.validate()?;
    let base = params.p_s.powi(6)
        * params.eta.powi(10)
        * (1.0 - params.gamma).powi(2)
        * params.zeta.powi(2)
        * params.p_cnot.powi(2);
    Ok(if include_qnd { base * params.p_qnd } else { base })
}

/// Probability that one entanglement swap succeeds: η²/2.
pub fn p_swap(eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta = {eta} outside [0, 1]")));
    }
    Ok(eta * eta / 2.0)
}

/// One row of the component-count table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Table1Row {
    pub eta: f64,
    /// Expected purification attempts per purified pair, 1/p_pur.
    pub n_pur: f64,
    /// Expected swap attempts per successful swap, 1/p_swap.
    pub n_swap: f64,
    /// Total components for one repeater node: 2·n_pur·n_swap.
    pub n_total: f64,
}

/// Expected component counts per detector efficiency.
pub fn table1(params: &NoiseParams, etas: &[f64], include_qnd: bool) -> Result<Vec<Table1Row>> {
    etas.iter()
        .map(|&eta| {
            let mut p = *params;
            p.eta = eta;
            let n_pur = 1.0 / p_pur(&p, include_qnd)?;
            let n_swap = 1.0 / p_swap(eta)?;
            Ok(Table1Row {
                eta,
                n_pur,
                n_swap,
                n_total: 2.0 * n_pur * n_swap,
            })
        })
        .collect()
}

/// Hardware whose component tally is reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentKind {
    Purifier,
    Swapper,
    /// A chain of this many links: one purifier per link and one swapper
    /// per intermediate station.
    Chain(u32),
}

/// Integer component tallies; chains are additive over their parts.
pub fn tally_resources(kind: ComponentKind) -> ComponentTally {
    match kind {
        ComponentKind::Purifier => PURIFIER_TALLY,
        ComponentKind::Swapper => SWAPPER_TALLY,
        ComponentKind::Chain(n_links) => {
            let n = n_links as u64;
            PURIFIER_TALLY.scaled(n) + SWAPPER_TALLY.scaled(n.saturating_sub(1))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn worked_example_rates() {
        let p = NoiseParams::defaults_with_eta(1.0);
        let exact = 0.9f64.powi(6) * 0.25 * 0.5 * 0.0625 * 0.125;
        assert_relative_eq!(p_pur(&p, true).unwrap(), exact, max_relative = 1e-15);
        assert_relative_eq!(
            p_pur(&p, false).unwrap(),
            exact / 0.125,
            max_relative = 1e-15
        );
        // Six-figure values quoted for the two conventions.
        assert_relative_eq!(p_pur(&p, true).unwrap(), 5.18985e-4, max_relative = 1e-6);
        assert_relative_eq!(p_pur(&p, false).unwrap(), 4.15188e-3, max_relative = 1e-6);
    }

    #[test]
    fn swap_rates() {
        assert_relative_eq!(p_swap(1.0).unwrap(), 0.5);
        assert_relative_eq!(p_swap(0.8).unwrap(), 0.32);
        assert_relative_eq!(p_swap(0.0).unwrap(), 0.0);
        assert!(p_swap(1.2).is_err());
    }

    #[test]
    fn eta_zero_gives_zero_purification() {
        let p = NoiseParams::defaults_with_eta(0.0);
        assert_eq!(p_pur(&p, true).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_params_are_domain_errors() {
        let mut p = NoiseParams::defaults_with_eta(1.0);
        p.gamma = 1.5;
        assert!(matches!(p_pur(&p, true), Err(Error::Domain(_))));
    }

    #[test]
    fn table_rows_satisfy_the_total_identity() {
        let p = NoiseParams::defaults_with_eta(1.0);
        for row in table1(&p, &[0.3, 0.8, 1.0], false).unwrap() {
            assert_relative_eq!(
                row.n_total,
                2.0 * row.n_pur * row.n_swap,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn rates_are_monotone_and_bounded() {
        // Coarse grid sweep over every parameter.
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let p0 = NoiseParams::defaults_with_eta(0.7);
        for &v in &grid {
            for field in 0..5 {
                let mut lo = p0;
                let mut hi = p0;
                let (lo_v, hi_v) = (v * 0.9, v);
                match field {
                    0 => {
                        lo.p_s = lo_v;
                        hi.p_s = hi_v;
                    }
                    1 => {
                        lo.eta = lo_v;
                        hi.eta = hi_v;
                    }
                    2 => {
                        // gamma enters as (1 − γ): decreasing γ raises the rate.
                        lo.gamma = hi_v;
                        hi.gamma = lo_v;
                    }
                    3 => {
                        lo.zeta = lo_v;
                        hi.zeta = hi_v;
                    }
                    _ => {
                        lo.p_cnot = lo_v;
                        hi.p_cnot = hi_v;
                    }
                }
                let (a, b) = (p_pur(&lo, true).unwrap(), p_pur(&hi, true).unwrap());
                assert!(a <= b + 1e-15, "not monotone: {a} > {b}");
                assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
            }
        }
    }

    #[test]
    fn integer_tallies() {
        assert_eq!(
            tally_resources(ComponentKind::Purifier),
            ComponentTally {
                guns: 6,
                detectors: 10
            }
        );
        assert_eq!(
            tally_resources(ComponentKind::Swapper),
            ComponentTally {
                guns: 0,
                detectors: 2
            }
        );
        let chain = tally_resources(ComponentKind::Chain(3));
        assert_eq!(
            chain,
            ComponentTally {
                guns: 18,
                detectors: 34
            }
        );
        // Additivity over parts.
        let parts = tally_resources(ComponentKind::Purifier).scaled(3)
            + tally_resources(ComponentKind::Swapper).scaled(2);
        assert_eq!(chain, parts);
    }
}
