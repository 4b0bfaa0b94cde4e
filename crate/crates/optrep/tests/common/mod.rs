//! Dense reference engine for cross-checking the sparse state vector.
//!
//! Everything here works on a flat complex vector over the full truncated
//! occupation lattice and computes matrix elements from closed-form
//! combinatorial formulas, deliberately avoiding the sparse engine's
//! iterated-ladder code path.

use num_complex::Complex64;
use optrep::fock::{FockState, Pol};

pub struct DenseLattice {
    pub slots: usize,
    pub n_max: u32,
    pub dim: usize,
    radix: usize,
}

impl DenseLattice {
    pub fn new(slots: usize, n_max: u32) -> Self {
        let radix = n_max as usize + 1;
        DenseLattice {
            slots,
            n_max,
            dim: radix.pow(slots as u32),
            radix,
        }
    }

    pub fn index(&self, occ: &[u8]) -> usize {
        occ.iter()
            .rev()
            .fold(0usize, |acc, &c| acc * self.radix + c as usize)
    }

    pub fn occupation(&self, mut idx: usize) -> Vec<u8> {
        let mut occ = vec![0u8; self.slots];
        for slot in occ.iter_mut() {
            *slot = (idx % self.radix) as u8;
            idx /= self.radix;
        }
        occ
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        vec![Complex64::default(); self.dim]
    }

    pub fn vacuum(&self) -> Vec<Complex64> {
        let mut v = self.zeros();
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    /// Creation operator on one slot, projected onto the lattice.
    pub fn creation(&self, v: &[Complex64], slot: usize) -> Vec<Complex64> {
        let mut out = self.zeros();
        for (idx, amp) in v.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let occ = self.occupation(idx);
            let n = occ[slot] as u32;
            if n + 1 <= self.n_max {
                let mut dst = occ;
                dst[slot] += 1;
                out[self.index(&dst)] += amp * ((n + 1) as f64).sqrt();
            }
        }
        out
    }

    /// Annihilation operator on one slot.
    pub fn annihilation(&self, v: &[Complex64], slot: usize) -> Vec<Complex64> {
        let mut out = self.zeros();
        for (idx, amp) in v.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let occ = self.occupation(idx);
            let n = occ[slot] as u32;
            if n > 0 {
                let mut dst = occ;
                dst[slot] -= 1;
                out[self.index(&dst)] += amp * (n as f64).sqrt();
            }
        }
        out
    }

    /// Induced action of a 2×2 creation-operator map on two slots, from the
    /// closed-form binomial matrix elements.
    pub fn two_slot_map(
        &self,
        v: &[Complex64],
        slot_a: usize,
        slot_b: usize,
        u: &[[Complex64; 2]; 2],
    ) -> Vec<Complex64> {
        let fact: Vec<f64> = {
            let top = 2 * self.n_max as usize + 1;
            let mut f = vec![1.0f64; top + 1];
            for k in 1..=top {
                f[k] = f[k - 1] * k as f64;
            }
            f
        };
        let mut out = self.zeros();
        for (idx, amp) in v.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let occ = self.occupation(idx);
            let (n1, n2) = (occ[slot_a] as usize, occ[slot_b] as usize);
            for k1 in 0..=n1 {
                for k2 in 0..=n2 {
                    let m1 = k1 + k2;
                    let m2 = n1 + n2 - m1;
                    if m1 > self.n_max as usize || m2 > self.n_max as usize {
                        continue;
                    }
                    let binom = fact[n1] / (fact[k1] * fact[n1 - k1]) * fact[n2]
                        / (fact[k2] * fact[n2 - k2]);
                    let weight = u[0][0].powu(k1 as u32)
                        * u[1][0].powu((n1 - k1) as u32)
                        * u[0][1].powu(k2 as u32)
                        * u[1][1].powu((n2 - k2) as u32);
                    let norm = (fact[m1] * fact[m2] / (fact[n1] * fact[n2])).sqrt();
                    let mut dst = occ.clone();
                    dst[slot_a] = m1 as u8;
                    dst[slot_b] = m2 as u8;
                    out[self.index(&dst)] += amp * binom * weight * norm;
                }
            }
        }
        out
    }

    /// Linear polarizing splitter between two modes as a direct index
    /// permutation with phases: V counts swap, picking up i^{q}·(−i)^{s}.
    pub fn linear_pbs(&self, v: &[Complex64], mode_a: usize, mode_b: usize) -> Vec<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let mut out = self.zeros();
        for (idx, amp) in v.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let mut occ = self.occupation(idx);
            let q = occ[2 * mode_a + 1];
            let s = occ[2 * mode_b + 1];
            occ[2 * mode_a + 1] = s;
            occ[2 * mode_b + 1] = q;
            out[self.index(&occ)] += amp * i.powu(q as u32) * (-i).powu(s as u32);
        }
        out
    }

    pub fn from_sparse(&self, state: &FockState) -> Vec<Complex64> {
        let mut v = self.zeros();
        for (occ, amp) in state.terms() {
            let counts: Vec<u8> = (0..self.slots).map(|s| occ.count(s) as u8).collect();
            v[self.index(&counts)] = *amp;
        }
        v
    }

    pub fn max_abs_diff(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// Dense exponential of the truncated pair-creation Hamiltonian applied to
/// vacuum: exp(i·H)|0⟩ with H = iκL̂₊ − iκ*L̂₋ on two modes (four slots).
///
/// The generator iH = −κL̂₊ + κ*L̂₋ is built entrywise on the lattice and
/// exponentiated by a Taylor series on the vector.
pub fn pdc_expm_oracle(n_max: u32, kappa: Complex64) -> (DenseLattice, Vec<Complex64>) {
    let lat = DenseLattice::new(4, n_max);
    // Slots: 0 = a:H, 1 = a:V, 2 = b:H, 3 = b:V.
    let l_plus = |lat: &DenseLattice, v: &[Complex64]| -> Vec<Complex64> {
        let t1 = lat.creation(&lat.creation(v, 0), 3);
        let t2 = lat.creation(&lat.creation(v, 1), 2);
        t1.iter().zip(t2.iter()).map(|(a, b)| a - b).collect()
    };
    let l_minus = |lat: &DenseLattice, v: &[Complex64]| -> Vec<Complex64> {
        let t1 = lat.annihilation(&lat.annihilation(v, 0), 3);
        let t2 = lat.annihilation(&lat.annihilation(v, 1), 2);
        t1.iter().zip(t2.iter()).map(|(a, b)| a - b).collect()
    };
    let gen = |lat: &DenseLattice, v: &[Complex64]| -> Vec<Complex64> {
        let up = l_plus(lat, v);
        let down = l_minus(lat, v);
        up.iter()
            .zip(down.iter())
            .map(|(u, d)| -kappa * u + kappa.conj() * d)
            .collect()
    };
    let mut term = lat.vacuum();
    let mut acc = term.clone();
    for k in 1..400 {
        term = gen(&lat, &term)
            .into_iter()
            .map(|c| c / k as f64)
            .collect();
        let tail: f64 = term.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for (a, t) in acc.iter_mut().zip(term.iter()) {
            *a += t;
        }
        if tail < 1e-16 {
            break;
        }
    }
    (lat, acc)
}

/// Norm of the projection onto the n-pair sector (total photons = 2n).
pub fn sector_weight(lat: &DenseLattice, v: &[Complex64], pairs: u32) -> f64 {
    let mut acc = 0.0;
    for (idx, amp) in v.iter().enumerate() {
        let occ = lat.occupation(idx);
        let total: u32 = occ.iter().map(|&c| c as u32).sum();
        if total == 2 * pairs {
            acc += amp.norm_sqr();
        }
    }
    acc
}

/// Sector weight of a sparse state.
pub fn sparse_sector_weight(state: &FockState, pairs: u32) -> f64 {
    state
        .terms()
        .filter(|(occ, _)| occ.total() == 2 * pairs)
        .map(|(_, amp)| amp.norm_sqr())
        .sum()
}

/// Builds the registry-ordered slot index of (mode, pol) for a state.
pub fn slot_of(state: &FockState, mode: &str, pol: Pol) -> usize {
    let idx = state
        .registry()
        .labels()
        .position(|l| l == mode)
        .expect("mode exists");
    2 * idx + usize::from(pol == Pol::V)
}
