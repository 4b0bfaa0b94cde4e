//! Sparse multimode Fock states with complex amplitudes.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::registry::{ModeRegistry, Pol};
use crate::policy::Policy;

/// Amplitudes with |a| below this are dropped from sparse states.
///
/// Oracle comparisons that need every term can disable pruning with
/// [`FockState::with_prune_eps`].
pub const PRUNE_EPS: f64 = 1e-15;

/// Tolerance on Σ|amplitude|² for states that claim to be normalized.
pub const NORM_TOL: f64 = 1e-12;

/// Photon counts per (mode, polarization) slot, H slot before V slot,
/// modes in registry order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupation(Box<[u8]>);

impl Occupation {
    pub fn empty(slots: usize) -> Self {
        Occupation(vec![0u8; slots].into_boxed_slice())
    }

    pub fn count(&self, slot: usize) -> u32 {
        self.0[slot] as u32
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&c| c as u32).sum()
    }

    pub fn total_in(&self, mode: usize) -> u32 {
        self.0[2 * mode] as u32 + self.0[2 * mode + 1] as u32
    }

    pub(crate) fn with_slot(&self, slot: usize, count: u32) -> Self {
        let mut v = self.0.to_vec();
        v[slot] = count as u8;
        Occupation(v.into_boxed_slice())
    }

    pub(crate) fn slots(&self) -> usize {
        self.0.len()
    }

    pub(crate) fn counts(&self) -> &[u8] {
        &self.0
    }
}

/// One branch of a projective photon-number measurement.
#[derive(Clone, Debug)]
pub struct NumberOutcome {
    pub count: u32,
    pub probability: f64,
    pub post: FockState,
}

/// Sparse superposition over multimode occupation vectors.
///
/// States are values: every operation returns a new state and the inputs are
/// never mutated, so states move freely between threads.
#[derive(Clone, Debug)]
pub struct FockState {
    reg: ModeRegistry,
    terms: HashMap<Occupation, Complex64>,
    prune_eps: f64,
}

impl FockState {
    /// The all-zero occupation with amplitude one.
    pub fn vacuum(reg: &ModeRegistry) -> FockState {
        let mut terms = HashMap::new();
        terms.insert(Occupation::empty(reg.slots()), Complex64::new(1.0, 0.0));
        FockState {
            reg: reg.clone(),
            terms,
            prune_eps: PRUNE_EPS,
        }
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.reg
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn prune_eps(&self) -> f64 {
        self.prune_eps
    }

    /// Same state with a different pruning threshold (0 disables pruning).
    pub fn with_prune_eps(mut self, eps: f64) -> FockState {
        self.prune_eps = eps;
        self
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex64 {
        self.terms.get(occ).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.terms.iter()
    }

    pub(crate) fn from_terms<I>(reg: &ModeRegistry, prune_eps: f64, it: I) -> FockState
    where
        I: IntoIterator<Item = (Occupation, Complex64)>,
    {
        let mut terms: HashMap<Occupation, Complex64> = HashMap::new();
        for (occ, amp) in it {
            let slot = terms.entry(occ).or_default();
            *slot += amp;
        }
        terms.retain(|_, a| a.norm() > prune_eps);
        FockState {
            reg: reg.clone(),
            terms,
            prune_eps,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() < NORM_TOL
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        let n = self.norm_sq();
        if (n - 1.0).abs() < NORM_TOL {
            Ok(())
        } else {
            Err(Error::NotNormalized { norm_sq: n })
        }
    }

    pub fn normalized(&self) -> Result<FockState> {
        let n = self.norm();
        if n <= self.prune_eps.max(f64::MIN_POSITIVE) {
            return Err(Error::Contract("cannot normalize the zero state".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> FockState {
        FockState::from_terms(
            &self.reg,
            self.prune_eps,
            self.terms.iter().map(|(o, a)| (o.clone(), a * c)),
        )
    }

    pub fn add(&self, other: &FockState) -> Result<FockState> {
        if self.reg != other.reg {
            return Err(Error::RegistryMismatch);
        }
        Ok(FockState::from_terms(
            &self.reg,
            self.prune_eps,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(o, a)| (o.clone(), *a)),
        ))
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &FockState) -> Result<Complex64> {
        if self.reg != other.reg {
            return Err(Error::RegistryMismatch);
        }
        let (small, large, conj_small) = if self.terms.len() <= other.terms.len() {
            (&self.terms, &other.terms, true)
        } else {
            (&other.terms, &self.terms, false)
        };
        let mut acc = Complex64::default();
        for (occ, a) in small {
            if let Some(b) = large.get(occ) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    /// |⟨target|self⟩|² for normalized pure states on one registry.
    pub fn fidelity(&self, target: &FockState) -> Result<f64> {
        self.require_normalized()?;
        target.require_normalized()?;
        Ok(self.inner(target)?.norm_sqr())
    }

    /// Creation operator on one polarization slot: |n⟩ ↦ √(n+1)|n+1⟩.
    ///
    /// The result is generally unnormalized. Exceeding the registry
    /// truncation is a hard error, never a silent clip.
    pub fn apply_creation(&self, mode: &str, pol: Pol) -> Result<FockState> {
        let m = self.reg.mode_index(mode)?;
        let slot = self.reg.slot(m, pol);
        let n_max = self.reg.n_max();
        let mut out = Vec::with_capacity(self.terms.len());
        for (occ, amp) in &self.terms {
            let n = occ.count(slot);
            if n + 1 > n_max {
                return Err(Error::Truncation {
                    slot: format!("{mode}:{pol}"),
                    n_max,
                });
            }
            out.push((
                occ.with_slot(slot, n + 1),
                amp * Complex64::new(((n + 1) as f64).sqrt(), 0.0),
            ));
        }
        Ok(FockState::from_terms(&self.reg, self.prune_eps, out))
    }

    /// Creation operator that projects out terms exceeding the truncation
    /// instead of erroring, matching a dense operator built on the
    /// truncated occupation lattice. Internal to the exponential expansion.
    pub(crate) fn apply_creation_projected(&self, mode: &str, pol: Pol) -> Result<FockState> {
        let m = self.reg.mode_index(mode)?;
        let slot = self.reg.slot(m, pol);
        let n_max = self.reg.n_max();
        let mut out = Vec::with_capacity(self.terms.len());
        for (occ, amp) in &self.terms {
            let n = occ.count(slot);
            if n + 1 <= n_max {
                out.push((
                    occ.with_slot(slot, n + 1),
                    amp * Complex64::new(((n + 1) as f64).sqrt(), 0.0),
                ));
            }
        }
        Ok(FockState::from_terms(&self.reg, self.prune_eps, out))
    }

    /// Annihilation operator on one polarization slot: |n⟩ ↦ √n|n−1⟩.
    pub fn apply_annihilation(&self, mode: &str, pol: Pol) -> Result<FockState> {
        let m = self.reg.mode_index(mode)?;
        let slot = self.reg.slot(m, pol);
        let mut out = Vec::with_capacity(self.terms.len());
        for (occ, amp) in &self.terms {
            let n = occ.count(slot);
            if n > 0 {
                out.push((
                    occ.with_slot(slot, n - 1),
                    amp * Complex64::new((n as f64).sqrt(), 0.0),
                ));
            }
        }
        Ok(FockState::from_terms(&self.reg, self.prune_eps, out))
    }

    /// Product state of two experiments with disjoint mode labels.
    pub fn tensor(&self, other: &FockState) -> Result<FockState> {
        let reg = self.reg.union(&other.reg)?;
        let slots = reg.slots();
        let left = self.reg.slots();
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (oa, aa) in &self.terms {
            for (ob, ab) in &other.terms {
                let mut v = vec![0u8; slots];
                v[..left].copy_from_slice(oa.counts());
                v[left..].copy_from_slice(ob.counts());
                out.push((Occupation(v.into_boxed_slice()), aa * ab));
            }
        }
        Ok(FockState::from_terms(
            &reg,
            self.prune_eps.min(other.prune_eps),
            out,
        ))
    }

    /// Projective measurement of the total photon number in one mode.
    ///
    /// The post-states keep the measured photons (non-destructive readout).
    /// Exhaustive policy returns every outcome; sampling returns one, drawn
    /// by its Born weight, still carrying the exact probability.
    pub fn measure_photon_number(
        &self,
        mode: &str,
        policy: &mut Policy,
    ) -> Result<Vec<NumberOutcome>> {
        self.require_normalized()?;
        let m = self.reg.mode_index(mode)?;
        let mut groups: HashMap<u32, Vec<(Occupation, Complex64)>> = HashMap::new();
        for (occ, amp) in &self.terms {
            groups
                .entry(occ.total_in(m))
                .or_default()
                .push((occ.clone(), *amp));
        }
        let mut outcomes: Vec<NumberOutcome> = Vec::with_capacity(groups.len());
        for (count, terms) in groups {
            let probability: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
            let scale = Complex64::new(1.0 / probability.sqrt(), 0.0);
            let post = FockState::from_terms(
                &self.reg,
                self.prune_eps,
                terms.into_iter().map(|(o, a)| (o, a * scale)),
            );
            outcomes.push(NumberOutcome {
                count,
                probability,
                post,
            });
        }
        outcomes.sort_by_key(|o| o.count);
        Ok(policy.choose(outcomes, |o| o.probability))
    }

    /// Lifts the state onto a registry that extends this one with extra
    /// modes appended at the end; the new modes start empty.
    pub(crate) fn padded_to(&self, extended: &ModeRegistry) -> Result<FockState> {
        if extended.len() < self.reg.len() {
            return Err(Error::RegistryMismatch);
        }
        for (i, label) in self.reg.labels().enumerate() {
            if extended.label(i) != label {
                return Err(Error::RegistryMismatch);
            }
        }
        let slots = extended.slots();
        let old = self.reg.slots();
        let out = self.terms.iter().map(|(occ, amp)| {
            let mut v = vec![0u8; slots];
            v[..old].copy_from_slice(occ.counts());
            (Occupation(v.into_boxed_slice()), *amp)
        });
        Ok(FockState::from_terms(extended, self.prune_eps, out.collect::<Vec<_>>()))
    }

    /// New state with the listed (empty in every term) modes removed.
    pub fn drop_empty_modes(&self, drop: &[&str]) -> Result<FockState> {
        let reg = self.reg.without_modes(drop)?;
        let mut keep: Vec<usize> = Vec::new();
        for (i, label) in self.reg.labels().enumerate() {
            if !drop.contains(&label) {
                keep.push(i);
            }
        }
        let mut out = Vec::with_capacity(self.terms.len());
        for (occ, amp) in &self.terms {
            for (i, label) in self.reg.labels().enumerate() {
                if drop.contains(&label) && occ.total_in(i) != 0 {
                    return Err(Error::Contract(format!(
                        "mode `{label}` is not empty in every term"
                    )));
                }
            }
            let mut v = Vec::with_capacity(2 * keep.len());
            for &i in &keep {
                v.push(occ.counts()[2 * i]);
                v.push(occ.counts()[2 * i + 1]);
            }
            out.push((Occupation(v.into_boxed_slice()), *amp));
        }
        Ok(FockState::from_terms(&reg, self.prune_eps, out))
    }

    /// Linear map on the creation operators of the listed slots.
    ///
    /// `matrix[j][i]` is the coefficient of output slot `slots[j]` in the
    /// image of input slot `slots[i]`; slots not listed are untouched. This
    /// is the induced multiphoton representation, computed exactly by
    /// polynomial expansion of Π(Σⱼ U[j][i] a†ⱼ)^{n_i}.
    pub(crate) fn apply_slot_linear_map(
        &self,
        slots: &[usize],
        matrix: &[Vec<Complex64>],
    ) -> Result<FockState> {
        let n_max = self.reg.n_max();
        let mut out: Vec<(Occupation, Complex64)> = Vec::new();
        for (occ, amp) in &self.terms {
            // Strip the listed slots and divide by √(n_i!).
            let mut base = occ.clone();
            let mut coeff = *amp;
            for &s in slots {
                let n = occ.count(s);
                base = base.with_slot(s, 0);
                for k in 1..=n {
                    coeff /= (k as f64).sqrt();
                }
            }
            let mut work: HashMap<Occupation, Complex64> = HashMap::new();
            work.insert(base, coeff);
            // Multiply by the image of each input creation operator.
            for (i, &s_in) in slots.iter().enumerate() {
                for _ in 0..occ.count(s_in) {
                    let mut next: HashMap<Occupation, Complex64> = HashMap::new();
                    for (w_occ, w_amp) in &work {
                        for (j, &s_out) in slots.iter().enumerate() {
                            let u = matrix[j][i];
                            if u.norm_sqr() == 0.0 {
                                continue;
                            }
                            let n = w_occ.count(s_out);
                            if n + 1 > n_max {
                                return Err(Error::Truncation {
                                    slot: self.slot_name(s_out),
                                    n_max,
                                });
                            }
                            let entry =
                                next.entry(w_occ.with_slot(s_out, n + 1)).or_default();
                            *entry += w_amp * u * Complex64::new(((n + 1) as f64).sqrt(), 0.0);
                        }
                    }
                    work = next;
                }
            }
            out.extend(work);
        }
        Ok(FockState::from_terms(&self.reg, self.prune_eps, out))
    }

    fn slot_name(&self, slot: usize) -> String {
        let mode = slot / 2;
        let pol = if slot % 2 == 0 { Pol::H } else { Pol::V };
        format!("{}:{}", self.reg.label(mode), pol)
    }

    /// Debug/report serialization: one line per term,
    /// `mode:pol=count,... re im`, slots in registry order, terms sorted by
    /// occupation so the output is bit-comparable across runs.
    pub fn to_lines(&self) -> String {
        let mut sorted: Vec<(&Occupation, &Complex64)> = self.terms.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(b.0));
        let mut s = String::new();
        for (occ, amp) in sorted {
            let mut first = true;
            for (m, label) in self.reg.labels().enumerate() {
                for pol in Pol::BOTH {
                    if !first {
                        s.push(',');
                    }
                    first = false;
                    let _ = write!(s, "{label}:{pol}={}", occ.count(self.reg.slot(m, pol)));
                }
            }
            let _ = writeln!(s, " {} {}", amp.re, amp.im);
        }
        s
    }
}
