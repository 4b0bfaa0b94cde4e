//! Spatial-mode registry with per-mode frequency tags.
//!
//! Every spatial mode owns two polarization slots (H before V) and carries a
//! symbolic frequency tag drawn from a finite declared set. Interferometric
//! elements consult the tags to enforce that only equal-frequency photons
//! meet at one element.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default per-run occupation truncation.
pub const DEFAULT_N_MAX: u32 = 4;

/// Index into the registry's declared frequency-tag set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FreqTag(pub(crate) u16);

/// Polarization slot of a spatial mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub const BOTH: [Pol; 2] = [Pol::H, Pol::V];

    pub(crate) fn slot_offset(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pol::H => write!(f, "H"),
            Pol::V => write!(f, "V"),
        }
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Inner {
    /// (label, tag) per spatial mode, in declaration order.
    modes: Vec<(String, FreqTag)>,
    /// Declared tag names; `FreqTag` indexes into this list.
    tags: Vec<String>,
    n_max: u32,
}

/// Ordered set of spatial modes shared by all states of one experiment.
///
/// Cloning is cheap; equality is by content so that independently built
/// registries with the same declaration interoperate.
#[derive(Clone, Debug)]
pub struct ModeRegistry {
    inner: Arc<Inner>,
}

impl PartialEq for ModeRegistry {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner
    }
}
impl Eq for ModeRegistry {}

impl ModeRegistry {
    pub fn builder() -> RegistryBuilder {
        RegistryBuilder {
            modes: Vec::new(),
            tags: Vec::new(),
            n_max: DEFAULT_N_MAX,
        }
    }

    pub fn len(&self) -> usize {
        self.inner.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.modes.is_empty()
    }

    /// Number of occupation slots (two per mode).
    pub fn slots(&self) -> usize {
        2 * self.len()
    }

    pub fn n_max(&self) -> u32 {
        self.inner.n_max
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.inner.modes.iter().map(|(l, _)| l.as_str())
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.inner
            .modes
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn label(&self, mode: usize) -> &str {
        &self.inner.modes[mode].0
    }

    pub fn tag(&self, label: &str) -> Result<FreqTag> {
        let idx = self.mode_index(label)?;
        Ok(self.inner.modes[idx].1)
    }

    pub fn tag_name(&self, tag: FreqTag) -> &str {
        &self.inner.tags[tag.0 as usize]
    }

    pub(crate) fn slot(&self, mode: usize, pol: Pol) -> usize {
        2 * mode + pol.slot_offset()
    }

    /// Registry for the tensor product of two disjoint experiments.
    ///
    /// Mode labels must be disjoint; tag sets are merged by name; the
    /// truncation must agree on both sides.
    pub fn union(&self, other: &ModeRegistry) -> Result<ModeRegistry> {
        if self.inner.n_max != other.inner.n_max {
            return Err(Error::Config(format!(
                "cannot combine registries with different truncations ({} vs {})",
                self.inner.n_max, other.inner.n_max
            )));
        }
        let mut b = ModeRegistry::builder().truncation(self.inner.n_max);
        for t in &self.inner.tags {
            b = b.tag(t);
        }
        for t in &other.inner.tags {
            if !self.inner.tags.contains(t) {
                b = b.tag(t);
            }
        }
        for (l, t) in &self.inner.modes {
            b = b.mode(l, self.tag_name(*t));
        }
        for (l, t) in &other.inner.modes {
            if self.mode_index(l).is_ok() {
                return Err(Error::LabelCollision(l.clone()));
            }
            b = b.mode(l, other.tag_name(*t));
        }
        b.build()
    }

    /// Registry with additional modes appended (used for gate ancillas).
    pub fn with_modes(&self, extra: &[(&str, &str)]) -> Result<ModeRegistry> {
        let mut b = ModeRegistry::builder().truncation(self.inner.n_max);
        for t in &self.inner.tags {
            b = b.tag(t);
        }
        for (_, tag) in extra {
            if !self.inner.tags.iter().any(|t| t == tag) {
                b = b.tag(tag);
            }
        }
        for (l, t) in &self.inner.modes {
            b = b.mode(l, self.tag_name(*t));
        }
        for (l, t) in extra {
            b = b.mode(l, t);
        }
        b.build()
    }

    /// Registry with the listed modes removed (they must exist).
    pub fn without_modes(&self, drop: &[&str]) -> Result<ModeRegistry> {
        for d in drop {
            self.mode_index(d)?;
        }
        let mut b = ModeRegistry::builder().truncation(self.inner.n_max);
        for t in &self.inner.tags {
            b = b.tag(t);
        }
        for (l, t) in &self.inner.modes {
            if !drop.contains(&l.as_str()) {
                b = b.mode(l, self.tag_name(*t));
            }
        }
        b.build()
    }
}

pub struct RegistryBuilder {
    modes: Vec<(String, String)>,
    tags: Vec<String>,
    n_max: u32,
}

impl RegistryBuilder {
    /// Declare a frequency tag (idempotent).
    pub fn tag(mut self, name: &str) -> Self {
        if !self.tags.iter().any(|t| t == name) {
            self.tags.push(name.to_string());
        }
        self
    }

    /// Declare a spatial mode carrying photons of the given frequency tag.
    pub fn mode(mut self, label: &str, tag: &str) -> Self {
        self.modes.push((label.to_string(), tag.to_string()));
        self
    }

    /// Per-run occupation truncation (photons per slot).
    pub fn truncation(mut self, n_max: u32) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn build(self) -> Result<ModeRegistry> {
        if self.modes.is_empty() {
            return Err(Error::EmptyRegistry);
        }
        let mut modes = Vec::with_capacity(self.modes.len());
        for (label, tag) in &self.modes {
            if modes.iter().any(|(l, _): &(String, FreqTag)| l == label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
            let idx = self
                .tags
                .iter()
                .position(|t| t == tag)
                .ok_or_else(|| Error::UnknownTag(tag.clone()))?;
            modes.push((label.clone(), FreqTag(idx as u16)));
        }
        Ok(ModeRegistry {
            inner: Arc::new(Inner {
                modes,
                tags: self.tags,
                n_max: self.n_max,
            }),
        })
    }
}

/// Two-mode registry with a shared tag, the common case in unit tests.
pub fn pair_registry(a: &str, b: &str) -> ModeRegistry {
    ModeRegistry::builder()
        .tag("w1")
        .mode(a, "w1")
        .mode(b, "w1")
        .build()
        .expect("two distinct labels")
}
