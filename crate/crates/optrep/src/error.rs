//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("registry has no modes")]
    EmptyRegistry,
    #[error("duplicate mode label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),
    #[error("frequency tag `{0}` is not in the declared set")]
    UnknownTag(String),
    #[error("mode label `{0}` exists on both sides of a tensor product")]
    LabelCollision(String),
    #[error("occupation of `{slot}` would exceed the truncation n_max = {n_max}")]
    Truncation { slot: String, n_max: u32 },
    #[error(
        "frequency mismatch: `{port_a}` carries {tag_a} and `{port_b}` carries {tag_b} \
         while photons are present at both ports"
    )]
    FrequencyMismatch {
        port_a: String,
        port_b: String,
        tag_a: String,
        tag_b: String,
    },
    #[error("state is not normalized (norm² = {norm_sq})")]
    NotNormalized { norm_sq: f64 },
    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("states live on different mode registries")]
    RegistryMismatch,
    #[error("routing error: {0}")]
    Routing(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
