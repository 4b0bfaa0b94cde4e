//! Line-oriented `key = value` run configuration with command-line
//! overrides.
//!
//! Unknown keys are rejected; missing keys take the documented defaults:
//! p_s = 0.9, eta = 1, gamma = 0.5, zeta = √2/2 ≈ 0.70710678, p_cnot = 0.25,
//! p_qnd = 0.125, n_links = 1, trials = 10000, seed = 0 (overridable via the
//! OPTREP_SEED environment variable), table1_convention = false,
//! sources_at_endpoints = false.

use optrep::params::NoiseParams;
use optrep::protocol::ChainConfig;

/// Where a key=value assignment came from, for diagnostics.
#[derive(Clone, Debug)]
pub enum Origin {
    File { path: String, line: usize },
    Override { position: usize },
    Environment(&'static str),
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Override { position } => write!(f, "--set #{position}"),
            Origin::Environment(name) => write!(f, "${name}"),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError {
    pub origin: Option<Origin>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.origin {
            Some(o) => write!(f, "{o}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// A fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub chain: ChainConfig,
    /// Detector efficiencies for the component table.
    pub etas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            chain: ChainConfig {
                n_links: 1,
                params: NoiseParams::defaults_with_eta(1.0),
                trials: 10_000,
                seed: 0,
                table1_convention: false,
                sources_at_endpoints: false,
                collect_events: false,
            },
            etas: vec![0.3, 0.8, 1.0],
        }
    }
}

pub const SEED_ENV: &str = "OPTREP_SEED";

fn err(origin: Origin, message: impl Into<String>) -> ConfigError {
    ConfigError {
        origin: Some(origin),
        message: message.into(),
    }
}

fn apply(cfg: &mut RunConfig, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
    let parse_f64 = |v: &str, origin: &Origin| -> Result<f64, ConfigError> {
        v.parse::<f64>().map_err(|_| {
            err(origin.clone(), format!("cannot parse `{v}` as a number"))
        })
    };
    let parse_unit = |v: &str, origin: &Origin, key: &str| -> Result<f64, ConfigError> {
        let x = parse_f64(v, origin)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(err(origin.clone(), format!("{key} = {x} outside [0, 1]")));
        }
        Ok(x)
    };
    let parse_bool = |v: &str, origin: &Origin| -> Result<bool, ConfigError> {
        match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(err(origin.clone(), format!("cannot parse `{v}` as a boolean"))),
        }
    };
    match key {
        "p_s" => cfg.chain.params.p_s = parse_unit(value, &origin, key)?,
        "eta" => cfg.chain.params.eta = parse_unit(value, &origin, key)?,
        "gamma" => cfg.chain.params.gamma = parse_unit(value, &origin, key)?,
        "zeta" => cfg.chain.params.zeta = parse_unit(value, &origin, key)?,
        "p_cnot" => cfg.chain.params.p_cnot = parse_unit(value, &origin, key)?,
        "p_qnd" => cfg.chain.params.p_qnd = parse_unit(value, &origin, key)?,
        "n_links" => {
            cfg.chain.n_links = value.parse::<u32>().map_err(|_| {
                err(origin, format!("cannot parse `{value}` as a link count"))
            })?;
        }
        "trials" => {
            cfg.chain.trials = value.parse::<u64>().map_err(|_| {
                err(origin, format!("cannot parse `{value}` as a trial count"))
            })?;
        }
        "seed" => {
            cfg.chain.seed = value.parse::<u64>().map_err(|_| {
                err(origin, format!("cannot parse `{value}` as a seed"))
            })?;
        }
        "table1_convention" => cfg.chain.table1_convention = parse_bool(value, &origin)?,
        "sources_at_endpoints" => cfg.chain.sources_at_endpoints = parse_bool(value, &origin)?,
        "etas" => {
            let mut etas = Vec::new();
            for part in value.split(',') {
                let x = parse_unit(part.trim(), &origin, "etas")?;
                etas.push(x);
            }
            if etas.is_empty() {
                return Err(err(origin, "etas needs at least one value"));
            }
            cfg.etas = etas;
        }
        _ => return Err(err(origin, format!("unknown key `{key}`"))),
    }
    Ok(())
}

fn split_assignment(text: &str) -> Option<(&str, &str)> {
    let (k, v) = text.split_once('=')?;
    Some((k.trim(), v.trim()))
}

/// Loads the config file (if any), then applies `--set` overrides in order,
/// then the seed environment variable as a default of last resort.
pub fn load(
    path: Option<&str>,
    overrides: &[String],
    env_seed: Option<&str>,
) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seed_assigned = false;

    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: None,
            message: format!("cannot read `{path}`: {e}"),
        })?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let origin = Origin::File {
                path: path.to_string(),
                line: idx + 1,
            };
            let Some((key, value)) = split_assignment(line) else {
                return Err(err(origin, format!("expected `key = value`, found `{line}`")));
            };
            seed_assigned |= key == "seed";
            apply(&mut cfg, key, value, origin)?;
        }
    }
    for (position, assignment) in overrides.iter().enumerate() {
        let origin = Origin::Override { position: position + 1 };
        let Some((key, value)) = split_assignment(assignment) else {
            return Err(err(origin, format!("expected `key=value`, found `{assignment}`")));
        };
        seed_assigned |= key == "seed";
        apply(&mut cfg, key, value, origin)?;
    }
    if !seed_assigned {
        if let Some(value) = env_seed {
            apply(&mut cfg, "seed", value, Origin::Environment(SEED_ENV))?;
        }
    }
    cfg.chain.params.validate().map_err(|e| ConfigError {
        origin: None,
        message: e.to_string(),
    })?;
    Ok(cfg)
}
