//! Monte Carlo harness over the full chain, with a deterministic,
//! schema-stable report.
//!
//! Trial `i` draws from the substream `(seed, i)`; per-trial results are
//! collected in trial order and reduced sequentially, so the report bytes
//! are identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, ComponentKind, ComponentTally};
use crate::error::{Error, Result};
use crate::params::{BellKind, GunParams, NoiseParams};
use crate::policy::{trial_rng, Policy};
use crate::protocol::{
    distribute_pair, purify, swap, HeraldEvent, LinkPair, LinkSpec, NoisySide, StationId,
};

/// Configuration of one chain run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_links: u32,
    pub params: NoiseParams,
    pub trials: u64,
    pub seed: u64,
    /// Drop the p_qnd factor from the simulated presence check and from the
    /// analytic predictions, the convention the component-count table uses.
    pub table1_convention: bool,
    /// Place the sources at stations instead of mid-points; this only moves
    /// which photon carries the dephasing designation.
    pub sources_at_endpoints: bool,
    pub collect_events: bool,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_links == 0 {
            return Err(Error::Config("n_links must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.params.validate()
    }

    fn effective_noise(&self) -> NoiseParams {
        let mut p = self.params;
        if self.table1_convention {
            p.p_qnd = 1.0;
        }
        p
    }
}

#[derive(Clone, Debug, Default)]
struct TrialStats {
    purify_attempts: u64,
    purify_accepted: u64,
    purify_accepted_clean: u64,
    swap_attempts: u64,
    swap_successes: u64,
    success: bool,
    clean_success: bool,
    delivered_fidelity: Option<f64>,
    tally: ComponentTally,
    events: Vec<(u64, HeraldEvent)>,
}

fn link_specs(cfg: &ChainConfig, link: u32) -> (LinkSpec, LinkSpec) {
    let even = link % 2 == 0;
    let (t1, t2) = if even { ("w1", "w2") } else { ("w2", "w1") };
    let noisy_side = if cfg.sources_at_endpoints && !even {
        NoisySide::Left
    } else {
        NoisySide::Right
    };
    let spec = |pair: u32, tl: &str, tr: &str| LinkSpec {
        left: StationId(link),
        right: StationId(link + 1),
        mode_left: format!("l{link}p{pair}a"),
        mode_right: format!("l{link}p{pair}b"),
        tag_left: tl.to_string(),
        tag_right: tr.to_string(),
        noisy_side,
    };
    // The two pairs of one link travel with opposite frequency
    // orientations so both stations' CNOT ancillas are non-degenerate.
    (spec(0, t1, t2), spec(1, t2, t1))
}

fn run_trial(cfg: &ChainConfig, trial: u64) -> Result<TrialStats> {
    let mut rng = trial_rng(cfg.seed, trial);
    let noise = cfg.effective_noise();
    let channel = noise.channel();
    let mut stats = TrialStats::default();
    let log = |stats: &mut TrialStats, events: &[HeraldEvent]| {
        if cfg.collect_events {
            stats
                .events
                .extend(events.iter().cloned().map(|e| (trial, e)));
        }
    };

    let mut purified: Vec<Option<LinkPair>> = Vec::with_capacity(cfg.n_links as usize);
    for link in 0..cfg.n_links {
        stats.purify_attempts += 1;
        stats.tally += analytics::PURIFIER_TALLY;
        let (spec1, spec2) = link_specs(cfg, link);
        let gun1 = GunParams::new(
            noise.p_s,
            BellKind::PhiPlus,
            (&spec1.tag_left, &spec1.tag_right),
        )?;
        let gun2 = GunParams::new(
            noise.p_s,
            BellKind::PhiPlus,
            (&spec2.tag_left, &spec2.tag_right),
        )?;
        let d1 = distribute_pair(&spec1, &gun1, &channel, &mut Policy::Sample(&mut rng))?
            .pop()
            .expect("sampled branch");
        log(&mut stats, &d1.events);
        let d2 = distribute_pair(&spec2, &gun2, &channel, &mut Policy::Sample(&mut rng))?
            .pop()
            .expect("sampled branch");
        log(&mut stats, &d2.events);
        let (Some(p1), Some(p2)) = (d1.pair, d2.pair) else {
            purified.push(None);
            continue;
        };
        let branch = purify(&p1, &p2, &noise, link, &mut Policy::Sample(&mut rng))?
            .pop()
            .expect("sampled branch");
        log(&mut stats, &branch.events);
        if let Some(pair) = branch.result {
            stats.purify_accepted += 1;
            if pair.clean {
                stats.purify_accepted_clean += 1;
            }
            purified.push(Some(pair));
        } else {
            purified.push(None);
        }
    }

    if purified.iter().all(|p| p.is_some()) {
        let mut iter = purified.into_iter().flatten();
        let mut current = iter.next().expect("at least one link");
        let mut all_swaps_ok = true;
        for (round, next) in iter.enumerate() {
            stats.swap_attempts += 1;
            stats.tally += analytics::SWAPPER_TALLY;
            let branch = swap(
                &current,
                &next,
                &noise,
                cfg.n_links + round as u32,
                &mut Policy::Sample(&mut rng),
            )?
            .pop()
            .expect("sampled branch");
            log(&mut stats, &branch.events);
            match branch.result {
                Some(pair) => {
                    stats.swap_successes += 1;
                    current = pair;
                }
                None => {
                    all_swaps_ok = false;
                    break;
                }
            }
        }
        if all_swaps_ok {
            stats.success = true;
            stats.clean_success = current.clean;
            stats.delivered_fidelity = Some(current.fidelity_cache);
        }
    }
    Ok(stats)
}

/// Success counters for the whole chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuccessBlock {
    pub trials_succeeded: u64,
    pub rate: f64,
    /// Successes whose every transit was dephasing-free; this is the event
    /// the analytic rate describes.
    pub clean_trials_succeeded: u64,
    pub clean_rate: f64,
    pub analytic_rate: f64,
    /// Wald 95% interval on the clean rate.
    pub ci95: [f64; 2],
    pub z_vs_analytic: Option<f64>,
    pub attempts_per_success: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PurifyBlock {
    pub attempts: u64,
    pub accepted: u64,
    pub accepted_clean: u64,
    pub rate: f64,
    pub clean_rate: f64,
    pub analytic_rate: f64,
    pub z_vs_analytic: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SwapBlock {
    pub attempts: u64,
    pub successes: u64,
    pub rate: Option<f64>,
    pub analytic_rate: f64,
    pub z_vs_analytic: Option<f64>,
}

/// Empirical component counts converted from the measured rates:
/// n_pur = 1/rate(purify), n_swap = 1/rate(swap), n_total = 2·n_pur·n_swap.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalComponents {
    pub n_pur: Option<f64>,
    pub n_swap: Option<f64>,
    pub n_total: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComponentsBlock {
    pub per_full_trial: ComponentTally,
    pub total_consumed: ComponentTally,
    pub mean_guns_per_trial: f64,
    pub mean_detectors_per_trial: f64,
}

/// Machine-readable result of one chain run. Field order is frozen; the
/// JSON rendering is byte-identical for identical configurations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateReport {
    pub schema: String,
    pub n_links: u32,
    pub trials: u64,
    pub seed: u64,
    pub table1_convention: bool,
    pub params: NoiseParams,
    pub success: SuccessBlock,
    pub purify: PurifyBlock,
    pub swap: SwapBlock,
    pub empirical_components: EmpiricalComponents,
    pub components: ComponentsBlock,
    pub mean_delivered_fidelity: Option<f64>,
}

/// Report plus the optional event log.
#[derive(Clone, Debug)]
pub struct ChainRun {
    pub report: RateReport,
    /// `trial,station,component,outcome,probability` lines, in trial order.
    pub event_log: Vec<String>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn z_score(observed: f64, expected: f64, n: u64) -> Option<f64> {
    if n == 0 || expected <= 0.0 || expected >= 1.0 {
        return None;
    }
    let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
    Some((observed - expected) / sigma)
}

/// Runs the Monte Carlo chain: per link, distribute two pairs and purify;
/// then swap pairwise across the chain. Reports empirical frequencies with
/// confidence intervals, the analytic predictions side by side, and the
/// component accounting.
pub fn run_chain(cfg: &ChainConfig) -> Result<ChainRun> {
    cfg.validate()?;
    let stats: Vec<TrialStats> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<Vec<_>>>()?;

    let mut agg = TrialStats::default();
    let mut fidelity_sum = 0.0;
    let mut fidelity_count = 0u64;
    let mut successes = 0u64;
    let mut clean_successes = 0u64;
    let mut event_log = Vec::new();
    for s in &stats {
        agg.purify_attempts += s.purify_attempts;
        agg.purify_accepted += s.purify_accepted;
        agg.purify_accepted_clean += s.purify_accepted_clean;
        agg.swap_attempts += s.swap_attempts;
        agg.swap_successes += s.swap_successes;
        agg.tally += s.tally;
        successes += s.success as u64;
        clean_successes += s.clean_success as u64;
        if let Some(f) = s.delivered_fidelity {
            fidelity_sum += f;
            fidelity_count += 1;
        }
        for (trial, e) in &s.events {
            event_log.push(format!(
                "{trial},{station},{component},{outcome},{probability:.12e}",
                station = e.station,
                component = e.component,
                outcome = e.outcome,
                probability = e.probability,
            ));
        }
    }

    let include_qnd = !cfg.table1_convention;
    let p_pur = analytics::p_pur(&cfg.params, include_qnd)?;
    let p_swap = analytics::p_swap(cfg.params.eta)?;
    let analytic_chain = p_pur.powi(cfg.n_links as i32)
        * p_swap.powi(cfg.n_links.saturating_sub(1) as i32);

    let clean_rate = clean_successes as f64 / cfg.trials as f64;
    let rate = successes as f64 / cfg.trials as f64;
    let sigma_hat = (clean_rate * (1.0 - clean_rate) / cfg.trials as f64).sqrt();
    let purify_rate = agg.purify_accepted as f64 / agg.purify_attempts as f64;
    let purify_clean_rate = agg.purify_accepted_clean as f64 / agg.purify_attempts as f64;
    let swap_rate = ratio(agg.swap_successes, agg.swap_attempts);
    let n_pur_emp = (purify_clean_rate > 0.0).then(|| 1.0 / purify_clean_rate);
    let n_swap_emp = swap_rate.and_then(|r| (r > 0.0).then(|| 1.0 / r));
    let n_total_emp = match (n_pur_emp, n_swap_emp) {
        (Some(a), Some(b)) => Some(2.0 * a * b),
        _ => None,
    };

    let report = RateReport {
        schema: "optrep.rate-report/1".to_string(),
        n_links: cfg.n_links,
        trials: cfg.trials,
        seed: cfg.seed,
        table1_convention: cfg.table1_convention,
        params: cfg.params,
        success: SuccessBlock {
            trials_succeeded: successes,
            rate,
            clean_trials_succeeded: clean_successes,
            clean_rate,
            analytic_rate: analytic_chain,
            ci95: [
                (clean_rate - 1.96 * sigma_hat).max(0.0),
                (clean_rate + 1.96 * sigma_hat).min(1.0),
            ],
            z_vs_analytic: z_score(clean_rate, analytic_chain, cfg.trials),
            attempts_per_success: (clean_rate > 0.0).then(|| 1.0 / clean_rate),
        },
        purify: PurifyBlock {
            attempts: agg.purify_attempts,
            accepted: agg.purify_accepted,
            accepted_clean: agg.purify_accepted_clean,
            rate: purify_rate,
            clean_rate: purify_clean_rate,
            analytic_rate: p_pur,
            z_vs_analytic: z_score(purify_clean_rate, p_pur, agg.purify_attempts),
        },
        swap: SwapBlock {
            attempts: agg.swap_attempts,
            successes: agg.swap_successes,
            rate: swap_rate,
            analytic_rate: p_swap,
            z_vs_analytic: swap_rate.and_then(|r| z_score(r, p_swap, agg.swap_attempts)),
        },
        empirical_components: EmpiricalComponents {
            n_pur: n_pur_emp,
            n_swap: n_swap_emp,
            n_total: n_total_emp,
        },
        components: ComponentsBlock {
            per_full_trial: analytics::tally_resources(ComponentKind::Chain(cfg.n_links)),
            total_consumed: agg.tally,
            mean_guns_per_trial: agg.tally.guns as f64 / cfg.trials as f64,
            mean_detectors_per_trial: agg.tally.detectors as f64 / cfg.trials as f64,
        },
        mean_delivered_fidelity: (fidelity_count > 0)
            .then(|| fidelity_sum / fidelity_count as f64),
    };
    Ok(ChainRun { report, event_log })
}
