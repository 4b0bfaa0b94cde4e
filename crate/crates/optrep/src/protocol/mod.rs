//! Repeater protocol layer: pair distribution over noisy channels,
//! purification, entanglement swapping and the Monte Carlo chain harness.
//!
//! Frequency arrangement: the two photons of one pair carry distinct tags,
//! the two pairs of one link are distributed with opposite orientations and
//! consecutive links alternate the orientation of the retained pair. That
//! way every optical element — the CNOT splitters at both stations and the
//! swap analyzers at intermediate stations — sees equal-frequency photons.

mod chain;

pub use chain::{run_chain, ChainConfig, ChainRun, RateReport};

use crate::analytics::{ComponentTally, PURIFIER_TALLY, SWAPPER_TALLY};
use crate::elements::{
    apply_local_unitary, channel_transit, detect_resolved, BeamSplitterBasis,
};
use crate::error::{Error, Result};
use crate::fock::{FockState, MixedState, ModeRegistry};
use crate::gates::{bell_analyzer, pittman_cnot, qnd_presence, BellVerdict, Correction};
use crate::params::{BellKind, ChannelParams, GunParams, NoiseParams};
use crate::policy::Policy;
use crate::sources::bell_state;

/// Station index along the chain; Alice is 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub struct StationId(pub u32);

impl std::fmt::Display for StationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Measurement-outcome exchange over the classical channel.
#[derive(Clone, Debug)]
pub struct ClassicalMessage {
    pub from: StationId,
    pub to: StationId,
    pub payload: String,
    pub round: u32,
}

/// Outcome-conditioned corrections applied at the designated end after a
/// successful swap, verified by the exact engine in the test suite.
pub const SWAP_CORRECTIONS: [(BellVerdict, Correction); 2] = [
    (BellVerdict::PsiPlus, Correction::X),
    (BellVerdict::PsiMinus, Correction::ZX),
];

/// One shared pair spanning two stations.
#[derive(Clone, Debug)]
pub struct LinkPair {
    pub left: StationId,
    pub right: StationId,
    pub mode_left: String,
    pub mode_right: String,
    pub state: MixedState,
    /// Fidelity with Φ⁺ on (mode_left, mode_right), kept in sync with
    /// `state` on construction.
    pub fidelity_cache: f64,
    pub provenance: Vec<ClassicalMessage>,
    /// No dephasing event occurred anywhere in this pair's history.
    pub clean: bool,
}

impl LinkPair {
    pub fn new(
        left: StationId,
        right: StationId,
        mode_left: &str,
        mode_right: &str,
        state: FockState,
        clean: bool,
        provenance: Vec<ClassicalMessage>,
    ) -> Result<LinkPair> {
        let target = bell_state(state.registry(), BellKind::PhiPlus, mode_left, mode_right)?;
        let fidelity_cache = state.fidelity(&target)?;
        Ok(LinkPair {
            left,
            right,
            mode_left: mode_left.to_string(),
            mode_right: mode_right.to_string(),
            state: MixedState::pure(state),
            fidelity_cache,
            provenance,
            clean,
        })
    }

    /// The single pure branch of a sampled pair.
    fn pure_state(&self) -> Result<&FockState> {
        match self.state.branches() {
            [(_, s)] => Ok(s),
            _ => Err(Error::Contract(
                "protocol operations consume sampled (single-branch) pairs".into(),
            )),
        }
    }
}

/// Which photon of a pair carries the dephasing flip, i.e. which transit
/// leg is the long one. Placement of the source only moves this
/// designation; the pair-level rates are unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoisySide {
    Left,
    Right,
}

/// Everything needed to distribute one pair over one link.
#[derive(Clone, Debug)]
pub struct LinkSpec {
    pub left: StationId,
    pub right: StationId,
    pub mode_left: String,
    pub mode_right: String,
    pub tag_left: String,
    pub tag_right: String,
    pub noisy_side: NoisySide,
}

impl LinkSpec {
    fn registry(&self) -> Result<ModeRegistry> {
        ModeRegistry::builder()
            .tag(&self.tag_left)
            .tag(&self.tag_right)
            .mode(&self.mode_left, &self.tag_left)
            .mode(&self.mode_right, &self.tag_right)
            .build()
    }
}

/// One herald event, for the event log.
#[derive(Clone, Debug)]
pub struct HeraldEvent {
    pub station: StationId,
    pub component: &'static str,
    pub outcome: String,
    pub probability: f64,
}

/// One branch of a pair distribution attempt.
#[derive(Clone, Debug)]
pub struct DistributeBranch {
    pub probability: f64,
    pub fired: bool,
    pub survived: bool,
    pub dephased: bool,
    pub pair: Option<LinkPair>,
    pub events: Vec<HeraldEvent>,
}

/// Fires the link's source and sends the pair through the noisy channel.
///
/// Returns the surviving, possibly dephased pair, or nothing when the gun
/// stayed silent or the channel ate the pair.
pub fn distribute_pair(
    spec: &LinkSpec,
    source: &GunParams,
    channel: &ChannelParams,
    policy: &mut Policy,
) -> Result<Vec<DistributeBranch>> {
    let reg = spec.registry()?;
    let mut out = Vec::new();
    for gun_branch in crate::sources::fire_gun(&reg, &spec.mode_left, &spec.mode_right, source, policy)?
    {
        let gun_event = HeraldEvent {
            station: spec.left,
            component: "gun",
            outcome: if gun_branch.fired { "fired" } else { "silent" }.to_string(),
            probability: gun_branch.probability,
        };
        if !gun_branch.fired {
            out.push(DistributeBranch {
                probability: gun_branch.probability,
                fired: false,
                survived: false,
                dephased: false,
                pair: None,
                events: vec![gun_event],
            });
            continue;
        }
        let far = match spec.noisy_side {
            NoisySide::Left => &spec.mode_left,
            NoisySide::Right => &spec.mode_right,
        };
        for transit in channel_transit(&gun_branch.state, far, channel, policy)? {
            let p = gun_branch.probability * transit.probability;
            let transit_event = HeraldEvent {
                station: spec.right,
                component: "channel",
                outcome: match (transit.survived, transit.dephased) {
                    (false, _) => "lost".to_string(),
                    (true, false) => "clean".to_string(),
                    (true, true) => "dephased".to_string(),
                },
                probability: transit.probability,
            };
            let pair = if transit.survived {
                Some(LinkPair::new(
                    spec.left,
                    spec.right,
                    &spec.mode_left,
                    &spec.mode_right,
                    transit.post.clone(),
                    !transit.dephased,
                    Vec::new(),
                )?)
            } else {
                None
            };
            out.push(DistributeBranch {
                probability: p,
                fired: true,
                survived: transit.survived,
                dephased: transit.dephased,
                pair,
                events: vec![gun_event.clone(), transit_event],
            });
        }
    }
    Ok(policy.choose(out, |b| b.probability))
}

/// Stage at which a purification attempt was decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PurifyStage {
    PresenceCheck,
    CnotLeft,
    CnotRight,
    TargetLeft,
    TargetRight,
    Coincidence,
    Accepted,
}

impl std::fmt::Display for PurifyStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PurifyStage::PresenceCheck => "presence-check",
            PurifyStage::CnotLeft => "cnot-left",
            PurifyStage::CnotRight => "cnot-right",
            PurifyStage::TargetLeft => "target-left",
            PurifyStage::TargetRight => "target-right",
            PurifyStage::Coincidence => "coincidence",
            PurifyStage::Accepted => "accepted",
        };
        write!(f, "{s}")
    }
}

/// One branch of a purification attempt.
#[derive(Clone, Debug)]
pub struct PurifyBranch {
    pub probability: f64,
    pub stage: PurifyStage,
    pub result: Option<LinkPair>,
    pub tally: ComponentTally,
    pub events: Vec<HeraldEvent>,
}

fn fail_branch(
    probability: f64,
    stage: PurifyStage,
    events: Vec<HeraldEvent>,
) -> PurifyBranch {
    PurifyBranch {
        probability,
        stage,
        result: None,
        tally: PURIFIER_TALLY,
        events,
    }
}

/// Link-level purification of two shared pairs.
///
/// The first pair's halves act as controls, the second pair's as targets.
/// One presence check screens the control at the left station, each station
/// applies a heralded CNOT, the targets are measured in the H/V basis and
/// the attempt is accepted on a parallel coincidence (HH or VV). The
/// retained pair is the control pair with its fidelity recomputed; the
/// attempt consumes six guns and ten detectors.
pub fn purify(
    pair1: &LinkPair,
    pair2: &LinkPair,
    noise: &NoiseParams,
    round: u32,
    policy: &mut Policy,
) -> Result<Vec<PurifyBranch>> {
    noise.validate()?;
    if pair1.left != pair2.left || pair1.right != pair2.right {
        return Err(Error::Topology(format!(
            "pairs span ({}, {}) and ({}, {})",
            pair1.left, pair1.right, pair2.left, pair2.right
        )));
    }
    let s1 = pair1.pure_state()?;
    let s2 = pair2.pure_state()?;
    let joint = s1.tensor(s2)?;
    let reg = joint.registry();
    let tag_of = |mode: &str| -> Result<String> {
        Ok(reg.tag_name(reg.tag(mode)?).to_string())
    };
    let gun_left = GunParams::new(
        noise.p_s,
        BellKind::PhiPlus,
        (&tag_of(&pair1.mode_left)?, &tag_of(&pair2.mode_left)?),
    )?;
    let gun_right = GunParams::new(
        noise.p_s,
        BellKind::PhiPlus,
        (&tag_of(&pair1.mode_right)?, &tag_of(&pair2.mode_right)?),
    )?;

    let mut out = Vec::new();
    for qnd in qnd_presence(&joint, &pair1.mode_left, noise, policy)? {
        let events = vec![HeraldEvent {
            station: pair1.left,
            component: "qnd",
            outcome: if qnd.success { "herald" } else { "no-herald" }.to_string(),
            probability: qnd.branch_probability,
        }];
        if !qnd.success {
            out.push(fail_branch(
                qnd.branch_probability,
                PurifyStage::PresenceCheck,
                events,
            ));
            continue;
        }
        for cl in pittman_cnot(
            &qnd.post_state,
            &pair1.mode_left,
            &pair2.mode_left,
            &gun_left,
            noise.eta,
            policy,
        )? {
            let p_cl = qnd.branch_probability * cl.branch_probability;
            let mut events = events.clone();
            events.push(HeraldEvent {
                station: pair1.left,
                component: "cnot",
                outcome: if cl.success { "herald" } else { "no-herald" }.to_string(),
                probability: cl.branch_probability,
            });
            if !cl.success {
                out.push(fail_branch(p_cl, PurifyStage::CnotLeft, events));
                continue;
            }
            for cr in pittman_cnot(
                &cl.post_state,
                &pair1.mode_right,
                &pair2.mode_right,
                &gun_right,
                noise.eta,
                policy,
            )? {
                let p_cr = p_cl * cr.branch_probability;
                let mut events = events.clone();
                events.push(HeraldEvent {
                    station: pair1.right,
                    component: "cnot",
                    outcome: if cr.success { "herald" } else { "no-herald" }.to_string(),
                    probability: cr.branch_probability,
                });
                if !cr.success {
                    out.push(fail_branch(p_cr, PurifyStage::CnotRight, events));
                    continue;
                }
                for dl in detect_resolved(
                    &cr.post_state,
                    &pair2.mode_left,
                    BeamSplitterBasis::Linear,
                    noise.eta,
                    policy,
                )? {
                    let p_dl = p_cr * dl.probability;
                    let pol_l = if dl.n1 + dl.n2 == 1 {
                        dl.record.resolved_pol
                    } else {
                        None
                    };
                    let mut events = events.clone();
                    events.push(HeraldEvent {
                        station: pair1.left,
                        component: "target",
                        outcome: pol_l.map_or("no-click".to_string(), |p| p.to_string()),
                        probability: dl.probability,
                    });
                    let Some(pol_l) = pol_l else {
                        out.push(fail_branch(p_dl, PurifyStage::TargetLeft, events));
                        continue;
                    };
                    for dr in detect_resolved(
                        &dl.post,
                        &pair2.mode_right,
                        BeamSplitterBasis::Linear,
                        noise.eta,
                        policy,
                    )? {
                        let p_dr = p_dl * dr.probability;
                        let pol_r = if dr.n1 + dr.n2 == 1 {
                            dr.record.resolved_pol
                        } else {
                            None
                        };
                        let mut events = events.clone();
                        events.push(HeraldEvent {
                            station: pair1.right,
                            component: "target",
                            outcome: pol_r.map_or("no-click".to_string(), |p| p.to_string()),
                            probability: dr.probability,
                        });
                        let Some(pol_r) = pol_r else {
                            out.push(fail_branch(p_dr, PurifyStage::TargetRight, events));
                            continue;
                        };
                        if pol_l != pol_r {
                            // Anti-parallel coincidence: discard.
                            out.push(fail_branch(p_dr, PurifyStage::Coincidence, events));
                            continue;
                        }
                        let retained = dr
                            .post
                            .drop_empty_modes(&[&pair2.mode_left, &pair2.mode_right])?
                            .normalized()?;
                        let mut provenance = pair1.provenance.clone();
                        provenance.extend(pair2.provenance.iter().cloned());
                        provenance.push(ClassicalMessage {
                            from: pair1.left,
                            to: pair1.right,
                            payload: format!("purify target {pol_l}"),
                            round,
                        });
                        provenance.push(ClassicalMessage {
                            from: pair1.right,
                            to: pair1.left,
                            payload: format!("purify target {pol_r}"),
                            round,
                        });
                        let pair = LinkPair::new(
                            pair1.left,
                            pair1.right,
                            &pair1.mode_left,
                            &pair1.mode_right,
                            retained,
                            pair1.clean && pair2.clean,
                            provenance,
                        )?;
                        out.push(PurifyBranch {
                            probability: p_dr,
                            stage: PurifyStage::Accepted,
                            result: Some(pair),
                            tally: PURIFIER_TALLY,
                            events,
                        });
                    }
                }
            }
        }
    }
    Ok(policy.choose(out, |b| b.probability))
}

/// One branch of a swap attempt.
#[derive(Clone, Debug)]
pub struct SwapBranch {
    pub probability: f64,
    pub verdict: BellVerdict,
    pub result: Option<LinkPair>,
    pub tally: ComponentTally,
    pub events: Vec<HeraldEvent>,
}

/// Entanglement swap: a partial Bell measurement on the halves meeting at
/// the shared station, with the outcome-conditioned correction applied at
/// the far right end and announced over the classical channel.
pub fn swap(
    left: &LinkPair,
    right: &LinkPair,
    noise: &NoiseParams,
    round: u32,
    policy: &mut Policy,
) -> Result<Vec<SwapBranch>> {
    noise.validate()?;
    if left.right != right.left {
        return Err(Error::Topology(format!(
            "pairs meet nowhere: ({}, {}) and ({}, {})",
            left.left, left.right, right.left, right.right
        )));
    }
    let middle = left.right;
    let joint = left.pure_state()?.tensor(right.pure_state()?)?;
    let mut out = Vec::new();
    for branch in bell_analyzer(
        &joint,
        &left.mode_right,
        &right.mode_left,
        noise.eta,
        policy,
    )? {
        let events = vec![HeraldEvent {
            station: middle,
            component: "swap",
            outcome: branch.verdict.to_string(),
            probability: branch.outcome.branch_probability,
        }];
        let result = match branch.verdict {
            BellVerdict::Fail => None,
            verdict => {
                let correction = SWAP_CORRECTIONS
                    .iter()
                    .find(|(v, _)| *v == verdict)
                    .map(|(_, c)| *c)
                    .expect("both success verdicts are tabulated");
                let corrected = apply_local_unitary(
                    &branch.outcome.post_state,
                    &right.mode_right,
                    &correction.matrix(),
                )?
                .drop_empty_modes(&[&left.mode_right, &right.mode_left])?
                .normalized()?;
                let mut provenance = left.provenance.clone();
                provenance.extend(right.provenance.iter().cloned());
                provenance.push(ClassicalMessage {
                    from: middle,
                    to: right.right,
                    payload: format!("swap {verdict}: apply {correction}"),
                    round,
                });
                Some(LinkPair::new(
                    left.left,
                    right.right,
                    &left.mode_left,
                    &right.mode_right,
                    corrected,
                    left.clean && right.clean,
                    provenance,
                )?)
            }
        };
        out.push(SwapBranch {
            probability: branch.outcome.branch_probability,
            verdict: branch.verdict,
            result,
            tally: SWAPPER_TALLY,
            events,
        });
    }
    Ok(policy.choose(out, |b| b.probability))
}
