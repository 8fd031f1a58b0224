//! Seeded Monte Carlo engine.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, SimConfig};
use crate::adversary::{eve_intercept, AdversaryError, EveDraws, EveNote, EveStrategy, Resend};
use crate::analysis::{self, InterferometerStats};
use crate::channel::{apply_channel, ChannelParams};
use crate::protocol::{self, alice_emit, bob_route, AliceRound, Arm, BobRound, ProtocolError, SiftCounters};
use crate::rng::{draw, sampling_rng, RoundDraws};
use crate::timebin::{sample_mz, sample_time, DetectionEvent, Port, MAX_SLOT};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

/// Everything that happened in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRecord {
    pub alice: AliceRound,
    pub bob: BobRound,
    pub eve: EveNote,
}

pub fn simulate_round(
    round_id: u64,
    u: &[f64; draw::COUNT],
    channel: ChannelParams,
    eve: EveStrategy,
) -> Result<RoundRecord, AdversaryError> {
    let (label, state) = alice_emit(u[draw::ALICE_LABEL]);
    let state = apply_channel(state, channel, u[draw::CHANNEL_DECOHERENCE], u[draw::CHANNEL_LOSS]);
    let (state, note) = eve_intercept(
        state,
        eve,
        EveDraws { decision: u[draw::EVE_DECISION], measure: u[draw::EVE_MEASURE], coin: u[draw::EVE_COIN] },
    )?;
    let arm = bob_route(u[draw::BOB_ROUTE]);
    let event = match arm {
        Arm::Key => sample_time(state, u[draw::BOB_MEASURE]).map_or(DetectionEvent::None, DetectionEvent::KeyArm),
        Arm::Interferometer => sample_mz(state, u[draw::BOB_MEASURE]),
    };
    Ok(RoundRecord { alice: AliceRound { round_id, label }, bob: BobRound { round_id, arm, event }, eve: note })
}

/// Runs every round; the result is ordered by round id whatever the
/// execution mode.
pub fn simulate_rounds(config: &SimConfig, exec: Execution) -> Result<Vec<RoundRecord>, SimError> {
    config.validate()?;
    let channel = config.channel().map_err(ConfigError::from)?;
    let gen = RoundDraws::new(config.seed);
    let one = |r: u64| simulate_round(r, &gen.round(r), channel, config.eve);
    let records = match exec {
        Execution::Sequential => (0..config.rounds).map(one).collect::<Result<Vec<_>, _>>()?,
        Execution::Parallel => (0..config.rounds).into_par_iter().map(one).collect::<Result<Vec<_>, _>>()?,
    };
    Ok(records)
}

/// Interferometer-arm counts, slot `k` at index `k - 1`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortCounts {
    pub destructive: Vec<u64>,
    pub constructive: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterferometerReport {
    pub routed: u64,
    pub routed_detected: u64,
    pub counts: PortCounts,
    /// Middle-slot destructive detections seen by the contrast monitor.
    pub middle_destructive: u64,
    /// Middle-slot destructive detections caused by a long resend carrying
    /// the wrong label. Kept out of `middle_destructive`: the analytic
    /// model treats long resends as contrast-neutral.
    pub wrong_label_leakage: u64,
}

impl InterferometerReport {
    pub fn stats(&self) -> InterferometerStats {
        InterferometerStats { routed_detected: self.routed_detected, middle_destructive: self.middle_destructive }
    }

    pub fn stats_with_leakage(&self) -> InterferometerStats {
        InterferometerStats {
            routed_detected: self.routed_detected,
            middle_destructive: self.middle_destructive + self.wrong_label_leakage,
        }
    }
}

pub fn interferometer_report(records: &[RoundRecord]) -> InterferometerReport {
    let mut rep = InterferometerReport {
        counts: PortCounts { destructive: vec![0; MAX_SLOT as usize], constructive: vec![0; MAX_SLOT as usize] },
        ..Default::default()
    };
    for r in records.iter().filter(|r| r.bob.arm == Arm::Interferometer) {
        rep.routed += 1;
        let DetectionEvent::Interferometer(port, slot) = r.bob.event else { continue };
        rep.routed_detected += 1;
        let col = match port {
            Port::Destructive => &mut rep.counts.destructive,
            Port::Constructive => &mut rep.counts.constructive,
        };
        col[slot.index() as usize - 1] += 1;
        if port == Port::Destructive && slot == r.alice.label.middle_slot() {
            match r.eve.resend {
                Resend::Long(l) if l != r.alice.label => rep.wrong_label_leakage += 1,
                _ => rep.middle_destructive += 1,
            }
        }
    }
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Secure,
    Insecure,
}

/// Outcome of one simulated session. Key names are stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub rounds: u64,
    pub eta: f64,
    pub d: f64,
    pub eve: EveStrategy,
    pub sample_fraction: f64,
    pub sift: SiftCounters,
    pub kept_fraction: f64,
    /// No kept rounds: nothing to estimate, the session failed.
    pub session_failed: bool,
    /// QBER estimated from the publicly compared sample.
    pub qber: Option<f64>,
    pub qber_errors: u64,
    pub qber_disclosed: u64,
    /// QBER over all kept rounds, which the simulator alone can see.
    pub qber_all_kept: Option<f64>,
    pub final_key_length: u64,
    pub interferometer: InterferometerReport,
    pub d_estimate: Option<f64>,
    pub d_estimate_with_leakage: Option<f64>,
    /// `1 - h(qber)`.
    pub iab: Option<f64>,
    /// Analytic Eve-on-Alice information at the measured QBER and configured d.
    pub iae: Option<f64>,
    pub eve_intercepted: u64,
    /// Empirical mutual information between Alice's kept bits and Eve's record.
    pub eve_info_on_alice: f64,
    /// Same against Bob's kept bits (diagnostic only).
    pub eve_info_on_bob: f64,
    pub threshold: Option<f64>,
    pub abort_qber: Option<f64>,
    pub verdict: Verdict,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Empirical information Eve holds on the kept bits, from the joint
/// histogram of (bit, Eve's measured slot and guess) over kept rounds.
fn eve_information(records: &[RoundRecord], kept: &[protocol::KeptRound]) -> (f64, f64) {
    let mut on_alice = BTreeMap::new();
    let mut on_bob = BTreeMap::new();
    for k in kept {
        let obs = records[k.round_id as usize].eve.observation();
        *on_alice.entry((k.alice_bit, obs)).or_insert(0u64) += 1;
        *on_bob.entry((k.bob_bit, obs)).or_insert(0u64) += 1;
    }
    (analysis::mutual_information(&on_alice), analysis::mutual_information(&on_bob))
}

pub fn build_report(config: &SimConfig, records: &[RoundRecord]) -> Result<RunReport, SimError> {
    let alice: Vec<AliceRound> = records.iter().map(|r| r.alice).collect();
    let bob: Vec<BobRound> = records.iter().map(|r| r.bob).collect();
    let sift = protocol::sift(&alice, &bob)?;

    let estimate = match protocol::estimate_qber(&sift, config.sample_fraction, &mut sampling_rng(config.seed)) {
        Ok(e) => Some(e),
        Err(ProtocolError::EmptyKey) => None,
        Err(e) => return Err(e.into()),
    };
    let qber = estimate.as_ref().map(|e| e.qber);
    let qber_all_kept = (!sift.kept.is_empty())
        .then(|| sift.kept.iter().filter(|k| k.alice_bit != k.bob_bit).count() as f64 / sift.kept.len() as f64);

    let interferometer = interferometer_report(records);
    let d_estimate = analysis::estimate_decoherence(interferometer.stats()).ok();
    let d_estimate_with_leakage = analysis::estimate_decoherence(interferometer.stats_with_leakage()).ok();

    let threshold = analysis::threshold(config.d).ok();
    let abort_qber = config.abort_qber.or(threshold);
    let verdict = match (qber, abort_qber) {
        (Some(q), Some(limit)) if q < limit => Verdict::Secure,
        _ => Verdict::Insecure,
    };
    let (eve_info_on_alice, eve_info_on_bob) = eve_information(records, &sift.kept);

    Ok(RunReport {
        seed: config.seed,
        rounds: config.rounds,
        eta: config.eta,
        d: config.d,
        eve: config.eve,
        sample_fraction: config.sample_fraction,
        kept_fraction: sift.counters.kept as f64 / config.rounds as f64,
        sift: sift.counters,
        session_failed: estimate.is_none(),
        qber,
        qber_errors: estimate.as_ref().map_or(0, |e| e.errors),
        qber_disclosed: estimate.as_ref().map_or(0, |e| e.disclosed.len() as u64),
        qber_all_kept,
        final_key_length: estimate.as_ref().map_or(0, |e| e.final_key.len() as u64),
        interferometer,
        d_estimate,
        d_estimate_with_leakage,
        iab: qber.and_then(|q| analysis::iab(q).ok()),
        iae: qber.and_then(|q| analysis::iae(q, config.d).ok()),
        eve_intercepted: records.iter().filter(|r| r.eve.intercepted).count() as u64,
        eve_info_on_alice,
        eve_info_on_bob,
        threshold,
        abort_qber,
        verdict,
    })
}

pub fn run_simulation_with(config: &SimConfig, exec: Execution) -> Result<RunReport, SimError> {
    let records = simulate_rounds(config, exec)?;
    build_report(config, &records)
}

pub fn run_simulation(config: &SimConfig) -> Result<RunReport, SimError> {
    run_simulation_with(config, Execution::Parallel)
}
