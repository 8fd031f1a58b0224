//! Alice's source, Bob's receiver and the public sifting phase.
//!
//! Alice emits one of four duration-T pulses at delays 0, T/2, T and 3T/2.
//! Only the two middle ones carry a key bit. After the quantum exchange
//! Alice announces which rounds used the outer (decoy) states, which makes
//! Bob's key-arm detections in slots 2 and 4 unambiguous; Bob then announces
//! which rounds he keeps, without saying which slot fired.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timebin::{DetectionEvent, PulseState, SlotError, TimeSlot};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Slot(#[from] SlotError),
    #[error("transcripts disagree on the round set: {0}")]
    TranscriptMismatch(String),
    #[error("round {round_id}: {arm:?} round carries inconsistent event {event:?}")]
    InconsistentEvent { round_id: u64, arm: Arm, event: DetectionEvent },
    #[error("sample fraction must lie strictly between 0 and 1, got {0}")]
    SampleFraction(f64),
    #[error("no kept rounds: the session has no key material")]
    EmptyKey,
}

/// Alice's emission choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StateLabel {
    S12,
    S23,
    S34,
    S45,
}

impl StateLabel {
    pub const ALL: [StateLabel; 4] = [StateLabel::S12, StateLabel::S23, StateLabel::S34, StateLabel::S45];

    /// Delay in units of T/2.
    pub fn delay(self) -> u8 {
        self as u8
    }

    /// First half-slot of the pulse.
    pub fn first_slot(self) -> TimeSlot {
        TimeSlot::at(self.delay() + 1)
    }

    /// Middle of the pulse: the slot where a coherent copy cancels at the
    /// interferometer's destructive port.
    pub fn middle_slot(self) -> TimeSlot {
        self.first_slot().next()
    }

    pub fn bit(self) -> Option<u8> {
        match self {
            StateLabel::S23 => Some(0),
            StateLabel::S34 => Some(1),
            StateLabel::S12 | StateLabel::S45 => None,
        }
    }

    pub fn is_decoy(self) -> bool {
        self.bit().is_none()
    }

    pub fn state(self) -> PulseState {
        PulseState::CoherentPair(self.first_slot())
    }

    pub fn from_bit(bit: u8) -> StateLabel {
        if bit == 0 {
            StateLabel::S23
        } else {
            StateLabel::S34
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliceRound {
    pub round_id: u64,
    pub label: StateLabel,
}

/// Which of Bob's two detection paths the photon was sent down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Key,
    Interferometer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BobRound {
    pub round_id: u64,
    pub arm: Arm,
    pub event: DetectionEvent,
}

impl BobRound {
    pub fn new(round_id: u64, arm: Arm, event: DetectionEvent) -> Result<Self, ProtocolError> {
        let round = BobRound { round_id, arm, event };
        round.validate()?;
        Ok(round)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let ok = matches!(
            (self.arm, self.event),
            (_, DetectionEvent::None)
                | (Arm::Key, DetectionEvent::KeyArm(_))
                | (Arm::Interferometer, DetectionEvent::Interferometer(..))
        );
        if ok {
            Ok(())
        } else {
            Err(ProtocolError::InconsistentEvent { round_id: self.round_id, arm: self.arm, event: self.event })
        }
    }
}

/// Uniform choice among the four labels from a draw in `[0, 1)`.
pub fn alice_emit(u: f64) -> (StateLabel, PulseState) {
    let k = ((u * 4.0) as usize).min(3);
    let label = StateLabel::ALL[k];
    (label, label.state())
}

/// Draws below 1/2 go to the key arm.
pub fn bob_route(u: f64) -> Arm {
    if u < 0.5 {
        Arm::Key
    } else {
        Arm::Interferometer
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyClass {
    Keep(u8),
    Ambiguous,
    /// Slot 1 or 5 on a key-state round: unreachable without tampering.
    Invalid,
}

/// Classifies a key-arm detection on a round known to carry a key state.
pub fn classify_key_detection(slot: TimeSlot) -> Result<KeyClass, ProtocolError> {
    Ok(match slot.in_frame()?.index() {
        2 => KeyClass::Keep(0),
        3 => KeyClass::Ambiguous,
        4 => KeyClass::Keep(1),
        _ => KeyClass::Invalid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeptRound {
    pub round_id: u64,
    pub alice_bit: u8,
    pub bob_bit: u8,
}

/// Where every round went. The fields partition the transcript.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftCounters {
    pub kept: u64,
    pub discarded_interferometer: u64,
    pub discarded_no_detection: u64,
    pub discarded_decoy: u64,
    pub discarded_ambiguous: u64,
    pub anomalies: u64,
}

impl SiftCounters {
    pub fn total(&self) -> u64 {
        self.kept
            + self.discarded_interferometer
            + self.discarded_no_detection
            + self.discarded_decoy
            + self.discarded_ambiguous
            + self.anomalies
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftResult {
    /// Sorted by round id.
    pub kept: Vec<KeptRound>,
    pub counters: SiftCounters,
}

/// Bob's side of the decision for one round once Alice's decoy disclosure
/// is known. Shared by the in-memory path and the wire session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BobVerdict {
    Interferometer,
    NoDetection,
    Decoy,
    Ambiguous,
    Anomaly,
    Keep(u8),
}

pub(crate) fn bob_verdict(bob: &BobRound, alice_disclosed_decoy: bool) -> Result<BobVerdict, ProtocolError> {
    bob.validate()?;
    if bob.arm == Arm::Interferometer {
        return Ok(BobVerdict::Interferometer);
    }
    let slot = match bob.event {
        DetectionEvent::KeyArm(slot) => slot,
        _ => return Ok(BobVerdict::NoDetection),
    };
    if alice_disclosed_decoy {
        return Ok(BobVerdict::Decoy);
    }
    Ok(match classify_key_detection(slot)? {
        KeyClass::Keep(b) => BobVerdict::Keep(b),
        KeyClass::Ambiguous => BobVerdict::Ambiguous,
        KeyClass::Invalid => BobVerdict::Anomaly,
    })
}

impl SiftCounters {
    pub(crate) fn record(&mut self, v: BobVerdict) {
        match v {
            BobVerdict::Interferometer => self.discarded_interferometer += 1,
            BobVerdict::NoDetection => self.discarded_no_detection += 1,
            BobVerdict::Decoy => self.discarded_decoy += 1,
            BobVerdict::Ambiguous => self.discarded_ambiguous += 1,
            BobVerdict::Anomaly => self.anomalies += 1,
            BobVerdict::Keep(_) => self.kept += 1,
        }
    }
}

fn sorted_by_id<T: Copy>(rounds: &[T], id: impl Fn(&T) -> u64, who: &str) -> Result<Vec<T>, ProtocolError> {
    let mut v = rounds.to_vec();
    v.sort_by_key(|r| id(r));
    if let Some(w) = v.windows(2).find(|w| id(&w[0]) == id(&w[1])) {
        return Err(ProtocolError::TranscriptMismatch(format!("{who} lists round {} twice", id(&w[0]))));
    }
    Ok(v)
}

/// Runs both disclosures over complete transcripts.
pub fn sift(alice: &[AliceRound], bob: &[BobRound]) -> Result<SiftResult, ProtocolError> {
    if alice.len() != bob.len() {
        return Err(ProtocolError::TranscriptMismatch(format!(
            "alice has {} rounds, bob has {}",
            alice.len(),
            bob.len()
        )));
    }
    let alice = sorted_by_id(alice, |r| r.round_id, "alice")?;
    let bob = sorted_by_id(bob, |r| r.round_id, "bob")?;

    let mut counters = SiftCounters::default();
    let mut kept = Vec::new();
    for (a, b) in alice.iter().zip(&bob) {
        if a.round_id != b.round_id {
            return Err(ProtocolError::TranscriptMismatch(format!(
                "round {} has no counterpart",
                a.round_id.min(b.round_id)
            )));
        }
        let v = bob_verdict(b, a.label.is_decoy())?;
        counters.record(v);
        if let BobVerdict::Keep(bob_bit) = v {
            let alice_bit = a.label.bit().expect("non-decoy label carries a bit");
            kept.push(KeptRound { round_id: a.round_id, alice_bit, bob_bit });
        }
    }
    Ok(SiftResult { kept, counters })
}

/// Number of kept rounds sacrificed for the public comparison.
pub fn sample_size(kept: usize, fraction: f64) -> usize {
    // the epsilon absorbs representation error, e.g. 0.2 * 1000
    let k = (fraction * kept as f64 - 1e-9).ceil().max(0.0) as usize;
    k.min(kept)
}

/// Positions (into a kept list) chosen for disclosure, ascending.
pub fn choose_sample<R: Rng + ?Sized>(kept: usize, fraction: f64, rng: &mut R) -> Result<Vec<usize>, ProtocolError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(ProtocolError::SampleFraction(fraction));
    }
    let mut idx = rand::seq::index::sample(rng, kept, sample_size(kept, fraction)).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QberEstimate {
    pub qber: f64,
    pub errors: u64,
    /// Round ids compared in public, ascending.
    pub disclosed: Vec<u64>,
    /// Undisclosed kept rounds: the raw key.
    pub final_key: Vec<KeptRound>,
}

/// Compares a random subset of the kept rounds in public.
pub fn estimate_qber<R: Rng + ?Sized>(
    sift: &SiftResult,
    sample_fraction: f64,
    rng: &mut R,
) -> Result<QberEstimate, ProtocolError> {
    if !(sample_fraction > 0.0 && sample_fraction < 1.0) {
        return Err(ProtocolError::SampleFraction(sample_fraction));
    }
    if sift.kept.is_empty() {
        return Err(ProtocolError::EmptyKey);
    }
    let chosen = choose_sample(sift.kept.len(), sample_fraction, rng)?;
    let mut disclosed = Vec::with_capacity(chosen.len());
    let mut final_key = Vec::with_capacity(sift.kept.len() - chosen.len());
    let mut errors = 0u64;
    let mut next = chosen.iter().peekable();
    for (pos, k) in sift.kept.iter().enumerate() {
        if next.peek() == Some(&&pos) {
            next.next();
            disclosed.push(k.round_id);
            errors += u64::from(k.alice_bit != k.bob_bit);
        } else {
            final_key.push(*k);
        }
    }
    let qber = errors as f64 / disclosed.len() as f64;
    Ok(QberEstimate { qber, errors, disclosed, final_key })
}
