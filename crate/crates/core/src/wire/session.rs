//! The public sifting phase as a two-party message exchange.
//!
//! Message order (A = Alice, B = Bob):
//!
//! ```text
//! A→B HELLO          B→A HELLO
//! A→B DISCARD_ANNOUNCE     decoy rounds
//! B→A KEPT_ANNOUNCE        unambiguous key-arm rounds, no slot values
//! A→B SAMPLE_REQUEST       rounds picked for public comparison
//! B→A SAMPLE_REVEAL        Bob's bits on those rounds
//! A→B SAMPLE_REVEAL        Alice's bits on those rounds
//! A→B QBER_REPORT
//! A→B VERDICT
//! ```
//!
//! Each side ends up with the same kept round set, the same disclosed set
//! and the same QBER; it only ever learns the other side's bits on
//! disclosed rounds.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frame::{decode_frame, encode_frame, Decoded, SiftMessage, VerdictCode, WireError};
use crate::protocol::{
    bob_verdict, choose_sample, AliceRound, BobRound, BobVerdict, KeptRound, ProtocolError, SiftCounters, SiftResult,
};
use crate::rng::sampling_rng;

pub const PROTOCOL_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("protocol order violation: expected {expected}, got {got}")]
    OutOfOrder { expected: &'static str, got: &'static str },
    #[error("peer closed the stream while {0} was expected")]
    Closed(&'static str),
    #[error("protocol version mismatch: ours {ours}, peer {theirs}")]
    Version { ours: u8, theirs: u8 },
    #[error("session id mismatch: ours {ours}, peer {theirs}")]
    SessionId { ours: u64, theirs: u64 },
    #[error("round count mismatch: ours {ours}, peer {theirs}")]
    RoundCount { ours: u64, theirs: u64 },
    #[error("peer referenced round {0} which is not eligible here")]
    UnknownRound(u64),
    #[error("peer revealed rounds other than the requested sample")]
    RevealMismatch,
    #[error("QBER report {reported:?} disagrees with local count {local:?}")]
    QberMismatch { reported: (u64, u64), local: (u64, u64) },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub session_id: u64,
    pub sample_fraction: f64,
    /// Seeds Alice's choice of disclosed rounds. Unused by Bob.
    pub sample_seed: u64,
    /// Alice aborts when the estimated QBER exceeds this.
    pub abort_qber: f64,
}

/// A party's local transcript.
#[derive(Debug, Clone, Copy)]
pub enum Party<'a> {
    Alice(&'a [AliceRound]),
    Bob(&'a [BobRound]),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisclosedRound {
    pub round_id: u64,
    pub alice_bit: u8,
    pub bob_bit: u8,
}

/// What one party knows at the end of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub role: Role,
    pub session_id: u64,
    /// This party's own bit on every kept round, ascending by round id.
    pub kept: Vec<(u64, u8)>,
    pub disclosed: Vec<DisclosedRound>,
    pub qber_numerator: u64,
    pub qber_denominator: u64,
    pub proceed: bool,
    /// Own bits of the undisclosed kept rounds; empty on abort.
    pub final_key: Vec<(u64, u8)>,
    /// Only Bob sees every detection, so only he can fill these in.
    pub counters: Option<SiftCounters>,
}

impl SessionOutcome {
    pub fn qber(&self) -> Option<f64> {
        (self.qber_denominator > 0).then(|| self.qber_numerator as f64 / self.qber_denominator as f64)
    }

    pub fn kept_ids(&self) -> Vec<u64> {
        self.kept.iter().map(|k| k.0).collect()
    }

    pub fn final_key_ids(&self) -> Vec<u64> {
        self.final_key.iter().map(|k| k.0).collect()
    }
}

/// Joins both parties' private views into the in-memory `SiftResult`.
pub fn combine_outcomes(alice: &SessionOutcome, bob: &SessionOutcome) -> Option<SiftResult> {
    if alice.role != Role::Alice || bob.role != Role::Bob || alice.kept_ids() != bob.kept_ids() {
        return None;
    }
    let kept = alice
        .kept
        .iter()
        .zip(&bob.kept)
        .map(|(&(round_id, alice_bit), &(_, bob_bit))| KeptRound { round_id, alice_bit, bob_bit })
        .collect();
    Some(SiftResult { kept, counters: bob.counters? })
}

/// Buffered frame reader/writer over a byte stream.
pub struct FramedStream<S> {
    inner: S,
    buf: Vec<u8>,
}

impl<S: Read + Write> FramedStream<S> {
    pub fn new(inner: S) -> Self {
        FramedStream { inner, buf: Vec::new() }
    }

    pub fn into_inner(self) -> S {
        self.inner
    }

    pub fn send(&mut self, msg: &SiftMessage) -> Result<(), SessionError> {
        let bytes = encode_frame(msg)?;
        log::debug!("send {} ({} bytes)", msg.name(), bytes.len());
        self.inner.write_all(&bytes)?;
        self.inner.flush()?;
        Ok(())
    }

    /// Blocks until a full frame is available.
    pub fn recv(&mut self, expected: &'static str) -> Result<SiftMessage, SessionError> {
        let mut chunk = [0u8; 64 * 1024];
        loop {
            if let Decoded::Message(msg, rest) = decode_frame(&self.buf)? {
                let consumed = self.buf.len() - rest.len();
                self.buf.drain(..consumed);
                log::debug!("recv {}", msg.name());
                return Ok(msg);
            }
            let n = self.inner.read(&mut chunk)?;
            if n == 0 {
                return Err(SessionError::Closed(expected));
            }
            self.buf.extend_from_slice(&chunk[..n]);
        }
    }
}

macro_rules! expect_msg {
    ($stream:expr, $name:literal, $pat:pat => $out:expr) => {{
        match $stream.recv($name)? {
            $pat => $out,
            other => return Err(SessionError::OutOfOrder { expected: $name, got: other.name() }),
        }
    }};
}

fn check_unique_ids(ids: impl Iterator<Item = u64>) -> Result<(), SessionError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ProtocolError::TranscriptMismatch(format!("round {id} listed twice")).into());
        }
    }
    Ok(())
}

/// Runs one sifting session as `party` over `io`.
pub fn run_sift_session<S: Read + Write>(
    party: Party<'_>,
    io: S,
    config: &SessionConfig,
) -> Result<SessionOutcome, SessionError> {
    let mut stream = FramedStream::new(io);
    match party {
        Party::Alice(rounds) => run_alice(rounds, &mut stream, config),
        Party::Bob(rounds) => run_bob(rounds, &mut stream, config),
    }
}

fn check_hello(config: &SessionConfig, ours: u64, msg: (u8, u64, u64)) -> Result<(), SessionError> {
    let (version, session_id, round_count) = msg;
    if version != PROTOCOL_VERSION {
        return Err(SessionError::Version { ours: PROTOCOL_VERSION, theirs: version });
    }
    if session_id != config.session_id {
        return Err(SessionError::SessionId { ours: config.session_id, theirs: session_id });
    }
    if round_count != ours {
        return Err(SessionError::RoundCount { ours, theirs: round_count });
    }
    Ok(())
}

fn run_alice<S: Read + Write>(
    rounds: &[AliceRound],
    stream: &mut FramedStream<S>,
    config: &SessionConfig,
) -> Result<SessionOutcome, SessionError> {
    check_unique_ids(rounds.iter().map(|r| r.round_id))?;
    let labels: HashMap<u64, _> = rounds.iter().map(|r| (r.round_id, r.label)).collect();
    let n = rounds.len() as u64;

    stream.send(&SiftMessage::Hello { version: PROTOCOL_VERSION, session_id: config.session_id, round_count: n })?;
    let hello = expect_msg!(stream, "HELLO", SiftMessage::Hello { version, session_id, round_count } => (version, session_id, round_count));
    check_hello(config, n, hello)?;

    let mut decoys: Vec<u64> = rounds.iter().filter(|r| r.label.is_decoy()).map(|r| r.round_id).collect();
    decoys.sort_unstable();
    stream.send(&SiftMessage::DiscardAnnounce(decoys))?;

    let kept_ids = expect_msg!(stream, "KEPT_ANNOUNCE", SiftMessage::KeptAnnounce(ids) => ids);
    let mut kept = Vec::with_capacity(kept_ids.len());
    for id in kept_ids {
        match labels.get(&id).and_then(|l| l.bit()) {
            Some(bit) => kept.push((id, bit)),
            None => return Err(SessionError::UnknownRound(id)),
        }
    }

    let mut rng = sampling_rng(config.sample_seed);
    let positions = choose_sample(kept.len(), config.sample_fraction, &mut rng)?;
    let sample: Vec<u64> = positions.iter().map(|&p| kept[p].0).collect();
    stream.send(&SiftMessage::SampleRequest(sample.clone()))?;

    let bob_reveal = expect_msg!(stream, "SAMPLE_REVEAL", SiftMessage::SampleReveal(pairs) => pairs);
    if bob_reveal.iter().map(|p| p.0).ne(sample.iter().copied()) {
        return Err(SessionError::RevealMismatch);
    }
    let own: Vec<(u64, u8)> = positions.iter().map(|&p| kept[p]).collect();
    stream.send(&SiftMessage::SampleReveal(own.clone()))?;

    let disclosed = disclosed_rounds(&own, &bob_reveal);
    let numerator = disclosed.iter().filter(|d| d.alice_bit != d.bob_bit).count() as u64;
    let denominator = disclosed.len() as u64;
    stream.send(&SiftMessage::QberReport { numerator, denominator })?;

    let proceed = denominator > 0 && (numerator as f64 / denominator as f64) <= config.abort_qber;
    stream.send(&SiftMessage::Verdict(if proceed { VerdictCode::Proceed } else { VerdictCode::Abort }))?;

    Ok(finish(Role::Alice, config, kept, disclosed, (numerator, denominator), proceed, None))
}

fn run_bob<S: Read + Write>(
    rounds: &[BobRound],
    stream: &mut FramedStream<S>,
    config: &SessionConfig,
) -> Result<SessionOutcome, SessionError> {
    check_unique_ids(rounds.iter().map(|r| r.round_id))?;
    let n = rounds.len() as u64;

    let hello = expect_msg!(stream, "HELLO", SiftMessage::Hello { version, session_id, round_count } => (version, session_id, round_count));
    check_hello(config, n, hello)?;
    stream.send(&SiftMessage::Hello { version: PROTOCOL_VERSION, session_id: config.session_id, round_count: n })?;

    let decoy_ids = expect_msg!(stream, "DISCARD_ANNOUNCE", SiftMessage::DiscardAnnounce(ids) => ids);
    let mut sorted: Vec<&BobRound> = rounds.iter().collect();
    sorted.sort_unstable_by_key(|r| r.round_id);
    for &id in &decoy_ids {
        if sorted.binary_search_by_key(&id, |r| r.round_id).is_err() {
            return Err(SessionError::UnknownRound(id));
        }
    }

    let mut counters = SiftCounters::default();
    let mut kept = Vec::new();
    for r in &sorted {
        let is_decoy = decoy_ids.binary_search(&r.round_id).is_ok();
        let v = bob_verdict(r, is_decoy)?;
        counters.record(v);
        if let BobVerdict::Keep(bit) = v {
            kept.push((r.round_id, bit));
        }
    }
    stream.send(&SiftMessage::KeptAnnounce(kept.iter().map(|k| k.0).collect()))?;

    let sample = expect_msg!(stream, "SAMPLE_REQUEST", SiftMessage::SampleRequest(ids) => ids);
    let mut own = Vec::with_capacity(sample.len());
    for id in &sample {
        match kept.binary_search_by_key(id, |k| k.0) {
            Ok(pos) => own.push(kept[pos]),
            Err(_) => return Err(SessionError::UnknownRound(*id)),
        }
    }
    stream.send(&SiftMessage::SampleReveal(own.clone()))?;

    let alice_reveal = expect_msg!(stream, "SAMPLE_REVEAL", SiftMessage::SampleReveal(pairs) => pairs);
    if alice_reveal.iter().map(|p| p.0).ne(sample.iter().copied()) {
        return Err(SessionError::RevealMismatch);
    }
    let disclosed = disclosed_rounds(&alice_reveal, &own);
    let local = (disclosed.iter().filter(|d| d.alice_bit != d.bob_bit).count() as u64, disclosed.len() as u64);

    let reported = expect_msg!(stream, "QBER_REPORT", SiftMessage::QberReport { numerator, denominator } => (numerator, denominator));
    if reported != local {
        return Err(SessionError::QberMismatch { reported, local });
    }
    let verdict = expect_msg!(stream, "VERDICT", SiftMessage::Verdict(code) => code);

    Ok(finish(Role::Bob, config, kept, disclosed, local, verdict == VerdictCode::Proceed, Some(counters)))
}

fn disclosed_rounds(alice: &[(u64, u8)], bob: &[(u64, u8)]) -> Vec<DisclosedRound> {
    alice
        .iter()
        .zip(bob)
        .map(|(&(round_id, alice_bit), &(_, bob_bit))| DisclosedRound { round_id, alice_bit, bob_bit })
        .collect()
}

fn finish(
    role: Role,
    config: &SessionConfig,
    kept: Vec<(u64, u8)>,
    disclosed: Vec<DisclosedRound>,
    (qber_numerator, qber_denominator): (u64, u64),
    proceed: bool,
    counters: Option<SiftCounters>,
) -> SessionOutcome {
    let final_key = if proceed {
        let mut disclosed_ids = disclosed.iter().map(|d| d.round_id).peekable();
        kept.iter()
            .copied()
            .filter(|&(id, _)| {
                while disclosed_ids.next_if(|&d| d < id).is_some() {}
                disclosed_ids.next_if_eq(&id).is_none()
            })
            .collect()
    } else {
        Vec::new()
    };
    SessionOutcome {
        role,
        session_id: config.session_id,
        kept,
        disclosed,
        qber_numerator,
        qber_denominator,
        proceed,
        final_key,
        counters,
    }
}
