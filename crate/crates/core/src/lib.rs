//! Simulator and security analyzer for four-state time-coding quantum key
//! distribution.
//!
//! Alice sends single-photon pulses of duration T at one of four delays;
//! two of them carry the key bit and the other two make Bob's early and late
//! detections ambiguous until sifting. Bob splits the incoming photons
//! between a time-of-arrival detector (the key) and an unbalanced
//! interferometer that checks the pulses still have their full coherent
//! duration.

pub mod adversary;
pub mod analysis;
pub mod channel;
pub mod cli;
pub mod harness;
pub mod protocol;
pub mod rng;
pub mod timebin;
pub mod wire;

pub use adversary::{EveNote, EveStrategy};
pub use channel::ChannelParams;
pub use protocol::{AliceRound, Arm, BobRound, SiftResult, StateLabel};
pub use timebin::{DetectionEvent, Port, PulseState, TimeSlot};
