//! Framed message protocol for running the public sifting phase between two
//! processes over any reliable, ordered byte stream.

pub mod frame;
pub mod session;
pub mod tcp;

pub use frame::{decode_frame, encode_frame, Decoded, SiftMessage, VerdictCode, WireError, MAX_FRAME_LEN};
pub use session::{
    combine_outcomes, run_sift_session, DisclosedRound, FramedStream, Party, Role, SessionConfig, SessionError,
    SessionOutcome, PROTOCOL_VERSION,
};
