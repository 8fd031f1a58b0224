//! Lossy, decohering line between Alice and Bob.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timebin::PulseState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("transmission eta must lie in [0, 1], got {0}")]
    Eta(f64),
    #[error("decoherence fraction d must lie in [0, 1], got {0}")]
    Decoherence(f64),
}

/// Photon transmission `eta` and the fraction `d` of pulses that lose
/// coherence between their two half-slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    eta: f64,
    d: f64,
}

impl ChannelParams {
    pub fn new(eta: f64, d: f64) -> Result<Self, ChannelError> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(ChannelError::Eta(eta));
        }
        if !(0.0..=1.0).contains(&d) {
            return Err(ChannelError::Decoherence(d));
        }
        Ok(ChannelParams { eta, d })
    }

    pub fn ideal() -> Self {
        ChannelParams { eta: 1.0, d: 0.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn decoherence(&self) -> f64 {
        self.d
    }
}

/// Decoheres then (independently) loses the pulse. `u_decohere` and `u_loss`
/// are uniform draws in `[0, 1)`, consumed in that order.
pub fn apply_channel(state: PulseState, params: ChannelParams, u_decohere: f64, u_loss: f64) -> PulseState {
    let state = match state {
        PulseState::CoherentPair(i) if u_decohere < params.d => PulseState::MixedPair(i),
        other => other,
    };
    if u_loss >= params.eta {
        PulseState::Vacuum
    } else {
        state
    }
}
