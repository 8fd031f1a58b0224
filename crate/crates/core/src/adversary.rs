//! Intercept-resend eavesdropping.
//!
//! Eve sits just before Bob, measures the arrival slot of a fraction of the
//! pulses and resends either a full-duration coherent pulse consistent with
//! her result (keeps the interferometer contrast) or a half-duration pulse
//! in the measured slot (certain key information on every kept round, but
//! it lights up the destructive port's middle slot like a decohered pulse).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::StateLabel;
use crate::timebin::{sample_time, PulseState, TimeSlot};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("interception probabilities must lie in [0, 1] and sum to at most 1, got long={0} short={1}")]
    Probabilities(f64, f64),
    #[error("measured slot {0} is outside the protocol frame 1..=5")]
    InvalidSlot(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum EveStrategy {
    Passive,
    InterceptResend { omega_long: f64, omega_short: f64 },
}

impl EveStrategy {
    pub fn intercept_resend(omega_long: f64, omega_short: f64) -> Result<Self, AdversaryError> {
        let s = EveStrategy::InterceptResend { omega_long, omega_short };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), AdversaryError> {
        if let EveStrategy::InterceptResend { omega_long: l, omega_short: s } = *self {
            let unit = 0.0..=1.0;
            // small slack so that l + l*d/(1-d) style budgets summing to 1 pass
            if !(unit.contains(&l) && unit.contains(&s) && l + s <= 1.0 + 1e-12) {
                return Err(AdversaryError::Probabilities(l, s));
            }
        }
        Ok(())
    }

    pub fn omega_long(&self) -> f64 {
        match self {
            EveStrategy::Passive => 0.0,
            EveStrategy::InterceptResend { omega_long, .. } => *omega_long,
        }
    }

    pub fn omega_short(&self) -> f64 {
        match self {
            EveStrategy::Passive => 0.0,
            EveStrategy::InterceptResend { omega_short, .. } => *omega_short,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resend {
    None,
    Long(StateLabel),
    Short(TimeSlot),
}

/// Eve's private record of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EveNote {
    pub intercepted: bool,
    pub resend: Resend,
    pub measured_slot: Option<TimeSlot>,
    pub guess: Option<u8>,
}

impl EveNote {
    pub const NOT_INTERCEPTED: EveNote =
        EveNote { intercepted: false, resend: Resend::None, measured_slot: None, guess: None };

    /// Everything Eve holds about the round, as a histogram key.
    pub fn observation(&self) -> (Option<TimeSlot>, Option<u8>) {
        (self.measured_slot, self.guess)
    }
}

/// The three uniform draws Eve consumes per round, in schedule order.
#[derive(Debug, Clone, Copy)]
pub struct EveDraws {
    pub decision: f64,
    pub measure: f64,
    pub coin: f64,
}

/// Full-duration resend rule. Slots 2 and 4 are answered with the key state
/// they certify; slot 3 gets a fair coin between the two key states.
pub fn resend_rule_long(slot: TimeSlot, coin: f64) -> Result<(StateLabel, Option<u8>), AdversaryError> {
    Ok(match slot.index() {
        1 => (StateLabel::S12, None),
        2 => (StateLabel::S23, Some(0)),
        3 => {
            let bit = u8::from(coin >= 0.5);
            (StateLabel::from_bit(bit), Some(bit))
        }
        4 => (StateLabel::S34, Some(1)),
        5 => (StateLabel::S45, None),
        other => return Err(AdversaryError::InvalidSlot(other)),
    })
}

fn short_guess(slot: TimeSlot, coin: f64) -> Option<u8> {
    match slot.index() {
        2 => Some(0),
        3 => Some(u8::from(coin >= 0.5)),
        4 => Some(1),
        _ => None,
    }
}

/// Applies Eve to a post-channel pulse.
pub fn eve_intercept(
    state: PulseState,
    strategy: EveStrategy,
    draws: EveDraws,
) -> Result<(PulseState, EveNote), AdversaryError> {
    let (long, short) = match strategy {
        EveStrategy::Passive => return Ok((state, EveNote::NOT_INTERCEPTED)),
        EveStrategy::InterceptResend { omega_long, omega_short } => (omega_long, omega_short),
    };
    let is_long = draws.decision < long;
    if !is_long && draws.decision >= long + short {
        return Ok((state, EveNote::NOT_INTERCEPTED));
    }

    let Some(slot) = sample_time(state, draws.measure) else {
        return Ok((
            PulseState::Vacuum,
            EveNote { intercepted: true, resend: Resend::None, measured_slot: None, guess: None },
        ));
    };

    if is_long {
        let (label, guess) = resend_rule_long(slot, draws.coin)?;
        Ok((
            label.state(),
            EveNote { intercepted: true, resend: Resend::Long(label), measured_slot: Some(slot), guess },
        ))
    } else {
        Ok((
            PulseState::Half(slot),
            EveNote {
                intercepted: true,
                resend: Resend::Short(slot),
                measured_slot: Some(slot),
                guess: short_guess(slot, draws.coin),
            },
        ))
    }
}
