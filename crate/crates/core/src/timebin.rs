//! One-photon time-bin states over half-slots and the two measurements Bob
//! can make on them: a direct time-of-arrival measurement, and an unbalanced
//! Mach-Zehnder interferometer with a half-slot delay and a π phase.
//!
//! Amplitudes are real and every state is an equal superposition, so each
//! state is held as small integer coefficients times a common squared norm.
//! Output probabilities are then exact dyadic rationals.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest half-slot an interferometer output reaches for in-frame states
/// (the delayed arm pushes a pair at slot 4 into slot 6).
pub const MAX_SLOT: u8 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SlotError {
    #[error("time slot index must be at least 1, got {0}")]
    Zero(u8),
    #[error("time slot {0} is outside the protocol frame 1..=5")]
    OutsideFrame(u8),
}

/// A half-slot of duration T/2. Indices start at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TimeSlot(u8);

impl TimeSlot {
    pub fn new(index: u8) -> Result<Self, SlotError> {
        if index == 0 {
            Err(SlotError::Zero(index))
        } else {
            Ok(TimeSlot(index))
        }
    }

    /// Panics on zero; for literals in code and tests.
    pub const fn at(index: u8) -> Self {
        assert!(index >= 1, "time slot index must be at least 1");
        TimeSlot(index)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn next(self) -> Self {
        TimeSlot(self.0 + 1)
    }

    /// Rejects slots a protocol-emitted state can never occupy.
    pub fn in_frame(self) -> Result<Self, SlotError> {
        if self.0 <= 5 {
            Ok(self)
        } else {
            Err(SlotError::OutsideFrame(self.0))
        }
    }
}

impl TryFrom<u8> for TimeSlot {
    type Error = SlotError;
    fn try_from(v: u8) -> Result<Self, SlotError> {
        TimeSlot::new(v)
    }
}

impl From<TimeSlot> for u8 {
    fn from(s: TimeSlot) -> u8 {
        s.0
    }
}

impl fmt::Display for TimeSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// State of a single transmitted pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PulseState {
    /// Photon lost.
    Vacuum,
    /// `|j⟩`, a pulse of duration T/2.
    Half(TimeSlot),
    /// `|i,i+1⟩ = (|i⟩ + |i+1⟩)/√2`, a coherent pulse of duration T.
    CoherentPair(TimeSlot),
    /// Equal classical mixture of `|i⟩` and `|i+1⟩`.
    MixedPair(TimeSlot),
}

impl PulseState {
    pub fn is_vacuum(self) -> bool {
        matches!(self, PulseState::Vacuum)
    }
}

impl fmt::Display for PulseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseState::Vacuum => write!(f, "vacuum"),
            PulseState::Half(j) => write!(f, "half:{j}"),
            PulseState::CoherentPair(i) => write!(f, "coherent:{i}"),
            PulseState::MixedPair(i) => write!(f, "mixed:{i}"),
        }
    }
}

/// Interferometer output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Port {
    /// Delayed and direct arms add.
    Constructive,
    /// π-phase port: a coherent duration-T pulse cancels in its middle slot.
    Destructive,
}

impl Port {
    pub const ALL: [Port; 2] = [Port::Destructive, Port::Constructive];
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Port::Constructive => write!(f, "constructive"),
            Port::Destructive => write!(f, "destructive"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectionEvent {
    None,
    KeyArm(TimeSlot),
    Interferometer(Port, TimeSlot),
}

/// A pure state written as `sqrt(norm_sq) * Σ coeff_k |slot_k⟩`.
#[derive(Debug, Clone, Copy)]
struct PureAmplitudes {
    first: u8,
    coeffs: [i32; 2],
    len: usize,
    norm_sq: f64,
}

impl PureAmplitudes {
    fn half(j: TimeSlot) -> Self {
        PureAmplitudes { first: j.0, coeffs: [1, 0], len: 1, norm_sq: 1.0 }
    }

    fn pair(i: TimeSlot) -> Self {
        PureAmplitudes { first: i.0, coeffs: [1, 1], len: 2, norm_sq: 0.5 }
    }

    fn coeff(&self, slot: i32) -> i32 {
        let k = slot - self.first as i32;
        if k >= 0 && (k as usize) < self.len {
            self.coeffs[k as usize]
        } else {
            0
        }
    }

    fn last(&self) -> u8 {
        self.first + self.len as u8 - 1
    }

    /// Output cells of the interferometer. Each port carries amplitude
    /// `(1/2)[ψ(t) ± ψ(t − 1)]` in half-slot units.
    fn mz_cells(&self, out: &mut Cells) {
        for port in Port::ALL {
            for t in self.first..=self.last() + 1 {
                let now = self.coeff(t as i32);
                let delayed = self.coeff(t as i32 - 1);
                let c = match port {
                    Port::Destructive => now - delayed,
                    Port::Constructive => now + delayed,
                };
                let p = self.norm_sq * f64::from(c * c) / 4.0;
                out.add(port, TimeSlot(t), p);
            }
        }
    }
}

/// Fixed-capacity accumulator of `(port, slot) → probability` cells, kept in
/// a stable order (Destructive first, slots ascending) for sampling.
#[derive(Debug, Clone)]
pub(crate) struct Cells {
    cells: [(Port, TimeSlot, f64); 8],
    len: usize,
}

impl Cells {
    fn new() -> Self {
        Cells { cells: [(Port::Destructive, TimeSlot(1), 0.0); 8], len: 0 }
    }

    fn add(&mut self, port: Port, slot: TimeSlot, p: f64) {
        if let Some(c) = self.cells[..self.len].iter_mut().find(|c| c.0 == port && c.1 == slot) {
            c.2 += p;
            return;
        }
        self.cells[self.len] = (port, slot, p);
        self.len += 1;
    }

    fn scale(&mut self, k: f64) {
        for c in &mut self.cells[..self.len] {
            c.2 *= k;
        }
    }

    fn sort(&mut self) {
        self.cells[..self.len].sort_by_key(|c| (c.0 != Port::Destructive, c.1));
    }

    fn iter(&self) -> impl Iterator<Item = (Port, TimeSlot, f64)> + '_ {
        self.cells[..self.len].iter().copied()
    }
}

pub(crate) fn mz_cells(state: PulseState) -> Cells {
    let mut cells = Cells::new();
    match state {
        PulseState::Vacuum => {}
        PulseState::Half(j) => PureAmplitudes::half(j).mz_cells(&mut cells),
        PulseState::CoherentPair(i) => PureAmplitudes::pair(i).mz_cells(&mut cells),
        PulseState::MixedPair(i) => {
            PureAmplitudes::half(i).mz_cells(&mut cells);
            PureAmplitudes::half(i.next()).mz_cells(&mut cells);
            cells.scale(0.5);
        }
    }
    cells.sort();
    cells
}

/// Time-of-arrival distribution. Empty for vacuum.
pub fn time_distribution(state: PulseState) -> BTreeMap<TimeSlot, f64> {
    match state {
        PulseState::Vacuum => BTreeMap::new(),
        PulseState::Half(j) => BTreeMap::from([(j, 1.0)]),
        PulseState::CoherentPair(i) | PulseState::MixedPair(i) => BTreeMap::from([(i, 0.5), (i.next(), 0.5)]),
    }
}

/// Samples a time-of-arrival slot from a uniform draw in `[0, 1)`.
pub fn sample_time(state: PulseState, u: f64) -> Option<TimeSlot> {
    match state {
        PulseState::Vacuum => None,
        PulseState::Half(j) => Some(j),
        PulseState::CoherentPair(i) | PulseState::MixedPair(i) => Some(if u < 0.5 { i } else { i.next() }),
    }
}

/// Interferometer output distribution over `(port, slot)`. Zero-probability
/// cells are kept so that the middle-slot cancellation is visible.
pub fn mz_distribution(state: PulseState) -> BTreeMap<(Port, TimeSlot), f64> {
    mz_cells(state).iter().map(|(port, slot, p)| ((port, slot), p)).collect()
}

/// Samples an interferometer detection from a uniform draw in `[0, 1)`.
/// Cells of probability zero are never returned.
pub fn sample_mz(state: PulseState, u: f64) -> DetectionEvent {
    let cells = mz_cells(state);
    let mut acc = 0.0;
    let mut last = None;
    for (port, slot, p) in cells.iter() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some((port, slot));
        if u < acc {
            return DetectionEvent::Interferometer(port, slot);
        }
    }
    // rounding slack at the top of the cumulative sum
    match last {
        Some((port, slot)) => DetectionEvent::Interferometer(port, slot),
        None => DetectionEvent::None,
    }
}
