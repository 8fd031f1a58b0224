//! Seeded simulation engine, configuration, reports and output files.

pub mod config;
pub mod curves;
pub mod sim;
pub mod transcript;

pub use crate::rng::{round_draws, RoundDraws};
pub use config::{ConfigError, SimConfig};
pub use curves::{curve_family, write_curves_csv, CURVE_COLUMNS, DEFAULT_Q_STEP};
pub use sim::{
    build_report, run_simulation, run_simulation_with, simulate_rounds, Execution, InterferometerReport, RoundRecord,
    RunReport, SimError, Verdict,
};
pub use transcript::{Transcript, TranscriptRounds};
