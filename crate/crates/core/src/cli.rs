//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::analysis;
use crate::harness::sim::simulate_rounds;
use crate::harness::transcript::TranscriptRounds;
use crate::harness::{
    curve_family, run_simulation_with, write_curves_csv, Execution, SimConfig, Transcript, DEFAULT_Q_STEP,
};
use crate::timebin::{mz_distribution, time_distribution, Port, PulseState, TimeSlot};
use crate::wire::{tcp, SessionConfig};

#[derive(Debug, Parser)]
#[command(name = "tcqkd", version, about = "Four-state time-coding QKD simulator and security analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo session and print its JSON report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Evaluate rounds on one thread (same report, slower).
        #[arg(long)]
        sequential: bool,
    },
    /// Emit IAB/IAE curves as CSV with columns d,q,iab,iae.
    Curves {
        /// Comma-separated decoherence fractions.
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_Q_STEP)]
        step: f64,
    },
    /// Print the QBER at which IAB = IAE.
    Threshold {
        #[arg(long)]
        d: f64,
    },
    /// Print the analytic time-of-arrival and interferometer distributions of a state
    /// (vacuum, half:<j>, coherent:<i>, mixed:<i>).
    Distributions {
        #[arg(long)]
        state: StateSpec,
    },
    /// Listen on a TCP port and run one sifting session from a transcript file.
    SiftServe {
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Connect to a peer and run one sifting session from a transcript file.
    SiftConnect {
        #[arg(long)]
        addr: String,
        #[command(flatten)]
        session: SessionArgs,
    },
}

#[derive(Debug, Args)]
struct SessionArgs {
    #[arg(long)]
    transcript: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    sample_fraction: f64,
    /// Seed for choosing disclosed rounds; defaults to the session id.
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Abort level for the estimated QBER; defaults to the threshold at --d.
    #[arg(long)]
    abort_qber: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    d: f64,
    /// Write the session outcome as JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct StateSpec(PulseState);

impl FromStr for StateSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "vacuum" {
            return Ok(StateSpec(PulseState::Vacuum));
        }
        let (kind, slot) = s.split_once(':').ok_or_else(|| format!("expected <kind>:<slot> or vacuum, got {s:?}"))?;
        let slot: u8 = slot.parse().map_err(|e| format!("bad slot {slot:?}: {e}"))?;
        let slot = TimeSlot::new(slot).map_err(|e| e.to_string())?;
        let state = match kind {
            "half" => PulseState::Half(slot),
            "coherent" => PulseState::CoherentPair(slot),
            "mixed" => PulseState::MixedPair(slot),
            other => return Err(format!("unknown state kind {other:?}")),
        };
        Ok(StateSpec(state))
    }
}

/// Parses `argv` and runs the command, writing results to `out`.
/// Returns the process exit status: 0 ok, 1 runtime failure, 2 usage error.
pub fn cli_dispatch_to<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    match run(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    cli_dispatch_to(argv, &mut io::stdout().lock(), &mut io::stderr().lock())
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    UsageError(e.to_string()).into()
}

fn run(command: Command, out: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::Simulate { config, sequential } => simulate(config, sequential, out),
        Command::Curves { d, out: path, step } => {
            if !(step > 0.0 && step <= analysis::MAX_MODEL_QBER) {
                return Err(usage(format!("step must lie in (0, 0.25], got {step}")));
            }
            let points = curve_family(&d, step).map_err(usage)?;
            match path {
                Some(p) => {
                    let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
                    write_curves_csv(&points, BufWriter::new(f))?;
                }
                None => write_curves_csv(&points, &mut *out)?,
            }
            Ok(())
        }
        Command::Threshold { d } => {
            let q = analysis::threshold(d).map_err(|e| match e {
                analysis::AnalysisError::Domain { .. } => usage(e),
                other => other.into(),
            })?;
            writeln!(out, "{q:.6}")?;
            Ok(())
        }
        Command::Distributions { state } => distributions(state.0, out),
        Command::SiftServe { port, bind, session } => {
            let (transcript, config) = session_setup(&session)?;
            let outcome = tcp::serve((bind.as_str(), port), transcript.party(), &config)?;
            emit_outcome(&outcome, session.out.as_ref(), out)
        }
        Command::SiftConnect { addr, session } => {
            let (transcript, config) = session_setup(&session)?;
            let outcome = tcp::connect(addr.as_str(), transcript.party(), &config)?;
            emit_outcome(&outcome, session.out.as_ref(), out)
        }
    }
}

fn simulate(path: PathBuf, sequential: bool, out: &mut dyn Write) -> anyhow::Result<()> {
    let config = SimConfig::load(&path).map_err(usage)?;
    let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
    let report = if config.alice_transcript_path.is_some() || config.bob_transcript_path.is_some() {
        let records = simulate_rounds(&config, exec)?;
        if let Some(p) = &config.alice_transcript_path {
            let rounds = records.iter().map(|r| r.alice).collect();
            Transcript { session_id: config.seed, rounds: TranscriptRounds::Alice(rounds) }.save(p)?;
        }
        if let Some(p) = &config.bob_transcript_path {
            let rounds = records.iter().map(|r| r.bob).collect();
            Transcript { session_id: config.seed, rounds: TranscriptRounds::Bob(rounds) }.save(p)?;
        }
        crate::harness::build_report(&config, &records)?
    } else {
        run_simulation_with(&config, exec)?
    };
    let json = report.to_json();
    if let Some(p) = &config.report_path {
        std::fs::write(p, format!("{json}\n")).with_context(|| format!("writing {}", p.display()))?;
    }
    writeln!(out, "{json}")?;
    Ok(())
}

fn distributions(state: PulseState, out: &mut dyn Write) -> anyhow::Result<()> {
    writeln!(out, "state: {state}")?;
    let cells = |it: &mut dyn Iterator<Item = (TimeSlot, f64)>| {
        it.map(|(s, p)| format!("{s}={p}")).collect::<Vec<_>>().join(" ")
    };
    writeln!(out, "time:         {}", cells(&mut time_distribution(state).into_iter()))?;
    let mz = mz_distribution(state);
    for port in Port::ALL {
        let row = cells(&mut mz.iter().filter(|((p, _), _)| *p == port).map(|((_, s), &p)| (*s, p)));
        writeln!(out, "{:<13} {row}", format!("{port}:"))?;
    }
    Ok(())
}

fn session_setup(args: &SessionArgs) -> anyhow::Result<(Transcript, SessionConfig)> {
    if !(args.sample_fraction > 0.0 && args.sample_fraction < 1.0) {
        return Err(usage(format!("sample fraction must lie in (0, 1), got {}", args.sample_fraction)));
    }
    let transcript = Transcript::load(&args.transcript)?;
    let abort_qber = match args.abort_qber {
        Some(q) => q,
        None => analysis::threshold(args.d).map_err(|e| anyhow!("no default abort level: {e}"))?,
    };
    if !(0.0..=1.0).contains(&abort_qber) {
        bail!(usage(format!("abort QBER must lie in [0, 1], got {abort_qber}")));
    }
    let config = SessionConfig {
        session_id: transcript.session_id,
        sample_fraction: args.sample_fraction,
        sample_seed: args.sample_seed.unwrap_or(transcript.session_id),
        abort_qber,
    };
    Ok((transcript, config))
}

fn emit_outcome(
    outcome: &crate::wire::SessionOutcome,
    path: Option<&PathBuf>,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(outcome)?;
    match path {
        Some(p) => std::fs::write(p, format!("{json}\n")).with_context(|| format!("writing {}", p.display()))?,
        None => writeln!(out, "{json}")?,
    }
    if !outcome.proceed {
        bail!("session aborted: estimated QBER {:?} above the abort level", outcome.qber());
    }
    Ok(())
}
