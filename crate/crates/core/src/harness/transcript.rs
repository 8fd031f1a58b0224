//! Per-party transcript files consumed by the network sifting commands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::protocol::{AliceRound, BobRound};
use crate::wire::Party;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", content = "rounds", rename_all = "snake_case")]
pub enum TranscriptRounds {
    Alice(Vec<AliceRound>),
    Bob(Vec<BobRound>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub session_id: u64,
    #[serde(flatten)]
    pub rounds: TranscriptRounds,
}

impl Transcript {
    pub fn party(&self) -> Party<'_> {
        match &self.rounds {
            TranscriptRounds::Alice(r) => Party::Alice(r),
            TranscriptRounds::Bob(r) => Party::Bob(r),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let file = File::open(path).map_err(|e| anyhow::anyhow!("opening {}: {e}", path.display()))?;
        let t: Transcript = serde_json::from_reader(BufReader::new(file))?;
        if let TranscriptRounds::Bob(rounds) = &t.rounds {
            for r in rounds {
                r.validate()?;
            }
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}
