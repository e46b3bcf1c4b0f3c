use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

use super::{Command, Outcome, System, DEFAULT_SEED};

pub const STATE_DIR_ENV: &str = "OCCAM_STATE_DIR";
pub const SEED_ENV: &str = "OCCAM_SEED";
pub const DEFAULT_STATE_DIR: &str = "./state";
pub const LOG_FILE: &str = "events.jsonl";

/// A system persisted as `events.jsonl` in a state directory. Opening the
/// store replays the log; every successful command rewrites it.
#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    system: System,
}

impl Store {
    /// Opens `dir`, replaying its log if there is one and otherwise starting
    /// an empty system with `seed`.
    pub fn open(dir: impl Into<PathBuf>, seed: u64) -> Result<Self> {
        let dir = dir.into();
        let path = dir.join(LOG_FILE);
        let system = if path.exists() {
            System::replay_text(&fs::read_to_string(&path)?)?
        } else {
            System::new(seed)
        };
        Ok(Self { dir, system })
    }

    /// Opens the store named by the environment.
    pub fn from_env() -> Result<Self> {
        let dir = std::env::var(STATE_DIR_ENV).unwrap_or_else(|_| DEFAULT_STATE_DIR.into());
        Self::open(dir, seed_from_env())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn execute(&mut self, command: Command) -> Result<Outcome> {
        let len = self.system.log().len();
        let result = self.system.execute(command);
        if self.system.log().len() != len {
            self.save()?;
        }
        result
    }

    pub fn save(&self) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!("{LOG_FILE}.tmp"));
        fs::write(&tmp, self.system.log().to_jsonl())?;
        fs::rename(tmp, self.dir.join(LOG_FILE))?;
        Ok(())
    }
}

/// `OCCAM_SEED`, or the default when unset or unparsable.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}
