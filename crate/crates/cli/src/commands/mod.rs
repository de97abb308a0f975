//! Subcommand implementations.
//!
//! Each command writes its primary output to `out`, diagnostics (seed,
//! warnings, errors) to `err`, and returns the process exit code.

mod estimate;
mod plan;
mod simulate;
mod sweep;
mod verify;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::args::{Cli, Command};
use crate::manifest::RunManifest;
use crate::{report, CliError};

pub use estimate::{estimate, parse_subsample, EstimateDocument, PromptRow, Subsample, SubsampleSpec};
pub use plan::{plan, PlanDocument};
pub use simulate::{simulate, SimulateDocument};
pub use sweep::{parse_splits, sweep, SweepDocument, SweepRow};
pub use verify::verify;

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = match cli.command {
        Command::Plan(args) => plan(&args, out, err),
        Command::Simulate(args) => simulate(&args, out, err),
        Command::Verify(args) => verify(&args, out, err),
        Command::Estimate(args) => estimate(&args, out, err),
        Command::Sweep(args) => sweep(&args, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedOrigin {
    Flag,
    Config,
    Environment,
    Generated,
}

impl fmt::Display for SeedOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Flag => "from --seed",
            Self::Config => "from config",
            Self::Environment => "from SELFCONSIST_SEED",
            Self::Generated => "generated",
        })
    }
}

/// Flag, then config file, then environment, then a fresh random seed.
pub fn resolve_seed(
    flag: Option<u64>,
    config: Option<u64>,
    env: Option<&str>,
) -> Result<(u64, SeedOrigin), CliError> {
    if let Some(seed) = flag {
        return Ok((seed, SeedOrigin::Flag));
    }
    if let Some(seed) = config {
        return Ok((seed, SeedOrigin::Config));
    }
    if let Some(text) = env.filter(|t| !t.trim().is_empty()) {
        let seed = text
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{} must be an unsigned integer, got `{text}`", crate::SEED_ENV)))?;
        return Ok((seed, SeedOrigin::Environment));
    }
    Ok((rand::random(), SeedOrigin::Generated))
}

pub(crate) fn seed_from_env(flag: Option<u64>, config: Option<u64>, err: &mut dyn Write) -> Result<u64, CliError> {
    let env = std::env::var(crate::SEED_ENV).ok();
    let (seed, origin) = resolve_seed(flag, config, env.as_deref())?;
    let _ = writeln!(err, "seed: {seed} ({origin})");
    Ok(seed)
}

pub(crate) struct OutDir<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> OutDir<'a> {
    pub fn create(dir: &'a Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.to_owned(), source })?;
        Ok(Self { dir, written: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_owned());
        self.dir.join(name)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.path(name);
        report::write_json(&path, value).map_err(|source| CliError::Output { path, source })
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let path = self.path(name);
        report::write_csv(&path, rows).map_err(|source| CliError::Output { path, source })
    }

    /// Writes `manifest.json` listing everything written so far.
    pub fn finish(mut self, mut manifest: RunManifest) -> Result<(), CliError> {
        manifest.outputs = std::mem::take(&mut self.written);
        self.json("manifest.json", &manifest)
    }
}

pub(crate) fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    report::write_text(out, text).map_err(|source| CliError::Output { path: PathBuf::from("<stdout>"), source })
}

pub(crate) fn threads(flag: Option<u64>) -> Option<usize> {
    flag.map(|t| t as usize)
}
