//! Test double for the external label protocol.
//!
//! Prints `{"ready": true}`, then answers each request line according to
//! `--mode`.

use std::io::{self, BufRead, Write};
use std::thread;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Always `--label`.
    Constant,
    /// `1` with probability `--p`, a fixed function of seed, prompt and draw.
    Bernoulli,
    /// Never answers.
    Silent,
    /// Answers with a line that is not JSON.
    Garbage,
    /// Answers a draw that was never requested.
    Unsolicited,
    /// Exits after the first request.
    Exit,
    /// Never prints the readiness line.
    NoReady,
    /// Answers `label` only for prompts listed in `--answer`.
    Partial,
}

#[derive(Debug, Parser)]
struct Args {
    #[arg(long, value_enum, default_value_t = Mode::Constant)]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    label: u32,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    delay_ms: u64,
    /// Ignore this many requests before answering.
    #[arg(long, default_value_t = 0)]
    drop_first: u64,
    #[arg(long, value_delimiter = ',')]
    answer: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct Request {
    prompt_id: String,
    draw: u64,
}

/// Uniform in `[0, 1)` from the first 8 bytes of a SHA-256 digest.
fn uniform(seed: u64, prompt_id: &str, draw: u64) -> f64 {
    let digest = Sha256::digest(format!("{seed}:{prompt_id}:{draw}").as_bytes());
    let bits = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

fn main() -> io::Result<()> {
    let args = Args::parse();
    let mut out = io::stdout().lock();
    if args.mode == Mode::NoReady {
        thread::sleep(Duration::from_secs(3600));
        return Ok(());
    }
    writeln!(out, "{}", json!({ "ready": true }))?;
    out.flush()?;
    let mut seen = 0u64;
    for line in io::stdin().lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = serde_json::from_str(&line).map_err(io::Error::other)?;
        seen += 1;
        if seen <= args.drop_first {
            continue;
        }
        if args.delay_ms > 0 {
            thread::sleep(Duration::from_millis(args.delay_ms));
        }
        let label = match args.mode {
            Mode::Constant => args.label,
            Mode::Bernoulli => u32::from(uniform(args.seed, &request.prompt_id, request.draw) < args.p),
            Mode::Silent => continue,
            Mode::Garbage => {
                writeln!(out, "not json")?;
                out.flush()?;
                continue;
            }
            Mode::Unsolicited => {
                writeln!(out, "{}", json!({ "prompt_id": request.prompt_id, "draw": request.draw + 1_000_000, "label": 0 }))?;
                out.flush()?;
                continue;
            }
            Mode::Exit => return Ok(()),
            Mode::Partial if args.answer.contains(&request.prompt_id) => args.label,
            Mode::Partial => continue,
            Mode::NoReady => unreachable!(),
        };
        writeln!(out, "{}", json!({ "prompt_id": request.prompt_id, "draw": request.draw, "label": label }))?;
        out.flush()?;
    }
    Ok(())
}
