//! Line-delimited JSON replay files.
//!
//! One object per line: `{"prompt_id": "...", "responses": [1, 0, ...]}`
//! with an optional `"meta"` object of string values. Blank lines are
//! skipped.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use selfconsist_core::estimator::{ResponseCounts, Tally};
use selfconsist_core::simulator::TrialOutcome;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayRecord {
    pub prompt_id: String,
    pub responses: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<BTreeMap<String, String>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("cannot read replay: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: record `{prompt_id}` has no responses")]
    Empty { line: usize, prompt_id: String },
    #[error("line {line}: record `{prompt_id}` has label {label}, but only {classes} classes are declared")]
    Label { line: usize, prompt_id: String, label: u32, classes: u32 },
    #[error("declared class count must be at least 2 (got {0})")]
    Classes(u32),
}

impl ReplayRecord {
    pub fn new(prompt_id: impl Into<String>, responses: Vec<u32>) -> Self {
        Self { prompt_id: prompt_id.into(), responses, meta: None }
    }

    pub fn validate(&self, classes: u32, line: usize) -> Result<(), ReplayError> {
        if self.responses.is_empty() {
            return Err(ReplayError::Empty { line, prompt_id: self.prompt_id.clone() });
        }
        if let Some(&label) = self.responses.iter().find(|&&l| l >= classes) {
            return Err(ReplayError::Label { line, prompt_id: self.prompt_id.clone(), label, classes });
        }
        Ok(())
    }
}

/// Parses and validates every record, in order.
pub fn read_replay(reader: impl BufRead, classes: u32) -> Result<Vec<ReplayRecord>, ReplayError> {
    if classes < 2 {
        return Err(ReplayError::Classes(classes));
    }
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ReplayRecord = serde_json::from_str(&line)
            .map_err(|e| ReplayError::Malformed { line: line_no, message: e.to_string() })?;
        record.validate(classes, line_no)?;
        records.push(record);
    }
    Ok(records)
}

pub fn open_replay(path: &Path, classes: u32) -> Result<Vec<ReplayRecord>, ReplayError> {
    read_replay(BufReader::new(File::open(path)?), classes)
}

pub fn write_replay<'a>(
    mut writer: impl Write,
    records: impl IntoIterator<Item = &'a ReplayRecord>,
) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// `k` = number of `1` labels for two classes, otherwise a per-class tally.
pub fn counts_from_record(record: &ReplayRecord, classes: u32) -> ResponseCounts {
    let n = record.responses.len() as u64;
    if classes == 2 {
        let k = record.responses.iter().filter(|&&l| l == 1).count() as u64;
        ResponseCounts::binary(record.prompt_id.clone(), k, n).expect("validated record")
    } else {
        let mut tally = vec![0u64; classes as usize];
        for &l in &record.responses {
            tally[l as usize] += 1;
        }
        ResponseCounts::multiclass(record.prompt_id.clone(), tally).expect("validated record")
    }
}

/// Replay records reproducing a simulated trial's counts, one per sampled
/// prompt, labels in ascending order.
pub fn records_from_trial(outcome: &TrialOutcome) -> Vec<ReplayRecord> {
    outcome
        .counts
        .iter()
        .map(|c| {
            let responses = match c.tally() {
                Tally::Binary { n, k } => {
                    let mut v = vec![0u32; (n - k) as usize];
                    v.resize(*n as usize, 1);
                    v
                }
                Tally::Multiclass { counts } => counts
                    .iter()
                    .enumerate()
                    .flat_map(|(label, &cnt)| std::iter::repeat(label as u32).take(cnt as usize))
                    .collect(),
            };
            ReplayRecord::new(c.prompt_id(), responses)
        })
        .collect()
}
