//! Labels from a child process speaking line-delimited JSON.
//!
//! The child first prints `{"ready": true}`. It then receives requests
//! `{"prompt_id": "...", "draw": 3}` on stdin and answers each with
//! `{"prompt_id": "...", "draw": 3, "label": 1}` on stdout, in any order.
//! Up to `window` requests are in flight at once. A request that gets no
//! answer within `timeout` is re-sent up to `retries` times; after that its
//! prompt is marked failed and dropped from the run.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::replay::ReplayRecord;

#[derive(Debug, Clone)]
pub struct ExternalSourceConfig {
    pub program: String,
    pub args: Vec<String>,
    pub classes: u32,
    pub timeout: Duration,
    pub retries: u32,
    pub window: usize,
    pub ready_timeout: Duration,
}

impl ExternalSourceConfig {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
            classes: 2,
            timeout: Duration::from_secs(30),
            retries: 2,
            window: 8,
            ready_timeout: Duration::from_secs(30),
        }
    }

    /// Splits a whitespace-separated command line into program and arguments.
    pub fn from_command_line(command: &str) -> Option<Self> {
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts.next()?;
        Some(Self::new(program, parts.collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptFailure {
    pub prompt_id: String,
    pub draw: u64,
    pub attempts: u32,
    pub reason: String,
}

/// Complete label sequences for the prompts that succeeded, in request
/// order, plus the prompts that did not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalRun {
    pub records: Vec<ReplayRecord>,
    pub failures: Vec<PromptFailure>,
}

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("cannot start `{program}`: {source}")]
    Spawn { program: String, source: io::Error },
    #[error("external source i/o: {0}")]
    Io(#[from] io::Error),
    #[error("external source never became ready: {0}")]
    NotReady(String),
    #[error("protocol violation: {reason} (line: {line})")]
    Protocol { line: String, reason: String },
    #[error("prompt `{prompt_id}` draw {draw}: label {label} outside the {classes} declared classes")]
    Label { prompt_id: String, draw: u64, label: u32, classes: u32 },
    #[error("external source closed its output with {pending} requests outstanding")]
    Closed { pending: usize },
    #[error("every prompt failed")]
    AllFailed(Vec<PromptFailure>),
    #[error("duplicate prompt id `{0}` in request list")]
    DuplicatePrompt(String),
}

#[derive(Debug, Serialize)]
struct Request<'a> {
    prompt_id: &'a str,
    draw: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Reply {
    prompt_id: String,
    draw: u64,
    label: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Ready {
    ready: bool,
}

struct Pending {
    deadline: Instant,
    attempts: u32,
}

pub struct ExternalSource {
    config: ExternalSourceConfig,
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<io::Result<String>>,
}

impl ExternalSource {
    /// Starts the child and waits for its readiness line.
    pub fn spawn(config: ExternalSourceConfig) -> Result<Self, ExternalError> {
        let mut child = Command::new(&config.program)
            .args(&config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| ExternalError::Spawn { program: config.program.clone(), source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut source = Self { config, child, stdin, lines: rx };
        source.await_ready()?;
        Ok(source)
    }

    fn await_ready(&mut self) -> Result<(), ExternalError> {
        let deadline = Instant::now() + self.config.ready_timeout;
        loop {
            let wait = deadline.saturating_duration_since(Instant::now());
            let line = match self.lines.recv_timeout(wait) {
                Ok(line) => line?,
                Err(RecvTimeoutError::Timeout) => {
                    let waited = self.config.ready_timeout;
                    return Err(ExternalError::NotReady(format!("no readiness line within {waited:?}")));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(ExternalError::NotReady("output closed before readiness line".into()))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            return match serde_json::from_str::<Ready>(&line) {
                Ok(Ready { ready: true }) => Ok(()),
                _ => Err(ExternalError::NotReady(format!("expected {{\"ready\": true}}, got `{line}`"))),
            };
        }
    }

    fn send(&mut self, prompt_id: &str, draw: u64) -> Result<(), ExternalError> {
        serde_json::to_writer(&mut self.stdin, &Request { prompt_id, draw }).map_err(io::Error::from)?;
        self.stdin.write_all(b"\n")?;
        self.stdin.flush()?;
        Ok(())
    }

    /// Requests draws `0..draws` for every prompt and gathers the labels.
    pub fn collect(&mut self, prompt_ids: &[String], draws: u64) -> Result<ExternalRun, ExternalError> {
        let mut index = HashMap::with_capacity(prompt_ids.len());
        for (i, id) in prompt_ids.iter().enumerate() {
            if index.insert(id.as_str(), i).is_some() {
                return Err(ExternalError::DuplicatePrompt(id.clone()));
            }
        }
        let mut labels: Vec<Vec<Option<u32>>> = vec![vec![None; draws as usize]; prompt_ids.len()];
        let mut remaining = vec![draws; prompt_ids.len()];
        let mut failed: Vec<Option<PromptFailure>> = vec![None; prompt_ids.len()];
        let mut queue: VecDeque<(usize, u64)> =
            (0..prompt_ids.len()).flat_map(|i| (0..draws).map(move |d| (i, d))).collect();
        let mut pending: HashMap<(usize, u64), Pending> = HashMap::new();
        let mut sent: HashSet<(usize, u64)> = HashSet::new();
        let window = self.config.window.max(1);

        loop {
            while pending.len() < window {
                let Some((i, d)) = queue.pop_front() else { break };
                if failed[i].is_some() {
                    continue;
                }
                self.send(&prompt_ids[i], d)?;
                sent.insert((i, d));
                pending.insert((i, d), Pending { deadline: Instant::now() + self.config.timeout, attempts: 1 });
            }
            if pending.is_empty() {
                break;
            }
            let next = pending.values().map(|p| p.deadline).min().expect("nonempty");
            match self.lines.recv_timeout(next.saturating_duration_since(Instant::now())) {
                Ok(line) => {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let reply: Reply = serde_json::from_str(&line)
                        .map_err(|e| ExternalError::Protocol { line: line.clone(), reason: e.to_string() })?;
                    let Some(&i) = index.get(reply.prompt_id.as_str()) else {
                        return Err(ExternalError::Protocol { line, reason: "unknown prompt_id".into() });
                    };
                    if !sent.contains(&(i, reply.draw)) {
                        return Err(ExternalError::Protocol { line, reason: "reply to a request never sent".into() });
                    }
                    if reply.label >= self.config.classes {
                        return Err(ExternalError::Label {
                            prompt_id: reply.prompt_id,
                            draw: reply.draw,
                            label: reply.label,
                            classes: self.config.classes,
                        });
                    }
                    // Late answers to retried requests and answers for failed
                    // prompts are dropped.
                    if pending.remove(&(i, reply.draw)).is_some() {
                        labels[i][reply.draw as usize] = Some(reply.label);
                        remaining[i] -= 1;
                    }
                }
                Err(RecvTimeoutError::Timeout) => {
                    let now = Instant::now();
                    let mut expired: Vec<(usize, u64)> =
                        pending.iter().filter(|(_, p)| p.deadline <= now).map(|(&k, _)| k).collect();
                    expired.sort_unstable();
                    for key in expired {
                        let Some(entry) = pending.get_mut(&key) else { continue };
                        if entry.attempts > self.config.retries {
                            let attempts = entry.attempts;
                            let (i, d) = key;
                            failed[i] = Some(PromptFailure {
                                prompt_id: prompt_ids[i].clone(),
                                draw: d,
                                attempts,
                                reason: format!("no reply within {:?}", self.config.timeout),
                            });
                            pending.retain(|&(j, _), _| j != i);
                        } else {
                            entry.attempts += 1;
                            entry.deadline = now + self.config.timeout;
                            self.send(&prompt_ids[key.0], key.1)?;
                        }
                    }
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(ExternalError::Closed { pending: pending.len() });
                }
            }
        }

        let failures: Vec<PromptFailure> = failed.into_iter().flatten().collect();
        if !prompt_ids.is_empty() && failures.len() == prompt_ids.len() {
            return Err(ExternalError::AllFailed(failures));
        }
        let records = prompt_ids
            .iter()
            .zip(labels)
            .zip(&remaining)
            .filter(|(_, &left)| left == 0)
            .map(|((id, labels), _)| ReplayRecord::new(id.clone(), labels.into_iter().map(|l| l.expect("complete")).collect()))
            .collect();
        Ok(ExternalRun { records, failures })
    }
}

impl Drop for ExternalSource {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
