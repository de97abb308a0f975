use std::fmt::Write as _;
use std::io::{Cursor, Write};
use std::path::Path;
use std::time::Duration;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use selfconsist_core::estimator::{domain_estimate, per_prompt_estimate};
use selfconsist_core::planner::BoundBreakdown;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{emit, seed_from_env, OutDir};
use crate::args::EstimateArgs;
use crate::manifest::RunManifest;
use crate::report::{to_json, OutputFormat};
use crate::sources::{
    counts_from_record, read_replay, ExternalError, ExternalSource, ExternalSourceConfig, PromptFailure,
    ReplayRecord,
};
use crate::{CliError, EXIT_OK};

pub const BOUND_LABEL: &str =
    "upper bound on the estimator's mean squared error at this (m, n); not a confidence interval";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SubsampleSpec {
    pub m: Option<usize>,
    pub n: Option<usize>,
}

/// Parses `m=K` / `n=K` items.
pub fn parse_subsample(items: &[String]) -> Result<SubsampleSpec, CliError> {
    let mut spec = SubsampleSpec::default();
    for item in items {
        let bad = || CliError::Usage(format!("--subsample item `{item}` must be m=K or n=K with K ≥ 1"));
        let (key, value) = item.split_once('=').ok_or_else(bad)?;
        let value: usize = value.trim().parse().map_err(|_| bad())?;
        if value == 0 {
            return Err(bad());
        }
        match key.trim() {
            "m" if spec.m.is_none() => spec.m = Some(value),
            "n" if spec.n.is_none() => spec.n = Some(value),
            _ => return Err(bad()),
        }
    }
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subsample {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub seed: u64,
    /// Kept prompt ids, in source order.
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptRow {
    pub prompt_id: String,
    pub n: u64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateDocument {
    pub source: String,
    pub classes: u32,
    pub m: usize,
    pub common_n: Option<u64>,
    pub estimate: f64,
    pub per_prompt: Vec<PromptRow>,
    pub bound: Option<BoundBreakdown>,
    pub bound_label: Option<String>,
    pub warnings: Vec<String>,
    pub failures: Vec<PromptFailure>,
    pub subsample: Option<Subsample>,
}

/// Keeps `m` records and `n` responses per record, chosen without
/// replacement and kept in their original order.
pub fn apply_subsample(
    records: Vec<ReplayRecord>,
    spec: SubsampleSpec,
    seed: u64,
) -> Result<(Vec<ReplayRecord>, Subsample), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = match spec.m {
        Some(m) if m > records.len() => {
            return Err(CliError::Usage(format!("cannot keep m = {m} of {} prompts", records.len())))
        }
        Some(m) => {
            let mut keep = index::sample(&mut rng, records.len(), m).into_vec();
            keep.sort_unstable();
            let mut slots: Vec<Option<ReplayRecord>> = records.into_iter().map(Some).collect();
            keep.into_iter().map(|i| slots[i].take().expect("distinct indices")).collect()
        }
        None => records,
    };
    if let Some(n) = spec.n {
        for record in &mut records {
            if record.responses.len() < n {
                return Err(CliError::Usage(format!(
                    "cannot keep n = {n} responses of prompt `{}`, which has {}",
                    record.prompt_id,
                    record.responses.len()
                )));
            }
            let mut keep = index::sample(&mut rng, record.responses.len(), n).into_vec();
            keep.sort_unstable();
            record.responses = keep.into_iter().map(|i| record.responses[i]).collect();
        }
    }
    let selected = records.iter().map(|r| r.prompt_id.clone()).collect();
    Ok((records, Subsample { m: spec.m, n: spec.n, seed, selected }))
}

struct Gathered {
    kind: &'static str,
    records: Vec<ReplayRecord>,
    failures: Vec<PromptFailure>,
    resolved: serde_json::Value,
}

fn from_replay(path: &Path, classes: u32) -> Result<Gathered, CliError> {
    let replay_err = |source| CliError::Replay { path: path.to_owned(), source };
    let bytes = std::fs::read(path).map_err(|e| replay_err(e.into()))?;
    let records = read_replay(Cursor::new(&bytes), classes).map_err(replay_err)?;
    let resolved = json!({ "replay_sha256": hex::encode(Sha256::digest(&bytes)) });
    Ok(Gathered { kind: "replay", records, failures: Vec::new(), resolved })
}

fn from_external(args: &EstimateArgs, command: &str, err: &mut dyn Write) -> Result<Gathered, CliError> {
    let mut config = ExternalSourceConfig::from_command_line(command)
        .ok_or_else(|| CliError::Usage("--external needs a command".into()))?;
    config.classes = args.classes;
    config.timeout = Duration::from_millis(args.timeout_ms);
    config.ready_timeout = config.timeout.max(Duration::from_secs(10));
    config.retries = args.retries;
    config.window = args.window as usize;
    let mut prompts = args.prompts.clone();
    if let Some(path) = &args.prompts_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        prompts.extend(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned));
    }
    if prompts.is_empty() {
        return Err(CliError::Usage("--external needs --prompts or --prompts-file".into()));
    }
    let draws = args.draws.expect("clap requires --draws with --external");
    let resolved = json!({
        "external": command,
        "prompts": prompts,
        "draws": draws,
        "timeout_ms": args.timeout_ms,
        "retries": args.retries,
        "window": args.window,
    });
    let mut source = ExternalSource::spawn(config)?;
    match source.collect(&prompts, draws) {
        Ok(run) => Ok(Gathered { kind: "external", records: run.records, failures: run.failures, resolved }),
        Err(ExternalError::AllFailed(failures)) => {
            for f in &failures {
                let _ = writeln!(
                    err,
                    "failed: prompt `{}` (draw {}, {} attempts): {}",
                    f.prompt_id, f.draw, f.attempts, f.reason
                );
            }
            Err(ExternalError::AllFailed(failures).into())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn estimate(args: &EstimateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let spec = parse_subsample(&args.subsample)?;
    let gathered = match (&args.replay, &args.external) {
        (Some(path), None) => from_replay(path, args.classes)?,
        (None, Some(command)) => from_external(args, command, err)?,
        _ => return Err(CliError::Usage("give exactly one of --replay or --external".into())),
    };
    if gathered.records.is_empty() {
        return Err(CliError::Source(format!("the {} source produced no records", gathered.kind)));
    }

    let mut warnings = Vec::new();
    let (records, subsample) = if spec.m.is_some() || spec.n.is_some() {
        let seed = seed_from_env(args.seed, None, err)?;
        let (records, sub) = apply_subsample(gathered.records, spec, seed)?;
        (records, Some(sub))
    } else {
        (gathered.records, None)
    };
    let counts: Vec<_> = records.iter().map(|r| counts_from_record(r, args.classes)).collect();
    let est = domain_estimate(&counts)?;

    if !gathered.failures.is_empty() {
        warnings.push(format!(
            "{} prompt(s) failed and were excluded; m is the number of prompts that succeeded",
            gathered.failures.len()
        ));
    }
    let bound = match est.common_n {
        None => {
            warnings.push("n varies across prompts: the estimate averages per-prompt estimates and no bound is reported".into());
            None
        }
        Some(_) if args.classes > 2 => {
            warnings.push("more than two classes: no analytic bound is reported".into());
            None
        }
        Some(n) if n % 2 == 1 => {
            warnings.push(format!("odd n = {n}: the bound is only stated for even n and is not reported"));
            None
        }
        Some(n) => Some(BoundBreakdown::new(est.m() as u64, n)?),
    };

    let per_prompt = counts
        .iter()
        .map(|c| PromptRow { prompt_id: c.prompt_id().to_owned(), n: c.n(), estimate: per_prompt_estimate(c) })
        .collect();
    let document = EstimateDocument {
        source: gathered.kind.to_owned(),
        classes: args.classes,
        m: est.m(),
        common_n: est.common_n,
        estimate: est.value,
        per_prompt,
        bound_label: bound.map(|_| BOUND_LABEL.to_owned()),
        bound,
        warnings,
        failures: gathered.failures,
        subsample,
    };

    for w in &document.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    match args.format {
        OutputFormat::Json => emit(out, &to_json(&document))?,
        OutputFormat::Text => emit(out, &render(&document))?,
    }
    if let Some(dir) = &args.out_dir {
        let mut dir = OutDir::create(dir)?;
        dir.json("estimate.json", &document)?;
        dir.csv("per_prompt.csv", &document.per_prompt)?;
        let mut resolved = gathered.resolved;
        resolved["classes"] = json!(args.classes);
        resolved["subsample"] = json!(spec);
        let seed = document.subsample.as_ref().map(|s| s.seed);
        resolved["seed"] = json!(seed);
        let mut manifest = RunManifest::new("estimate", resolved, seed);
        if let Some(path) = &args.replay {
            manifest.notes.push(format!("replay file {}", path.display()));
        }
        if let Some(sub) = &document.subsample {
            let show = |v: Option<usize>| v.map_or_else(|| "all".to_owned(), |v| v.to_string());
            manifest.notes.push(format!(
                "subsample m = {}, n = {} with seed {}; kept prompts: {}",
                show(sub.m),
                show(sub.n),
                sub.seed,
                sub.selected.join(",")
            ));
        }
        dir.finish(manifest)?;
    }
    Ok(EXIT_OK)
}

fn render(doc: &EstimateDocument) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "source        {} ({} classes)", doc.source, doc.classes);
    let _ = writeln!(s, "estimate      {:.6}", doc.estimate);
    let _ = writeln!(s, "prompts m     {}", doc.m);
    match doc.common_n {
        Some(n) => {
            let _ = writeln!(s, "calls n       {n}");
        }
        None => {
            let _ = writeln!(s, "calls n       varies");
        }
    }
    let width = doc.per_prompt.iter().map(|r| r.prompt_id.len()).max().unwrap_or(0);
    for r in &doc.per_prompt {
        let _ = writeln!(s, "  {:<width$}  n = {:<6} {:.6}", r.prompt_id, r.n, r.estimate);
    }
    if let Some(b) = &doc.bound {
        let _ = writeln!(s, "MSE bound     {:.6e} at m = {}, n = {}", b.total, b.m, b.n);
        let _ = writeln!(s, "              ({BOUND_LABEL})");
    }
    for f in &doc.failures {
        let _ = writeln!(s, "excluded      {} (draw {}: {})", f.prompt_id, f.draw, f.reason);
    }
    s
}
