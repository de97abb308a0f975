use std::fmt::Write as _;
use std::io::Write;

use selfconsist_core::planner::{exhaustive_plan, rounded_plan};
use selfconsist_core::simulator::{check_splits, Experiment, ExperimentReport};
use serde::Serialize;
use serde_json::json;

use super::simulate::resolved;
use super::{emit, seed_from_env, threads, OutDir};
use crate::args::SweepArgs;
use crate::config::ConfigFile;
use crate::manifest::RunManifest;
use crate::parallel;
use crate::report::{to_json, OutputFormat};
use crate::{CliError, EXIT_FINDING, EXIT_OK};

/// One split of the sweep table. CSV columns follow field order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub m: u64,
    pub n: u64,
    pub calls: u64,
    pub term_prompt: f64,
    pub term_bias: f64,
    pub term_cross: f64,
    pub bound_total: f64,
    pub empirical_mse: f64,
    pub mse_std_err: f64,
    pub bound_applies: bool,
    pub bound_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepDocument {
    pub budget: u64,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
    pub reports: Vec<ExperimentReport>,
}

/// `auto` gives `(1, B)`, the rounded plan, the exhaustive plan and
/// `(B, 1)`; otherwise a comma-separated `MxN` list, in the given order.
pub fn parse_splits(spec: &str, budget: u64, require_even_n: bool) -> Result<Vec<(String, u64, u64)>, CliError> {
    if spec.trim() == "auto" {
        let rounded = rounded_plan(budget, require_even_n)?;
        let best = exhaustive_plan(budget, require_even_n)?;
        return Ok(vec![
            ("single-prompt".into(), 1, budget),
            ("rounded".into(), rounded.m, rounded.n),
            ("planner".into(), best.m, best.n),
            ("single-call".into(), budget, 1),
        ]);
    }
    spec.split(',')
        .map(|item| {
            let item = item.trim();
            let parsed = item
                .split_once(['x', 'X'])
                .and_then(|(m, n)| Some((m.trim().parse().ok()?, n.trim().parse().ok()?)));
            match parsed {
                Some((m, n)) => Ok((item.to_owned(), m, n)),
                None => Err(CliError::Usage(format!("split `{item}` is not of the form MxN"))),
            }
        })
        .collect()
}

pub fn sweep(args: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let file = ConfigFile::load(&args.config)?;
    let splits = parse_splits(&args.splits, args.budget, !args.allow_odd_n)?;
    let pairs: Vec<(u64, u64)> = splits.iter().map(|&(_, m, n)| (m, n)).collect();
    check_splits(args.budget, &pairs)?;
    let seed = seed_from_env(args.seed, file.seed, err)?;
    let base = file.experiment(seed, Some(pairs[0]))?;
    let pool = parallel::thread_pool(threads(args.threads));

    let mut rows = Vec::with_capacity(splits.len());
    let mut reports = Vec::with_capacity(splits.len());
    for (label, m, n) in &splits {
        let config = base.with_split(*m, *n);
        let experiment = Experiment::prepare(&config)?;
        let report = experiment.report(&parallel::run_summaries(&pool, &experiment));
        rows.push(SweepRow {
            label: label.clone(),
            m: *m,
            n: *n,
            calls: m * n,
            term_prompt: report.bound.term_prompt,
            term_bias: report.bound.term_bias,
            term_cross: report.bound.term_cross,
            bound_total: report.bound.total,
            empirical_mse: report.empirical_mse,
            mse_std_err: report.mse_std_err,
            bound_applies: report.bound_applies,
            bound_satisfied: report.bound_satisfied,
        });
        reports.push(report);
    }
    let document = SweepDocument { budget: args.budget, seed, rows, reports };

    match args.format {
        OutputFormat::Json => emit(out, &to_json(&document))?,
        OutputFormat::Text => emit(out, &render(&document))?,
    }
    if let Some(dir) = &args.out_dir {
        let mut dir = OutDir::create(dir)?;
        dir.json("sweep.json", &document)?;
        dir.csv("sweep.csv", &document.rows)?;
        let resolved = json!({
            "budget": args.budget,
            "splits": pairs,
            "labels": splits.iter().map(|s| s.0.clone()).collect::<Vec<_>>(),
            "experiment": resolved(&base),
        });
        dir.finish(RunManifest::new("sweep", resolved, Some(seed)))?;
    }

    let violated: Vec<&SweepRow> = document.rows.iter().filter(|r| r.bound_applies && !r.bound_satisfied).collect();
    for row in &violated {
        let _ = writeln!(err, "bound violated at m = {}, n = {}", row.m, row.n);
    }
    Ok(if violated.is_empty() { EXIT_OK } else { EXIT_FINDING })
}

fn render(doc: &SweepDocument) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "budget {}, seed {}", doc.budget, doc.seed);
    let _ = writeln!(
        s,
        "{:<14} {:>7} {:>7} {:>7} {:>11} {:>12} {:>10}  check",
        "split", "m", "n", "calls", "bound", "MSE", "SE"
    );
    for r in &doc.rows {
        let check = match (r.bound_applies, r.bound_satisfied) {
            (true, true) => "holds",
            (true, false) => "VIOLATED",
            (false, _) => "n/a",
        };
        let _ = writeln!(
            s,
            "{:<14} {:>7} {:>7} {:>7} {:>11.5e} {:>12.5e} {:>10.2e}  {check}",
            r.label, r.m, r.n, r.calls, r.bound_total, r.empirical_mse, r.mse_std_err
        );
    }
    s
}
