use std::fmt::Write as _;
use std::io::Write;

use selfconsist_core::simulator::{CorrelationKind, Experiment, ExperimentConfig, ExperimentReport};
use serde::Serialize;

use super::{emit, seed_from_env, threads, OutDir};
use crate::args::SimulateArgs;
use crate::config::ConfigFile;
use crate::manifest::RunManifest;
use crate::parallel;
use crate::report::{to_json, OutputFormat};
use crate::sources::{records_from_trial, write_replay};
use crate::{CliError, EXIT_FINDING, EXIT_OK};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateDocument {
    pub report: ExperimentReport,
    pub notes: Vec<String>,
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let file = ConfigFile::load(&args.config)?;
    let seed = seed_from_env(args.seed, file.seed, err)?;
    let config = file.experiment(seed, None)?;
    let experiment = Experiment::prepare(&config)?;
    let pool = parallel::thread_pool(threads(args.threads));
    let trials = parallel::run_summaries(&pool, &experiment);
    let report = experiment.report(&trials);
    let document = SimulateDocument { notes: notes(&config, &report), report };

    match args.format {
        OutputFormat::Json => emit(out, &to_json(&document))?,
        OutputFormat::Text => emit(out, &render(&document))?,
    }
    if let Some(path) = &args.replay_out {
        let records = records_from_trial(&experiment.trial(args.replay_replicate));
        std::fs::File::create(path)
            .and_then(|f| write_replay(std::io::BufWriter::new(f), &records))
            .map_err(|source| CliError::Output { path: path.clone(), source })?;
    }
    if let Some(dir) = &args.out_dir {
        let mut dir = OutDir::create(dir)?;
        dir.json("report.json", &document)?;
        dir.csv("trials.csv", &trials)?;
        let mut manifest = RunManifest::new("simulate", resolved(&config), Some(seed));
        manifest.notes = document.notes.clone();
        dir.finish(manifest)?;
    }

    let report = &document.report;
    if report.bound_applies && !report.bound_satisfied {
        let _ = writeln!(
            err,
            "bound violated: empirical MSE {:.6e} > {:.6e} + 3 x {:.2e}",
            report.empirical_mse, report.bound.total, report.mse_std_err
        );
        return Ok(EXIT_FINDING);
    }
    Ok(EXIT_OK)
}

pub(crate) fn resolved(config: &ExperimentConfig) -> serde_json::Value {
    serde_json::to_value(config).expect("configs always serialize")
}

pub(crate) fn notes(config: &ExperimentConfig, report: &ExperimentReport) -> Vec<String> {
    let mut notes = Vec::new();
    if report.correlation_model == CorrelationKind::BetaBinomial {
        notes.push(format!(
            "calls to the same prompt are correlated: exchangeable beta-binomial model with pairwise correlation {}; \
             the bound is reported for reference and not enforced",
            report.rho
        ));
    }
    if !config.domain.is_binary() {
        notes.push("multiclass domain: no analytic bound is claimed; the bound is reported for reference".into());
    }
    if report.n % 2 == 1 {
        notes.push("odd n: the bound is only claimed for even n; reported for reference".into());
    }
    if report.std_err_degenerate {
        notes.push("a single replicate has no standard error; reported as 0".into());
    }
    notes
}

fn render(doc: &SimulateDocument) -> String {
    let r = &doc.report;
    let mut s = String::new();
    let _ = writeln!(s, "m = {}, n = {}, replicates = {}, rho = {}, seed = {}", r.m, r.n, r.replicates, r.rho, r.seed);
    let _ = writeln!(s, "domain error       {:.6}", r.true_error);
    let _ = writeln!(s, "mean estimate      {:.6} (bias {:+.3e})", r.mean_estimate, r.bias_of_estimate);
    let _ = writeln!(s, "empirical MSE      {:.6e} +/- {:.2e}", r.empirical_mse, r.mse_std_err);
    let _ = writeln!(
        s,
        "MSE bound          {:.6e} = {:.4e} + {:.4e} + {:.4e}",
        r.bound.total, r.bound.term_prompt, r.bound.term_bias, r.bound.term_cross
    );
    let verdict = match (r.bound_applies, r.bound_satisfied) {
        (true, true) => "holds",
        (true, false) => "VIOLATED",
        (false, true) => "holds (not claimed for this run)",
        (false, false) => "exceeded (not claimed for this run)",
    };
    let _ = writeln!(s, "bound check        {verdict}");
    let q = &r.deviation_quantiles;
    let _ = writeln!(s, "|E - Ê| quantiles  50%: {:.4}  90%: {:.4}  99%: {:.4}", q.q50, q.q90, q.q99);
    for note in &doc.notes {
        let _ = writeln!(s, "note: {note}");
    }
    s
}
