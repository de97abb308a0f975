use std::fmt::Write as _;
use std::io::Write;

use selfconsist_core::verify::{run_battery, VerifyReport};
use serde_json::json;

use super::{emit, OutDir};
use crate::args::VerifyArgs;
use crate::manifest::RunManifest;
use crate::report::{to_json, OutputFormat};
use crate::{CliError, EXIT_FINDING, EXIT_OK};

pub fn verify(args: &VerifyArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<u8, CliError> {
    let report = run_battery(args.max_n, args.grid)?;
    match args.format {
        OutputFormat::Json => emit(out, &to_json(&report))?,
        OutputFormat::Text => emit(out, &render(&report))?,
    }
    if let Some(dir) = &args.out_dir {
        let mut dir = OutDir::create(dir)?;
        dir.json("verify.json", &report)?;
        let resolved = json!({ "max_n": args.max_n, "grid": args.grid });
        dir.finish(RunManifest::new("verify", resolved, None))?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_FINDING })
}

fn render(report: &VerifyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "max n {}, p grid 1/{}", report.max_n, report.grid);
    for c in &report.checks {
        let status = if c.passed() { "ok  " } else { "FAIL" };
        let at = match c.witness_p {
            Some(p) => format!("n = {}, p = {p}", c.witness_n),
            None => format!("n = {}", c.witness_n),
        };
        let _ = writeln!(
            s,
            "{status} {:<24} cases {:>8}  violations {:>4}  worst slack {:+.3e} at {at}",
            c.check.name(),
            c.cases,
            c.violations,
            c.worst_slack + 0.0,
        );
    }
    let e = &report.equality;
    let _ = writeln!(
        s,
        "equality at p = 1/2, n = {}: bias {:.17e} = C(n,n/2)/2^(n+1) {:.17e} (residual {:.1e}, worst over n {:.1e})",
        e.n, e.bias_at_half, e.half_central_ratio, e.residual, e.worst_residual,
    );
    let _ = writeln!(s, "{}", if report.passed() { "all checks passed" } else { "some checks FAILED" });
    s
}
