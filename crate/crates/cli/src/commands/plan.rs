use std::fmt::Write as _;
use std::io::Write;

use selfconsist_core::planner::{self, BudgetPlan, PlanMethod};
use serde_json::json;

use super::{emit, OutDir};
use crate::args::PlanArgs;
use crate::manifest::RunManifest;
use crate::report::{to_json, OutputFormat};
use crate::{CliError, EXIT_OK};

pub type PlanDocument = BudgetPlan;

pub fn plan(args: &PlanArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<u8, CliError> {
    let method: PlanMethod = args.method.into();
    let plan = planner::plan(args.budget, !args.allow_odd_n, method)?;
    match args.format {
        OutputFormat::Json => emit(out, &to_json(&plan))?,
        OutputFormat::Text => emit(out, &render(&plan))?,
    }
    if let Some(dir) = &args.out_dir {
        let mut dir = OutDir::create(dir)?;
        dir.json("plan.json", &plan)?;
        let resolved = json!({ "budget": args.budget, "method": method, "require_even_n": !args.allow_odd_n });
        dir.finish(RunManifest::new("plan", resolved, None))?;
    }
    Ok(EXIT_OK)
}

fn render(plan: &BudgetPlan) -> String {
    let method = match plan.method {
        PlanMethod::Exhaustive => "exhaustive",
        PlanMethod::Rounded => "rounded",
    };
    let parity = if plan.require_even_n { "even n" } else { "any n" };
    let b = &plan.bound;
    let mut s = String::new();
    let _ = writeln!(s, "budget             {}", plan.budget);
    let _ = writeln!(s, "continuous split   m* = {:.4}, n* = {:.4}", plan.m_star, plan.n_star);
    let _ = writeln!(s, "integer split      m = {}, n = {} ({method}, {parity})", plan.m, plan.n);
    let _ = writeln!(s, "calls used         {}", plan.calls_used);
    let _ = writeln!(s, "MSE bound          {:.7}", b.total);
    let _ = writeln!(s, "  1/(8m)           {:.7}", b.term_prompt);
    let _ = writeln!(s, "  1/(pi n)         {:.7}", b.term_bias);
    let _ = writeln!(s, "  1/(2nm)          {:.7}", b.term_cross);
    s
}
