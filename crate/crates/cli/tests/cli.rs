mod common;

use common::{code, configs, run, stderr, stdout, write};
use serde_json::Value;

fn json(out: &std::process::Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

#[test]
fn plan_budget_100() {
    let out = run(&["plan", "--budget", "100", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!((v["m"].as_u64(), v["n"].as_u64()), (Some(7), Some(14)));
    assert!((v["bound"]["total"].as_f64().unwrap() - 0.0456956).abs() < 5e-8);

    let out = run(&["plan", "--budget", "100", "--method", "rounded", "--format", "json"]);
    let v = json(&out);
    assert_eq!((v["m"].as_u64(), v["n"].as_u64()), (Some(6), Some(16)));

    let text = stdout(&run(&["plan", "--budget", "100"]));
    assert!(text.contains("m = 7, n = 14"), "{text}");
    assert!(text.contains("6.2666") && text.contains("15.9577"), "{text}");
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&["plan", "--budget", "0"])), 1);
    assert_eq!(code(&run(&["plan"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["verify", "--max-n", "1"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn verify_passes_and_reports_equality() {
    let out = run(&["verify", "--max-n", "256", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    for check in v["checks"].as_array().unwrap() {
        assert_eq!(check["violations"].as_u64(), Some(0), "{check}");
    }
    let eq = &v["equality"];
    assert!(eq["worst_residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(eq["n"].as_u64(), Some(256));
    assert_eq!(code(&run(&["verify", "--max-n", "2"])), 0);
}

#[test]
fn simulate_fair_coin_near_one_eighth() {
    let out = run(&["simulate", "--config", &cfg("fair_coin.json"), "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("seed: 20240601 (from config)"));
    let r = &json(&out)["report"];
    let mse = r["empirical_mse"].as_f64().unwrap();
    let se = r["mse_std_err"].as_f64().unwrap();
    assert!((mse - 0.125).abs() <= 3.0 * se, "{mse} ± {se}");
    assert_eq!(r["bound_satisfied"], Value::Bool(true));
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (i, threads) in ["1", "2", "4", "4"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let out = run(&[
            "simulate", "--config", &cfg("beta_domain.json"), "--seed", "123", "--threads", threads,
            "--out-dir", out_dir.to_str().unwrap(), "--format", "json",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let file = std::fs::read(out_dir.join("report.json")).unwrap();
        assert_eq!(file, out.stdout);
        let manifest: Value = serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
        reports.push((file, std::fs::read(out_dir.join("trials.csv")).unwrap(), manifest["config_digest"].clone()));
    }
    for r in &reports[1..] {
        assert_eq!(r, &reports[0]);
    }
    let other = run(&["simulate", "--config", &cfg("beta_domain.json"), "--seed", "124", "--format", "json"]);
    assert_ne!(other.stdout, reports[0].0);
}

#[test]
fn seed_precedence_and_reporting() {
    let out = common::bin()
        .args(["simulate", "--config", &cfg("fair_coin.json"), "--format", "json"])
        .env("SELFCONSIST_SEED", "5")
        .output()
        .unwrap();
    assert!(stderr(&out).contains("seed: 20240601 (from config)"));

    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", r#"{"domain":{"prompts":[{"id":"a","p":0.2}]},"m":2,"n":2,"replicates":50}"#);
    let p = path.to_str().unwrap();
    let env_out = common::bin()
        .args(["simulate", "--config", p, "--format", "json"])
        .env("SELFCONSIST_SEED", "5")
        .output()
        .unwrap();
    assert!(stderr(&env_out).contains("seed: 5 (from SELFCONSIST_SEED)"));
    let flag_out = run(&["simulate", "--config", p, "--seed", "5", "--format", "json"]);
    assert!(stderr(&flag_out).contains("seed: 5 (from --seed)"));
    assert_eq!(env_out.stdout, flag_out.stdout);

    let auto = run(&["simulate", "--config", p, "--format", "json"]);
    let line = stderr(&auto);
    assert!(line.contains("(generated)"), "{line}");
    let seed: u64 = line.trim().strip_prefix("seed: ").unwrap().split(' ').next().unwrap().parse().unwrap();
    assert_eq!(json(&auto)["report"]["seed"].as_u64(), Some(seed));
    let again = run(&["simulate", "--config", p, "--seed", &seed.to_string(), "--format", "json"]);
    assert_eq!(again.stdout, auto.stdout);

    let bad = common::bin()
        .args(["simulate", "--config", p])
        .env("SELFCONSIST_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 1);
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"domain":{"prompts":[{"id":"a","p":0.2}]},"m":2,"n":2,"replicas":5}"#, "replicas"),
        (r#"{"domain":{"prompts":[{"id":"a","p":2.0}]},"m":2,"n":2}"#, "domain.prompts[0]"),
        (r#"{"domain":{"prompts":[{"id":"a","p":0.2}]},"m":0,"n":2}"#, "`m`"),
        (r#"{"domain":{"prompts":[{"id":"a","p":0.2}]},"m":2,"n":2,"rho":1.5}"#, "`rho`"),
        (r#"{"domain":{"generator":{"kind":"zipf","count":3}},"m":2,"n":2}"#, "domain.generator"),
        (r#"{"domain":{"prompts":[{"id":"a","p":0.2}]},"m":2,"n":2,"sampling":"without_replacement"}"#, "sampling"),
    ];
    for (text, field) in cases {
        let path = write(dir.path(), "c.json", text);
        let out = run(&["simulate", "--config", path.to_str().unwrap(), "--seed", "1"]);
        assert_eq!(code(&out), 1, "{text}");
        assert!(stderr(&out).contains(field), "{text}: {}", stderr(&out));
    }
    let out = run(&["simulate", "--config", "/nonexistent.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn correlated_run_notes_model_and_does_not_enforce() {
    let out = run(&["simulate", "--config", &cfg("correlated.json"), "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["report"]["correlation_model"], "beta-binomial");
    assert_eq!(v["report"]["bound_applies"], false);
    assert!(v["notes"][0].as_str().unwrap().contains("beta-binomial"));
}

#[test]
fn multiclass_simulation_runs() {
    let out = run(&["simulate", "--config", &cfg("three_class.json"), "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["report"]["bound_applies"], false);
    assert_eq!(v["report"]["decomposition"], Value::Null);
}

#[test]
fn simulate_replay_out_reestimates_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let replay = dir.path().join("trial.jsonl");
    let cfg_path = write(
        dir.path(),
        "c.json",
        r#"{"domain":{"generator":{"kind":"grid","count":7,"low":0.0,"high":1.0}},"m":5,"n":6,"replicates":3,"seed":8}"#,
    );
    let sim = run(&[
        "simulate", "--config", cfg_path.to_str().unwrap(), "--replay-out", replay.to_str().unwrap(),
        "--replay-replicate", "2", "--out-dir", dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&sim), 0);
    let est = run(&["estimate", "--replay", replay.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&est), 0, "{}", stderr(&est));
    let trials = std::fs::read_to_string(dir.path().join("o/trials.csv")).unwrap();
    let row = trials.lines().nth(3).unwrap();
    let simulated: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(json(&est)["estimate"].as_f64().unwrap(), simulated);
}

#[test]
fn estimate_from_replay() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "r.jsonl",
        "{\"prompt_id\":\"a\",\"responses\":[0,0,0,0]}\n{\"prompt_id\":\"b\",\"responses\":[1,0,1,0]}\n",
    );
    let out = run(&["estimate", "--replay", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["estimate"].as_f64(), Some(0.25));
    assert_eq!(v["m"].as_u64(), Some(2));
    assert_eq!(v["common_n"].as_u64(), Some(4));
    assert!(v["bound_label"].as_str().unwrap().contains("not a confidence interval"));
    let b = &v["bound"];
    let want = 1.0 / 16.0 + 1.0 / (4.0 * std::f64::consts::PI) + 1.0 / 16.0;
    assert!((b["total"].as_f64().unwrap() - want).abs() < 1e-15);

    let text = stdout(&run(&["estimate", "--replay", path.to_str().unwrap()]));
    assert!(text.contains("0.250000") && text.contains("not a confidence interval"), "{text}");
}

#[test]
fn estimate_ragged_or_odd_suppresses_bound() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = write(
        dir.path(),
        "r.jsonl",
        "{\"prompt_id\":\"a\",\"responses\":[0,0,0]}\n{\"prompt_id\":\"b\",\"responses\":[1,0,1,0]}\n",
    );
    let out = run(&["estimate", "--replay", ragged.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("warning: n varies"));
    let v = json(&out);
    assert_eq!(v["bound"], Value::Null);
    assert!((v["estimate"].as_f64().unwrap() - 0.25).abs() < 1e-15);

    let odd = write(dir.path(), "o.jsonl", "{\"prompt_id\":\"a\",\"responses\":[0,1,1]}\n");
    let v = json(&run(&["estimate", "--replay", odd.to_str().unwrap(), "--format", "json"]));
    assert_eq!(v["bound"], Value::Null);

    let multi = write(dir.path(), "m.jsonl", "{\"prompt_id\":\"a\",\"responses\":[0,2,2,1]}\n");
    let out = run(&["estimate", "--replay", multi.to_str().unwrap(), "--classes", "3", "--format", "json"]);
    let v = json(&out);
    assert_eq!(v["bound"], Value::Null);
    assert!((v["estimate"].as_f64().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn estimate_source_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "b.jsonl", "{\"prompt_id\":\"a\",\"responses\":[0]}\n{\"prompt_id\":\"zz\",\"responses\":[3]}\n");
    let out = run(&["estimate", "--replay", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("zz") && stderr(&out).contains("label 3"), "{}", stderr(&out));

    let malformed = write(dir.path(), "m.jsonl", "{\"prompt_id\":\"a\",\"responses\":[0]}\nnope\n");
    let out = run(&["estimate", "--replay", malformed.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("line 2"));

    let empty = write(dir.path(), "e.jsonl", "");
    assert_eq!(code(&run(&["estimate", "--replay", empty.to_str().unwrap()])), 3);
    assert_eq!(code(&run(&["estimate", "--replay", "/nonexistent.jsonl"])), 3);
    assert_eq!(code(&run(&["estimate"])), 1);
}

#[test]
fn estimate_subsample_is_deterministic_and_documented() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..30 {
        let responses: Vec<String> = (0..16).map(|j| ((i * 7 + j * 3) % 5 < 2) as u8).map(|b| b.to_string()).collect();
        text.push_str(&format!("{{\"prompt_id\":\"p{i}\",\"responses\":[{}]}}\n", responses.join(",")));
    }
    let path = write(dir.path(), "big.jsonl", &text);
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("o{k}"));
        let out = run(&[
            "estimate", "--replay", path.to_str().unwrap(), "--subsample", "m=5", "n=10", "--seed", "7",
            "--format", "json", "--out-dir", out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let manifest: Value = serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
        outputs.push((out.stdout.clone(), manifest));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    let (doc, manifest) = (&outputs[0].0, &outputs[0].1);
    let v: Value = serde_json::from_slice(doc).unwrap();
    assert_eq!(v["m"].as_u64(), Some(5));
    assert_eq!(v["common_n"].as_u64(), Some(10));
    assert_eq!(v["subsample"]["seed"].as_u64(), Some(7));
    assert_eq!(manifest["seed"].as_u64(), Some(7));
    assert_eq!(manifest["config_digest"], outputs[1].1["config_digest"]);
    assert!(manifest["notes"].to_string().contains("subsample m = 5, n = 10 with seed 7"));
    let other = run(&["estimate", "--replay", path.to_str().unwrap(), "--subsample", "m=5", "n=10", "--seed", "8", "--format", "json"]);
    assert_ne!(other.stdout, outputs[0].0);
    assert_eq!(code(&run(&["estimate", "--replay", path.to_str().unwrap(), "--subsample", "m=31", "--seed", "1"])), 1);
}

#[test]
fn estimate_from_external_stub() {
    let stub = common::stub_path();
    let cmd = format!("{stub} --mode constant --label 0");
    let out = run(&["estimate", "--external", &cmd, "--prompts", "a,b,c", "--draws", "6", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["estimate"].as_f64(), Some(0.0));
    assert_eq!(v["m"].as_u64(), Some(3));

    let silent = format!("{stub} --mode silent");
    let out = run(&[
        "estimate", "--external", &silent, "--prompts", "a,b", "--draws", "2", "--timeout-ms", "50", "--retries", "1",
    ]);
    assert_eq!(code(&out), 3);
    let err = stderr(&out);
    assert!(err.contains("failed: prompt `a`") && err.contains("failed: prompt `b`"), "{err}");

    let garbage = format!("{stub} --mode garbage");
    assert_eq!(code(&run(&["estimate", "--external", &garbage, "--prompts", "a", "--draws", "2"])), 3);

    let partial = format!("{stub} --mode partial --answer a --label 1");
    let out = run(&[
        "estimate", "--external", &partial, "--prompts", "a,b", "--draws", "4", "--timeout-ms", "50",
        "--retries", "0", "--format", "json",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["m"].as_u64(), Some(1));
    assert_eq!(v["failures"][0]["prompt_id"], "b");
    assert_eq!(v["bound"]["m"].as_u64(), Some(1));
}

#[test]
fn sweep_auto_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("s");
    let out = run(&[
        "sweep", "--budget", "144", "--splits", "auto", "--config", &cfg("beta_domain.json"), "--format", "json",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    let pairs: Vec<(u64, u64)> = rows.iter().map(|r| (r["m"].as_u64().unwrap(), r["n"].as_u64().unwrap())).collect();
    assert_eq!(pairs.first(), Some(&(1, 144)));
    assert_eq!(pairs.last(), Some(&(144, 1)));
    let planner = rows.iter().find(|r| r["label"] == "planner").unwrap();
    let min = rows.iter().map(|r| r["bound_total"].as_f64().unwrap()).fold(f64::INFINITY, f64::min);
    assert_eq!(planner["bound_total"].as_f64().unwrap(), min);
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("label,m,n,calls,term_prompt,term_bias,term_cross,bound_total,empirical_mse,mse_std_err,"));
    assert_eq!(csv.lines().count(), rows.len() + 1);
}

#[test]
fn sweep_keeps_order_and_rejects_infeasible() {
    let out = run(&[
        "sweep", "--budget", "100", "--splits", "10x10,2x50,7x14", "--config", &cfg("beta_domain.json"), "--seed", "1",
        "--format", "json",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let pairs: Vec<(u64, u64)> =
        v["rows"].as_array().unwrap().iter().map(|r| (r["m"].as_u64().unwrap(), r["n"].as_u64().unwrap())).collect();
    assert_eq!(pairs, vec![(10, 10), (2, 50), (7, 14)]);

    let out = run(&["sweep", "--budget", "100", "--splits", "10x10,11x10", "--config", &cfg("beta_domain.json")]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("11"));
    assert!(!stderr(&out).contains("seed:"), "nothing should run before the splits are checked");
}

#[test]
fn sweep_single_call_row_has_error_squared() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", r#"{"domain":{"prompts":[{"id":"a","p":0.3},{"id":"b","p":0.5,"weight":3}]},"replicates":500}"#);
    let out = run(&["sweep", "--budget", "20", "--splits", "20x1", "--config", path.to_str().unwrap(), "--seed", "2", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let row = &json(&out)["rows"][0];
    let e: f64 = (0.3 + 3.0 * 0.5) / 4.0;
    assert!((row["empirical_mse"].as_f64().unwrap() - e * e).abs() < 1e-15);
}
