//! End-to-end runs of the `hetnoi` binary and its library entry point.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use hetnoi::cli::{run, Cli, RunConfig};
use serde_json::Value;

const TOY: &str = r#"{
  "schema_id": "hetnoi.run-config/v1",
  "system": { "total_chiplets": 11, "integration": "stacked-3D" },
  "model": "BERT-Base",
  "sequence": { "seq_len": 32 },
  "optimizer": { "budget": 1, "seed": 3, "start_pool": 4, "expansion_budget": 60 }
}"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hetnoi-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn hetnoi(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hetnoi")).args(args).output().unwrap()
}

fn run_args(args: &[&str]) -> hetnoi::Result<Vec<PathBuf>> {
    run(&Cli::parse_from(std::iter::once("hetnoi").chain(args.iter().copied())))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn trace_writes_csv_and_summary() {
    let dir = scratch("trace");
    let cfg = write_config(&dir, "toy.json", TOY);
    let out = dir.join("out");
    let files = run_args(&["trace", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).unwrap();
    assert_eq!(files, vec![out.join("trace.csv"), out.join("workload.json")]);
    let summary = json(&out.join("workload.json"));
    assert!(summary["fc_dominance"].as_f64().unwrap() > 0.9);
    let trace = hetnoi::traffic::TrafficTrace::from_csv(&fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert_eq!(trace.phases.len(), 1 + 12 * 4);
}

#[test]
fn baseline_then_simulate_reproduces_the_mesh_report() {
    let dir = scratch("simulate");
    let cfg = write_config(&dir, "toy.json", TOY);
    let (cfg, base, sim) = (cfg.to_str().unwrap(), dir.join("base"), dir.join("sim"));
    run_args(&["baseline", "--config", cfg, "--out", base.to_str().unwrap()]).unwrap();
    let design = base.join("mesh.json");
    let trace_out = dir.join("trace");
    run_args(&["trace", "--config", cfg, "--out", trace_out.to_str().unwrap()]).unwrap();
    run_args(&[
        "simulate",
        "--config",
        cfg,
        "--out",
        sim.to_str().unwrap(),
        "--design",
        design.to_str().unwrap(),
        "--trace",
        trace_out.join("trace.csv").to_str().unwrap(),
    ])
    .unwrap();
    assert_eq!(fs::read(base.join("mesh_report.json")).unwrap(), fs::read(sim.join("sim_report.json")).unwrap());
    assert_eq!(fs::read(base.join("mesh_phases.csv")).unwrap(), fs::read(sim.join("sim_phases.csv")).unwrap());
    let validation = json(&base.join("mesh_validation.json"));
    assert!(validation.to_string().contains("connectivity"));
}

#[test]
fn explore_is_deterministic_and_compare_with_itself_is_neutral() {
    let dir = scratch("explore");
    let cfg = write_config(&dir, "toy.json", TOY);
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (dir.join("a"), dir.join("b"));
    let fa = run_args(&["explore", "--config", cfg, "--out", a.to_str().unwrap()]).unwrap();
    run_args(&["explore", "--config", cfg, "--out", b.to_str().unwrap(), "--parallel", "2"]).unwrap();
    for f in &fa {
        let name = f.file_name().unwrap();
        assert_eq!(fs::read(f).unwrap(), fs::read(b.join(name)).unwrap(), "{name:?}");
    }
    let summary = json(&a.join("summary.json"));
    assert_eq!(summary["seed"], 3);
    assert!(summary["archive_size"].as_u64().unwrap() >= 1);
    let pareto = fs::read_to_string(a.join("pareto.csv")).unwrap();
    assert_eq!(pareto.lines().filter(|l| l.ends_with(",true")).count(), 1);

    let cmp = dir.join("cmp");
    run_args(&["compare", "--config", cfg, "--against", cfg, "--out", cmp.to_str().unwrap()]).unwrap();
    let table = json(&cmp.join("comparison.json"));
    for row in table["rows"].as_array().unwrap() {
        assert_eq!(row["speedup"], 1.0);
        assert_eq!(row["edp_gain"], 1.0);
    }
    assert_eq!(fs::read(cmp.join("hops_a.csv")).unwrap(), fs::read(cmp.join("hops_b.csv")).unwrap());
}

#[test]
fn seed_flag_overrides_and_is_required_somewhere() {
    let dir = scratch("seed");
    let no_seed = TOY.replace(r#""seed": 3, "#, "");
    let cfg = write_config(&dir, "noseed.json", &no_seed);
    let out = dir.join("out");
    let err = run_args(&["baseline", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).unwrap_err();
    assert_eq!(err.kind(), "config");
    run_args(&["baseline", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5"]).unwrap();
}

#[test]
fn compare_rejects_different_workloads() {
    let dir = scratch("mismatch");
    let a = write_config(&dir, "a.json", TOY);
    let b = write_config(&dir, "b.json", &TOY.replace("\"seq_len\": 32", "\"seq_len\": 48"));
    let out = dir.join("out");
    let err = run_args(&[
        "compare",
        "--config",
        a.to_str().unwrap(),
        "--against",
        b.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap_err();
    assert_eq!(err.kind(), "mismatch");
}

#[test]
fn config_errors_are_specific() {
    let bad_schema = TOY.replace("run-config/v1", "run-config/v0");
    assert_eq!(RunConfig::from_json(&bad_schema).unwrap_err().kind(), "config");
    let unknown_field = TOY.replace("\"model\":", "\"colour\": 1, \"model\":");
    assert!(RunConfig::from_json(&unknown_field).unwrap_err().to_string().contains("colour"));
    let broken = TOY.replace("\"model\": \"BERT-Base\",", "\"model\": \"BERT-Base\"");
    let msg = RunConfig::from_json(&broken).unwrap_err().to_string();
    assert!(msg.contains("line 5"), "{msg}");
    let unknown = RunConfig::from_json(&TOY.replace("BERT-Base", "BERT-Huge")).unwrap_err();
    assert_eq!(unknown.kind(), "config");
    let zero_seq = RunConfig::from_json(&TOY.replace("\"seq_len\": 32", "\"seq_len\": 0")).unwrap_err();
    assert_eq!(zero_seq.kind(), "invalid_sequence");
}

#[test]
fn inline_models_are_accepted() {
    let inline = TOY.replace(
        "\"BERT-Base\"",
        r#"{ "name": "tiny", "block_structure": "decoder-only", "d_model": 64, "num_layers": 2, "num_heads": 4,
             "attention_variant": "MQA" }"#,
    );
    let cfg = RunConfig::from_json(&inline).unwrap();
    let m = cfg.model_spec().unwrap();
    assert_eq!((m.d_model, m.num_layers, m.kv_heads()), (64, 2, 1));
    let work = cfg.workload().unwrap();
    assert_eq!(work.trace.phases.len(), 1 + 2 * 4);
}

#[test]
fn binary_reports_outputs_and_errors_as_json() {
    let dir = scratch("bin");
    let cfg = write_config(&dir, "toy.json", TOY);
    let out = dir.join("out");
    let ok = hetnoi(&["trace", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(ok.status.success());
    let doc: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(doc["command"], "trace");
    assert_eq!(doc["outputs"].as_array().unwrap().len(), 2);

    let missing = hetnoi(&["explore", "--config", dir.join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&missing.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("nope.json"));

    let zero = hetnoi(&["trace", "--config", cfg.to_str().unwrap(), "--parallel", "0"]);
    assert_eq!(zero.status.code(), Some(1));

    let usage = hetnoi(&["explore"]);
    assert!(!usage.status.success());
}
