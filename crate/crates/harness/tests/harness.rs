use std::process::Command;

use serde_json::{json, Value};
use srip_core::ensembles::{gen_matrix, gen_sparse_signal, phaseless_measure, Ensemble, ValueDist};
use srip_harness::config::Solver;
use srip_harness::formats::{to_json_bytes, write_file, MatrixFile, MeasurementsFile, SignalFile};
use srip_harness::{run, sweep_phase_transition, ExperimentConfig, Kind, RunOptions};

fn srip(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_srip")).args(args).env_remove("SRIP_OUT_DIR").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn sweep_cells_follow_the_grid() {
    let cells = sweep_phase_transition(6, 2, &[1, 8, 30], 3, Solver::Oracle, 5);
    assert_eq!(cells.iter().map(|c| c.m).collect::<Vec<_>>(), vec![1, 8, 30]);
    // One magnitude cannot pin down two unknowns.
    assert_eq!((cells[0].trials, cells[0].success_rate), (3, 0.0));
    assert!(cells[1].success_rate > 0.5, "{:?}", cells[1]);
    // Over the oracle budget: reported on the cell, the sweep goes on.
    assert!(cells[2].error.as_deref().unwrap().contains("budget"));
    assert_eq!(cells[2].trials, 0);
}

#[test]
fn sweep_is_schedule_independent() {
    let go = |t| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| sweep_phase_transition(10, 2, &[4, 8, 14], 4, Solver::AltMin, 11))
    };
    let one = go(1);
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&go(4)).unwrap());
    assert!(one.iter().all(|c| c.error.is_none() && c.trials == 4));
}

#[test]
fn outputs_embed_config_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Kind::Mu).with_param("m_grid", json!([3, 4])).with_param("trials", 500);
    cfg.master_seed = 9;
    cfg.output_path = dir.path().to_string_lossy().into_owned();
    let out = run(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(out.exit_code(), 0);
    assert_eq!(out.files.len(), 2);
    let record: Value = serde_json::from_slice(&std::fs::read(dir.path().join("mu.json")).unwrap()).unwrap();
    assert_eq!(record["schema_version"], 1);
    assert_eq!(record["config"]["master_seed"], 9);
    assert_eq!(record["config"]["parameters"]["trials"], 500);
    let csv = std::fs::read_to_string(dir.path().join("mu.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# schema_version=1");
    assert!(lines[1].starts_with("# config={") && lines[1].contains("\"master_seed\":9"));
    assert_eq!(lines[2], "m,trials,mu_hat,std_error,lower_3se,nu0,passed,seed");
    assert_eq!(lines.len(), 5);
    // Cells carry 17 significant digits and parse back to the JSON values.
    let mu3: f64 = lines[3].split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(mu3, record["results"]["estimates"][0]["mean"].as_f64().unwrap());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout) = srip(&["mu", "--out", out, "-p", "m_grid=[2,5]", "-p", "trials=200", "--seed", "3"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("mu.csv"));
    assert_eq!(srip(&["mu", "--out", out, "-p", "trials=5"]).0, 2);
    assert_eq!(srip(&["mu", "--out", out, "-p", "nonsense=1"]).0, 2);
    assert_eq!(srip(&["plot"]).0, 2);
    assert_eq!(srip(&[]).0, 2);
    // Output directory below a regular file.
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let bad = blocker.join("sub");
    assert_eq!(srip(&["mu", "--out", bad.to_str().unwrap(), "-p", "trials=200"]).0, 4);
    // A one-row embedding almost surely collapses some pair: the proved
    // level is then missed in some runs, and demanding all of them fails.
    let (code, stdout) = srip(&["jl", "--out", out, "-p", "m=1", "-p", "min_pass_fraction=1.0"]);
    assert_eq!(code, 3, "{stdout}");
    assert!(stdout.contains("FAIL"));
}

#[test]
fn cli_config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let cfg = json!({"kind": "bernoulli_witness", "parameters": {"m_grid": [8], "seeds": 3}, "master_seed": 4});
    std::fs::write(&path, cfg.to_string()).unwrap();
    let p = path.to_str().unwrap();
    let (code, stdout) = srip(&["--config", p, "--dry-run", "--seed", "12"]);
    assert_eq!(code, 0);
    let echo: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(echo["master_seed"], 12);
    assert_eq!(echo["parameters"]["seeds"], 3);
    assert_eq!(echo["parameters"]["n"], 8);
    let (code, _) = srip(&["witness", "--config", p, "--dry-run", "-p", "seeds=5"]);
    assert_eq!(code, 0);
    assert_eq!(srip(&["mu", "--config", p, "--dry-run"]).0, 2);
    let out = dir.path().join("out");
    let (code, stdout) = srip(&["--config", p, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert!(out.join("bernoulli_witness.csv").exists());
}

#[test]
fn recover_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_matrix(10, 8, Ensemble::Gaussian, 77).unwrap();
    let x = gen_sparse_signal(8, 2, ValueDist::UnitGaussian, 78).unwrap();
    let b = phaseless_measure(&a, &x).unwrap();
    let mp = dir.path().join("a.json");
    let bp = dir.path().join("b.json");
    let xp = dir.path().join("x.json");
    write_file(&mp, &to_json_bytes(&MatrixFile::from_matrix(&a, false))).unwrap();
    write_file(&bp, &to_json_bytes(&MeasurementsFile::from_measurements(&b))).unwrap();
    write_file(&xp, &to_json_bytes(&SignalFile::from_signal(&x))).unwrap();
    let mut cfg = ExperimentConfig::new(Kind::Oracle)
        .with_param("input.matrix_file", mp.to_str().unwrap())
        .with_param("input.measurements_file", bp.to_str().unwrap())
        .with_param("input.signal_file", xp.to_str().unwrap());
    cfg.output_path = dir.path().join("out").to_string_lossy().into_owned();
    let out = run(&cfg, &RunOptions::default()).unwrap();
    let trials = out.record.results["trials"].as_array().unwrap();
    assert_eq!(trials.len(), 1);
    assert_eq!(trials[0]["matrix_fingerprint"], a.fingerprint());
    assert!(trials[0]["error"].as_f64().unwrap() <= 1e-6);
    // Measurements taken with another matrix are refused.
    let other = gen_matrix(10, 8, Ensemble::Gaussian, 1).unwrap();
    write_file(&mp, &to_json_bytes(&MatrixFile::from_matrix(&other, true))).unwrap();
    assert_eq!(run(&cfg, &RunOptions::default()).unwrap_err().exit_code(), 2);
}

#[test]
fn srip_and_rip_grids() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, extra) in [(Kind::Srip, json!({"method": "auto"})), (Kind::Rip, json!({}))] {
        let mut cfg = ExperimentConfig::new(kind)
            .with_param("m_grid", json!([6, 9]))
            .with_param("n", 5)
            .with_param("k_grid", json!([1, 2]))
            .with_param("matrices", 2);
        for (k, v) in extra.as_object().unwrap() {
            cfg.set_param(k, v.clone());
        }
        cfg.output_path = dir.path().to_string_lossy().into_owned();
        let out = run(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(out.record.results["estimates"].as_array().unwrap().len(), 8);
    }
    let csv = std::fs::read_to_string(dir.path().join("srip.csv")).unwrap();
    assert!(csv.lines().nth(3).unwrap().contains(",exact_small,"));
    // The same (m, matrix) pair is the same matrix for every order.
    let rows: Vec<Vec<String>> = csv.lines().skip(3).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows[0][4], rows[2][4]);
    assert_ne!(rows[0][4], rows[1][4]);
}
