//! End-to-end tests of the `assocmine` binary: exit codes, file outputs,
//! determinism, and the documented CLI contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SEED_ENV: &str = "ASSOCMINE_SEED";

fn binary() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_assocmine"));
    // Isolate tests from any ambient seed override.
    cmd.env_remove(SEED_ENV);
    cmd
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary must spawn")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&read(path)).expect("valid JSON")
}

/// Generates the xor fixture into `dir` and returns the data path.
fn gen_xor(dir: &Path, seed: u64) -> PathBuf {
    let out = run(&[
        "gen",
        "--experiment",
        "xor",
        "--noise",
        "0.1",
        "--seed",
        &seed.to_string(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    dir.join("data.csv")
}

/// Report counters must reconcile and match the spectra row counts.
fn check_report_consistency(report: &serde_json::Value, out_dir: &Path) {
    let counters = &report["counters"];
    assert_eq!(
        counters["nodes_expanded"].as_u64().unwrap(),
        counters["nodes_stored"].as_u64().unwrap() + counters["nodes_pruned"].as_u64().unwrap(),
        "expanded = stored + pruned must hold: {counters}"
    );
    let theta_rows =
        read(&out_dir.join(report["spectra"]["theta"].as_str().unwrap())).lines().count() - 1;
    let kwii_rows =
        read(&out_dir.join(report["spectra"]["kwii"].as_str().unwrap())).lines().count() - 1;
    assert_eq!(report["theta_combinations"].as_u64().unwrap() as usize, theta_rows);
    assert_eq!(report["kwii_entries"].as_u64().unwrap() as usize, kwii_rows);
}

/// Reports are equal up to the wall-clock timings block and the worker
/// count echoed from the command line (results must not depend on it).
fn assert_reports_match_modulo_timings(a: &Path, b: &Path) {
    let mut left = read_json(a);
    let mut right = read_json(b);
    for doc in [&mut left, &mut right] {
        doc["timings"] = serde_json::Value::Null;
        doc["config"]["workers"] = serde_json::Value::Null;
    }
    assert_eq!(left, right);
}

#[test]
fn gen_then_mine_emits_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_xor(dir.path(), 3);
    assert!(dir.path().join("manifest.json").exists());
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["spec"]["experiment"], "xor");
    assert_eq!(manifest["planted"].as_array().unwrap().len(), 3);

    let run_dir = dir.path().join("run");
    let out = run(&[
        "mine",
        "--input",
        data.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--nperm",
        "1000",
    ]);
    assert_success(&out);

    let tci = read(&run_dir.join("tci_spectrum.csv"));
    assert!(tci.starts_with("combination,order,metric,value_bits,pvalue,verdict\n"));
    // The three planted XOR rules dominate Θ.
    assert!(tci.contains("A1;A2;A3"), "{tci}");
    assert!(tci.contains("A6;A7;A8;A9"), "{tci}");
    assert!(tci.contains("A11;A12;A13;A14"), "{tci}");
    let kwii = read(&run_dir.join("kwii_spectrum.csv"));
    assert!(kwii.contains("A1;A2;A3"), "{kwii}");

    let report = read_json(&run_dir.join("report.json"));
    assert_eq!(report["rows"].as_u64(), Some(200));
    assert_eq!(report["attributes_total"].as_u64(), Some(15));
    assert_eq!(report["config"]["nperm"].as_u64(), Some(1000));
    check_report_consistency(&report, &run_dir);
}

#[test]
fn identical_config_and_seed_give_byte_identical_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_xor(dir.path(), 5);
    let mut spectra: Vec<(String, String)> = Vec::new();
    let mut reports: Vec<PathBuf> = Vec::new();
    for (label, workers) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let run_dir = dir.path().join(label);
        let out = run(&[
            "mine",
            "--input",
            data.to_str().unwrap(),
            "--out",
            run_dir.to_str().unwrap(),
            "--nperm",
            "600",
            "--seed",
            "11",
            "--workers",
            workers,
        ]);
        assert_success(&out);
        spectra.push((
            read(&run_dir.join("tci_spectrum.csv")),
            read(&run_dir.join("kwii_spectrum.csv")),
        ));
        reports.push(run_dir.join("report.json"));
    }
    assert_eq!(spectra[0], spectra[1], "same worker count must reproduce bytes");
    assert_eq!(spectra[0], spectra[2], "worker count must not change results");
    assert_reports_match_modulo_timings(&reports[0], &reports[1]);
    assert_reports_match_modulo_timings(&reports[0], &reports[2]);
}

#[test]
fn supervised_mine_recovers_the_planted_epistasis() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "gen",
        "--experiment",
        "sup_exp1",
        "--seed",
        "17",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_success(&out);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["class"], "C");

    let run_dir = dir.path().join("run");
    let out = run(&[
        "mine",
        "--input",
        dir.path().join("data.csv").to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--mode",
        "supervised",
        "--class",
        "C",
        "--nperm",
        "1000",
    ]);
    assert_success(&out);
    let caci = read(&run_dir.join("caci_spectrum.csv"));
    let lines: Vec<&str> = caci.lines().collect();
    assert!(
        lines.iter().any(|l| l.starts_with("A1;C,2,CACI,") && l.ends_with(",COI_CA")),
        "{caci}"
    );
    assert!(
        lines.iter().any(|l| l.starts_with("A1;A2;C,3,CACI,") && l.ends_with(",SCOI_CA")),
        "{caci}"
    );
    let kwii = read(&run_dir.join("kwii_spectrum.csv"));
    assert!(kwii.contains("A1;A2;C"), "{kwii}");
    check_report_consistency(&read_json(&run_dir.join("report.json")), &run_dir);
}

#[test]
fn exit_codes_distinguish_config_parse_and_runtime_failures() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_xor(dir.path(), 1);

    // Config errors: misordered thresholds, supervised without a class,
    // unknown experiment, noise on a non-xor experiment, unknown class name.
    let out = run(&[
        "mine",
        "--input",
        data.to_str().unwrap(),
        "--alpha-high",
        "0.5",
        "--alpha-low",
        "0.01",
    ]);
    assert_exit(&out, 2);
    let out = run(&["mine", "--input", data.to_str().unwrap(), "--mode", "supervised"]);
    assert_exit(&out, 2);
    let out = run(&["gen", "--experiment", "nonsense"]);
    assert_exit(&out, 2);
    let out = run(&["gen", "--experiment", "sup_exp1", "--noise", "0.3"]);
    assert_exit(&out, 2);
    let out = run(&[
        "mine",
        "--input",
        data.to_str().unwrap(),
        "--mode",
        "supervised",
        "--class",
        "no_such_column",
    ]);
    assert_exit(&out, 2);
    // clap usage errors share the config exit code.
    let out = run(&["mine", "--no-such-flag"]);
    assert_exit(&out, 2);

    // Parse errors: non-integer cells, constant columns (named).
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "A,B\n0,1\n1,zero\n").unwrap();
    let out = run(&["mine", "--input", bad.to_str().unwrap()]);
    assert_exit(&out, 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("data row 2") && stderr.contains("column 'B'"), "{stderr}");
    let constant = dir.path().join("constant.csv");
    std::fs::write(&constant, "A,K,B\n0,7,1\n1,7,0\n0,7,1\n1,7,0\n").unwrap();
    let out = run(&["mine", "--input", constant.to_str().unwrap()]);
    assert_exit(&out, 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains('K'));

    // Runtime errors: unreadable input.
    let out = run(&["mine", "--input", "/nonexistent/data.csv"]);
    assert_exit(&out, 4);
}

#[test]
fn seed_env_var_overrides_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_xor(dir.path(), 9);
    let run_dir = dir.path().join("env-run");
    let out = binary()
        .args([
            "mine",
            "--input",
            data.to_str().unwrap(),
            "--out",
            run_dir.to_str().unwrap(),
            "--nperm",
            "200",
            "--seed",
            "5",
        ])
        .env(SEED_ENV, "99")
        .output()
        .unwrap();
    assert_success(&out);
    let report = read_json(&run_dir.join("report.json"));
    assert_eq!(report["config"]["seed"].as_u64(), Some(99));

    let out = binary()
        .args(["mine", "--input", data.to_str().unwrap(), "--nperm", "200"])
        .env(SEED_ENV, "not-a-seed")
        .output()
        .unwrap();
    assert_exit(&out, 2);
}

#[test]
fn missing_cells_impute_or_drop_per_flag() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = String::from("A,B,C3\n");
    for i in 0..100u32 {
        let a = i % 2;
        let b = (i / 2) % 2;
        let c = (i * 7 + 3) % 2;
        if i == 10 || i == 20 {
            rows.push_str(&format!("?,{b},{c}\n"));
        } else {
            rows.push_str(&format!("{a},{b},{c}\n"));
        }
    }
    let data = dir.path().join("missing.csv");
    std::fs::write(&data, rows).unwrap();

    let impute_dir = dir.path().join("impute");
    let out = run(&[
        "mine",
        "--input",
        data.to_str().unwrap(),
        "--out",
        impute_dir.to_str().unwrap(),
        "--nperm",
        "100",
    ]);
    assert_success(&out);
    assert_eq!(read_json(&impute_dir.join("report.json"))["rows"].as_u64(), Some(100));

    let drop_dir = dir.path().join("drop");
    let out = run(&[
        "mine",
        "--input",
        data.to_str().unwrap(),
        "--out",
        drop_dir.to_str().unwrap(),
        "--nperm",
        "100",
        "--drop-missing",
    ]);
    assert_success(&out);
    assert_eq!(read_json(&drop_dir.join("report.json"))["rows"].as_u64(), Some(98));
}

#[test]
fn bench_reports_all_four_pruning_legs() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_xor(dir.path(), 7);
    let out = run(&[
        "bench",
        "--input",
        data.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--max-order",
        "4",
    ]);
    assert_success(&out);
    let bench = read_json(&dir.path().join("bench.json"));
    let legs = bench["legs"].as_array().unwrap();
    assert_eq!(
        legs.iter().map(|l| l["leg"].as_str().unwrap()).collect::<Vec<_>>(),
        ["none", "redundancy", "bounds", "both"]
    );
    for leg in legs {
        let counters = &leg["counters"];
        assert_eq!(
            counters["nodes_expanded"].as_u64().unwrap(),
            counters["nodes_stored"].as_u64().unwrap()
                + counters["nodes_pruned"].as_u64().unwrap(),
            "leg {leg}"
        );
    }
    let exact = |name: &str| {
        legs.iter()
            .find(|l| l["leg"] == name)
            .unwrap()["counters"]["exact_evaluations"]
            .as_u64()
            .unwrap()
    };
    assert!(exact("both") <= exact("none"));
    assert!(exact("bounds") <= exact("none"));
}
