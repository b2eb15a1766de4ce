//! End-to-end checks of the command-line surface: file outputs, exit
//! codes, determinism and error attribution.

mod common;

use common::{flowids, generate_small, read_bytes, run_expect_code, run_ok, write_scenario};
use std::fs;

#[test]
fn generate_writes_outputs_and_one_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), common::SMALL_SCENARIO);
    let out = dir.path().join("gen");
    run_ok(&[
        "generate",
        "--config",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(out.join("flows.csv").is_file());
    assert!(out.join("ground_truth.csv").is_file());
    let manifests: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains("manifest"))
        .collect();
    assert_eq!(manifests.len(), 1);
    let manifest: serde_json::Value =
        serde_json::from_slice(&read_bytes(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["seed"], 11);
    assert!(manifest["inputs"][0]["sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn generate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), common::SMALL_SCENARIO);
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&out_a, &out_b] {
        run_ok(&[
            "generate",
            "--config",
            scenario.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    assert_eq!(
        read_bytes(&out_a.join("flows.csv")),
        read_bytes(&out_b.join("flows.csv"))
    );
    assert_eq!(
        read_bytes(&out_a.join("ground_truth.csv")),
        read_bytes(&out_b.join("ground_truth.csv"))
    );

    // a different seed changes the data
    let out_c = dir.path().join("c");
    run_ok(&[
        "generate",
        "--config",
        scenario.to_str().unwrap(),
        "--out",
        out_c.to_str().unwrap(),
        "--seed",
        "999",
    ]);
    assert_ne!(
        read_bytes(&out_a.join("flows.csv")),
        read_bytes(&out_c.join("flows.csv"))
    );
}

#[test]
fn generate_rejects_bad_schedule_with_entry_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = common::SMALL_SCENARIO.replace(
        "attack = dos, 2017-03-17 08:20:00.000, 120, 172.31.9.21, 192.168.100.4, 400",
        "attack = dos, 2017-03-18 08:20:00.000, 120, 172.31.9.21, 192.168.100.4, 400",
    );
    let scenario = write_scenario(dir.path(), &bad);
    let out = dir.path().join("gen");
    let output = run_expect_code(
        &[
            "generate",
            "--config",
            scenario.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        2,
    );
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("schedule entry 2"), "stderr: {stderr}");
}

#[test]
fn train_writes_model_and_split_summary() {
    let dir = tempfile::tempdir().unwrap();
    let flows = generate_small(dir.path());
    let out = dir.path().join("rf");
    run_ok(&[
        "train",
        "--data",
        flows.to_str().unwrap(),
        "--model",
        "forest",
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert!(out.join("model.fidm").is_file());
    let summary: serde_json::Value =
        serde_json::from_slice(&read_bytes(&out.join("split_summary.json"))).unwrap();
    let sampled = summary["rows_sampled"].as_u64().unwrap();
    let train_rows = summary["train_rows"].as_u64().unwrap();
    let test_rows = summary["test_rows"].as_u64().unwrap();
    assert_eq!(train_rows, sampled * 7 / 10);
    assert_eq!(train_rows + test_rows, sampled);
    assert!(out.join("manifest.json").is_file());
}

#[test]
fn train_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let flows = generate_small(dir.path());
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&out_a, &out_b] {
        run_ok(&[
            "train",
            "--data",
            flows.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "5",
        ]);
    }
    assert_eq!(
        read_bytes(&out_a.join("model.fidm")),
        read_bytes(&out_b.join("model.fidm"))
    );
    assert_eq!(
        read_bytes(&out_a.join("split_summary.json")),
        read_bytes(&out_b.join("split_summary.json"))
    );
}

#[test]
fn train_knn_with_k_beyond_rows_is_a_model_error() {
    let dir = tempfile::tempdir().unwrap();
    let flows = generate_small(dir.path());
    let knn_conf = dir.path().join("knn.conf");
    fs::write(&knn_conf, "model = knn\nk = 1000000\n").unwrap();
    let out = dir.path().join("knn");
    let output = run_expect_code(
        &[
            "train",
            "--data",
            flows.to_str().unwrap(),
            "--model",
            "knn",
            "--model-config",
            knn_conf.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        4,
    );
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("exceeds"), "stderr: {stderr}");
}

#[test]
fn train_strict_ingest_aborts_on_malformed_row() {
    let dir = tempfile::tempdir().unwrap();
    let flows = generate_small(dir.path());
    let mut text = fs::read_to_string(&flows).unwrap();
    text.push_str("not,a,flow\n");
    let broken = dir.path().join("broken.csv");
    fs::write(&broken, text).unwrap();

    // default mode skips the row
    run_ok(&[
        "train",
        "--data",
        broken.to_str().unwrap(),
        "--out",
        dir.path().join("lenient").to_str().unwrap(),
    ]);
    // strict mode surfaces it as a data error
    let output = run_expect_code(
        &[
            "train",
            "--data",
            broken.to_str().unwrap(),
            "--strict-ingest",
            "--out",
            dir.path().join("strict").to_str().unwrap(),
        ],
        3,
    );
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("ingest"), "stderr: {stderr}");
}

#[test]
fn train_row_budget_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let flows = generate_small(dir.path());
    let output = run_expect_code(
        &[
            "train",
            "--data",
            flows.to_str().unwrap(),
            "--max-rows",
            "100",
            "--out",
            dir.path().join("capped").to_str().unwrap(),
        ],
        3,
    );
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("row budget exceeded"), "stderr: {stderr}");
}

#[test]
fn evaluate_writes_all_three_formats() {
    let dir = tempfile::tempdir().unwrap();
    let flows = generate_small(dir.path());
    let model_dir = dir.path().join("rf");
    run_ok(&[
        "train",
        "--data",
        flows.to_str().unwrap(),
        "--out",
        model_dir.to_str().unwrap(),
    ]);
    let eval_dir = dir.path().join("eval");
    let output = run_ok(&[
        "evaluate",
        "--model",
        model_dir.join("model.fidm").to_str().unwrap(),
        "--data",
        flows.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
        "--format",
        "machine",
    ]);
    for ext in ["txt", "csv", "json"] {
        assert!(eval_dir.join(format!("report.{ext}")).is_file());
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    let value: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(value["model_kind"], "forest");
    assert_eq!(value["target_scheme"], "attack_type");
    assert!(value["accuracy"].as_f64().unwrap() > 0.5);

    // reruns reproduce the report byte for byte
    let eval_dir2 = dir.path().join("eval2");
    run_ok(&[
        "evaluate",
        "--model",
        model_dir.join("model.fidm").to_str().unwrap(),
        "--data",
        flows.to_str().unwrap(),
        "--out",
        eval_dir2.to_str().unwrap(),
    ]);
    assert_eq!(
        read_bytes(&eval_dir.join("report.json")),
        read_bytes(&eval_dir2.join("report.json"))
    );
}

#[test]
fn evaluate_detects_scheme_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let flows = generate_small(dir.path());
    let model_dir = dir.path().join("rf");
    run_ok(&[
        "train",
        "--data",
        flows.to_str().unwrap(),
        "--out",
        model_dir.to_str().unwrap(),
    ]);
    let output = run_expect_code(
        &[
            "evaluate",
            "--model",
            model_dir.join("model.fidm").to_str().unwrap(),
            "--data",
            flows.to_str().unwrap(),
            "--out",
            dir.path().join("eval").to_str().unwrap(),
            "--target-scheme",
            "class-binary",
        ],
        4,
    );
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("scheme mismatch"), "stderr: {stderr}");
}

#[test]
fn evaluate_empty_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let flows = generate_small(dir.path());
    let model_dir = dir.path().join("rf");
    run_ok(&[
        "train",
        "--data",
        flows.to_str().unwrap(),
        "--out",
        model_dir.to_str().unwrap(),
    ]);
    let empty = dir.path().join("empty.csv");
    let header = fs::read_to_string(&flows).unwrap().lines().next().unwrap().to_string();
    fs::write(&empty, format!("{header}\n")).unwrap();
    run_expect_code(
        &[
            "evaluate",
            "--model",
            model_dir.join("model.fidm").to_str().unwrap(),
            "--data",
            empty.to_str().unwrap(),
            "--out",
            dir.path().join("eval").to_str().unwrap(),
        ],
        3,
    );
}

#[test]
fn evaluate_rejects_corrupt_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let flows = generate_small(dir.path());
    let fake = dir.path().join("model.fidm");
    fs::write(&fake, vec![0x5a; 64]).unwrap();
    let output = run_expect_code(
        &[
            "evaluate",
            "--model",
            fake.to_str().unwrap(),
            "--data",
            flows.to_str().unwrap(),
            "--out",
            dir.path().join("eval").to_str().unwrap(),
        ],
        4,
    );
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("not a model file"), "stderr: {stderr}");
}

#[test]
fn compare_labels_emits_grid_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let flows = generate_small(dir.path());
    let out = dir.path().join("cmp");
    let output = run_ok(&[
        "compare-labels",
        "--data",
        flows.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    for stem in [
        "forest_class_binary",
        "forest_attack_type",
        "knn_class_binary",
        "knn_attack_type",
    ] {
        for ext in ["txt", "csv", "json"] {
            assert!(out.join(format!("report_{stem}.{ext}")).is_file());
        }
        assert!(out.join(format!("model_{stem}.fidm")).is_file());
    }
    for ext in ["txt", "csv", "json"] {
        assert!(out.join(format!("comparison.{ext}")).is_file());
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("class_binary") && stdout.contains("attack_type"));

    // deterministic rerun: comparison table and model files identical
    let out2 = dir.path().join("cmp2");
    run_ok(&[
        "compare-labels",
        "--data",
        flows.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert_eq!(
        read_bytes(&out.join("comparison.csv")),
        read_bytes(&out2.join("comparison.csv"))
    );
    assert_eq!(
        read_bytes(&out.join("model_forest_attack_type.fidm")),
        read_bytes(&out2.join("model_forest_attack_type.fidm"))
    );
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let flows = generate_small(dir.path());
    let bad = dir.path().join("pipeline.conf");
    fs::write(&bad, "split_ratio = 0.7\nbogus_key = 1\n").unwrap();
    run_expect_code(
        &[
            "train",
            "--data",
            flows.to_str().unwrap(),
            "--pipeline-config",
            bad.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ],
        2,
    );
}

#[test]
fn version_flag_works() {
    let output = flowids().arg("--version").output().unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("flowids"));
}
