//! Command-level behavior: file outputs, exit codes, and failure isolation.

mod common;

use common::*;

const LINEAR_SMALL: &str = r#"[[models]]
name = "linear"
kind = "linear-decomp"
epochs = 40
learning_rate = 0.02
moving_average_kernel = 3
"#;

const TWO_METHODS: &str = r#"[[methods]]
kind = "morris"
samples_r = 8

[[methods]]
kind = "ablation"
"#;

#[test]
fn synth_is_deterministic_with_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    let weights: Vec<f64> = (1..=8).rev().map(|w| w as f64).collect();
    write_file(
        &config_path,
        &synth_config(7, 13, 15, 50, 120, &weights, 0.1, LINEAR_SMALL, TWO_METHODS),
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = sabench(&[
            "synth",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_exit(&output, 0);
    }
    let panel_a = std::fs::read(out_a.join("panel.csv")).unwrap();
    let panel_b = std::fs::read(out_b.join("panel.csv")).unwrap();
    assert_eq!(panel_a, panel_b, "same seed must produce identical bytes");
    assert_eq!(
        std::fs::read(out_a.join("ground_truth.json")).unwrap(),
        std::fs::read(out_b.join("ground_truth.json")).unwrap()
    );

    // Header + one row per (entity, day).
    let lines = panel_a.split(|&b| b == b'\n').filter(|l| !l.is_empty()).count();
    assert_eq!(lines, 50 * 120 + 1);

    // Monotone weights 8..1 plant ranks 1..8.
    let truth = read_json(&out_a.join("ground_truth.json"));
    let ranks: Vec<f64> = truth["ranks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(ranks, (1..=8).map(|r| r as f64).collect::<Vec<_>>());
}

#[test]
fn run_emits_one_report_per_cell_plus_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    let models = format!(
        "{LINEAR_SMALL}
[[models]]
name = \"mlp\"
kind = \"mlp\"
epochs = 40
hidden_width = 8
"
    );
    let methods = r#"[[methods]]
kind = "morris"
samples_r = 8

[[methods]]
kind = "ablation"

[[methods]]
kind = "occlusion"
patch_length = 2
"#;
    write_file(
        &config_path,
        &synth_config(3, 4, 3, 10, 20, &[2.0, 1.0], 0.05, &models, methods),
    );
    let run_dir = dir.path().join("run");
    let output = sabench(&[
        "run",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert_exit(&output, 0);
    assert_eq!(list_reports(&run_dir).len(), 2 * 3);
    let manifest = read_json(&run_dir.join("manifest.json"));
    assert_eq!(manifest["cells"].as_array().unwrap().len(), 6);
    assert!(manifest["config_hash"].as_str().unwrap().len() == 64);
    assert!(manifest["dataset"]["windows"].as_u64().unwrap() > 0);
}

#[test]
fn handshake_mismatch_fails_only_that_model() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    let models = format!(
        r#"{LINEAR_SMALL}
[[models]]
name = "liar"
kind = "external"
command = ["{bin}", "serve", "--echo", "--lookback", "4", "--horizon", "3", "--k", "2", "--declare-k", "7"]
timeout_secs = 10
"#,
        bin = bin()
    );
    write_file(
        &config_path,
        &synth_config(3, 4, 3, 10, 20, &[2.0, 1.0], 0.05, &models, TWO_METHODS),
    );
    let run_dir = dir.path().join("run");
    let output = sabench(&[
        "run",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert_exit(&output, 2);
    let manifest = read_json(&run_dir.join("manifest.json"));
    let cells = manifest["cells"].as_array().unwrap();
    for cell in cells {
        let failed = cell["status"] == "failed";
        assert_eq!(failed, cell["model"] == "liar", "cell: {cell}");
        if failed {
            assert!(cell["error"].as_str().unwrap().contains("handshake"));
        }
    }
    // The healthy model still wrote both reports.
    assert_eq!(list_reports(&run_dir).len(), 2);
}

#[test]
fn echo_adapter_with_matching_spec_is_usable() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    let models = format!(
        r#"[[models]]
name = "echo"
kind = "external"
command = ["{bin}", "serve", "--echo", "--lookback", "4", "--horizon", "3", "--k", "2"]
timeout_secs = 10
"#,
        bin = bin()
    );
    write_file(
        &config_path,
        &synth_config(3, 4, 3, 10, 20, &[2.0, 1.0], 0.05, &models, TWO_METHODS),
    );
    let run_dir = dir.path().join("run");
    let output = sabench(&[
        "run",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    assert_eq!(list_reports(&run_dir).len(), 2);
}

#[test]
fn fatal_errors_exit_one() {
    // Missing config file.
    let output = sabench(&["run", "--config", "/nonexistent.toml", "--out", "/tmp/x"]);
    assert_exit(&output, 1);

    // Config that does not parse.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    write_file(&bad, "this is not toml = [");
    let output = sabench(&["run", "--config", bad.to_str().unwrap(), "--out", "/tmp/x"]);
    assert_exit(&output, 1);

    // CSV source pointing at a missing file.
    let csv_cfg = dir.path().join("csv.toml");
    write_file(
        &csv_cfg,
        r#"seed = 1
lookback = 2
horizon = 1

[dataset]
source = "csv"
path = "/nonexistent/panel.csv"
entity_column = "entity"
date_column = "date"
target_column = "target"
feature_columns = ["f1", "f2"]

[[models]]
name = "linear"
kind = "linear-decomp"

[[methods]]
kind = "ablation"
"#,
    );
    let output = sabench(&[
        "run",
        "--config",
        csv_cfg.to_str().unwrap(),
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_exit(&output, 1);
}

#[test]
fn report_duplicate_model_gives_unit_cross_model_rho() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    let models = r#"[[models]]
name = "lin-a"
kind = "linear-decomp"
epochs = 40
moving_average_kernel = 3
seed = 5

[[models]]
name = "lin-b"
kind = "linear-decomp"
epochs = 40
moving_average_kernel = 3
seed = 5
"#;
    write_file(
        &config_path,
        &synth_config(3, 4, 3, 10, 20, &[2.0, 1.0], 0.05, models, TWO_METHODS),
    );
    let run_dir = dir.path().join("run");
    assert_exit(
        &sabench(&[
            "run",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            run_dir.to_str().unwrap(),
        ]),
        0,
    );
    assert_exit(&sabench(&["report", run_dir.to_str().unwrap()]), 0);
    for method in ["morris", "ablation"] {
        let matrix = read_json(&run_dir.join(format!("matrices/cross_model.{method}.json")));
        for row in matrix["values"].as_array().unwrap() {
            for v in row.as_array().unwrap() {
                assert_eq!(v.as_f64().unwrap(), 1.0, "method {method}");
            }
        }
    }
}

#[test]
fn report_requires_two_reports() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    std::fs::create_dir_all(run_dir.join("reports")).unwrap();
    write_file(
        &run_dir.join("reports/m.morris.json"),
        r#"{"method":"morris","model":"m","features":["f1","f2"],"mu":[1.0,2.0],"mu_star":[1.0,2.0],"sigma":[0.0,0.0],"window_count":1,"config":{}}"#,
    );
    let output = sabench(&["report", run_dir.to_str().unwrap()]);
    assert_exit(&output, 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("at least 2"));
}

#[test]
fn report_rejects_mixed_feature_lists() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    std::fs::create_dir_all(run_dir.join("reports")).unwrap();
    write_file(
        &run_dir.join("reports/a.morris.json"),
        r#"{"method":"morris","model":"a","features":["f1","f2"],"mu":[1.0,2.0],"mu_star":[1.0,2.0],"sigma":[0.0,0.0],"window_count":1,"config":{}}"#,
    );
    write_file(
        &run_dir.join("reports/b.morris.json"),
        r#"{"method":"morris","model":"b","features":["x","y"],"mu":[1.0,2.0],"mu_star":[1.0,2.0],"sigma":[0.0,0.0],"window_count":1,"config":{}}"#,
    );
    let output = sabench(&["report", run_dir.to_str().unwrap()]);
    assert_exit(&output, 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("feature"));
}

#[test]
fn report_truth_inversion_flips_perfect_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    write_file(
        &config_path,
        &synth_config(
            11,
            4,
            3,
            60,
            20,
            &[6.0, 4.0, 2.0, 1.0],
            0.0,
            "[[models]]\nname = \"linear\"\nkind = \"linear-decomp\"\nepochs = 120\nlearning_rate = 0.03\nmoving_average_kernel = 3\n",
            "[[methods]]\nkind = \"ablation\"\n\n[[methods]]\nkind = \"morris\"\nsamples_r = 8\n",
        ),
    );
    let run_dir = dir.path().join("run");
    assert_exit(
        &sabench(&[
            "run",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            run_dir.to_str().unwrap(),
        ]),
        0,
    );
    let truth = run_dir.join("ground_truth.json");
    assert_exit(
        &sabench(&[
            "report",
            run_dir.to_str().unwrap(),
            "--truth",
            truth.to_str().unwrap(),
        ]),
        0,
    );
    let accuracy = read_json(&run_dir.join("matrices/accuracy.json"));
    for row in accuracy.as_array().unwrap() {
        assert_eq!(row["spearman"].as_f64().unwrap(), 1.0);
    }
    // Inverted truth turns perfect agreement into perfect reversal.
    assert_exit(
        &sabench(&[
            "report",
            run_dir.to_str().unwrap(),
            "--truth",
            truth.to_str().unwrap(),
            "--invert-truth",
        ]),
        0,
    );
    let accuracy = read_json(&run_dir.join("matrices/accuracy.json"));
    for row in accuracy.as_array().unwrap() {
        assert_eq!(row["spearman"].as_f64().unwrap(), -1.0);
    }
}
