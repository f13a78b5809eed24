use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hdfl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdfl"))
        .args(args)
        .env_remove("HDFL_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = hdfl(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

#[test]
fn gen_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.json"), path(dir.path(), "b.json"));
    for out in [&a, &b] {
        ok(&[
            "gen",
            "--kind",
            "subspace_gaussians",
            "--n",
            "100",
            "--m",
            "2",
            "--seed",
            "7",
            "-o",
            out,
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.contains("subspace_gaussians"));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.json"), path(dir.path(), "b.json"));
    ok(&[
        "gen",
        "--kind",
        "concentric_spheres",
        "--n",
        "5",
        "--per-class",
        "4",
        "--seed",
        "9",
        "-o",
        &a,
    ]);
    let out = Command::new(env!("CARGO_BIN_EXE_hdfl"))
        .args([
            "gen",
            "--kind",
            "concentric_spheres",
            "--n",
            "5",
            "--per-class",
            "4",
            "-o",
            &b,
        ])
        .env("HDFL_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn missing_seed_is_a_usage_error() {
    let out = hdfl(&["gen", "--kind", "subspace_gaussians", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--seed"), "{}", stderr(&out));

    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "d.json");
    ok(&[
        "gen",
        "--kind",
        "subspace_gaussians",
        "--n",
        "10",
        "--seed",
        "1",
        "-o",
        &data,
    ]);
    let out = hdfl(&["train", "--data", &data, "--model", "mlp"]);
    assert_eq!(out.status.code(), Some(2));
    // the tree learner is deterministic and needs no seed
    ok(&[
        "train",
        "--data",
        &data,
        "--model",
        "tree",
        "-o",
        &path(dir.path(), "t.json"),
    ]);
}

#[test]
fn folded_curve_twonn_is_about_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "fold.json");
    ok(&[
        "gen",
        "--kind",
        "folded_curve",
        "--n",
        "10",
        "--per-class",
        "500",
        "--noise",
        "0",
        "--seed",
        "3",
        "-o",
        &data,
    ]);
    let out = ok(&["lid", "twonn", "--data", &data]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("anchor_index,group,estimator,k,value"));
    let value: f64 = lines
        .next()
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 1.0).abs() < 0.3, "{value}");
}

#[test]
fn experiment_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "margin_collapse.json");
    fs::write(
        &cfg,
        r#"{"experiment": "margin_collapse", "dims": [5, 20, 50], "seeds": 4}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (run, workers) in [("a", "1"), ("b", "3")] {
        let csv = path(dir.path(), &format!("{run}.csv"));
        ok(&[
            "experiment",
            "--config",
            &cfg,
            "--seed",
            "1",
            "--workers",
            workers,
            "-o",
            &csv,
        ]);
        outputs.push((
            fs::read(&csv).unwrap(),
            fs::read(path(dir.path(), &format!("{run}.json"))).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(csv.starts_with("experiment,N,metric,value,ci_lo,ci_hi,seeds\n"));
}

#[test]
fn overrides_replace_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "c.json");
    fs::write(
        &cfg,
        r#"{"experiment": "transfer_matrix", "dims": [10, 20]}"#,
    )
    .unwrap();
    let csv = path(dir.path(), "out.csv");
    ok(&[
        "experiment",
        "--config",
        &cfg,
        "--seed",
        "2",
        "--set",
        "dims=[5]",
        "--set",
        "models=2",
        "-o",
        &csv,
    ]);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.contains("transfer_matrix,5,transfer_0_1,"));
    assert!(!text.contains(",10,"));
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "bad.json");
    let csv = path(dir.path(), "out.csv");
    for (body, field) in [
        (
            r#"{"experiment": "margin_collapse", "seeds": "many"}"#,
            "seeds",
        ),
        (
            r#"{"experiment": "margin_collapse", "train": {"epochs": -1}}"#,
            "train.epochs",
        ),
        (r#"{"experiment": "margin_collapse", "dimz": [3]}"#, "dimz"),
        (
            r#"{"experiment": "margin_collapse", "dims": [50, 10]}"#,
            "dims",
        ),
    ] {
        fs::write(&cfg, body).unwrap();
        let out = hdfl(&["experiment", "--config", &cfg, "--seed", "1", "-o", &csv]);
        assert_eq!(out.status.code(), Some(3), "{body}");
        let msg = stderr(&out);
        assert!(msg.contains(&format!("`{field}`")), "{body}: {msg}");
        assert_eq!(msg.trim_end().lines().count(), 1);
    }
    fs::write(&cfg, "{not json").unwrap();
    assert!(
        !hdfl(&["experiment", "--config", &cfg, "--seed", "1", "-o", &csv])
            .status
            .success()
    );
}

#[test]
fn experiment_refuses_to_overwrite_its_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "run.json");
    let body = r#"{"experiment": "fragile_box"}"#;
    fs::write(&cfg, body).unwrap();
    let out = hdfl(&[
        "experiment",
        "--config",
        &cfg,
        "--seed",
        "1",
        "-o",
        &path(dir.path(), "run.csv"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(fs::read_to_string(&cfg).unwrap(), body);
}

#[test]
fn linear_model_complexity_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model) = (path(dir.path(), "d.json"), path(dir.path(), "m.json"));
    ok(&[
        "gen",
        "--kind",
        "subspace_gaussians",
        "--n",
        "20",
        "--per-class",
        "30",
        "--seed",
        "4",
        "-o",
        &data,
    ]);
    ok(&[
        "train", "--data", &data, "--model", "logistic", "--seed", "4", "-o", &model,
    ]);
    let out = ok(&[
        "probe",
        "--model",
        &model,
        "--data",
        &data,
        "--complexity",
        "--radius",
        "auto",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let anchors = report["complexity"]["anchors"].as_array().unwrap();
    assert_eq!(anchors.len(), 60);
    assert!(anchors.iter().all(|a| a["independent_count"] == 1));
    assert!(report["fragility"]["shrink_factor"].as_f64().unwrap() < 1.0);
}

#[test]
fn attack_csv_reports_transfer() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "d.json");
    let (m1, m2) = (path(dir.path(), "m1.json"), path(dir.path(), "m2.json"));
    ok(&[
        "gen",
        "--kind",
        "subspace_gaussians",
        "--n",
        "30",
        "--per-class",
        "10",
        "--seed",
        "5",
        "-o",
        &data,
    ]);
    ok(&["train", "--data", &data, "--seed", "1", "-o", &m1]);
    ok(&["train", "--data", &data, "--seed", "2", "-o", &m2]);
    let out = ok(&[
        "attack",
        "--model",
        &m1,
        "--data",
        &data,
        "--transfer-to",
        &m2,
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("point_index,attack_kind,norm,success,transfer_target,transferred")
    );
    assert_eq!(lines.count(), 40);
    assert!(text.contains(",minimal,"));
}

#[test]
fn plot_draws_one_polyline_per_metric() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "mc_config.json");
    let csv = path(dir.path(), "mc.csv");
    fs::write(
        &cfg,
        r#"{"experiment": "margin_collapse", "dims": [5, 20], "seeds": 3}"#,
    )
    .unwrap();
    ok(&["experiment", "--config", &cfg, "--seed", "1", "-o", &csv]);
    let svg = String::from_utf8(ok(&["plot", "--input", &csv, "--logx"]).stdout).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 5);
    let again = ok(&["plot", "--input", &csv, "--logx"]).stdout;
    assert_eq!(svg.as_bytes(), again.as_slice());
}

#[test]
fn plot_rejects_empty_input_and_unknown_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let empty = path(dir.path(), "empty.csv");
    fs::write(&empty, "").unwrap();
    let out = hdfl(&["plot", "--input", &empty]);
    assert_eq!(out.status.code(), Some(3));
    fs::write(&empty, "experiment,N,metric,value,ci_lo,ci_hi,seeds\n").unwrap();
    assert_eq!(hdfl(&["plot", "--input", &empty]).status.code(), Some(3));

    let input = golden("sphere_scaling.csv").to_string_lossy().into_owned();
    let out = hdfl(&["plot", "--input", &input, "--metric", "no_such_metric"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no_such_metric"));
}

#[test]
fn loglog_plot_matches_golden_file() {
    let input = golden("sphere_scaling.csv").to_string_lossy().into_owned();
    let out = ok(&[
        "plot",
        "--input",
        &input,
        "--metric",
        "nearest_error_distance",
        "--loglog",
        "--ylabel",
        "distance",
    ]);
    let svg = String::from_utf8(out.stdout).unwrap();
    assert!(svg.contains(">log10 N</text>"));
    assert!(svg.contains(">log10 distance</text>"));
    let expected = fs::read_to_string(golden("sphere_scaling_loglog.svg")).unwrap();
    assert_eq!(svg, expected);
}
