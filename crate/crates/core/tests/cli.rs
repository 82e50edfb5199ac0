use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ettscope"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn ettscope");
    if !out.status.success() {
        eprintln!("stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn small_synth(dir: &Path) -> PathBuf {
    let out = dir.join("synth");
    let status = run(&[
        "synth",
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "5",
        "--n-regular",
        "600",
        "--n-diffuse",
        "20",
        "--n-planted",
        "6",
    ]);
    assert!(status.status.success());
    out
}

#[test]
fn group_on_golden_interaction_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("group");
    let mut args = vec![
        "group".to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    for p in 1..=3 {
        args.push("--edges".into());
        args.push(
            fixture(&format!("interaction_pattern{p}.csv"))
                .display()
                .to_string(),
        );
        args.push("--labels".into());
        args.push(
            fixture(&format!("interaction_pattern{p}_labels.csv"))
                .display()
                .to_string(),
        );
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert!(run(&refs).status.success());
    let rows = csv_rows(&out.join("groups.csv"));
    let expected = [
        ("interaction_pattern1", 1.0, 1.0 / 3.0),
        ("interaction_pattern2", 1.0, 2.0),
        ("interaction_pattern3", 1.0 / 3.0, 2.0),
    ];
    assert_eq!(rows.len(), 3);
    for (row, (name, r, beta)) in rows.iter().zip(expected) {
        assert_eq!(row[0], name);
        assert_eq!(row[1], "2");
        assert_eq!(row[2], "3");
        assert!((row[3].parse::<f64>().unwrap() - r).abs() < 1e-12);
        assert!((row[4].parse::<f64>().unwrap() - beta).abs() < 1e-12);
    }
    assert!(out.join("group_metrics.csv").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn detect_recovers_planted_users() {
    let dir = tempfile::tempdir().unwrap();
    let synth = small_synth(dir.path());
    let out = dir.path().join("detect");
    let posts = synth.join("posts.jsonl");
    assert!(run(&[
        "detect",
        "--input",
        posts.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());

    let planted: Vec<String> = csv_rows(&synth.join("ground_truth.csv"))
        .into_iter()
        .filter(|r| r[1] == "planted")
        .map(|r| r[0].clone())
        .collect();
    let anomalous: Vec<String> = csv_rows(&out.join("anomalous_report.csv"))
        .into_iter()
        .filter(|r| r[5] == "true")
        .map(|r| r[0].clone())
        .collect();
    assert_eq!(planted.len(), 6);
    assert_eq!(anomalous, planted);
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("detect_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n_anomalous"], 6);
}

#[test]
fn empty_input_succeeds_with_notice() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.jsonl");
    fs::write(&input, "").unwrap();
    let out = dir.path().join("out");
    let result = run(&[
        "detect",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    assert_eq!(
        fs::read_to_string(out.join("anomalous_report.csv")).unwrap(),
        "user_id,tweet_count,distinct_words,narrowness,is_ett,is_anomalous\n"
    );
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("input contains no posts"));
}

#[test]
fn failures_exit_nonzero_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("missing.jsonl");
    let result = run(&[
        "detect",
        "--input",
        missing.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("missing.jsonl"));
    assert!(!out.exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "delta = \"many\"\n").unwrap();
    let result = run(&[
        "ett",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!result.status.success());
    assert!(!out.exists());

    assert!(!run(&["frobnicate"]).status.success());
    assert!(
        !run(&["detect", "--out", out.to_str().unwrap(), "--delta", "-1"])
            .status
            .success()
    );
    assert!(!out.exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let synth = small_synth(dir.path());
    let posts = synth.join("posts.jsonl");
    let out = dir.path().join("report");
    let args = [
        "report",
        "--input",
        posts.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
    ];
    assert!(run(&args).status.success());
    let first = read_dir_bytes(&out);
    fs::remove_dir_all(&out).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(read_dir_bytes(&out), first);
    for name in [
        "summary.csv",
        "null_text.csv",
        "hashtag_stats.csv",
        "groups.csv",
        "narrowness_histogram.csv",
    ] {
        assert!(first.contains_key(name), "{name}");
    }
    let groups = String::from_utf8(first["groups.csv"].clone()).unwrap();
    assert!(groups.lines().nth(1).unwrap().contains(",5,"), "{groups}");
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("posts.jsonl");
    let mut lines = String::new();
    for (user, n) in [("a", 1), ("b", 1), ("c", 2), ("heavy", 9)] {
        for i in 0..n {
            lines.push_str(&format!(
                "{{\"user_id\":\"{user}\",\"text\":\"word{i} other\",\"timestamp\":{}}}\n",
                100 + i
            ));
        }
    }
    fs::write(&input, lines).unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "input = [{:?}]\ndelta = 100.0\nmai = 3600\n",
            input.display().to_string()
        ),
    )
    .unwrap();

    let strict = dir.path().join("strict");
    assert!(run(&[
        "ett",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        strict.to_str().unwrap()
    ])
    .status
    .success());
    let rows = csv_rows(&strict.join("ett_intervals.csv"));
    assert!(rows.iter().all(|r| r[1] == "0"));

    let loose = dir.path().join("loose");
    let args = [
        "ett",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        loose.to_str().unwrap(),
        "--delta",
        "1.5",
    ];
    assert!(run(&args).status.success());
    let rows = csv_rows(&loose.join("ett_intervals.csv"));
    let flagged: Vec<&str> = rows
        .iter()
        .filter(|r| r[1] != "0")
        .map(|r| r[0].as_str())
        .collect();
    assert_eq!(flagged, vec!["heavy"]);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(loose.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["parameters"]["delta"], 1.5);
    assert_eq!(manifest["parameters"]["mai"], 3600);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn graph_writes_all_pattern_files() {
    let dir = tempfile::tempdir().unwrap();
    let synth = small_synth(dir.path());
    let out = dir.path().join("graph");
    let posts = synth.join("posts.jsonl");
    assert!(run(&[
        "graph",
        "--input",
        posts.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    for kind in ["edges", "coreness", "ccdf"] {
        for p in ["I", "II", "III"] {
            assert!(
                out.join(format!("{kind}_type_{p}.csv")).exists(),
                "{kind} {p}"
            );
        }
    }
    // Type-I is the planted 6-clique
    assert_eq!(csv_rows(&out.join("edges_type_I.csv")).len(), 15);
    let ccdf = fs::read_to_string(out.join("ccdf_type_I.csv")).unwrap();
    assert!(ccdf.lines().any(|l| l == "5,1"), "{ccdf}");
}
