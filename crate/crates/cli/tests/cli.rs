use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn geneteam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geneteam"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = geneteam(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_cohort(dir: &Path) {
    ok(&[
        "datagen",
        "--out",
        p(dir),
        "--genes",
        "3",
        "--min-length",
        "400",
        "--max-length",
        "600",
        "--n-control",
        "20",
        "--n-patient",
        "20",
        "--seed",
        "4",
    ]);
}

#[test]
fn exit_codes() {
    assert_eq!(geneteam(&["--help"]).status.code(), Some(0));
    assert_eq!(geneteam(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        geneteam(&["train", "--out", "m.json"]).status.code(),
        Some(1)
    );
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.csv");
    let out = geneteam(&["train", "--features", p(&missing), "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
    let bad = tmp.path().join("bad.fa");
    fs::write(&bad, ">g\nACGN\n").unwrap();
    let out = geneteam(&[
        "datagen",
        "--out",
        p(&tmp.path().join("c")),
        "--reference",
        p(&bad),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn datagen_features_train_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let cohort = tmp.path().join("cohort");
    small_cohort(&cohort);
    assert!(cohort.join("manifest.json").is_file());

    let cubes = tmp.path().join("cubes");
    ok(&[
        "cubes",
        "--cohort",
        p(&cohort),
        "--out",
        p(&cubes),
        "--resolution",
        "16",
        "--pgm-slice",
        "0",
    ]);
    let index = fs::read_to_string(cubes.join("index.csv")).unwrap();
    assert_eq!(index.lines().count(), 41);

    let from_cohort = tmp.path().join("a.csv");
    let from_cubes = tmp.path().join("b.csv");
    ok(&[
        "features",
        "--cohort",
        p(&cohort),
        "--resolution",
        "16",
        "--out",
        p(&from_cohort),
    ]);
    ok(&["features", "--cubes", p(&cubes), "--out", p(&from_cubes)]);
    let table = fs::read_to_string(&from_cohort).unwrap();
    assert_eq!(table, fs::read_to_string(&from_cubes).unwrap());
    let header = table.lines().next().unwrap();
    // Two axes of 16 pixels plus one value per gene.
    assert_eq!(header.split(',').count(), 2 + 16 + 16 + 3);

    let model = tmp.path().join("model.json");
    ok(&[
        "train",
        "--features",
        p(&from_cohort),
        "--out",
        p(&model),
        "--seed",
        "1",
    ]);
    let out = ok(&["eval", "--model", p(&model), "--features", p(&from_cohort)]);
    let metrics: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(metrics["samples"], 40);
    let oa = metrics["overall_accuracy"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&oa));
}

#[test]
fn experiment_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cohort = tmp.path().join("cohort");
    small_cohort(&cohort);
    let out = tmp.path().join("report");
    let config = tmp.path().join("config.toml");
    fs::write(
        &config,
        format!(
            "seed = 9\nresolution = 16\nruns = 3\noutput = {:?}\n\n[source]\nkind = \"cohort-dir\"\npath = {:?}\n\n[schedule]\nmode = \"balanced\"\nsizes = [5, 10]\n",
            p(&out),
            p(&cohort)
        ),
    )
    .unwrap();

    let snapshot = || {
        let mut files: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .map(|path| (path.clone(), fs::read(path).unwrap()))
            .collect();
        files.sort();
        files
    };
    ok(&["experiment", "--config", p(&config)]);
    let first = snapshot();
    fs::remove_dir_all(&out).unwrap();
    ok(&["experiment", "--config", p(&config)]);
    assert_eq!(first, snapshot());
    assert!(first.iter().any(|(path, _)| path.ends_with("report.json")));

    let printed = ok(&[
        "experiment",
        "--config",
        p(&config),
        "--runs",
        "7",
        "--print-config",
    ]);
    assert!(String::from_utf8_lossy(&printed.stdout).contains("runs = 7"));
}
