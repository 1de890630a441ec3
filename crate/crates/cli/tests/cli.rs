use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn simnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simnet"))
        .args(args)
        .output()
        .expect("simnet runs")
}

fn simnet_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simnet"))
        .args(args)
        .env(key, value)
        .output()
        .expect("simnet runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic dataset plus a config running the full pipeline on it.
fn dataset(dir: &Path) -> PathBuf {
    ok(&simnet(&["synth", "--out", s(dir), "--images-per-country", "80", "--dim", "16"]));
    let config = dir.join("run.toml");
    fs::write(
        &config,
        "[input]\nmanifest = \"manifest.jsonl\"\nvectors = \"vectors.simvec\"\n\
         [output]\ndir = \"out\"\n[layout]\niterations = 60\n",
    )
    .unwrap();
    config
}

fn read_tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn ingest_validate_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let out = ok(&simnet(&[
        "ingest",
        "validate",
        "--manifest",
        s(&dir.path().join("manifest.jsonl")),
        "--vectors",
        s(&dir.path().join("vectors.simvec")),
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["images"], 320);
    assert_eq!(v["dim"], 16);
    assert_eq!(v["countries"]["iran"], 80);
}

#[test]
fn step_by_step_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d);
    let graph = d.join("g.graphml");
    ok(&simnet(&[
        "graph",
        "build",
        "--manifest",
        s(&d.join("manifest.jsonl")),
        "--vectors",
        s(&d.join("vectors.simvec")),
        "--country",
        "Russia",
        "-o",
        s(&graph),
    ]));

    let metrics: serde_json::Value = serde_json::from_str(&ok(&simnet(&["metrics", "--graph", s(&graph)]))).unwrap();
    assert_eq!(metrics["n_nodes"], 80);

    let annotated = d.join("annotated.json");
    let clusters: serde_json::Value = serde_json::from_str(&ok(&simnet(&[
        "clusters",
        "--graph",
        s(&graph),
        "--top",
        "3",
        "--reps",
        "2",
        "--annotated",
        s(&annotated),
    ])))
    .unwrap();
    let list = clusters["clusters"].as_array().unwrap();
    assert_eq!(list.len(), 3);
    assert!(list.iter().all(|c| c["representatives"].as_array().unwrap().len() <= 2));
    assert!(fs::read_to_string(&annotated).unwrap().contains("\"community\""));

    let positions = d.join("pos.csv");
    ok(&simnet(&[
        "layout",
        "--graph",
        s(&annotated),
        "--iterations",
        "50",
        "--barnes-hut",
        "-o",
        s(&positions),
    ]));
    let csv = fs::read_to_string(&positions).unwrap();
    assert!(csv.starts_with("image_id,x,y\n"));
    assert_eq!(csv.lines().count(), 81);

    let accounts = d.join("accounts.graphml");
    ok(&simnet(&["fold", "accounts", "--graph", s(&graph), "-o", s(&accounts)]));
    assert!(fs::read_to_string(&accounts).unwrap().contains("image_count"));

    let svg = d.join("g.svg");
    ok(&simnet(&[
        "render",
        "--graph",
        s(&annotated),
        "--positions",
        s(&positions),
        "-o",
        s(&svg),
    ]));
    let svg = fs::read_to_string(&svg).unwrap();
    assert_eq!(svg.matches("<circle").count(), 80);
}

#[test]
fn run_is_reproducible_and_verifiable() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path());
    let out = dir.path().join("out");
    let table = ok(&simnet(&["run", "-c", s(&config)]));
    assert!(table.contains("all\t320\t"));
    assert!(table.lines().any(|l| l.starts_with("venezuela\t80\t")));
    let first = read_tree(&out);
    for name in ["all/graph.graphml", "all/countries.graphml", "china/positions.csv", "table.csv"] {
        assert!(first.iter().any(|(p, _)| p == Path::new(name)), "{name} missing");
    }
    ok(&simnet(&["run", "-c", s(&config), "--verify"]));

    fs::remove_dir_all(&out).unwrap();
    ok(&simnet_env(&["run", "-c", s(&config)], "SIMNET_THREADS", "1"));
    assert_eq!(first, read_tree(&out), "single-threaded rerun differs");

    fs::write(out.join("table.csv"), "tampered\n").unwrap();
    let verify = simnet(&["run", "-c", s(&config), "--verify"]);
    assert_eq!(verify.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&verify.stderr).contains("table.csv"));
}

#[test]
fn overrides_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path());
    ok(&simnet(&[
        "run",
        "-c",
        s(&config),
        "--set",
        "scope=all",
        "--set",
        "output.dir=\"alt\"",
        "--set",
        "export.svg=false",
    ]));
    let alt = dir.path().join("alt");
    assert!(alt.join("all/graph.graphml").exists());
    assert!(!alt.join("all/graph.svg").exists());
    assert!(!alt.join("china").exists());
}

#[test]
fn config_errors_exit_2_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path());
    let out = simnet(&["run", "-c", s(&config), "--set", "input.manifest=\"missing.jsonl\""]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());

    let out = simnet(&["run", "-c", s(&config), "--set", "layout.iterations=0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = simnet(&["run", "-c", s(&config), "--set", "knn.bogus=1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = simnet(&["run", "-c", s(&dir.path().join("nope.toml"))]);
    assert_eq!(out.status.code(), Some(2));

    let out = simnet_env(&["run", "-c", s(&config)], "SIMNET_THREADS", "many");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_3_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path());
    let manifest = dir.path().join("manifest.jsonl");
    let mut text = fs::read_to_string(&manifest).unwrap();
    text = text.replacen("\"country\"", "\"kountry\"", 1);
    let line = text.lines().position(|l| l.contains("kountry")).unwrap() + 1;
    fs::write(&manifest, text).unwrap();
    let out = simnet(&["run", "-c", s(&config)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("line {line}")), "{err}");
}

#[test]
fn locked_output_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path());
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join(".simnet.lock"), "1").unwrap();
    let res = simnet(&["run", "-c", s(&config)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("locked"));
}
