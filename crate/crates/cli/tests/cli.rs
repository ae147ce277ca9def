use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fqe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fqe"))
        .args(args)
        .env_remove("FQE_JOBS")
        .output()
        .expect("run fqe")
}

fn ok(args: &[&str]) -> Output {
    let out = fqe(args);
    assert!(
        out.status.success(),
        "fqe {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    raw: std::path::PathBuf,
    dataset: std::path::PathBuf,
    root: std::path::PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let raw = root.join("raw");
    ok(&[
        "synth",
        "--out-dir",
        s(&raw),
        "--count",
        "10",
        "--size",
        "80",
        "--seed",
        "3",
    ]);
    let dataset = root.join("ds.fqe");
    ok(&[
        "build",
        "--raw-dir",
        s(&raw),
        "--out",
        s(&dataset),
        "--q1-max",
        "4",
        "--k",
        "15",
    ]);
    Fixture {
        _dir: dir,
        raw,
        dataset,
        root,
    }
}

fn corpus(f: &Fixture, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = f.root.join(name);
    let mut args = vec!["make-corpus", "--raw-dir", s(&f.raw), "--out-dir", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn manifest_truths(dir: &Path) -> Vec<Vec<u32>> {
    let text = fs::read_to_string(dir.join("manifest.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').skip(7).map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn build_cardinality_and_determinism() {
    let f = fixture();
    let again = f.root.join("again.fqe");
    let out = ok(&[
        "build",
        "--raw-dir",
        s(&f.raw),
        "--out",
        s(&again),
        "--q1-max",
        "4",
        "--k",
        "15",
    ]);
    assert_eq!(fs::read(&again).unwrap(), fs::read(&f.dataset).unwrap());
    let table = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<usize>> = table
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 16);
    for r in &rows {
        assert!(r[2] <= 10 && r[3] <= 140, "{r:?}");
    }

    // Thread count does not change the output.
    let threaded = f.root.join("threaded.fqe");
    let out = Command::new(env!("CARGO_BIN_EXE_fqe"))
        .args([
            "build",
            "--raw-dir",
            s(&f.raw),
            "--out",
            s(&threaded),
            "--q1-max",
            "4",
        ])
        .env("FQE_JOBS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&threaded).unwrap(), fs::read(&f.dataset).unwrap());
}

#[test]
fn build_skips_unreadable_files_and_fails_when_none_remain() {
    let f = fixture();
    fs::write(f.raw.join("broken.pgm"), b"P5 nonsense").unwrap();
    let out = ok(&[
        "build",
        "--raw-dir",
        s(&f.raw),
        "--out",
        s(&f.root.join("x.fqe")),
        "--q1-max",
        "2",
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.pgm"));

    let bad = f.root.join("bad");
    fs::create_dir(&bad).unwrap();
    fs::write(bad.join("a.pgm"), b"junk").unwrap();
    let out = fqe(&[
        "build",
        "--raw-dir",
        s(&bad),
        "--out",
        s(&f.root.join("y.fqe")),
    ]);
    assert!(!out.status.success());
}

#[test]
fn corpus_manifest_and_determinism() {
    let f = fixture();
    let a = corpus(&f, "c1", &["--qf1", "90", "--qf2", "90", "--seed", "11"]);
    let b = corpus(&f, "c2", &["--qf1", "90", "--qf2", "90", "--seed", "11"]);
    let truths = manifest_truths(&a);
    assert_eq!(truths.len(), 10);
    for t in &truths {
        assert_eq!(t, &[3, 2, 2, 3, 2, 2, 3, 3, 3, 3, 4, 3, 3, 4, 5]);
    }
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap()
        );
    }

    let missing_seed = fqe(&[
        "make-corpus",
        "--raw-dir",
        s(&f.raw),
        "--out-dir",
        s(&f.root.join("c3")),
        "--qf1",
        "80",
    ]);
    assert!(!missing_seed.status.success());
    assert!(String::from_utf8_lossy(&missing_seed.stderr).contains("--seed"));
}

#[test]
fn explicit_table_file() {
    let f = fixture();
    let table: String = (0..8)
        .map(|r| {
            (0..8)
                .map(|c| (1 + (r + c) % 5).to_string())
                .collect::<Vec<_>>()
                .join(" ")
                + "\n"
        })
        .collect();
    let path = f.root.join("tables.txt");
    fs::write(&path, &table).unwrap();
    let dir = corpus(&f, "ct", &["--tables", s(&path), "--crop", "center"]);
    let truths = manifest_truths(&dir);
    assert!(truths.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(&truths[0][..3], &[1, 2, 2]);

    fs::write(&path, "1 2 3\n").unwrap();
    let out = fqe(&[
        "make-corpus",
        "--raw-dir",
        s(&f.raw),
        "--out-dir",
        s(&f.root.join("cx")),
        "--tables",
        s(&path),
        "--crop",
        "center",
    ]);
    assert!(!out.status.success());
}

fn check_schema(doc: &Value, k: usize) {
    let obj = doc.as_object().expect("object");
    for key in ["image", "params", "regularization_skipped", "positions"] {
        assert!(obj.contains_key(key), "missing {key}");
    }
    assert!(doc["image"].is_string());
    assert!(doc["regularization_skipped"].is_boolean());
    let p = &doc["params"];
    assert!(p["k"].is_u64() && p["q1_max"].is_u64() && p["n"].is_u64());
    assert!(p["w"].is_f64() && p["reg_variant"].is_string() && p["regularize"].is_boolean());
    let positions = doc["positions"].as_array().unwrap();
    assert_eq!(positions.len(), k);
    for (i, pos) in positions.iter().enumerate() {
        assert_eq!(pos["position"].as_u64(), Some(i as u64 + 1));
        assert!(pos["q2"].is_u64());
        let status = pos["status"].as_str().unwrap();
        assert!(["ok", "degenerate", "unsupported"].contains(&status));
        for field in ["estimate", "raw"] {
            let v = &pos[field];
            if status == "ok" {
                let q = v.as_u64().unwrap();
                assert!((1..=p["q1_max"].as_u64().unwrap()).contains(&q));
            } else {
                assert_eq!(v.as_str(), Some(status));
            }
        }
        assert_eq!(pos["distance"].is_f64(), status == "ok");
    }
}

#[test]
fn estimate_json_csv_and_no_reg() {
    let f = fixture();
    let c = corpus(&f, "c", &["--qf1", "75", "--qf2", "95", "--seed", "2"]);
    let image = c.join("qf75_00000.jpg");
    let out = ok(&["estimate", "--image", s(&image), "--dataset", s(&f.dataset)]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    check_schema(&doc, 15);
    assert_eq!(doc["params"]["k"], 15);
    assert_eq!(doc["params"]["n"], 1000);
    assert_eq!(doc["params"]["w"], 0.92);
    assert_eq!(doc["params"]["reg_variant"], "reg3");
    assert_eq!(doc["params"]["q1_max"], 4);

    let out = ok(&[
        "estimate",
        "--image",
        s(&image),
        "--dataset",
        s(&f.dataset),
        "--no-reg",
    ]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    check_schema(&doc, 15);
    assert_eq!(doc["params"]["regularize"], false);
    for pos in doc["positions"].as_array().unwrap() {
        assert_eq!(pos["estimate"], pos["raw"]);
    }

    let out = ok(&[
        "estimate",
        "--image",
        s(&image),
        "--dataset",
        s(&f.dataset),
        "--format",
        "csv",
        "--k",
        "6",
        "--reg-variant",
        "reg1",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "position,q2,status,estimate,raw,distance");
    assert_eq!(lines.len(), 7);
}

#[test]
fn estimate_exit_codes() {
    let f = fixture();
    let c = corpus(&f, "c", &["--qf1", "80", "--qf2", "90", "--seed", "2"]);
    let image = c.join("qf80_00000.jpg");

    let junk = f.root.join("junk.jpg");
    fs::write(&junk, b"not a jpeg").unwrap();
    assert_eq!(
        fqe(&["estimate", "--image", s(&junk), "--dataset", s(&f.dataset)])
            .status
            .code(),
        Some(2)
    );

    let mut bytes = fs::read(&f.dataset).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x55;
    let bad_ds = f.root.join("bad.fqe");
    fs::write(&bad_ds, &bytes).unwrap();
    assert_eq!(
        fqe(&["estimate", "--image", s(&image), "--dataset", s(&bad_ds)])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        fqe(&[
            "estimate",
            "--image",
            s(&image),
            "--dataset",
            s(&f.dataset),
            "--k",
            "30"
        ])
        .status
        .code(),
        Some(3)
    );

    // Second factors at quality 30 all exceed the dataset's q1_max of 4.
    let coarse = corpus(&f, "coarse", &["--qf1", "80", "--qf2", "30", "--seed", "2"]);
    let out = fqe(&[
        "estimate",
        "--image",
        s(&coarse.join("qf80_00000.jpg")),
        "--dataset",
        s(&f.dataset),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    check_schema(&doc, 15);
}

#[test]
fn evaluate_reports_match_single_estimates() {
    let f = fixture();
    let c = corpus(&f, "c", &["--qf1", "80,95", "--qf2", "95", "--seed", "4"]);
    let out = ok(&[
        "evaluate",
        "--corpus-dir",
        s(&c),
        "--dataset",
        s(&f.dataset),
    ]);
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("qf80") && summary.contains("qf95") && summary.contains("mean"));

    let report: Value = serde_json::from_slice(&fs::read(c.join("report.json")).unwrap()).unwrap();
    let cells = report["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    for cell in cells {
        for pos in cell["positions"].as_array().unwrap() {
            let total = pos["total"].as_u64().unwrap();
            let excluded =
                pos["degenerate"].as_u64().unwrap() + pos["unsupported"].as_u64().unwrap();
            assert_eq!(total, 10);
            assert!(pos["reg_correct"].as_u64().unwrap() <= total - excluded);
        }
    }
    let csv = fs::read_to_string(c.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 16);

    let estimates = fs::read_to_string(c.join("estimates.csv")).unwrap();
    let row = estimates
        .lines()
        .find(|l| l.starts_with("qf80_00003.jpg,"))
        .unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    let out = ok(&[
        "estimate",
        "--image",
        s(&c.join("qf80_00003.jpg")),
        "--dataset",
        s(&f.dataset),
        "--format",
        "csv",
    ]);
    let single: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().to_string())
        .collect();
    assert_eq!(
        fields[2 + 30..],
        single.iter().map(String::as_str).collect::<Vec<_>>()[..]
    );

    // Byte-deterministic reports.
    let again = f.root.join("again");
    ok(&[
        "evaluate",
        "--corpus-dir",
        s(&c),
        "--dataset",
        s(&f.dataset),
        "--out-dir",
        s(&again),
    ]);
    for name in ["report.csv", "report.json", "estimates.csv"] {
        assert_eq!(
            fs::read(c.join(name)).unwrap(),
            fs::read(again.join(name)).unwrap()
        );
    }

    fs::remove_file(c.join("qf95_00001.jpg")).unwrap();
    let out = fqe(&[
        "evaluate",
        "--corpus-dir",
        s(&c),
        "--dataset",
        s(&f.dataset),
    ]);
    assert!(!out.status.success());
}
