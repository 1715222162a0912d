use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cesar::data::write_jsonl;
use cesar::synthetic::{SyntheticConfig, SyntheticCorpus};

fn cesar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cesar"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = cesar(args);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{args:?} failed:\n{}\n{}",
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

fn code(args: &[&str]) -> i32 {
    cesar(args).status.code().expect("exit code")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    /// A small synthetic corpus written as the CLI's input files.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let corpus = SyntheticCorpus::generate(&SyntheticConfig {
            causal_records: 120,
            non_causal_records: 80,
            held_out: 30,
            copa: 20,
            ..SyntheticConfig::default()
        });
        write_jsonl(root.join("source.jsonl"), &corpus.records).unwrap();
        write_jsonl(root.join("held_out.jsonl"), &corpus.held_out).unwrap();
        write_jsonl(root.join("copa.jsonl"), &corpus.copa).unwrap();
        Self { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn train(&self, out: &str) -> PathBuf {
        let data = self.path("train.jsonl");
        if !data.exists() {
            ok(&[
                "augment",
                "--input",
                s(&self.path("source.jsonl")),
                "--output",
                s(&data),
            ]);
        }
        let ckpt = self.path(out);
        ok(&[
            "train",
            "--data",
            s(&data),
            "--out",
            s(&ckpt),
            "--dim",
            "16",
            "--epochs",
            "2",
        ]);
        ckpt
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert!(ok(&["eval", "--help"]).contains("--tie-policy"));
}

#[test]
fn usage_and_validation_errors_exit_one() {
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["score", "--cause", "a", "--effect", "b"]), 1);
    assert_eq!(
        code(&["score", "--metric", "cesar", "--cause", "a", "--effect", "b"]),
        1
    );
    assert_eq!(
        code(&[
            "score",
            "--metric",
            "cesar",
            "--model",
            "/nonexistent/m.txt",
            "--cause",
            "a",
            "--effect",
            "b"
        ]),
        1
    );
    assert_eq!(
        code(&[
            "eval",
            "--metric",
            "ctcw",
            "--tie-policy",
            "sometimes",
            "--data",
            &fixture("case.jsonl")
        ]),
        1
    );
    assert_eq!(
        code(&["score", "--metric", "ceq", "--cause", "a", "--effect", "b", "--role", "maybe"]),
        1
    );
}

#[test]
fn malformed_input_files_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("model.txt");
    std::fs::write(&bad, "not a checkpoint\n").unwrap();
    assert_eq!(
        code(&[
            "score",
            "--metric",
            "cesar",
            "--model",
            s(&bad),
            "--cause",
            "a",
            "--effect",
            "b"
        ]),
        1
    );
    let data = dir.path().join("bad.jsonl");
    std::fs::write(&data, "{\"id\": 3}\n").unwrap();
    assert_eq!(code(&["eval", "--metric", "ctcw", "--data", s(&data)]), 1);
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out_dir = blocker.join("shift");
    let args = [
        "shift-report",
        "--metric",
        "ctcw",
        "--data",
        &fixture("case.jsonl"),
        "--out-dir",
        s(&out_dir),
    ];
    assert_eq!(code(&args), 2);
    let src = dir.path().join("source.jsonl");
    std::fs::write(
        &src,
        "{\"cause\": \"a b\", \"effect\": \"c d\", \"is_causal\": false}\n",
    )
    .unwrap();
    assert_eq!(
        code(&[
            "augment",
            "--input",
            s(&src),
            "--output",
            s(&blocker.join("train.jsonl"))
        ]),
        2
    );
}

#[test]
fn config_file_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"metric": "ctcw", "fixtures": null, "unknown_key": 1}"#).unwrap();
    assert_eq!(
        code(&["--config", s(&cfg), "eval", "--data", &fixture("case.jsonl")]),
        1
    );
    std::fs::write(
        &cfg,
        format!(
            r#"{{"metric": "ctcw", "provider": "mock", "fixtures": {:?}}}"#,
            fixture("ctcw_case_study.jsonl")
        ),
    )
    .unwrap();
    let out = ok(&["--config", s(&cfg), "eval", "--data", &fixture("case.jsonl")]);
    assert!(out.contains("ctcw | 100.0 | 100.0 | 100.0"), "{out}");
}

#[test]
fn ctcw_case_study_through_the_cli() {
    let fixtures = fixture("ctcw_case_study.jsonl");
    let base = [
        "score",
        "--metric",
        "ctcw",
        "--provider",
        "mock",
        "--fixtures",
        &fixtures,
        "--cause",
        "The earthquake hit a city.",
        "--effect",
        "Mental health issues arose.",
    ];
    assert_eq!(ok(&base), "score 0.4\n");
    let mut with = base.to_vec();
    with.extend([
        "--addition",
        "A disaster usually leads to suffering and loss of people.",
        "--role",
        "supporter",
    ]);
    assert_eq!(ok(&with), "score 0.6\n");
}

#[test]
fn train_score_eval_copa_shift_round_trip() {
    let ws = Workspace::new();
    let ckpt = ws.train("model.txt");
    let model = s(&ckpt);

    let score = ok(&[
        "score",
        "--metric",
        "cesar",
        "--model",
        model,
        "--cause",
        "the c0a c0b.",
        "--effect",
        "then e0a e0b.",
    ]);
    let value: f64 = score.trim().strip_prefix("score ").unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&value));

    let breakdown = ok(&[
        "score",
        "--metric",
        "cesar",
        "--model",
        model,
        "--breakdown",
        "--cause",
        "the c0a c0b.",
        "--effect",
        "then e0a e0b.",
    ]);
    assert!(
        breakdown.starts_with(&score.trim_end().to_string()),
        "{breakdown}"
    );
    assert_eq!(
        code(&[
            "score",
            "--metric",
            "ctcw",
            "--breakdown",
            "--cause",
            "a",
            "--effect",
            "b"
        ]),
        1
    );

    let held_out = ws.path("held_out.jsonl");
    let report = ws.path("report.json");
    let one = ok(&[
        "eval",
        "--metric",
        "cesar",
        "--model",
        model,
        "--data",
        s(&held_out),
        "--report",
        s(&report),
    ]);
    let four = ok(&[
        "eval",
        "--metric",
        "cesar",
        "--model",
        model,
        "--data",
        s(&held_out),
        "--jobs",
        "4",
    ]);
    assert_eq!(one, four);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["outcomes"].as_array().unwrap().len(), 30);

    let uniform = ok(&[
        "eval",
        "--metric",
        "cesar",
        "--model",
        model,
        "--attention",
        "uniform",
        "--data",
        s(&held_out),
    ]);
    assert_ne!(one, uniform);

    let copa = ok(&[
        "copa",
        "--metric",
        "cesar",
        "--model",
        model,
        "--data",
        s(&ws.path("copa.jsonl")),
    ]);
    assert!(copa.contains("of 20"), "{copa}");

    let out_dir = ws.path("shift");
    ok(&[
        "shift-report",
        "--metric",
        "cesar",
        "--model",
        model,
        "--data",
        s(&held_out),
        "--out-dir",
        s(&out_dir),
    ]);
    for f in ["scores.csv", "kde.csv", "summary.txt", "shift.svg"] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }
}

#[test]
fn training_is_deterministic() {
    let ws = Workspace::new();
    let a = std::fs::read(ws.train("a.txt")).unwrap();
    let b = std::fs::read(ws.train("b.txt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn augment_split_writes_three_parts() {
    let ws = Workspace::new();
    let dir = ws.path("parts");
    let out = ok(&[
        "augment",
        "--input",
        s(&ws.path("source.jsonl")),
        "--split-dir",
        s(&dir),
    ]);
    assert_eq!(out.lines().count(), 3);
    for part in ["train", "dev", "test"] {
        assert!(dir.join(format!("{part}.jsonl")).exists());
    }
}

#[test]
fn ceq_and_rock_through_the_cli() {
    let ws = Workspace::new();
    let src = ws.path("source.jsonl");
    let held_out = ws.path("held_out.jsonl");
    let out = ok(&[
        "eval",
        "--metric",
        "ceq",
        "--corpus",
        s(&src),
        "--data",
        s(&held_out),
    ]);
    assert!(out.starts_with("metric |"), "{out}");
    assert_eq!(
        code(&[
            "eval",
            "--metric",
            "ceq",
            "--corpus",
            s(&src),
            "--alpha",
            "-1",
            "--data",
            s(&held_out)
        ]),
        1
    );

    let oracles = ws.path("rock.json");
    std::fs::write(
        &oracles,
        r#"{"precedence": {"default": 0.5, "entries": []}, "interventions": ["nothing happened."]}"#,
    )
    .unwrap();
    let out = ok(&[
        "eval",
        "--metric",
        "rock",
        "--oracles",
        s(&oracles),
        "--data",
        s(&held_out),
        "--tie-policy",
        "lenient",
    ]);
    assert!(out.contains("rock | 100.0 | 100.0 | 100.0"), "{out}");
}
