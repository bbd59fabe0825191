use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nbad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nbad"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = nbad(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Asserts a failed run whose stderr ends in one `error[code]:` line.
fn fails_with(args: &[&str], code: &str) {
    let out = nbad(args);
    assert!(!out.status.success(), "{args:?} succeeded");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let errors: Vec<&str> = stderr.lines().filter(|l| l.starts_with("error[")).collect();
    assert_eq!(errors.len(), 1, "{args:?}: {stderr}");
    assert!(
        errors[0].starts_with(&format!("error[{code}]: ")),
        "{args:?}: {}",
        errors[0]
    );
    assert_eq!(stderr.lines().last(), Some(errors[0]), "{args:?}: {stderr}");
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Run {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

/// Small phantom corpus, prepared and trained for a few iterations.
fn trained() -> Run {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let run = Run { _dir: dir, root };
    let (vols, data) = (run.path("vols"), run.path("data"));
    ok(&[
        "phantom",
        "--out",
        s(&vols),
        "--per-class",
        "3",
        "--dims",
        "32",
        "--seed",
        "5",
    ]);
    ok(&[
        "prepare",
        "--input",
        s(&vols),
        "--out",
        s(&data),
        "--size",
        "64",
        "--train-fraction",
        "0.7",
        "--seed",
        "5",
    ]);
    train(&run, "model.ckpt", "curves.csv");
    run
}

fn train(run: &Run, ckpt: &str, curves: &str) {
    ok(&[
        "train",
        "--manifest",
        s(&run.path("data/manifest.jsonl")),
        "--preset",
        "desk",
        "--lr",
        "0.001",
        "--weight-decay",
        "0.0005",
        "--momentum",
        "0.9",
        "--batch",
        "4",
        "--iters",
        "6",
        "--eval-every",
        "3",
        "--seed",
        "1",
        "--checkpoint",
        s(&run.path(ckpt)),
        "--curves",
        s(&run.path(curves)),
    ]);
}

#[test]
fn train_eval_predict() {
    let run = trained();
    let curves = std::fs::read_to_string(run.path("curves.csv")).unwrap();
    let lines: Vec<&str> = curves.lines().collect();
    assert_eq!(lines[0], "iteration,train_loss,test_loss,test_accuracy");
    assert_eq!(lines.len(), 7);

    train(&run, "again.ckpt", "again.csv");
    assert_eq!(
        std::fs::read(run.path("model.ckpt")).unwrap(),
        std::fs::read(run.path("again.ckpt")).unwrap()
    );
    assert_eq!(curves, std::fs::read_to_string(run.path("again.csv")).unwrap());

    let ckpt = run.path("model.ckpt");
    let manifest = run.path("data/manifest.jsonl");
    let report = run.path("report.json");
    let args = [
        "eval",
        "--checkpoint",
        s(&ckpt),
        "--manifest",
        s(&manifest),
        "--split",
        "test",
        "--report",
        s(&report),
    ];
    let first = ok(&args);
    assert_eq!(first, ok(&args));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let cm = json["confusion"].as_array().expect("confusion matrix");
    assert_eq!(cm.len(), 5);

    let png = run.path("data/hgg/hgg_000.nii.png");
    let out = ok(&["predict", "--checkpoint", s(&ckpt), "--image", s(&png)]);
    let mut lines = out.lines();
    let class: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    let scores: Vec<f64> = lines
        .next()
        .unwrap()
        .split_whitespace()
        .skip(1)
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(class[0], "class:");
    let id: usize = class[1].parse().unwrap();
    assert_eq!(nbad::class_id(class[2]), Some(id));
    assert_eq!(scores.len(), 5);
    assert_eq!(nbad::model::argmax(&scores), id);

    fails_with(
        &[
            "predict",
            "--checkpoint",
            s(&ckpt),
            "--image",
            s(&run.path("curves.csv")),
        ],
        "BadInput",
    );
    let small = run.path("small.png");
    ok(&[
        "convert",
        "--in",
        s(&run.path("vols/healthy/healthy_000.nii")),
        "--plane",
        "axial",
        "--index",
        "3",
        "--out",
        s(&small),
    ]);
    fails_with(&["predict", "--checkpoint", s(&ckpt), "--image", s(&small)], "BadInput");
    fails_with(
        &[
            "predict",
            "--checkpoint",
            s(&run.path("curves.csv")),
            "--image",
            s(&png),
        ],
        "BadMagic",
    );
}

#[test]
fn prepare_skips_one_corrupt_volume() {
    let dir = tempfile::tempdir().unwrap();
    let (vols, data) = (dir.path().join("vols"), dir.path().join("data"));
    ok(&[
        "phantom",
        "--out",
        s(&vols),
        "--per-class",
        "10",
        "--dims",
        "32",
        "--seed",
        "42",
    ]);
    let victim = vols.join("lgg/lgg_004.nii");
    let bytes = std::fs::read(&victim).unwrap();
    std::fs::write(&victim, &bytes[..bytes.len() / 2]).unwrap();

    let out = nbad(&[
        "prepare",
        "--input",
        s(&vols),
        "--out",
        s(&data),
        "--size",
        "64",
        "--seed",
        "42",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lgg_004.nii"));
    let manifest = std::fs::read_to_string(data.join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 49);
}

#[test]
fn prepare_fails_when_a_class_has_nothing_usable() {
    let dir = tempfile::tempdir().unwrap();
    let vols = dir.path().join("vols");
    ok(&[
        "phantom",
        "--out",
        s(&vols),
        "--per-class",
        "2",
        "--dims",
        "32",
        "--seed",
        "1",
    ]);
    for entry in std::fs::read_dir(vols.join("ms")).unwrap() {
        std::fs::write(entry.unwrap().path(), b"junk").unwrap();
    }
    let out = dir.path().join("data");
    fails_with(
        &["prepare", "--input", s(&vols), "--out", s(&out), "--size", "64"],
        "AllFilesFailed",
    );
}

#[test]
fn convert_is_deterministic_and_checks_index() {
    let dir = tempfile::tempdir().unwrap();
    let vols = dir.path().join("vols");
    ok(&[
        "phantom",
        "--out",
        s(&vols),
        "--per-class",
        "1",
        "--dims",
        "32",
        "--seed",
        "3",
    ]);
    let vol = vols.join("healthy/healthy_000.nii");
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    for out in [&a, &b] {
        let text = ok(&[
            "convert",
            "--in",
            s(&vol),
            "--plane",
            "axial",
            "--index",
            "16",
            "--out",
            s(out),
        ]);
        assert!(text.contains("32x32"), "{text}");
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    fails_with(
        &[
            "convert",
            "--in",
            s(&vol),
            "--plane",
            "sagittal",
            "--index",
            "32",
            "--out",
            s(&a),
        ],
        "IndexOutOfRange",
    );
}

#[test]
fn phantom_corpus_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&[
            "phantom",
            "--out",
            s(out),
            "--per-class",
            "2",
            "--dims",
            "32",
            "--seed",
            "9",
        ]);
    }
    let mut count = 0;
    for class in std::fs::read_dir(&a).unwrap() {
        let class = class.unwrap().path();
        for f in std::fs::read_dir(&class).unwrap() {
            let f = f.unwrap().path();
            let twin = b.join(f.strip_prefix(&a).unwrap());
            assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(twin).unwrap());
            count += 1;
        }
    }
    assert_eq!(count, 10);
    fails_with(&["phantom", "--out", s(&a), "--dims", "16"], "InvalidConfig");
}

#[test]
fn error_paths_print_one_coded_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    let garbage = dir.path().join("g.nii");
    std::fs::write(&garbage, b"garbage").unwrap();
    let png = dir.path().join("o.png");

    fails_with(
        &[
            "convert",
            "--in",
            s(&missing),
            "--plane",
            "axial",
            "--index",
            "0",
            "--out",
            s(&png),
        ],
        "Io",
    );
    fails_with(
        &[
            "convert",
            "--in",
            s(&garbage),
            "--plane",
            "axial",
            "--index",
            "0",
            "--out",
            s(&png),
        ],
        "UnknownFormat",
    );
    fails_with(
        &[
            "convert",
            "--in",
            s(&garbage),
            "--plane",
            "oblique",
            "--index",
            "0",
            "--out",
            s(&png),
        ],
        "Usage",
    );
    fails_with(&["eval", "--checkpoint", s(&missing), "--manifest", s(&missing)], "Io");
    fails_with(
        &[
            "train",
            "--manifest",
            s(&missing),
            "--iters",
            "10",
            "--eval-every",
            "20",
        ],
        "InvalidConfig",
    );
    fails_with(&["bogus"], "Usage");
    fails_with(&[], "Usage");
}

#[test]
fn zero_iterations_writes_fresh_network() {
    let run = trained();
    let ckpt = run.path("zero.ckpt");
    let curves = run.path("zero.csv");
    ok(&[
        "train",
        "--manifest",
        s(&run.path("data/manifest.jsonl")),
        "--preset",
        "desk",
        "--iters",
        "0",
        "--seed",
        "4",
        "--checkpoint",
        s(&ckpt),
        "--curves",
        s(&curves),
    ]);
    assert_eq!(
        std::fs::read_to_string(&curves).unwrap(),
        "iteration,train_loss,test_loss,test_accuracy\n"
    );
    let loaded = nbad::model::Checkpoint::load(&ckpt).unwrap();
    let (net, _, _) = loaded.restore().unwrap();
    let fresh = nbad::model::build_network(&nbad::model::NetworkSpec::preset("desk").unwrap(), 4).unwrap();
    for (a, b) in net.parameters().iter().zip(fresh.parameters()) {
        assert_eq!(a.value, b.value);
    }
}
