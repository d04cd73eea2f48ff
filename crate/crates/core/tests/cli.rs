use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn quill(dir: &Path, args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_quill"))
        .current_dir(dir)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    if let Some(input) = stdin {
        child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_line(o: &Output) -> String {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    err.trim_end().to_string()
}

const SYNTHETIC: [&str; 6] = [
    "--set",
    "data.synthetic.n_records=300",
    "--set",
    "data.synthetic.vocabulary_size=90",
    "--set",
    "train.epochs=3",
];

#[test]
fn unreadable_dataset_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = quill(dir.path(), &["prepare", "--dataset", "missing/questions.csv"], None);
    assert!(!o.status.success());
    let line = error_line(&o);
    assert!(line.starts_with("quill-error[io]: "), "{line}");
    assert!(line.contains("missing/questions.csv"), "{line}");
}

#[test]
fn config_errors_are_reported_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let o = quill(dir.path(), &["train", "--family", "forest"], None);
    assert!(!o.status.success());
    assert!(error_line(&o).starts_with("quill-error[config]: "));
    assert!(!dir.path().join("quill-out").exists());

    let o = quill(dir.path(), &["prepare", "--config", "nope.toml"], None);
    assert!(error_line(&o).starts_with("quill-error[io]: "));
}

#[test]
fn prepare_train_evaluate_predict_curves() {
    let dir = tempfile::tempdir().unwrap();
    let with = |extra: &[&str]| -> Vec<String> {
        extra.iter().chain(SYNTHETIC.iter()).map(|s| s.to_string()).collect()
    };
    let run = |args: Vec<String>, stdin: Option<&str>| {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        quill(dir.path(), &refs, stdin)
    };

    let o = run(with(&["prepare", "--out", "run", "--seed", "3"]), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout(&o);
    assert!(report.contains("records=300\n"));
    assert!(report.contains("classes=3\n"));

    for family in ["nb", "model2"] {
        let o = run(with(&["train", "--out", "run", "--seed", "3", "--family", family]), None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let o = run(with(&["evaluate", "--out", "run", "--seed", "3", "--family", family]), None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let table = stdout(&o);
        assert!(table.starts_with("model,accuracy,"));
        assert!(table.lines().nth(1).unwrap().starts_with(&format!("{family},")));
    }

    let o = quill(dir.path(), &["predict", "--model", "run/nb/model.qmdl"], Some("w0 w3 w6\n\nw1 w4\n"));
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("HQ\t"));
    assert!(lines[2].starts_with("LQ_CLOSE\t"));

    let o = quill(dir.path(), &["curves", "run/model2/curves.csv", "again=run/model2/curves.csv"], None);
    assert!(o.status.success());
    let merged = stdout(&o);
    assert_eq!(merged.lines().count(), 1 + 6);
    assert!(merged.lines().nth(4).unwrap().starts_with("again,"));

    let o = quill(dir.path(), &["predict", "--model", "run/nb/vocab.txt"], Some("x\n"));
    assert!(!o.status.success());
    assert!(error_line(&o).starts_with("quill-error[format]: "));
}

#[test]
fn locked_output_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("run")).unwrap();
    std::fs::write(dir.path().join("run/.quill.lock"), "1\n").unwrap();
    let mut args = vec!["prepare", "--out", "run"];
    args.extend(SYNTHETIC);
    let o = quill(dir.path(), &args, None);
    assert!(!o.status.success());
    assert!(error_line(&o).starts_with("quill-error[locked]: "));
}
