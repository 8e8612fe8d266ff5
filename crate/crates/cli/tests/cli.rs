//! End-to-end tests of the `cubeforest` binary: output shapes, determinism,
//! the bench/score agreement contract, and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cubeforest::synth::SineStreamSpec;

fn replica_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sine_replica.toml")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubeforest"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "expected exit {code}, stderr: {}",
        stderr(output)
    );
}

/// 600 points in a tight grid near the origin, every tenth one displaced far
/// outside it and labeled anomalous (contamination exactly 0.1).
fn write_labeled_csv(path: &Path, rows: usize) {
    let mut text = String::new();
    for i in 0..rows {
        let anomalous = i % 10 == 7;
        let shift = if anomalous { 5.0 } else { 0.0 };
        let x = (i % 17) as f64 * 0.01 + shift;
        let y = (i % 29) as f64 * 0.01 + shift;
        let z = ((i * 7) % 13) as f64 * 0.01 + shift;
        text.push_str(&format!("{x},{y},{z},{}\n", anomalous as u8));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn synth_writes_replica_stream_and_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stream.txt");
    let spec = replica_config();

    let output = run(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let summary = String::from_utf8_lossy(&output.stdout).into_owned();
    assert!(summary.contains("wrote 2048 samples (65 anomalous)"), "{summary}");

    let values = fs::read_to_string(&out).unwrap();
    let parsed: Vec<f64> = values.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(parsed.len(), 2048);

    let labels = fs::read_to_string(dir.path().join("stream.txt.labels")).unwrap();
    let lines: Vec<&str> = labels.lines().collect();
    assert_eq!(lines.len(), 2048);
    assert_eq!(lines.iter().filter(|l| l.starts_with("1,")).count(), 65);
    assert_eq!(lines[624], "1,point");
    assert_eq!(lines[992], "1,contextual");
    assert_eq!(lines[1400], "1,collective");
    assert_eq!(lines[0], "0,none");

    let again = dir.path().join("again.txt");
    let rerun = run(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--output",
        again.to_str().unwrap(),
    ]);
    assert_exit(&rerun, 0);
    assert_eq!(values, fs::read_to_string(&again).unwrap());
    assert_eq!(
        labels,
        fs::read_to_string(dir.path().join("again.txt.labels")).unwrap()
    );
}

#[test]
fn shipped_replica_config_matches_the_builtin() {
    let text = fs::read_to_string(replica_config()).unwrap();
    let parsed: SineStreamSpec = toml::from_str(&text).unwrap();
    assert_eq!(parsed, SineStreamSpec::replica());
}

#[test]
fn score_is_deterministic_and_flushes_per_chunk() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("stream.txt");
    let synth = run(&[
        "synth",
        "--spec",
        replica_config().to_str().unwrap(),
        "--output",
        stream.to_str().unwrap(),
    ]);
    assert_exit(&synth, 0);

    let score_args = |out: &Path| {
        vec![
            "score".to_string(),
            "--input".to_string(),
            stream.display().to_string(),
            "--shingle".to_string(),
            "16".to_string(),
            "--window".to_string(),
            "128".to_string(),
            "--sample-size".to_string(),
            "128".to_string(),
            "--seed".to_string(),
            "9".to_string(),
            "--output".to_string(),
            out.display().to_string(),
        ]
    };

    let first = dir.path().join("scores_a.txt");
    let output = run(&score_args(&first).iter().map(String::as_str).collect::<Vec<_>>());
    assert_exit(&output, 0);
    let err = stderr(&output);
    assert!(err.contains("scored 1905 points"), "{err}");
    assert!(err.contains("(128 bootstrap points unscored)"), "{err}");

    let text = fs::read_to_string(&first).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# cubeforest scores v1");
    assert_eq!(lines.len(), 1 + 1905);
    assert!(lines[1].starts_with("128,"));
    for line in &lines[1..] {
        let score: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(score > 0.0 && score < 1.0, "score out of range in {line}");
    }

    let second = dir.path().join("scores_b.txt");
    let rerun = run(&score_args(&second).iter().map(String::as_str).collect::<Vec<_>>());
    assert_exit(&rerun, 0);
    assert_eq!(text, fs::read_to_string(&second).unwrap());
}

#[test]
fn bench_and_score_emit_identical_per_point_scores() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("grid.csv");
    write_labeled_csv(&csv, 600);

    let bench_out = dir.path().join("bench_scores.txt");
    let bench = run(&[
        "bench",
        csv.to_str().unwrap(),
        "--window",
        "64",
        "--sample-size",
        "64",
        "--contamination",
        "0.1",
        "--seed",
        "5",
        "--reps",
        "1",
        "--output",
        bench_out.to_str().unwrap(),
    ]);
    assert_exit(&bench, 0);
    let report = String::from_utf8_lossy(&bench.stdout).into_owned();
    assert!(report.contains("# cubeforest metrics v1"), "{report}");
    assert!(report.contains("auc_mean="), "{report}");
    assert!(report.contains("scored_points=536"), "{report}");

    let score_out = dir.path().join("stream_scores.txt");
    let score = run(&[
        "score",
        "--input",
        csv.to_str().unwrap(),
        "--trailing-label",
        "--window",
        "64",
        "--sample-size",
        "64",
        "--contamination",
        "0.1",
        "--seed",
        "5",
        "--output",
        score_out.to_str().unwrap(),
    ]);
    assert_exit(&score, 0);

    let bench_text = fs::read_to_string(&bench_out).unwrap();
    assert_eq!(bench_text, fs::read_to_string(&score_out).unwrap());
    assert!(bench_text.lines().nth(1).unwrap().starts_with("64,"));
}

#[test]
fn usage_errors_exit_one() {
    let unknown_flag = run(&["score", "--bogus"]);
    assert_exit(&unknown_flag, 1);

    let unknown_dataset = run(&["bench", "nosuchset"]);
    assert_exit(&unknown_dataset, 1);
    assert!(stderr(&unknown_dataset).contains("unknown dataset"));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tiny.csv");
    write_labeled_csv(&csv, 100);
    let too_small = run(&["bench", csv.to_str().unwrap()]);
    assert_exit(&too_small, 1);
    assert!(stderr(&too_small).contains("pass a smaller --window"));

    let spec = dir.path().join("overlap.toml");
    fs::write(
        &spec,
        "length = 512\namplitude = 1.0\nperiod = 64.0\nnoise_sigma = 0.05\nseed = 1\n\n\
         [[injections]]\nkind = \"contextual\"\nposition = 100\nspan = 32\nmagnitude = 1.0\n\n\
         [[injections]]\nkind = \"collective\"\nposition = 110\nspan = 32\nmagnitude = 1.0\n",
    )
    .unwrap();
    let out = dir.path().join("never_written.txt");
    let overlapping = run(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_exit(&overlapping, 1);
    assert!(stderr(&overlapping).contains("overlap"));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.txt");
    fs::write(&short, "0.1\n0.2\n0.3\n").unwrap();
    let exhausted = run(&["score", "--input", short.to_str().unwrap()]);
    assert_exit(&exhausted, 2);
    assert!(stderr(&exhausted).contains("required to fill the window"));

    let missing = run(&["score", "--input", dir.path().join("absent.txt").to_str().unwrap()]);
    assert_exit(&missing, 2);
}
