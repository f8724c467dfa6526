use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use powerprint::iknn::{fit, IknnConfig};
use powerprint::signal::{save_csv, Dataset};
use powerprint::store::{load_histograms, training_set};
use powerprint::synth::rectangle_aggregate;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_powerprint"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(!out.status.success(), "{args:?} should fail");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "multi-line error: {err}");
    assert!(err.starts_with("error: "), "{err}");
    err
}

fn corpus(dir: &Path) {
    ok(
        dir,
        &[
            "synth",
            "--seed",
            "1",
            "--classes",
            "8",
            "--per-class",
            "40",
            "--length",
            "400",
            "--out",
            "d.csv",
        ],
    );
}

#[test]
fn synth_record_count_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let first = fs::read(dir.path().join("d.csv")).unwrap();
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 320);
    corpus(dir.path());
    assert_eq!(fs::read(dir.path().join("d.csv")).unwrap(), first);

    ok(
        dir.path(),
        &[
            "synth",
            "--classes",
            "kettle,oven",
            "--per-class",
            "3",
            "--out",
            "two.csv",
        ],
    );
    let text = fs::read_to_string(dir.path().join("two.csv")).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().all(|l| l.starts_with("kettle,") || l.starts_with("oven,")));
}

#[test]
fn synth_rejects_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    fails(dir.path(), &["synth", "--length", "5", "--out", "x.csv"]);
    fails(dir.path(), &["synth", "--classes", "9", "--out", "x.csv"]);
    fails(dir.path(), &["synth", "--classes", "toaster", "--out", "x.csv"]);
    fails(dir.path(), &["--threads", "0", "synth", "--out", "x.csv"]);
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn extract_lengths_and_unknown_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    for (name, bins) in [("lph", 256), ("ldp", 56), ("ltep", 512)] {
        ok(
            dir.path(),
            &["extract", "--descriptor", name, "--in", "d.csv", "--out", "h.csv"],
        );
        let text = fs::read_to_string(dir.path().join("h.csv")).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 320);
        assert!(rows.iter().all(|r| r.split(',').count() == 2 + bins));
    }
    let err = fails(
        dir.path(),
        &["extract", "--descriptor", "sift", "--in", "d.csv", "--out", "h.csv"],
    );
    for name in ["lph", "lbp", "ldp", "ltep", "ltrp", "bsif"] {
        assert!(err.contains(name), "{err}");
    }
}

fn accuracy(stdout: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix("accuracy "))
        .and_then(|l| l.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn train_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    ok(
        d,
        &["extract", "--descriptor", "lph", "--in", "d.csv", "--out", "h.csv"],
    );
    ok(
        d,
        &[
            "train",
            "--descriptor",
            "lph",
            "--k",
            "5",
            "--in",
            "h.csv",
            "--out",
            "model.txt",
        ],
    );
    let stdout = ok(
        d,
        &["predict", "--model", "model.txt", "--in", "h.csv", "--out", "pred.csv"],
    );
    let resubstitution = accuracy(&stdout);
    let held_out = accuracy(&ok(d, &["eval", "--in", "d.csv", "--k", "5"]));
    assert!(resubstitution >= held_out, "{resubstitution} < {held_out}");

    // same model fitted in memory, predictions written in the CLI's format
    let recs = load_histograms(d.join("h.csv")).unwrap();
    let model = fit(&training_set(&recs).unwrap(), IknnConfig::default()).unwrap();
    let mut expected = String::from("source_id,label,predicted,score\n");
    for r in &recs {
        let p = model.predict(&r.bins).unwrap();
        let label = r.label.as_deref().unwrap();
        writeln!(expected, "{},{},{},{}", r.source_id, label, p.label, p.score).unwrap();
    }
    assert_eq!(fs::read_to_string(d.join("pred.csv")).unwrap(), expected);

    // signals in, histograms computed from the model's descriptor
    ok(
        d,
        &[
            "predict",
            "--model",
            "model.txt",
            "--signals",
            "d.csv",
            "--out",
            "pred2.csv",
        ],
    );
    assert_eq!(
        fs::read(d.join("pred.csv")).unwrap(),
        fs::read(d.join("pred2.csv")).unwrap()
    );
}

#[test]
fn mismatched_descriptor_is_a_dimension_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--per-class", "5", "--length", "100", "--out", "d.csv"]);
    ok(
        d,
        &["extract", "--descriptor", "ldp", "--in", "d.csv", "--out", "ldp.csv"],
    );
    ok(d, &["train", "--signals", "d.csv", "--out", "lph.model"]);
    let err = fails(d, &["predict", "--model", "lph.model", "--in", "ldp.csv"]);
    assert!(err.contains("dimension"), "{err}");
    let err = fails(d, &["train", "--descriptor", "lph", "--in", "ldp.csv", "--out", "m"]);
    assert!(err.contains("dimension"), "{err}");
    let err = fails(d, &["predict", "--model", "missing.model", "--in", "ldp.csv"]);
    assert!(err.contains("missing.model"), "{err}");
}

#[test]
fn eval_and_compare_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--per-class", "10", "--length", "200", "--out", "d.csv"]);
    let text = ok(
        d,
        &[
            "eval",
            "--descriptor",
            "lph",
            "--k",
            "5",
            "--folds",
            "10",
            "--seed",
            "3",
            "--in",
            "d.csv",
            "--out",
            "r.csv",
            "--timings-out",
            "t.csv",
        ],
    );
    assert!(text.contains("fold hash"));
    let report = fs::read_to_string(d.join("r.csv")).unwrap();
    assert!(report
        .lines()
        .any(|l| l.starts_with("fold_hash,") && l.len() == 10 + 64));
    assert!(report.contains("confusion:kettle:kettle,"));
    assert_eq!(fs::read_to_string(d.join("t.csv")).unwrap().lines().count(), 1 + 10 + 1);

    ok(
        d,
        &["compare", "--descriptors", "all", "--in", "d.csv", "--out", "c.csv"],
    );
    let table = fs::read_to_string(d.join("c.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    let hashes: Vec<&str> = rows.iter().map(|r| r.rsplit(',').next().unwrap()).collect();
    assert!(hashes.iter().all(|h| *h == hashes[0]));

    // folds larger than the smallest class are reduced with a warning
    let text = ok(d, &["eval", "--in", "d.csv", "--folds", "20"]);
    assert!(text.contains("folds reduced from 20 to 10"), "{text}");
}

#[test]
fn ncc_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--per-class", "8", "--length", "200", "--out", "d.csv"]);
    ok(d, &["ncc", "--in", "d.csv", "--out-dir", "ncc"]);
    let summary = fs::read_to_string(d.join("ncc/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 9);
    let m = fs::read_to_string(d.join("ncc/lph_fridge.csv")).unwrap();
    assert_eq!(m.lines().count(), 6);
    assert!(m.lines().all(|l| l.split(',').count() == 6));
}

#[test]
fn detect_writes_events_and_windows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let agg = rectangle_aggregate(400, 25.0, &[(50, 150, 300.0), (250, 330, 1200.0)]).unwrap();
    save_csv(&Dataset::new(vec![agg], Vec::new()).unwrap(), d.join("aggregate.csv")).unwrap();
    let stdout = ok(
        d,
        &[
            "detect",
            "--in",
            "aggregate.csv",
            "--threshold-watts",
            "30",
            "--out",
            "events.csv",
            "--segments-out",
            "windows.csv",
        ],
    );
    assert!(stdout.contains("4 events, 2 windows"), "{stdout}");
    let events = fs::read_to_string(d.join("events.csv")).unwrap();
    assert_eq!(
        events,
        "source_id,index,delta_watts,kind\naggregate,50,300,ON\naggregate,150,-300,OFF\n\
         aggregate,250,1200,ON\naggregate,330,-1200,OFF\n"
    );
    let windows = fs::read_to_string(d.join("windows.csv")).unwrap();
    let ids: Vec<&str> = windows.lines().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ids, ["aggregate:50-150", "aggregate:250-330"]);
    fails(
        d,
        &[
            "detect",
            "--in",
            "aggregate.csv",
            "--smooth-window",
            "4",
            "--out",
            "e.csv",
        ],
    );
}

#[test]
fn bench_lists_descriptors() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["bench", "--repeat", "1", "--descriptors", "lph,ltrp"]);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("lph,320,"));
}
