use std::path::Path;
use std::process::{Command, Output};

fn permbp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permbp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = permbp(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn gen_code_writes_alist() {
    let text = ok(&["gen-code", "--m", "4", "--t", "1"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("15 4"));
    let circ = ok(&["gen-code", "--m", "4", "--t", "1", "--form", "circulant"]);
    assert_eq!(circ.lines().next(), Some("15 15"));
}

#[test]
fn dumped_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.toml");
    let text = ok(&["dump-config", "-c", "bch31_16", "--set", "train.epochs=7"]);
    std::fs::write(&file, &text).unwrap();
    assert_eq!(ok(&["dump-config", "-c", file.to_str().unwrap()]), text);
    assert!(text.contains("epochs = 7"));
}

#[test]
fn config_errors_exit_with_two() {
    let out = permbp(&["dump-config", "-c", "bch15_11", "--set", "decoder.i_pb=3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = permbp(&["dump-config", "-c", "no_such_preset"]);
    assert_eq!(out.status.code(), Some(2));
    let out = permbp(&["dump-config", "-c", "bch15_11", "--set", "eval.decoders=[\"bp-x\"]"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_then_paired_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("train");
    ok(&[
        "train",
        "-c",
        "bch15_11",
        "--set",
        "train.epochs=3",
        "--set",
        "train.validation.frames_per_snr=100",
        "--out",
        run.to_str().unwrap(),
    ]);
    for f in ["config.toml", "meta.toml", "history.csv", "weights_final.txt"] {
        assert!(run.join(f).exists(), "{f}");
    }
    assert!(read(&run.join("meta.toml")).contains("git_describe"));
    let history = read(&run.join("history.csv"));
    assert!(history.starts_with("epoch,total_loss,l1_sum,l2_sum,l3,val_ber"));
    assert_eq!(history.lines().count(), 1 + 4);

    let sweep = dir.path().join("sweep");
    let weights = run.join("weights_final.txt");
    ok(&[
        "eval-sweep",
        "-c",
        "bch15_11",
        "--paired",
        "ml,nbp,uncoded",
        "--weights",
        weights.to_str().unwrap(),
        "--set",
        "eval.sweep.stop.max_frames=500",
        "--set",
        "eval.sweep.snr_db=[3.0]",
        "--out",
        sweep.to_str().unwrap(),
    ]);
    let csv = read(&sweep.join("sweep.csv"));
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    // paired rows share the frame count
    assert!(rows.iter().all(|r| r[2] == rows[0][2]));
    assert!(rows[1][0].starts_with("perm-rnn-1-5-2@"));
}

#[test]
fn timing_reports_every_decoder_and_point() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "timing",
        "-c",
        "bch15_11",
        "--decoders",
        "nbp,nbp",
        "--set",
        "timing.frames=50",
        "--set",
        "timing.warmup=5",
        "--set",
        "timing.snr_db=[2.0,6.0]",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let csv = read(&dir.path().join("timing.csv"));
    assert!(csv.starts_with("decoder,snr_db,frames,mean_us,p95_us"));
    assert_eq!(csv.lines().count(), 1 + 4);
}
