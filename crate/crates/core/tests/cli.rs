use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use crbridge::canny::{canny, CannyConfig};
use crbridge::data::dataset::{gray_path, load_frames, read_manifest};
use crbridge::data::{pgm, resize_bilinear};
use crbridge::features::REPORT_HEADER;
use crbridge::persist::load_checkpoint;
use tempfile::TempDir;

fn crbridge(args: &[&str], paths: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_crbridge"));
    cmd.args(args);
    for (flag, p) in paths {
        cmd.arg(flag).arg(p);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[track_caller]
fn ok(out: Output) -> Output {
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    out
}

fn dataset(dir: &Path, frames: usize) {
    ok(crbridge(
        &[
            "generate-data",
            "--seed",
            "3",
            "--frames",
            &frames.to_string(),
            "--width",
            "64",
            "--height",
            "32",
        ],
        &[("--out-dir", dir)],
    ));
}

fn tiny_config(dir: &Path, steps: usize, checkpoint_every: usize) -> std::path::PathBuf {
    let path = dir.join("run.json");
    fs::write(
        &path,
        format!(
            r#"{{"train": {{"steps": {steps}, "batch_size": 2, "window_k": 2, "resolution": [32, 16],
                "encoder_channels": [4, 8], "checkpoint_every": {checkpoint_every}}}}}"#
        ),
    )
    .unwrap();
    path
}

/// Dataset plus a short training run: (tempdir, data dir, run dir).
fn trained() -> (TempDir, std::path::PathBuf, std::path::PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let run = tmp.path().join("run");
    dataset(&data, 12);
    let cfg = tiny_config(tmp.path(), 2, 0);
    ok(crbridge(
        &["train"],
        &[("--config", &cfg), ("--data-dir", &data), ("--out-dir", &run)],
    ));
    (tmp, data, run)
}

#[test]
fn zero_frames_writes_only_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    dataset(&dir, 0);
    let entries: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries.len(), 1, "{entries:?}");
    assert_eq!(read_manifest(&dir).unwrap().unwrap().frames, 0);
}

#[test]
fn generated_frames_round_trip_losslessly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    dataset(&dir, 3);
    let frames = load_frames(&dir).unwrap();
    assert_eq!(frames.len(), 3);
    for (i, f) in frames.iter().enumerate() {
        let path = gray_path(&dir, i);
        let again = pgm::encode(&pgm::gray_to_pgm(&f.gray));
        assert_eq!(again, fs::read(path).unwrap());
    }
}

#[test]
fn generate_data_into_unwritable_path_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("file");
    fs::write(&file, b"x").unwrap();
    let out = crbridge(&["generate-data", "--frames", "1"], &[("--out-dir", &file.join("sub"))]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn one_step_run_writes_one_periodic_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let run = tmp.path().join("run");
    dataset(&data, 12);
    let cfg = tiny_config(tmp.path(), 1, 1);
    ok(crbridge(
        &["train"],
        &[("--config", &cfg), ("--data-dir", &data), ("--out-dir", &run)],
    ));
    let mut ckpts: Vec<_> = fs::read_dir(run.join("checkpoints"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    ckpts.sort();
    assert_eq!(ckpts, ["step_000001.depth.crw", "step_000001.image.crw"]);
    let loss = fs::read_to_string(run.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 2, "{loss}");
    assert!(run.join("image.crw").exists() && run.join("depth.crw").exists());
}

#[test]
fn training_errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let cfg = tiny_config(tmp.path(), 1, 0);
    let run = tmp.path().join("run");

    let out = crbridge(
        &["train"],
        &[("--config", &cfg), ("--data-dir", &data), ("--out-dir", &run)],
    );
    assert_eq!(code(&out), 2, "missing dataset: {}", stderr(&out));

    dataset(&data, 4);
    let out = crbridge(
        &["train"],
        &[("--config", &cfg), ("--data-dir", &data), ("--out-dir", &run)],
    );
    assert_eq!(code(&out), 2, "too few frames for the sampler: {}", stderr(&out));

    let bad = tmp.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"train": {"stpes": 3, "learning_rate": -1.0}, "canny": {"sigma": 1.0, "hgh": 1}}"#,
    )
    .unwrap();
    let out = crbridge(
        &["train"],
        &[("--config", &bad), ("--data-dir", &data), ("--out-dir", &run)],
    );
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("train.stpes") && msg.contains("canny.hgh"), "{msg}");
}

#[test]
fn infer_writes_rounded_forward_pass() {
    let (tmp, data, run) = trained();
    let ckpt = run.join("image.crw");
    let (_, weights) = load_checkpoint(&ckpt).unwrap();
    // The generator runs at 32×16; the dataset is 64×32, so build a native-size input.
    let frame = &load_frames(&data).unwrap()[0];
    let small = resize_bilinear(&frame.gray, 32, 16).unwrap();
    let input = tmp.path().join("in.pgm");
    pgm::write_gray(&input, &small).unwrap();
    let output = tmp.path().join("cr.pgm");
    ok(crbridge(
        &["infer"],
        &[("--checkpoint", &ckpt), ("--input", &input), ("--output", &output)],
    ));

    let written = pgm::read(&output).unwrap();
    let small = pgm::read_gray(&input).unwrap();
    let expected: Vec<u16> = weights
        .forward(&small)
        .unwrap()
        .data()
        .iter()
        .map(|&p| (p * 255.0).round() as u16)
        .collect();
    assert_eq!((written.width, written.height), (32, 16));
    assert_eq!(written.samples, expected);

    // Inputs at another size come back at that size.
    let full = tmp.path().join("cr_full.pgm");
    let frame_path = gray_path(&data, 0);
    ok(crbridge(
        &["infer"],
        &[("--checkpoint", &ckpt), ("--input", &frame_path), ("--output", &full)],
    ));
    let full = pgm::read(&full).unwrap();
    assert_eq!((full.width, full.height), (64, 32));
}

#[test]
fn infer_rejects_bad_checkpoints() {
    let (tmp, data, run) = trained();
    let input = gray_path(&data, 0);
    let output = tmp.path().join("cr.pgm");

    let mut bytes = fs::read(run.join("image.crw")).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x10;
    let corrupt = tmp.path().join("corrupt.crw");
    fs::write(&corrupt, bytes).unwrap();
    let out = crbridge(
        &["infer"],
        &[("--checkpoint", &corrupt), ("--input", &input), ("--output", &output)],
    );
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("corrupt checkpoint"), "{}", stderr(&out));

    let wrong_role = run.join("depth.crw");
    let out = crbridge(
        &["infer"],
        &[
            ("--checkpoint", &wrong_role),
            ("--input", &input),
            ("--output", &output),
        ],
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    let missing = tmp.path().join("missing.crw");
    let out = crbridge(
        &["infer"],
        &[("--checkpoint", &missing), ("--input", &input), ("--output", &output)],
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(!output.exists());
}

#[test]
fn eval_emits_one_aggregated_row() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data, 4);
    let out = ok(crbridge(&["eval", "--pairs", "1"], &[("--data-dir", &data)]));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert_eq!(lines[0], REPORT_HEADER);
    assert!(lines[1].starts_with("raw,"));
}

#[test]
fn eval_errors_map_to_exit_codes() {
    let (_tmp, data, run) = trained();
    let out = crbridge(&["eval", "--mode", "image_cr"], &[("--data-dir", &data)]);
    assert_eq!(code(&out), 2, "missing checkpoint: {}", stderr(&out));

    let out = crbridge(
        &["eval", "--mode", "depth_cr"],
        &[("--data-dir", &data), ("--checkpoint-depth", &run.join("image.crw"))],
    );
    assert_eq!(code(&out), 2, "role mismatch: {}", stderr(&out));

    let out = crbridge(&["eval", "--pairs", "50", "--offset", "20"], &[("--data-dir", &data)]);
    assert_eq!(code(&out), 2, "offset beyond the dataset: {}", stderr(&out));

    let out = crbridge(&["eval", "--mode", "fancy"], &[("--data-dir", &data)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn edges_match_in_process_canny() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data, 1);
    let input = gray_path(&data, 0);
    let output = tmp.path().join("e.pgm");
    ok(crbridge(
        &["edges", "--low", "0.04", "--high", "0.12", "--sigma", "1.2"],
        &[("--input", &input), ("--output", &output)],
    ));
    let cfg = CannyConfig {
        sigma: 1.2,
        low_threshold: 0.04,
        high_threshold: 0.12,
    };
    let expected = canny(&pgm::read_gray(&input).unwrap(), &cfg).unwrap();
    let written = pgm::read(&output).unwrap();
    assert!(written.samples.iter().all(|&s| s == 0 || s == 255));
    let written: Vec<f32> = written
        .samples
        .iter()
        .map(|&s| if s == 255 { 1.0 } else { 0.0 })
        .collect();
    assert_eq!(written, expected.data());
    assert!(written.contains(&1.0));

    let flat = tmp.path().join("flat.pgm");
    pgm::write_gray(&flat, &crbridge::GrayImage::filled(20, 10, 0.4)).unwrap();
    ok(crbridge(&["edges"], &[("--input", &flat), ("--output", &output)]));
    assert!(pgm::read(&output).unwrap().samples.iter().all(|&s| s == 0));

    let out = crbridge(
        &["edges", "--low", "0.2", "--high", "0.2"],
        &[("--input", &input), ("--output", &output)],
    );
    assert_eq!(code(&out), 2);
}
