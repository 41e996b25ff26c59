use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use deepfir::wav::{read_wav, write_wav, WavAudio};

fn deepfir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deepfir"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn noise_wav(dir: &Path, name: &str, len: usize, seed: u32) -> PathBuf {
    let mut state = seed.wrapping_mul(2_654_435_761).max(1);
    let samples = (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 17;
            state ^= state << 5;
            ((state % 16_384) as i32 - 8_192) as f64 / 32768.0
        })
        .collect();
    let p = dir.join(name);
    write_wav(&p, &WavAudio::new(samples)).unwrap();
    p
}

fn make_weights(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let p = dir.join(name);
    let mut args = vec!["make-weights", "--output", s(&p)];
    args.extend_from_slice(extra);
    let o = deepfir(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    p
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).expect("valid json")
}

#[test]
fn identity_weights_reproduce_input_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let w = make_weights(dir.path(), "id.dfw", &[]);
    let x = noise_wav(dir.path(), "x.wav", 16_037, 1);
    for min_phase in ["true", "false"] {
        let y = dir.path().join("y.wav");
        let o = deepfir(&[
            "process", "--input", s(&x), "--output", s(&y), "--weights", s(&w), "--min-phase", min_phase,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let a = std::fs::read(&x).unwrap();
        let b = std::fs::read(&y).unwrap();
        assert_eq!(a, b, "min-phase {min_phase}");
    }
}

#[test]
fn report_has_stable_sections() {
    let dir = tempfile::tempdir().unwrap();
    let w = make_weights(dir.path(), "d.dfw", &["--init", "delay", "--delay", "64"]);
    let x = noise_wav(dir.path(), "x.wav", 8000, 2);
    let y = dir.path().join("y.wav");
    let run = |report: &Path| {
        let o = deepfir(&[
            "process", "--input", s(&x), "--output", s(&y), "--weights", s(&w),
            "--min-phase", "false", "--synthesis-ms", "0.5", "--report", s(report), "--ref", s(&x),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(report).unwrap()
    };
    let first = run(&dir.path().join("a.json"));
    let second = run(&dir.path().join("b.json"));
    assert_eq!(first, second, "reports without timing are deterministic");
    let r = json(&first);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["config"]["hop"], 8);
    assert_eq!(r["timing"], serde_json::Value::Null);
    // pure 64-sample delay: 4 ms group delay, scored at the linear-phase lag
    assert!((r["group_delay"]["mean_ms"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert!((r["latency"]["end_to_end_ms"].as_f64().unwrap() - (0.5 + 4.0 + 0.5 + 1.1)).abs() < 1e-9);
    assert_eq!(r["metrics"]["applied_lag"], 64);
    assert_eq!(r["metrics"]["si_sdr_db"], 60.0);
    assert_eq!(r["weights_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn timing_only_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let w = make_weights(dir.path(), "m.dfw", &["--head", "mask"]);
    let x = noise_wav(dir.path(), "x.wav", 4000, 3);
    let y = dir.path().join("y.wav");
    let report = dir.path().join("r.json");
    let o = deepfir(&[
        "process", "--input", s(&x), "--output", s(&y), "--weights", s(&w), "--mode", "ola",
        "--report", s(&report), "--timing",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&std::fs::read_to_string(&report).unwrap());
    assert_eq!(r["config"]["mode"], "ola");
    assert_eq!(r["timing"]["hops"], r["hops"]);
    assert_eq!(r["group_delay"]["mean_ms"], serde_json::Value::Null);
    assert_eq!(read_wav(&y).unwrap().samples.len(), 4000);
}

#[test]
fn eval_of_identical_files_hits_the_clamp() {
    let dir = tempfile::tempdir().unwrap();
    let x = noise_wav(dir.path(), "x.wav", 4000, 4);
    let o = deepfir(&["eval", "--ref", s(&x), "--est", s(&x)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&stdout(&o));
    assert_eq!(r["si_sdr_db"], 60.0);
    assert_eq!(r["loss"], 0.0);
}

#[test]
fn latency_example_and_table() {
    let o = deepfir(&[
        "latency", "--mode", "deepfir", "--synthesis-ms", "1", "--group-delay-ms", "0.25", "--hardware-ms", "1.1",
    ]);
    assert!(o.status.success());
    let r = json(&stdout(&o));
    assert!((r["latency"]["end_to_end_ms"].as_f64().unwrap() - 3.35).abs() < 1e-9);
    assert!((r["mips_estimate"].as_f64().unwrap() - 388.0).abs() < 1e-6);

    let o = deepfir(&["latency", "--table1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.matches("FLAGGED").count(), 3, "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("deepfir") && l.ends_with("ok")).count(), 5);
}

#[test]
fn inspect_reports_dims() {
    let dir = tempfile::tempdir().unwrap();
    let w = make_weights(dir.path(), "r.dfw", &["--init", "random", "--seed", "7"]);
    let o = deepfir(&["inspect-weights", s(&w)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("parameters: 627040"), "{text}");
    assert!(text.contains("hidden: 200"));
    assert!(text.contains("head: sigmoid-taps"));
}

#[test]
fn bench_reports_timing() {
    let dir = tempfile::tempdir().unwrap();
    let w = make_weights(dir.path(), "r.dfw", &["--init", "random"]);
    let o = deepfir(&["bench", "--weights", s(&w), "--seconds", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&stdout(&o));
    assert_eq!(r["hops"], 500);
    let f = r["inference_fraction"].as_f64().unwrap();
    assert!(f > 0.0 && f < 1.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = deepfir(&["process", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = deepfir(&["latency", "--mode", "fft"]);
    assert_eq!(o.status.code(), Some(2));

    let w = make_weights(dir.path(), "id.dfw", &[]);
    let missing = dir.path().join("missing.wav");
    let o = deepfir(&["process", "--input", s(&missing), "--output", "y.wav", "--weights", s(&w)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error: io-error: ") && err.contains("missing.wav"), "{err}");
    assert_eq!(err.lines().count(), 1);

    // 44.1 kHz input is rejected, not resampled
    let hi = dir.path().join("hi.wav");
    write_raw(&hi, 44_100);
    let o = deepfir(&["process", "--input", s(&hi), "--output", "y.wav", "--weights", s(&w)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: format-error: unsupported sample rate 44100"));

    let bad = dir.path().join("bad.dfw");
    std::fs::write(&bad, b"NOPE").unwrap();
    let o = deepfir(&["inspect-weights", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: format-error:"));

    let o = deepfir(&["latency", "--synthesis-ms", "0.03"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: invalid-argument:"));
}

/// Minimal 16-bit mono WAV with an arbitrary rate, written by hand.
fn write_raw(path: &Path, rate: u32) {
    let data: [i16; 4] = [0, 1, -1, 0];
    let mut b = Vec::new();
    b.extend_from_slice(b"RIFF");
    b.extend_from_slice(&(36 + 8u32).to_le_bytes());
    b.extend_from_slice(b"WAVEfmt ");
    b.extend_from_slice(&16u32.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&rate.to_le_bytes());
    b.extend_from_slice(&(rate * 2).to_le_bytes());
    b.extend_from_slice(&2u16.to_le_bytes());
    b.extend_from_slice(&16u16.to_le_bytes());
    b.extend_from_slice(b"data");
    b.extend_from_slice(&8u32.to_le_bytes());
    for v in data {
        b.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, b).unwrap();
}
