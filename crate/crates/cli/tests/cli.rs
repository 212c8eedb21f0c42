//! End-to-end behavior of the `ser` binary: synthesis, extraction,
//! training, adaptation, evaluation, and the grid runner.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ser() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ser"))
}

fn ok(output: &Output) {
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn write_spec(dir: &Path, emotions: usize, domains: usize) -> PathBuf {
    let all_emotions = [
        ("happy", 180.0, 3.0, 1.0),
        ("sad", 330.0, 5.0, 0.8),
        ("anger", 500.0, 7.0, 1.2),
        ("surprise", 700.0, 9.0, 1.0),
        ("disgust", 950.0, 11.0, 0.9),
        ("fear", 1250.0, 13.0, 1.1),
    ];
    let all_domains = [
        ("SYNTH_A", 0.0, 0.01),
        ("SYNTH_B", 0.5, 0.04),
        ("SYNTH_C", -0.5, 0.02),
        ("SYNTH_D", 0.3, 0.06),
    ];
    let mut text = String::from(
        "seed = 11\nsample_rate = 8000\nduration_s = 0.3\nn_speakers = 3\n\
         segments_per_emotion = 2\ntrain_fraction = 0.8\n",
    );
    for (name, f0, am, energy) in &all_emotions[..emotions] {
        text.push_str(&format!("emotion.{name} = {f0},{am},{energy}\n"));
    }
    for (name, tilt, noise) in &all_domains[..domains] {
        text.push_str(&format!("domain.{name} = {tilt},{noise}\n"));
    }
    let path = dir.join("spec.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn write_run_config(
    dir: &Path,
    name: &str,
    regime: &str,
    train: &str,
    epochs: usize,
    extra: &str,
) -> PathBuf {
    let text = format!(
        "regime = {regime}\nseed = 5\ntrain_corpora = {train}\n\
         eval_corpora = SYNTH_A,SYNTH_B\nclass_set = happy,sad\nepochs = {epochs}\n\
         lr = 0.001\nhidden = 8\nlayers = 2\nattn_bottleneck = 4\n\
         cache_dir = cache\nmanifest.SYNTH_A = corpus/SYNTH_A.tsv\n\
         manifest.SYNTH_B = corpus/SYNTH_B.tsv\n{extra}"
    );
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Recursively digest a directory: sorted (relative path, bytes) pairs.
fn dir_digest(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap()).collect();
        entries.sort_by_key(|e| e.path());
        for entry in entries {
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}

/// Prepare corpus + cache in `dir` with the given spec shape.
fn prepare_corpus(dir: &Path, emotions: usize, domains: usize) {
    let spec = write_spec(dir, emotions, domains);
    ok(&ser()
        .current_dir(dir)
        .args(["synth", "--spec"])
        .arg(&spec)
        .args(["--out", "corpus"])
        .output()
        .unwrap());
    let mut cmd = ser();
    cmd.current_dir(dir).arg("extract");
    for d in ["SYNTH_A", "SYNTH_B", "SYNTH_C", "SYNTH_D"].iter().take(domains) {
        cmd.args(["--manifest", &format!("corpus/{d}.tsv")]);
    }
    cmd.args(["--out", "cache"]);
    ok(&cmd.output().unwrap());
}

#[test]
fn synth_writes_balanced_corpora_that_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), 6, 4);
    ok(&ser()
        .current_dir(dir.path())
        .args(["synth", "--spec"])
        .arg(&spec)
        .args(["--out", "corpus"])
        .output()
        .unwrap());

    for domain in ["SYNTH_A", "SYNTH_B", "SYNTH_C", "SYNTH_D"] {
        let manifest =
            ser_core::corpus::load_manifest(dir.path().join(format!("corpus/{domain}.tsv")))
                .expect("generated manifests must validate");
        assert_eq!(manifest.utterances.len(), 3 * 6 * 2);
        // Emotion-balanced: every class appears equally often.
        for class in ser_core::corpus::EmotionClass::BIG_SIX {
            let n = manifest
                .utterances
                .iter()
                .filter(|u| u.labels.iter().any(|l| l.name == class.name()))
                .count();
            assert_eq!(n, 6, "{domain}/{class}");
        }
    }
}

#[test]
fn synth_same_seed_gives_identical_directory_digests() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), 2, 2);
    for out in ["one", "two"] {
        ok(&ser()
            .current_dir(dir.path())
            .args(["synth", "--spec"])
            .arg(&spec)
            .args(["--out", out, "--seed", "99"])
            .output()
            .unwrap());
    }
    assert_eq!(
        dir_digest(&dir.path().join("one")),
        dir_digest(&dir.path().join("two"))
    );
}

#[test]
fn extract_writes_once_and_skips_when_up_to_date() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), 5, 1); // 3 speakers x 5 emotions x 2 = 30
    ok(&ser()
        .current_dir(dir.path())
        .args(["synth", "--spec"])
        .arg(&spec)
        .args(["--out", "corpus"])
        .output()
        .unwrap());

    let run = || {
        let output = ser()
            .current_dir(dir.path())
            .args(["extract", "--manifest", "corpus/SYNTH_A.tsv", "--out", "cache"])
            .output()
            .unwrap();
        ok(&output);
        String::from_utf8_lossy(&output.stdout).to_string()
    };
    let first = run();
    assert!(first.contains("wrote 30"), "{first}");
    let cache_files: Vec<_> = std::fs::read_dir(dir.path().join("cache/SYNTH_A"))
        .unwrap()
        .collect();
    assert_eq!(cache_files.len(), 30);

    let mtimes_before = dir_digest(&dir.path().join("cache"));
    let second = run();
    assert!(second.contains("wrote 0"), "{second}");
    assert!(second.contains("skipped 30"), "{second}");
    assert_eq!(dir_digest(&dir.path().join("cache")), mtimes_before);
}

#[test]
fn extract_reports_corrupt_audio_but_processes_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), 2, 1);
    ok(&ser()
        .current_dir(dir.path())
        .args(["synth", "--spec"])
        .arg(&spec)
        .args(["--out", "corpus"])
        .output()
        .unwrap());
    // Corrupt one WAV.
    let victim = dir.path().join("corpus/SYNTH_A/SYNTH_A_s00_happy_00.wav");
    std::fs::write(&victim, b"not audio at all").unwrap();

    let output = ser()
        .current_dir(dir.path())
        .args(["extract", "--manifest", "corpus/SYNTH_A.tsv", "--out", "cache"])
        .output()
        .unwrap();
    assert!(!output.status.success(), "corrupt input must fail the run");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("SYNTH_A_s00_happy_00"), "{stderr}");
    // Everything else was still produced: 3 speakers x 2 emotions x 2 - 1.
    let produced = std::fs::read_dir(dir.path().join("cache/SYNTH_A")).unwrap().count();
    assert_eq!(produced, 11);
}

#[test]
fn train_rejects_bad_regime_corpus_combinations_before_training() {
    let dir = tempfile::tempdir().unwrap();
    prepare_corpus(dir.path(), 2, 2);
    let config = write_run_config(dir.path(), "bad.cfg", "CC", "SYNTH_A,SYNTH_B", 1, "");
    let output = ser()
        .current_dir(dir.path())
        .args(["train", "--config"])
        .arg(&config)
        .args(["--out", "run_bad"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("exactly one corpus"), "{stderr}");
    assert!(!dir.path().join("run_bad").exists(), "no run dir on config error");
}

#[test]
fn train_is_deterministic_and_dat_smoke_runs() {
    let dir = tempfile::tempdir().unwrap();
    prepare_corpus(dir.path(), 2, 2);
    let config = write_run_config(
        dir.path(),
        "dat.cfg",
        "DAT",
        "SYNTH_A,SYNTH_B",
        2,
        "lambda = 0.007\n",
    );
    for out in ["r1", "r2"] {
        ok(&ser()
            .current_dir(dir.path())
            .args(["train", "--config"])
            .arg(&config)
            .args(["--out", out])
            .output()
            .unwrap());
    }
    let read = |run: &str, f: &str| std::fs::read(dir.path().join(run).join(f)).unwrap();
    for file in ["epochs.tsv", "report.tsv", "checkpoint.bin", "config.snapshot"] {
        assert_eq!(read("r1", file), read("r2", file), "{file} must be byte-identical");
    }
    let report = String::from_utf8(read("r1", "report.tsv")).unwrap();
    assert!(report.contains("SYNTH_A\tSUMMARY"));
    assert!(report.contains("SYNTH_B\tSUMMARY"));
}

#[test]
fn adapt_zero_epochs_matches_base_and_overlap_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    prepare_corpus(dir.path(), 2, 2);
    let base_cfg = write_run_config(dir.path(), "base.cfg", "CC", "SYNTH_A", 2, "");
    ok(&ser()
        .current_dir(dir.path())
        .args(["train", "--config"])
        .arg(&base_cfg)
        .args(["--out", "base_run"])
        .output()
        .unwrap());

    let adapt_cfg = write_run_config(
        dir.path(),
        "adapt.cfg",
        "ADAPT",
        "SYNTH_B",
        0,
        "adapt_corpus = SYNTH_B\n",
    );
    ok(&ser()
        .current_dir(dir.path())
        .args(["adapt", "--base", "base_run", "--config"])
        .arg(&adapt_cfg)
        .args(["--out", "adapted"])
        .output()
        .unwrap());

    // Metric rows identical to base (provenance comments differ).
    let rows = |run: &str| -> Vec<String> {
        std::fs::read_to_string(dir.path().join(run).join("report.tsv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(String::from)
            .collect()
    };
    assert_eq!(rows("base_run"), rows("adapted"));

    let overlap_cfg = write_run_config(
        dir.path(),
        "overlap.cfg",
        "ADAPT",
        "SYNTH_A",
        1,
        "adapt_corpus = SYNTH_A\n",
    );
    let output = ser()
        .current_dir(dir.path())
        .args(["adapt", "--base", "base_run", "--config"])
        .arg(&overlap_cfg)
        .args(["--out", "adapted_bad"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("overlaps"));
}

#[test]
fn eval_reproduces_the_stored_report_and_empty_manifest_fails() {
    let dir = tempfile::tempdir().unwrap();
    prepare_corpus(dir.path(), 2, 2);
    let config = write_run_config(dir.path(), "run.cfg", "CC", "SYNTH_A", 2, "");
    ok(&ser()
        .current_dir(dir.path())
        .args(["train", "--config"])
        .arg(&config)
        .args(["--out", "run"])
        .output()
        .unwrap());

    let output = ser()
        .current_dir(dir.path())
        .args(["eval", "--run", "run"])
        .output()
        .unwrap();
    ok(&output);
    let stored = std::fs::read_to_string(dir.path().join("run/report.tsv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&output.stdout), stored);

    // The merged four-class view is emitted on request.
    let output = ser()
        .current_dir(dir.path())
        .args(["eval", "--run", "run", "--iem4-view"])
        .output()
        .unwrap();
    ok(&output);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("SYNTH_A.iem4\thappy"), "{stdout}");
    assert!(stdout.contains("SYNTH_A.iem4\tneutral"), "{stdout}");

    // An empty manifest is an error, not an empty report.
    std::fs::write(dir.path().join("empty.tsv"), "# nothing here\n").unwrap();
    let output = ser()
        .current_dir(dir.path())
        .args(["eval", "--run", "run", "--manifest", "empty.tsv"])
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn reproduce_all_emits_the_three_tables() {
    let dir = tempfile::tempdir().unwrap();
    let output = ser()
        .current_dir(dir.path())
        .args([
            "reproduce-all",
            "--out",
            "grid",
            "--seed",
            "3",
            "--epochs",
            "2",
            "--speakers",
            "3",
            "--segments",
            "1",
            "--hidden",
            "6",
        ])
        .output()
        .unwrap();
    ok(&output);

    let t4 = std::fs::read_to_string(dir.path().join("grid/table4.tsv")).unwrap();
    assert_eq!(t4.lines().filter(|l| !l.starts_with('#')).count(), 6, "4 CC + MD + DAT");
    let t5 = std::fs::read_to_string(dir.path().join("grid/table5.tsv")).unwrap();
    assert_eq!(t5.lines().filter(|l| !l.starts_with('#')).count(), 5, "4 CC + DAT");
    let t6 = std::fs::read_to_string(dir.path().join("grid/table6.tsv")).unwrap();
    assert_eq!(t6.lines().filter(|l| !l.starts_with('#')).count(), 2, "OOD + adaptation");
    // 14 run directories.
    assert_eq!(std::fs::read_dir(dir.path().join("grid/runs")).unwrap().count(), 14);
}
