use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use siren2::network::read_checkpoint;
use siren2::signal::read_pgm_ppm;

fn siren2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siren2"))
        .args(args)
        .env_remove("SIREN2_OUT_ROOT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_column(path: &Path, column: &str) -> Vec<f64> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let idx = reader.headers().unwrap().iter().position(|h| h == column).expect("column exists");
    reader
        .records()
        .map(|r| r.unwrap()[idx].parse::<f64>().unwrap())
        .collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn argument_errors_exit_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let missing = siren2(&["fit", "--out", path_str(&out)]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).contains("--input"));
    assert!(stderr(&missing).contains("Usage"));

    let scales_on_uniform = siren2(&["fit", "--input", "synth:eq6-low", "--init", "uniform", "--s0", "5", "--out", path_str(&out)]);
    assert_eq!(code(&scales_on_uniform), 2);
    assert!(stderr(&scales_on_uniform).contains("--s0"));

    let bad_arch = siren2(&["fit", "--input", "synth:eq6-low", "--arch", "3y64", "--out", path_str(&out)]);
    assert_eq!(code(&bad_arch), 2);
    assert!(stderr(&bad_arch).contains("--arch"));

    let unknown_synth = siren2(&["scales", "--input", "synth:nope", "--out", path_str(&out)]);
    assert_eq!(code(&unknown_synth), 2);

    let no_noise_flag = siren2(&["denoise", "--input", "synth:blobs:16x16", "--out", path_str(&out)]);
    assert_eq!(code(&no_noise_flag), 2);
}

#[test]
fn io_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.wav");
    let out = siren2(&["scales", "--input", path_str(&missing), "--out", path_str(&dir.path().join("o"))]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("--input"));
    let garbage = dir.path().join("bad.pgm");
    std::fs::write(&garbage, b"P5\n4 4\n255\n\x00").unwrap();
    let out = siren2(&["scales", "--input", path_str(&garbage), "--out", path_str(&dir.path().join("o"))]);
    assert_eq!(code(&out), 3);
}

#[test]
fn scales_echo_the_centroid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let run = siren2(&["scales", "--input", "synth:eq6-low", "--out", path_str(&out)]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let v = json(&out.join("scales.json"));
    let psi = v["psi"].as_f64().unwrap();
    assert!((psi - 0.6071).abs() < 0.005, "{psi}");
    let s0 = v["s0"].as_f64().unwrap();
    assert!((s0 - 3500.0 * (1.0 - (-7.0 * psi).exp())).abs() < 1e-9);
    assert_eq!(v["C"].as_u64(), Some(1));
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["run"]["command"], "scales");
    assert!(manifest["outputs"].as_array().unwrap().len() == 1);
}

#[test]
fn fit_writes_its_artifacts_and_reruns_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    let run = siren2(&[
        "fit", "--input", "synth:eq6-high", "--synth-len", "256", "--arch", "2x16", "--init", "winner",
        "--auto-scales", "--epochs", "30", "--lr", "1e-3", "--seed", "3", "--out", path_str(&out),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    for f in ["report.json", "loss.csv", "lr.csv", "psnr.csv", "best.ckpt", "last.ckpt", "reconstruction.wav", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let report = json(&out.join("report.json"));
    let s0 = report["init"]["s0"].as_f64().unwrap();
    let s1 = report["init"]["s1"].as_f64().unwrap();
    let psi = report["init"]["psi"].as_f64().unwrap();
    assert!((s0 - 3500.0 * (1.0 - (-7.0 * psi).exp())).abs() < 1e-9);
    assert!((s1 - 3.0 * psi).abs() < 1e-12);
    assert_eq!(read_column(&out.join("loss.csv"), "loss").len(), 30);

    let again = dir.path().join("again");
    let rerun = siren2(&["rerun", "--manifest", path_str(&out.join("manifest.json")), "--out", path_str(&again)]);
    assert_eq!(code(&rerun), 0, "{}", stderr(&rerun));
    for f in ["loss.csv", "psnr.csv", "best.ckpt", "last.ckpt", "reconstruction.wav"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f} differs");
    }
    let m = json(&again.join("manifest.json"));
    assert!(m["rerun_of"].as_str().unwrap().ends_with("manifest.json"));
    assert_eq!(m["run"]["train"]["seed"], 3);
}

#[test]
fn out_root_environment_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_siren2"))
        .args(["synth", "--preset", "eq6-low", "--len", "128", "--out", "rel"])
        .env("SIREN2_OUT_ROOT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(dir.path().join("rel/signal.wav").is_file());
}

#[test]
fn ntk_sweep_emits_one_directory_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ntk");
    let run = Command::new(env!("CARGO_BIN_EXE_siren2"))
        .args([
            "analyze-ntk", "--arch", "2x16", "--n", "64", "--init", "winner", "--s0", "0,10", "--s1", "0,0.5",
            "--seed", "1", "--out", path_str(&out),
        ])
        .env("SIREN2_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let dirs: Vec<String> = {
        let mut reader = csv::Reader::from_path(out.join("index.csv")).unwrap();
        reader.records().map(|r| r.unwrap()[2].to_string()).collect()
    };
    assert_eq!(dirs.len(), 4);
    for d in &dirs {
        let sub: PathBuf = out.join(d);
        let lambdas = read_column(&sub.join("eigenvalues.csv"), "lambda");
        assert_eq!(lambdas.len(), 64);
        let s = read_column(&sub.join("spectral_energy.csv"), "S");
        assert_eq!(s.len(), 33);
        let two_sided: f64 = s[0] + s[32] + 2.0 * s[1..32].iter().sum::<f64>();
        let trace = json(&sub.join("summary.json"))["trace"].as_f64().unwrap();
        assert!(((two_sided - trace) / trace).abs() < 1e-6, "{d}: {two_sided} vs {trace}");
        let eig_sum: f64 = lambdas.iter().sum();
        assert!(((eig_sum - trace) / trace).abs() < 1e-9);
    }
    let fit = dir.path().join("ckpt");
    let run = siren2(&[
        "fit", "--input", "synth:eq6-low", "--synth-len", "64", "--arch", "1x8", "--epochs", "2", "--out", path_str(&fit),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let from_ckpt = dir.path().join("from");
    let run = siren2(&[
        "analyze-ntk", "--checkpoint", path_str(&fit.join("best.ckpt")), "--n", "32", "--out", path_str(&from_ckpt),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert_eq!(read_column(&from_ckpt.join("checkpoint/eigenvalues.csv"), "lambda").len(), 32);
}

#[test]
fn activation_analysis_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("act");
    let run = siren2(&["analyze-activations", "--arch", "3x32", "--n", "128", "--out", path_str(&out)]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let psd = read_column(&out.join("pre_psd.csv"), "psd");
    assert_eq!(psd.len(), 3 * 65);
    let counts = read_column(&out.join("post_hist.csv"), "count");
    assert_eq!(counts.iter().sum::<f64>(), (3 * 128 * 32) as f64);
    let stats = json(&out.join("stats.json"));
    assert_eq!(stats["layers"].as_array().unwrap().len(), 3);
}

#[test]
fn denoise_modes() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("img");
    let run = siren2(&["synth", "--preset", "blobs:24x24:3", "--seed", "2", "--out", path_str(&synth)]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let clean = synth.join("signal.pgm");

    let bad = siren2(&[
        "denoise", "--input", path_str(&clean), "--snr", "5", "--holdout", "0.7", "--out", path_str(&dir.path().join("b")),
    ]);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("--holdout"));

    let noised = dir.path().join("snr");
    let run = siren2(&[
        "denoise", "--input", path_str(&clean), "--snr", "5", "--arch", "2x16", "--epochs", "30", "--lr", "1e-3",
        "--out", path_str(&noised),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(noised.join("noisy.pgm").is_file());
    assert!(noised.join("denoised.pgm").is_file());
    assert!(!read_column(&noised.join("validation.csv"), "mse").is_empty());
    assert!(json(&noised.join("report.json"))["denoise"]["noisy_psnr"]["db"].is_number());

    let pass = dir.path().join("pass");
    let run = siren2(&[
        "denoise", "--input", path_str(&noised.join("noisy.pgm")), "--pre-noised", "--arch", "2x16", "--epochs", "5",
        "--out", path_str(&pass),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(!pass.join("noisy.pgm").exists());
    assert!(json(&pass.join("report.json")).get("denoise").is_none());
    let denoised = read_pgm_ppm(&pass.join("denoised.pgm")).unwrap();
    assert_eq!(denoised.dims, vec![24, 24]);
    let (config, _) = read_checkpoint(&pass.join("best.ckpt")).unwrap();
    assert_eq!(config.input_dim, 2);
}
