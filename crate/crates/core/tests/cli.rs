use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gecsr::model::pgm::{encode, GrayImage};

const TINY_MANIFEST: &str = r#"{"seed": 5, "count": 8, "M": 24, "N": 6,
    "matrix_class": ["gaussian", {"geometric": [0.9]}],
    "snr_db_range": [20, 30], "rho_range": [0.5, 1.0]}"#;

fn gecsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gecsr")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn train_config(dir: &Path, variant: &str) -> String {
    let cfg = format!(
        r#"{{"manifest": {TINY_MANIFEST}, "variants": ["{variant}"],
            "trainer": {{"batch_size": 4, "layers": 3, "hidden": 4, "max_steps": 2,
                         "grad_estimator": {{"kind": "spsa", "pairs": 1, "perturbation": 0.05}}}}}}"#
    );
    write(dir, &format!("train_{variant}.json"), &cfg)
}

#[test]
fn gen_reports_manifest_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.json", TINY_MANIFEST);
    let out = gecsr(&["gen", "--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    let hash = gecsr::model::DatasetManifest::from_json(TINY_MANIFEST).unwrap().hash();
    assert!(text.contains(&hash));
    assert!(text.contains("probe: 8 samples"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&gecsr(&["gen", "--config", missing.to_str().unwrap()])), 2);
    let bad = write(dir.path(), "bad.json", r#"{"seed": 1, "count": 2, "M": 0, "N": 4, "matrix_class": "gaussian",
        "snr_db_range": [1, 2], "rho_range": [0.5, 0.5]}"#);
    assert_eq!(code(&gecsr(&["gen", "--config", &bad])), 2);
    let unknown = write(dir.path(), "eval.json", &format!(r#"{{"manifest": {TINY_MANIFEST}, "layerz": 3}}"#));
    assert_eq!(code(&gecsr(&["eval", "--config", &unknown])), 2);
    assert_eq!(code(&gecsr(&["train", "--config", &train_config(dir.path(), "no_such_variant")])), 2);
    assert_eq!(code(&gecsr(&["eval"])), 2);
}

#[test]
fn empty_manifest_probe_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.json", &TINY_MANIFEST.replace("\"count\": 8", "\"count\": 0"));
    let out = gecsr(&["gen", "--config", &cfg]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("probe: empty"));
}

#[test]
fn training_is_reproducible_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = train_config(dir.path(), "hypernet");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        let out = gecsr(&["train", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "9"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ck = fs::read(a.join("hypernet.json")).unwrap();
    assert_eq!(ck, fs::read(b.join("hypernet.json")).unwrap());
    let loss = fs::read_to_string(a.join("hypernet_loss.csv")).unwrap();
    assert!(loss.starts_with("step,batch_loss,moving_avg"));
    assert_eq!(loss.lines().count(), 3);

    let eval = write(
        dir.path(),
        "eval.json",
        &format!(r#"{{"manifest": {TINY_MANIFEST}, "checkpoints": ["a/hypernet.json"], "layers": 5}}"#),
    );
    let out = gecsr(&["eval", "--config", &eval, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("eval.csv")).unwrap();
    for label in ["hypernet", "gecsr_0.9t", "gecsr_0.5"] {
        assert!(table.lines().any(|l| l.starts_with(&format!("{label},"))), "{label} missing");
    }

    let plots = dir.path().join("plots");
    let csv = dir.path().join("eval.csv");
    assert_eq!(code(&gecsr(&["plot", "--table", csv.to_str().unwrap(), "--out", plots.to_str().unwrap()])), 0);
    let mut first: Vec<_> = fs::read_dir(&plots).unwrap().map(|e| e.unwrap().path()).collect();
    first.sort();
    assert!(!first.is_empty());
    let snapshot: Vec<Vec<u8>> = first.iter().map(|p| fs::read(p).unwrap()).collect();
    assert_eq!(code(&gecsr(&["plot", "--table", csv.to_str().unwrap(), "--out", plots.to_str().unwrap()])), 0);
    let again: Vec<Vec<u8>> = first.iter().map(|p| fs::read(p).unwrap()).collect();
    assert_eq!(snapshot, again);
}

#[test]
fn mismatched_checkpoint_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = train_config(dir.path(), "hypergru");
    let out = gecsr(&["train", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let wider = TINY_MANIFEST.replace("\"N\": 6", "\"N\": 7");
    let eval = write(dir.path(), "eval.json", &format!(r#"{{"manifest": {wider}, "checkpoints": ["hypergru.json"]}}"#));
    assert_eq!(code(&gecsr(&["eval", "--config", &eval, "--out", dir.path().to_str().unwrap()])), 4);
    let sweep = write(
        dir.path(),
        "sweep.json",
        &format!(r#"{{"kind": "size", "grid": [6, 7], "manifest": {TINY_MANIFEST}, "checkpoints": ["hypergru.json"], "layers": 4}}"#),
    );
    let out = gecsr(&["sweep", "--config", &sweep, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("sweep_size.csv")).unwrap();
    assert!(table.contains("hypergru,N=6"));
    assert!(!table.contains("hypergru,N=7"));
    assert!(table.contains("gecsr_0.9t,N=7"));
}

#[test]
fn sweeps_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = write(dir.path(), "sweep.json", &format!(r#"{{"grid": [10, 30], "manifest": {TINY_MANIFEST}, "layers": 4}}"#));
    let outs: Vec<Vec<u8>> = ["x", "y"]
        .iter()
        .map(|sub| {
            let out_dir = dir.path().join(sub);
            let out = gecsr(&["sweep", "--config", &sweep, "--kind", "snr", "--out", out_dir.to_str().unwrap()]);
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
            fs::read(out_dir.join("sweep_snr.csv")).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert!(String::from_utf8_lossy(&outs[0]).contains("snr_db=30"));
    assert_eq!(code(&gecsr(&["sweep", "--config", &sweep])), 2);
}

#[test]
fn image_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let black = GrayImage { width: 4, height: 4, pixels: vec![0.0; 16] };
    fs::write(dir.path().join("black.pgm"), encode(&black)).unwrap();
    fs::write(dir.path().join("text.pgm"), "P2\n2 2\n255\n0 1 2 3\n").unwrap();
    for image in ["black.pgm", "text.pgm"] {
        let cfg = write(dir.path(), "img.json", &format!(r#"{{"image": "{image}", "layers": 2}}"#));
        assert_eq!(code(&gecsr(&["recon-image", "--config", &cfg, "--out", dir.path().to_str().unwrap()])), 5, "{image}");
    }
}

#[test]
fn image_reconstruction_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let pixels: Vec<f64> = (0..64).map(|i| if (i / 8 + i % 8) % 3 == 0 { 0.9 } else { 0.1 }).collect();
    fs::write(dir.path().join("img.pgm"), encode(&GrayImage { width: 8, height: 8, pixels })).unwrap();
    let cfg = write(dir.path(), "img.json", r#"{"image": "img.pgm", "layers": 10, "snr_db": 30}"#);
    let out = gecsr(&["recon-image", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let recon = gecsr::model::pgm::read(&dir.path().join("recon.pgm")).unwrap();
    assert_eq!((recon.width, recon.height), (8, 8));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("recon.json")).unwrap()).unwrap();
    assert_eq!(report["m"], 256);
    assert!(report["nmse_db"].as_f64().unwrap().is_finite());
}

#[test]
fn empty_table_exits_6() {
    let dir = tempfile::tempdir().unwrap();
    let table = write(dir.path(), "t.csv", "variant,scenario,t,metric,value\n");
    assert_eq!(code(&gecsr(&["plot", "--table", &table, "--out", dir.path().to_str().unwrap()])), 6);
    let eval = write(dir.path(), "eval.json", &format!(r#"{{"manifest": {TINY_MANIFEST}, "baselines": false}}"#));
    assert_eq!(code(&gecsr(&["eval", "--config", &eval, "--out", dir.path().to_str().unwrap()])), 6);
}
