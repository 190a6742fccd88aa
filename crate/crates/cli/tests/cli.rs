use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn polyreg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyreg"))
        .current_dir(dir)
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

fn metrics(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap()
}

fn matrix_cols(csv: &str) -> usize {
    let header = csv.lines().next().unwrap();
    header.split(',').nth(1).unwrap().trim().parse().unwrap()
}

#[test]
fn witness_analysis_norm_is_l1() {
    let t = tempfile::tempdir().unwrap();
    let w = polyreg(t.path(), &["norm", "witness", "--dim", "2"]);
    assert!(w.status.success());
    fs::write(t.path().join("F.csv"), stdout(&w)).unwrap();
    let o = polyreg(t.path(), &["norm", "eval", "--form", "analysis", "--matrix", "F.csv", "--x", "3,-4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "7");
    let o = polyreg(t.path(), &["norm", "eval", "--form", "synthesis", "--matrix", "F.csv", "--x", "3,-4"]);
    assert_eq!(stdout(&o).trim(), "4");
}

#[test]
fn eval_forms_and_outputs() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("I.csv"), "2,2\n1,0\n0,1\n").unwrap();
    let o = polyreg(
        t.path(),
        &["norm", "eval", "--form", "weighted-l1", "--matrix", "I.csv", "--x", "3,-4", "--x", "-1,0.5", "--out", "o"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "7\n1.5\n");
    let m = metrics(&t.path().join("o"));
    assert_eq!(m["values"][0], 7.0);
    assert!(t.path().join("o/resolved_config.json").exists());
    assert!(t.path().join("o/report.csv").exists());
    let o = polyreg(t.path(), &["norm", "eval", "--form", "zonotope", "--matrix", "I.csv", "--x", "3,-4"]);
    assert_eq!(stdout(&o).trim(), "4");
}

#[test]
fn reduce_drops_interior_point() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("G.csv"), "2,3\n1,0,0.5\n0,1,0.5\n").unwrap();
    let o = polyreg(t.path(), &["norm", "reduce", "--matrix", "G.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(matrix_cols(&stdout(&o)), 2);
}

#[test]
fn dualize_cross_polytope_gives_hypercube() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("C.csv"), "3,3\n1,0,0\n0,1,0\n0,0,1\n").unwrap();
    let o = polyreg(t.path(), &["norm", "dualize", "--matrix", "C.csv", "--out", "o"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(matrix_cols(&text), 4);
    for row in text.lines().skip(1) {
        for v in row.split(',') {
            assert!((v.parse::<f64>().unwrap().abs() - 1.0).abs() < 1e-12, "{text}");
        }
    }
    assert!(t.path().join("o/result.csv").exists());
}

#[test]
fn parse_and_precondition_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("bad.csv"), "2,2\n1,x\n0,1\n").unwrap();
    fs::write(t.path().join("I.csv"), "2,2\n1,0\n0,1\n").unwrap();
    fs::write(t.path().join("flat.csv"), "2,2\n1,2\n2,4\n").unwrap();
    let o = polyreg(t.path(), &["norm", "eval", "--matrix", "bad.csv", "--x", "1,2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = polyreg(t.path(), &["norm", "eval", "--matrix", "I.csv", "--x", "1,oops"]);
    assert_eq!(o.status.code(), Some(2));
    let o = polyreg(t.path(), &["norm", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = polyreg(t.path(), &["norm", "eval", "--matrix", "I.csv", "--x", "1,2,3"]);
    assert_eq!(o.status.code(), Some(3));
    let o = polyreg(t.path(), &["norm", "dualize", "--matrix", "flat.csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("span"), "{}", stderr(&o));
    fs::write(t.path().join("cfg.json"), r#"{"unknown_key": 1}"#).unwrap();
    let o = polyreg(t.path(), &["--config", "cfg.json", "approx"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn approx_rate_and_exact_l1() {
    let t = tempfile::tempdir().unwrap();
    let o = polyreg(t.path(), &["approx", "--n", "8,16,32,64", "--samples", "5000", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let slope = metrics(&t.path().join("a"))["slope"].as_f64().unwrap();
    assert!((-2.3..=-1.7).contains(&slope), "slope {slope}");
    let csv = fs::read_to_string(t.path().join("a/report.csv")).unwrap();
    assert!(csv.starts_with("n,epsilon"));
    let o = polyreg(t.path(), &["approx", "--target", "l1", "--n", "2,8", "--samples", "2000", "--out", "b"]);
    assert!(o.status.success());
    for e in metrics(&t.path().join("b"))["epsilon"].as_array().unwrap() {
        assert!(e.as_f64().unwrap() < 1e-12);
    }
}

#[test]
fn selftest_passes_and_reports_groups() {
    let t = tempfile::tempdir().unwrap();
    let o = polyreg(t.path(), &["selftest", "--out", "s"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let m = metrics(&t.path().join("s"));
    assert_eq!(m["passed"], true);
    assert!(m["groups"].as_array().unwrap().len() >= 10);
}

#[test]
fn selftest_flags_corrupted_frame() {
    let t = tempfile::tempdir().unwrap();
    let u = "[1,1,1,1, 1,-1,1,-1, 1,1,-1,-1, 1,-1,-1,2]";
    fs::write(t.path().join("frame.json"), format!(r#"{{"W":2,"U":{u}}}"#)).unwrap();
    let o = polyreg(t.path(), &["selftest", "--frame", "frame.json", "--out", "s"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Parseval"), "{}", stderr(&o));
    let m = metrics(&t.path().join("s"));
    assert_eq!(m["passed"], false);
    let groups = m["groups"].as_array().unwrap();
    let parseval = groups.iter().find(|g| g["name"] == "parseval_frame").unwrap();
    assert_eq!(parseval["passed"], false);
}

#[test]
fn denoise_without_noise_is_exact() {
    let t = tempfile::tempdir().unwrap();
    let o = polyreg(t.path(), &["denoise", "--sigma", "0", "--lambda", "0", "--size", "32", "--out", "d"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = metrics(&t.path().join("d"));
    assert_eq!(m["psnr_noisy"], "inf");
    assert_eq!(m["psnr_denoised"], "inf");
    for f in ["result.pgm", "result.pfg", "report.csv", "resolved_config.json"] {
        assert!(t.path().join("d").join(f).exists(), "{f}");
    }
}

#[test]
fn denoise_tuned_gains_over_noisy() {
    let t = tempfile::tempdir().unwrap();
    let o = polyreg(t.path(), &["denoise", "--size", "32", "--tune", "--grid", "-2,0,5", "--out", "d"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = metrics(&t.path().join("d"));
    let gain = m["psnr_denoised"].as_f64().unwrap() - m["psnr_noisy"].as_f64().unwrap();
    assert!(gain >= 3.0, "gain {gain}");
    let report = fs::read_to_string(t.path().join("d/report.csv")).unwrap();
    assert_eq!(report.lines().count(), 6);
}

#[test]
fn denoise_tv_and_divergence_exit() {
    let t = tempfile::tempdir().unwrap();
    let o = polyreg(t.path(), &["denoise", "--size", "32", "--regularizer", "tv", "--out", "d"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = metrics(&t.path().join("d"));
    assert!(m["psnr_denoised"].as_f64().unwrap() > m["psnr_noisy"].as_f64().unwrap());
    let o = polyreg(t.path(), &["denoise", "--size", "32", "--tau", "50", "--out", "x"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn resolved_config_reproduces_bit_exactly() {
    let t = tempfile::tempdir().unwrap();
    let o = polyreg(t.path(), &["--seed", "5", "denoise", "--size", "32", "--frame", "dct3", "--lambda", "0.05", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = polyreg(t.path(), &["--config", "a/resolved_config.json", "denoise", "--out", "b"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    assert_eq!(fs::read(a.join("result.pfg")).unwrap(), fs::read(b.join("result.pfg")).unwrap());
    assert_eq!(fs::read(a.join("metrics.json")).unwrap(), fs::read(b.join("metrics.json")).unwrap());
    let cfg: Value = serde_json::from_str(&fs::read_to_string(b.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["seed"], 5);
    assert_eq!(cfg["frame"], "dct3");
}

#[test]
fn flags_override_config_file() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("c.json"),
        r#"{"command":"denoise","size":32,"lambda":0.3,"solver":{"tol":1e-4,"max_iter":300}}"#,
    )
    .unwrap();
    let o = polyreg(t.path(), &["--config", "c.json", "denoise", "--lambda", "0.02", "--tol", "1e-3", "--out", "d"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg: Value = serde_json::from_str(&fs::read_to_string(t.path().join("d/resolved_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["lambda"], 0.02);
    assert_eq!(cfg["size"], 32);
    assert_eq!(cfg["solver"]["tol"], 1e-3);
    assert_eq!(cfg["solver"]["max_iter"], 300);
}

#[test]
fn mri_full_mask_without_regularization_recovers_truth() {
    let t = tempfile::tempdir().unwrap();
    let o = polyreg(t.path(), &["mri", "--mask", "full", "--lambda", "0", "--size", "32", "--out", "m"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = metrics(&t.path().join("m"));
    assert!(m["psnr_recon"].as_f64().unwrap() > 200.0, "{m}");
    for f in ["result.pgm", "zerofill.pgm", "mask.pbm", "report.csv"] {
        assert!(t.path().join("m").join(f).exists(), "{f}");
    }
}

#[test]
fn mri_radial_beats_zero_fill() {
    let t = tempfile::tempdir().unwrap();
    let o = polyreg(
        t.path(),
        &["mri", "--size", "32", "--mask", "radial:16", "--lambda", "1e-3", "--save-measurements", "--out", "m"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m = metrics(&t.path().join("m"));
    assert!(m["psnr_recon"].as_f64().unwrap() >= m["psnr_zero_fill"].as_f64().unwrap() + 1.0, "{m}");
    assert!(t.path().join("m/measurements.raw").exists());
    assert!(t.path().join("m/measurements.raw.json").exists());
    let o = polyreg(t.path(), &["mri", "--size", "32", "--mask-file", "m/mask.pbm", "--lambda", "1e-3", "--out", "n"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(metrics(&t.path().join("n"))["psnr_recon"], m["psnr_recon"]);
}
