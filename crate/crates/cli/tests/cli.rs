use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fermatdyn"))
        .args(args)
        .env_remove("FERMATDYN_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn missing_file_exits_2() {
    let o = run(&["height", "--system", "/nonexistent/system.json", "--point", "(1:2)"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_descriptor_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\"kind\": ").unwrap();
    let o = run(&["systems", "validate", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn power_height_of_one_two_is_log_two() {
    let o = run(&["height", "--system", &cfg("power_p1.json"), "--point", "(1:2)"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let value = v["value"].as_f64().unwrap();
    let radius = v["error_radius"].as_f64().unwrap();
    assert!((value - 2f64.ln()).abs() <= radius + 1e-15);
    assert!(radius <= 1e-15);
}

#[test]
fn chebyshev_two_is_height_zero() {
    let o = run(&["height", "--system", &cfg("chebyshev.json"), "--point", "(2:1)"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap().abs() <= 1e-8);
}

#[test]
fn height_stream_has_one_line_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.json");
    fs::write(&pts, r#"[["1","2"],["3","1"],["1","0"]]"#).unwrap();
    let o = run(&["height", "--system", &cfg("chebyshev.json"), "--points", pts.to_str().unwrap(), "--point", "(5:2)"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 4);
}

#[test]
fn non_positive_tolerance_is_a_domain_error() {
    let o = run(&["height", "--system", &cfg("chebyshev.json"), "--point", "(3:1)", "--tolerance", "0"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn fermat_line_squared_has_a_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("y2.json");
    let csv = dir.path().join("y2.csv");
    let o = run(&[
        "check-fermat",
        "--system",
        &cfg("power_p2.json"),
        "--surface",
        &cfg("fermat_line.json"),
        "--index",
        "2",
        "--bound",
        "5",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["verdict"]["status"], "counterexample");
    let named = report["verdict"]["point"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap().to_string())
        .collect::<Vec<_>>();
    assert_eq!(named, ["3", "4", "5"]);
    assert!(fs::read_to_string(&csv).unwrap().contains("(3:4:5),positive"));
}

#[test]
fn fermat_line_cubed_holds() {
    let o = run(&[
        "check-fermat",
        "--system",
        &cfg("power_p2.json"),
        "--surface",
        &cfg("fermat_line.json"),
        "--index",
        "3",
        "--bound",
        "20",
    ]);
    assert_eq!(code(&o), 0);
}

#[test]
fn product_example_exit_code_matches_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let args = |out: &str| {
        run(&[
            "check-fermat",
            "--system",
            &cfg("power_p1xp1.json"),
            "--surface",
            &cfg("bilinear_example.json"),
            "--index",
            "2,2",
            "--bound",
            "10",
            "--out",
            out,
        ])
    };
    let o = args(out.to_str().unwrap());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let holds = report["verdict"]["status"] == "fermat-holds-within-bound";
    assert_eq!(code(&o), if holds { 0 } else { 1 });
    let again = dir.path().join("q.json");
    args(again.to_str().unwrap());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

fn certify(report: &Path, law: &str) -> Output {
    run(&[
        "certify",
        "--system",
        &cfg("power_p2.json"),
        "--report",
        report.to_str().unwrap(),
        "--min-bound",
        "3",
        "--degree-law",
        law,
    ])
}

#[test]
fn certify_thresholds_from_a_prior_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("y2.json");
    run(&[
        "check-fermat",
        "--system",
        &cfg("power_p2.json"),
        "--surface",
        &cfg("fermat_line.json"),
        "--index",
        "2",
        "--bound",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    for (law, m0) in [("system", 3), ("linear", 3), ("square", 2)] {
        let o = certify(&out, law);
        assert_eq!(code(&o), 0, "{law}");
        let cert: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(cert["m0"], m0, "{law}");
    }
}

#[test]
fn certify_reads_a_min_height_report() {
    let dir = tempfile::tempdir().unwrap();
    let mh = dir.path().join("mh.json");
    let pts = dir.path().join("s.json");
    fs::write(&pts, r#"[["3","4","5"]]"#).unwrap();
    let o = run(&["min-height", "--system", &cfg("power_p2.json"), "--bound", "3", "--out", mh.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = run(&[
        "certify",
        "--system",
        &cfg("power_p2.json"),
        "--points",
        pts.to_str().unwrap(),
        "--min-height",
        mh.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let cert: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cert["m0"], 3);
}

#[test]
fn certify_rejects_empty_s() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("s.json");
    fs::write(&pts, "[]").unwrap();
    let o = run(&[
        "certify",
        "--system",
        &cfg("power_p2.json"),
        "--points",
        pts.to_str().unwrap(),
        "--min-bound",
        "3",
    ]);
    assert_ne!(code(&o), 0);
    assert_ne!(code(&o), 1);
}

#[test]
fn orbit_certificates_classify_chebyshev_points() {
    let o = run(&["orbit", "--system", &cfg("chebyshev.json"), "--point", "(2:1)", "--point", "(3:1)"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let verdicts: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["verdict"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(verdicts, ["zero", "positive"]);
}

#[test]
fn systems_validate_accepts_shipped_configs() {
    let mut args = vec!["systems".to_string(), "validate".to_string()];
    for f in ["power_p1.json", "power_p2.json", "chebyshev.json", "lattes_y2_x3_minus_x.json", "power_p1xp1.json"] {
        args.push(cfg(f));
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = run(&args);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 5);
}

#[test]
fn manifest_digest_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    let mut payloads = Vec::new();
    for w in ["1", "8"] {
        let out = dir.path().join(format!("scan{w}.json"));
        let man = dir.path().join(format!("man{w}.json"));
        let o = run(&[
            "--workers",
            w,
            "--manifest",
            man.to_str().unwrap(),
            "scan-density",
            "--mode",
            "multi",
            "--system",
            &cfg("power_p1xp1.json"),
            "--surface",
            &cfg("bilinear_example.json"),
            "--box",
            "4,4",
            "--from",
            "2,2",
            "--bound",
            "6",
            "--epsilon",
            "1/2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&man).unwrap()).unwrap();
        digests.push(m["config_digest"].as_str().unwrap().to_string());
        payloads.push(fs::read(&out).unwrap());
    }
    assert_eq!(digests[0], digests[1]);
    assert_eq!(payloads[0], payloads[1]);
}

#[test]
fn worker_env_var_gives_identical_output() {
    let run_with = |w: &str| {
        Command::new(env!("CARGO_BIN_EXE_fermatdyn"))
            .args([
                "height",
                "--system",
                &cfg("lattes_y2_x3_minus_x.json"),
                "--point",
                "(2:1)",
                "--point",
                "(-1/3:1)",
                "--point",
                "(5:7)",
            ])
            .env("FERMATDYN_WORKERS", w)
            .output()
            .unwrap()
    };
    let a = run_with("1");
    let b = run_with("8");
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn scan_density_mode_must_match_system() {
    let o = run(&[
        "scan-density",
        "--mode",
        "single",
        "--system",
        &cfg("power_p1xp1.json"),
        "--surface",
        &cfg("bilinear_example.json"),
        "--box",
        "3,3",
        "--bound",
        "4",
    ]);
    assert_eq!(code(&o), 2);
}
