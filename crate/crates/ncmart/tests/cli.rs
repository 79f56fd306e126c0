//! End-to-end tests of the `ncmart` binary: determinism of `gen`, the
//! decompose / check / suite flows, and the exit-code contract.

use std::process::Command;

fn ncmart() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ncmart"))
}

#[test]
fn gen_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let status = ncmart()
            .args(["gen", "--seed", "7", "--dim", "8", "--levels", "3"])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap(), "gen not byte-identical");

    // a parse -> serialize round trip is also byte-identical
    let file: ncmart::verify::InstanceFile =
        serde_json::from_slice(&bytes_a).unwrap();
    let inst = file.to_instance().unwrap();
    let again =
        serde_json::to_string_pretty(&ncmart::verify::InstanceFile::from_instance(&inst)).unwrap();
    assert_eq!(String::from_utf8(bytes_a).unwrap(), again);
}

#[test]
fn decompose_emits_passing_certificate_json() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    assert!(ncmart()
        .args(["gen", "--seed", "1", "--dim", "4", "--levels", "2"])
        .arg("--out")
        .arg(&inst)
        .status()
        .unwrap()
        .success());
    let out = ncmart()
        .arg("decompose")
        .arg("--in")
        .arg(&inst)
        .args(["--t", "1.0", "--epsilon", "0.01"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "decompose exit code");
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(cert["lambda"].as_f64().unwrap() > 0.0);
    assert!(cert["cost"].as_f64().unwrap() > 0.0);
    for key in ["z_bound_ok", "y_bound_ok", "trace_bound_ok", "sum_ok"] {
        assert_eq!(cert[key], serde_json::Value::Bool(true), "{key}");
    }
}

#[test]
fn kcurve_emits_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    assert!(ncmart()
        .args(["gen", "--seed", "2", "--dim", "4", "--levels", "2"])
        .arg("--out")
        .arg(&inst)
        .status()
        .unwrap()
        .success());
    let out = ncmart()
        .arg("kcurve")
        .arg("--in")
        .arg(&inst)
        .args(["--p", "2", "--tmin", "0.1", "--tmax", "10", "--points", "9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,lower,upper,certificate_id");
    assert_eq!(lines.filter(|l| !l.is_empty()).count(), 9);
}

#[test]
fn check_runs_one_named_check() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    assert!(ncmart()
        .args(["gen", "--seed", "3", "--dim", "8", "--levels", "3"])
        .arg("--out")
        .arg(&inst)
        .status()
        .unwrap()
        .success());
    let out = ncmart()
        .arg("check")
        .arg("--in")
        .arg(&inst)
        .args(["--name", "dual_doob"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!reports.as_array().unwrap().is_empty());
}

#[test]
fn error_paths_use_exit_code_2() {
    // invalid mode
    let out = ncmart()
        .args(["gen", "--seed", "0", "--dim", "4", "--levels", "2", "--mode", "bogus"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
    // missing file
    let out = ncmart()
        .args(["decompose", "--in", "/nonexistent.json", "--t", "1.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // unknown check name
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    assert!(ncmart()
        .args(["gen", "--seed", "0", "--dim", "4", "--levels", "2"])
        .arg("--out")
        .arg(&inst)
        .status()
        .unwrap()
        .success());
    let out = ncmart()
        .arg("check")
        .arg("--in")
        .arg(&inst)
        .args(["--name", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn suite_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let report_json = dir.path().join("report.json");
    let report_csv = dir.path().join("report.csv");
    // a tiny config to keep this test fast
    let config = serde_json::json!({
        "seeds": [0, 1],
        "dims": [4],
        "mode": "noncommutative",
        "checks": ["dual_doob", "hardy"],
        "epsilon": 0.01,
        "tolerance": 1e-8,
        "t_points": 7
    });
    std::fs::write(&cfg, serde_json::to_string(&config).unwrap()).unwrap();
    let out = ncmart()
        .arg("suite")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-json")
        .arg(&report_json)
        .arg("--out-csv")
        .arg(&report_csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&report_csv).unwrap();
    assert!(csv.starts_with("check,seed,dim,label,lhs,rhs,ratio,constant,pass"));
    // report subcommand re-reads the JSON and passes
    let out = ncmart()
        .arg("report")
        .arg("--in")
        .arg(&report_json)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(!out.stdout.is_empty());
}
