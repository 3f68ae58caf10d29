use std::process::Command;

fn riefflab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_riefflab"));
    c.env_remove("RIEFFLAB_SEED");
    c
}

fn tmp(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("riefflab-cli-{}-{name}", std::process::id()))
}

#[test]
fn empty_suite_list_exits_zero() {
    let report = tmp("empty.json");
    let out = riefflab().args(["run", "--suite", "", "--report"]).arg(&report).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["checks"].as_array().unwrap().len(), 0);
    assert_eq!(json["schema_version"], 1);
    let _ = std::fs::remove_file(report);
}

#[test]
fn zero_tolerance_fails() {
    let out = riefflab().args(["run", "--suite", "fourier", "--grid-n", "16", "--tol", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL fourier-involution"));
}

#[test]
fn passing_suite_and_flags() {
    let out = riefflab()
        .args(["run", "--suite", "fourier,crossed", "--sigma", "-0.2,0.5", "--probes", "seed:3", "count:2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn invalid_arguments_are_rejected() {
    for args in [
        vec!["run", "--suite", "nonsense"],
        vec!["run", "--window", "lorentzian", "--suite", "fourier"],
        vec!["run", "--system", "kronecker:1", "--suite", "fourier"],
        vec!["run", "--probes", "bogus", "--suite", "fourier"],
        vec!["refine", "--check", "prop-2.2", "--levels", "16"],
        vec!["refine", "--check", "prop-2.2", "--levels", "16,16"],
        vec!["refine", "--check", "missing", "--levels", "16,32"],
    ] {
        let out = riefflab().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_and_seed_env() {
    let cfg = tmp("cfg.txt");
    let report = tmp("seeded.json");
    std::fs::write(&cfg, format!("# quick\ngrid_n=16\nsuites=fourier\nseed=11\nreport={}\n", report.display())).unwrap();
    let out = riefflab().arg("run").arg("--config").arg(&cfg).env("RIEFFLAB_SEED", "99").output().unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["environment"]["seed"], 99);
    assert_eq!(json["environment"]["grid_n"], 16);
    std::fs::write(&cfg, "grid_n=16\ngrid_n=32\n").unwrap();
    assert_eq!(riefflab().arg("run").arg("--config").arg(&cfg).output().unwrap().status.code(), Some(2));
    let _ = std::fs::remove_file(cfg);
    let _ = std::fs::remove_file(report);
}

#[test]
fn refine_emits_csv() {
    let out = riefflab().args(["refine", "--check", "prop-2.2", "--levels", "32,16", "--csv"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,residual,order");
    assert!(lines[1].starts_with("16,") && lines[2].starts_with("32,"));
    let order: f64 = lines[2].rsplit(',').next().unwrap().parse().unwrap();
    assert!(order >= 2.0);
}
