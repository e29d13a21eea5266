use std::path::PathBuf;
use std::process::{Command, Output};

fn bipolar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bipolar")).args(args).env_remove("BIPOLAR_TOL").output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bipolar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn classify_klein_bottle() {
    let out = bipolar(&["classify", "--r", "3", "--k", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "KleinBottle, n=2, m=1");
}

#[test]
fn rank_of_two_one() {
    let out = bipolar(&["rank", "--r", "2", "--k", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "i=6, torus, 4r-2");
}

#[test]
fn invalid_pairs_exit_one() {
    for args in [["rank", "--r", "4", "--k", "2"], ["classify", "--r", "2", "--k", "3"], ["area", "--r", "5", "--k", "0"]] {
        assert_eq!(bipolar(&args).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(bipolar(&["rank", "--r", "2"]).status.code(), Some(1));
    assert_eq!(bipolar(&["rank", "--r", "2", "--k", "1", "--tol", "1e-2"]).status.code(), Some(1));
    assert_eq!(bipolar(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn tolerance_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_bipolar"))
        .args(["rank", "--r", "2", "--k", "1"])
        .env("BIPOLAR_TOL", "1e-1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_bipolar"))
        .args(["rank", "--r", "2", "--k", "1"])
        .env("BIPOLAR_TOL", "1e-9")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn verify_writes_report() {
    let out = bipolar(&["verify", "--r", "6", "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rank_i"], 22);
    assert_eq!(report["multiplicity"], 5);
    assert_eq!(report["topology"], "Torus");
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn verify_strict_still_passes() {
    let out = bipolar(&["verify", "--r", "3", "--k", "1", "--strict"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["checks"][0]["threshold"], 5e-9);
}

#[test]
fn output_is_byte_identical() {
    let (a, b) = (scratch("a.json"), scratch("b.json"));
    for path in [&a, &b] {
        let out = bipolar(&["verify", "--r", "2", "--k", "1", "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn rank_sweep_table() {
    let out = bipolar(&["rank", "--sweep", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "r,k,n,m,topology,rank_i,expected,formula,multiplicity");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.contains(&"5,3,4,1,KleinBottle,3,3,r-2,5"));
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[5], cols[6]);
    }
}

#[test]
fn spectrum_table() {
    let out = bipolar(&["spectrum", "--r", "3", "--k", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    // p = 0, index 2 is the eigenvalue 2
    let row = rows.iter().find(|r| r[0] == "0" && r[1] == "2").unwrap();
    assert!((row[2].parse::<f64>().unwrap() - 2.0).abs() < 1e-7);
    assert_eq!(row[3], "Even");
    assert!(rows.iter().all(|r| r.len() == 7));
}

#[test]
fn immersion_points_on_sphere() {
    let out = bipolar(&["immerse", "--r", "2", "--k", "1", "--grid", "8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# r=2,k=1,n=3,m=1,topology=Torus");
    assert_eq!(lines.next().unwrap(), "u,v,x1,x2,x3,x4,x5");
    let mut count = 0;
    for line in lines {
        let x: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let norm: f64 = x[2..].iter().map(|c| c * c).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        count += 1;
    }
    assert_eq!(count, 64);
}

#[test]
fn area_and_profile() {
    let out = bipolar(&["area", "--r", "3", "--k", "1", "--format", "json"]);
    assert!(out.status.success());
    let area: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(area["rank_i"], 1);
    assert!(area["relative"].as_f64().unwrap() < 1e-9);

    let out = bipolar(&["profile", "--r", "3", "--k", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 2049);
}

#[test]
fn unsupported_combinations() {
    assert_eq!(bipolar(&["spectrum", "--sweep", "3"]).status.code(), Some(1));
    assert_eq!(bipolar(&["verify", "--r", "2", "--k", "1", "--format", "csv"]).status.code(), Some(1));
}
