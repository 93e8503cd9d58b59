use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_loclab");

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("LOCLAB_OUT_DIR")
        .output()
        .unwrap()
}

/// Data rows of a CSV file, split on commas.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn meta(path: &Path, key: &str) -> Option<String> {
    fs::read_to_string(path).unwrap().lines().find_map(|l| {
        l.strip_prefix("# ")
            .and_then(|kv| kv.split_once('='))
            .filter(|(k, _)| *k == key)
            .map(|(_, v)| v.to_string())
    })
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn classify_small_ranges() {
    let d = tempfile::tempdir().unwrap();
    let f = d.path().join("classify.csv");

    assert!(run(&["classify", "--n-max", "5", "--k-max", "6"], d.path())
        .status
        .success());
    let r = rows(&f);
    assert_eq!(r.len(), 6);
    let last = r.last().unwrap();
    assert_eq!(
        (
            last[0].as_str(),
            last[1].as_str(),
            last[2].as_str(),
            last[7].as_str()
        ),
        ("5", "4", "6", "II")
    );

    assert!(run(&["classify", "--n-max", "3", "--k-max", "2"], d.path())
        .status
        .success());
    assert_eq!(
        rows(&f),
        vec![vec!["3", "2", "2", "4", "5/4", "15/64", "1/16", "I"]]
    );

    let out = run(&["classify", "--n-max", "2", "--k-max", "2"], d.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(rows(&f).is_empty());
    assert_eq!(
        fs::read_to_string(&f)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count(),
        1
    );
}

#[test]
fn csv_metadata_block() {
    let d = tempfile::tempdir().unwrap();
    run(&["classify", "--n-max", "5"], d.path());
    let f = d.path().join("classify.csv");
    assert_eq!(
        meta(&f, "version").as_deref(),
        Some(env!("CARGO_PKG_VERSION"))
    );
    assert_eq!(meta(&f, "command").as_deref(), Some("classify"));
    assert_eq!(meta(&f, "config_hash").unwrap().len(), 16);
    assert!(!fs::read_to_string(&f).unwrap().contains('\r'));
}

#[test]
fn json_schema_and_rationals() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(
        &["--format", "json", "classify", "--n-max", "3", "--k-max", "2"],
        d.path()
    )
    .status
    .success());
    let v = json(&d.path().join("classify.json"));
    assert_eq!(v["schema"], 1);
    assert_eq!(v["data"][0]["a"], "15/64");
    assert_eq!(v["data"][0]["tan_theta_sq"], "5/4");
    assert_eq!(v["data"][0]["type"], "I");
}

#[test]
fn portrait_launches() {
    let d = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "portrait", "--triple", "3,2,4", "--launch", "origin", "--launch", "fixed",
        ],
        d.path(),
    );
    assert!(out.status.success());
    let phi0 = 1.75f64.sqrt();
    let orbit = rows(&d.path().join("portrait_3-2-4_launch1.csv"));
    let phi: Vec<f64> = orbit.iter().map(|r| r[1].parse().unwrap()).collect();
    let flips = phi
        .windows(2)
        .filter(|w| (w[0] - phi0).signum() != (w[1] - phi0).signum())
        .count();
    assert!(flips >= 4, "{flips} sign changes around tan(theta)");
    // the spiral reaches the fixed point ball after four passes through the ray
    let events = rows(&d.path().join("portrait_3-2-4_launch1_events.csv"));
    assert_eq!(events.iter().filter(|e| e[0] == "loc_crossing").count(), 4);
    assert_eq!(events.last().unwrap()[0], "fixed_point_entry");

    let fixed = rows(&d.path().join("portrait_3-2-4_launch2.csv"));
    assert_eq!(fixed.len(), 2);
    assert_eq!(fixed[0][1..3], fixed[1][1..3]);

    let d = tempfile::tempdir().unwrap();
    assert!(run(&["portrait", "--triple", "3,2,2"], d.path())
        .status
        .success());
    let phi: Vec<f64> = rows(&d.path().join("portrait_3-2-2_launch1.csv"))
        .iter()
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert!(phi.windows(2).all(|w| w[1] > w[0]));
    assert!((phi.last().unwrap() - 1.25f64.sqrt()).abs() < 1e-8);
}

#[test]
fn solution_tables() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(
        &["solutions", "--triple", "3,2,4", "--m-max", "5"],
        d.path()
    )
    .status
    .success());
    let r = rows(&d.path().join("solutions_3-2-4.csv"));
    assert_eq!(r.len(), 5);
    let bound = 11.0 * 11f64.sqrt() / 4.0;
    let deficits: Vec<f64> = r.iter().map(|x| x[5].parse().unwrap()).collect();
    assert!(deficits.windows(2).all(|w| w[1] < w[0]) && deficits.iter().all(|x| *x > 0.0));
    assert!(r
        .iter()
        .all(|x| x[3].parse::<f64>().unwrap() < bound + 1e-12));

    assert!(run(
        &["solutions", "--triple", "5,4,6", "--m-max", "3"],
        d.path()
    )
    .status
    .success());
    assert_eq!(rows(&d.path().join("solutions_5-4-6.csv")).len(), 3);

    assert!(run(
        &["solutions", "--triple", "3,2,2", "--m-max", "1"],
        d.path()
    )
    .status
    .success());
    assert_eq!(rows(&d.path().join("solutions_3-2-2.csv")).len(), 1);
}

#[test]
fn type_one_with_several_solutions_writes_one_and_exits_numeric() {
    let d = tempfile::tempdir().unwrap();
    let out = run(
        &["solutions", "--triple", "3,2,2", "--m-max", "3"],
        d.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let f = d.path().join("solutions_3-2-2.csv");
    assert_eq!(rows(&f).len(), 1);
    assert!(meta(&f, "note").unwrap().contains("does not oscillate"));
}

#[test]
fn solution_curves_end_on_the_ray() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(
        &["solutions", "--triple", "3,2,4", "--m-max", "2", "--curves"],
        d.path()
    )
    .status
    .success());
    for m in 1..=2 {
        let c = rows(&d.path().join(format!("solutions_3-2-4_m{m}.csv")));
        let last = c.last().unwrap();
        let r: f64 = last[3].parse().unwrap();
        let rho: f64 = last[4].parse().unwrap();
        assert!((r - 1.0).abs() < 1e-9 && (rho - 1.75f64.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn jacobi_reports() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(
        &["--format", "json", "jacobi", "--triple", "5,4,6"],
        d.path()
    )
    .status
    .success());
    let v = json(&d.path().join("jacobi_5-4-6.json"));
    assert_eq!(v["data"]["verdict"]["verdict"], "Unstable");
    let f = v["data"]["translation"]["frequency"].as_f64().unwrap();
    assert!((f - 1.0 / 6f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["data"]["translation"]["frequency_sq"], "1/6");

    assert!(run(
        &["--format", "json", "jacobi", "--triple", "3,2,2"],
        d.path()
    )
    .status
    .success());
    let v = json(&d.path().join("jacobi_3-2-2.json"));
    assert_eq!(v["data"]["verdict"]["verdict"], "Stable");
    assert_eq!(
        v["data"]["conjugate_points"]["zeros"]
            .as_array()
            .unwrap()
            .len(),
        0
    );

    assert!(
        run(&["jacobi", "--triple", "3,2,4", "--count", "3"], d.path())
            .status
            .success()
    );
    let r = rows(&d.path().join("jacobi_3-2-4.csv"));
    assert_eq!(r.len(), 3);
    let expect = (8.0 * std::f64::consts::PI / 5f64.sqrt()).exp();
    for x in &r[1..] {
        let ratio: f64 = x[3].parse().unwrap();
        assert!((ratio - expect).abs() < 1e-10 * expect);
    }
}

#[test]
fn foliation_report() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(&["foliate", "--triple", "3,2,2"], d.path())
        .status
        .success());
    let r = rows(&d.path().join("foliate_3-2-2.csv"));
    let get = |k: &str| r.iter().find(|x| x[0] == k).map(|x| x[1].clone()).unwrap();
    assert_eq!(get("passed"), "true");
    assert_eq!(get("slopes_exact.0"), "-5/2");
    assert_eq!(get("slopes_exact.1"), "-3/2");

    let out = run(&["foliate", "--triple", "3,2,4"], d.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_suites_and_fault() {
    let d = tempfile::tempdir().unwrap();
    for scope in ["algebra", "geometry"] {
        let out = run(&["verify", scope], d.path());
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stdout)
        );
        let r = rows(&d.path().join(format!("verify_{scope}.csv")));
        assert!(!r.is_empty() && r.iter().all(|x| x[4] == "true"));
    }
    let out = run(&["verify", "all", "--inject-fault"], d.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn usage_errors() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["bogus"][..],
        &["portrait", "--triple", "3,2,3"],
        &["portrait", "--triple", "4,2,2"],
        &["portrait", "--triple", "3,2,4", "--rtol", "-1"],
        &["solutions", "--triple", "3,2,4", "--m-max", "0"],
        &["jacobi", "--triple", "3,2,4", "--anchor", "0"],
        &["verify", "everything"],
        &["--format", "xml", "classify"],
    ] {
        assert_eq!(run(args, d.path()).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(
        Command::new(BIN)
            .arg("--help")
            .output()
            .unwrap()
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn output_directory_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["classify", "--n-max", "3"])
        .env("LOCLAB_OUT_DIR", d.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(d.path().join("classify.csv").exists());
}

#[test]
fn hash_tracks_configuration() {
    let d = tempfile::tempdir().unwrap();
    let f = d.path().join("classify.csv");
    run(&["classify", "--n-max", "5"], d.path());
    let a = meta(&f, "config_hash");
    run(&["--sequential", "classify", "--n-max", "5"], d.path());
    let b = meta(&f, "config_hash");
    run(&["classify", "--n-max", "7"], d.path());
    let c = meta(&f, "config_hash");
    assert_eq!(a, b);
    assert_ne!(a, c);
}
