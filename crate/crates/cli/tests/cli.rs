use std::path::Path;
use std::process::{Command, Output};

fn qkgeom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkgeom")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn verify_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = qkgeom(&[
        "verify",
        "--model",
        "very-special",
        "--h",
        "x1^3",
        "--c",
        "0,1",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_json(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["environment"]["seed"], 7);
    assert_eq!(r["environment"]["s"], 1.0);
    assert_eq!(r["environment"]["sigma"], 1.0);
    assert_eq!(r["summary"]["failed"], 0);
    assert!(r["summary"]["total"].as_u64().unwrap() > 10);
}

#[test]
fn rnorm2_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = qkgeom(&[
        "rnorm2",
        "--model",
        "very-special",
        "--h",
        "x1^3",
        "--c",
        "1",
        "--rho",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_json(&out);
    let recs = r["records"].as_array().unwrap();
    assert!(!recs.is_empty());
    for rec in recs {
        assert_eq!(rec["name"], "rnorm2");
        let expected = rec["expected"].as_f64().unwrap();
        assert!((expected - 1654272.0 / 4374.0).abs() < 1e-9);
        assert!((rec["computed"].as_f64().unwrap() - 378.206).abs() < 0.01);
    }
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = qkgeom(&[
            "run",
            "--model",
            "quadratic",
            "--n",
            "1",
            "--c",
            "0,0.5",
            "--points",
            "2",
            "--seed",
            "11",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read(p).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let o = qkgeom(&["verify", "--model", "quadratic", "--n", "1", "--points", "2", "--seed", "12"]);
    assert_ne!(a, o.stdout);
}

#[test]
fn records_sorted_by_name_then_point() {
    let o = qkgeom(&["run", "--model", "quadratic", "--n", "0", "--points", "3", "--c", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let keys: Vec<(String, u64)> = r["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| (x["name"].as_str().unwrap().to_string(), x["point"].as_u64().unwrap_or(0)))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn conflicting_cubic_entries_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "model = \"very-special\"\ncubic = [[1, 1, 2, 2.0], [2, 1, 1, 3.0]]\n").unwrap();
    let o = qkgeom(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("conflicting"), "{}", stderr(&o));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "model = \"quadratic\"\nn = 1\nc = [0.25]\nseed = 3\nchecks = [\"isometry\"]\n[points]\ncount = 2\n",
    )
    .unwrap();
    let o = qkgeom(&["run", "--config", cfg.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["environment"]["seed"], 4);
    assert_eq!(r["summary"]["total"], 4);
}

#[test]
fn parse_errors_exit_2_with_location() {
    let o = qkgeom(&["verify", "--h", "x1^3 + x2^2"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("column 8"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "model = \"quadratic\"\nn = [\n").unwrap();
    let o = qkgeom(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    assert_eq!(code(&qkgeom(&["verify", "--bogus"])), 2);
    assert_eq!(code(&qkgeom(&["verify", "--tol", "nope=1"])), 2);
    assert_eq!(code(&qkgeom(&["rnorm2", "--model", "quadratic"])), 2);
    assert_eq!(code(&qkgeom(&["scenario", "acceptance-0"])), 2);
}

#[test]
fn tightened_tolerance_fails_with_exit_1() {
    let o = qkgeom(&["einstein", "--model", "quadratic", "--n", "0", "--points", "1", "--tol", "scalar=1e-15"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("FAIL scalar"));
}

#[test]
fn domain_error_is_a_failed_check() {
    // the point's base lies outside the unit ball of the quadratic model
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "model = \"quadratic\"\nn = 1\nchecks = [\"isometry\"]\n[points]\nexplicit = [[0.9, 0.9, 1, 0, 0, 0, 0, 0]]\n",
    )
    .unwrap();
    let o = qkgeom(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn csv_output_with_json_alongside() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = qkgeom(&["domains", "--c", "-1,0", "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("name,model,c,point,computed,expected,tolerance,test,pass,detail"));
    assert!(csv.contains("Sig(4n,4)"));
    assert_eq!(read_json(&dir.path().join("r.json"))["summary"]["total"], 12);
}

#[test]
fn scenarios_are_listed_and_runnable() {
    let o = qkgeom(&["scenario", "list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for k in 1..=9 {
        assert!(text.contains(&format!("acceptance-{k}\t")));
    }
    let o = qkgeom(&["scenario", "acceptance-4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["summary"]["total"], 80);
}
