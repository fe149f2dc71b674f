use std::fs;
use std::process::{Command, Output};

fn deflate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deflate")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn dz2_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dz2.txt");
    fs::write(&path, "x1^4\nx1^2*x2 + x2^4\nx3 + x3^2 - 7*x1^3 - 8*x1^2\n").unwrap();
    let o = deflate(&[
        "deflate",
        path.to_str().unwrap(),
        "--point",
        "0.00006787, 0.00007577, -0.9999",
        "--theta",
        "0.005",
        "--eps",
        "0.005",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["final_size"], 3);
    assert_eq!(v["n_alpha"], 0);
    assert_eq!(v["verdict"], "Exact");
    assert!(v["breadth"].as_f64().unwrap() < 1e-12);
}

#[test]
fn ex6_case_reports_seven() {
    let o = deflate(&["deflate", "--case", "ex6", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["final_size"], 7);
    assert_eq!(v["n_alpha"], 3);
    assert_eq!(v["inclusion"].as_array().unwrap().len(), 4);
}

#[test]
fn regular_system_needs_no_deflation() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("reg.txt");
    let pt = dir.path().join("reg.pt");
    fs::write(&sys, "# a line and a parabola\nvars: x, y\nx^2 + y - 3\nx - y + 1\n").unwrap();
    fs::write(&pt, "1.0001 1.9999\n").unwrap();
    let o = deflate(&["deflate", sys.to_str().unwrap(), "--point", pt.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no deflation needed"));
}

#[test]
fn unverified_exit_code() {
    let o = deflate(&["deflate", "--case", "dz2", "--no-verify"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("unverified"));
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.txt");
    fs::write(&path, "0\n").unwrap();
    let o = deflate(&["deflate", path.to_str().unwrap(), "--point", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("identically zero equation"));
    let o = deflate(&["deflate", "--case", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_table_and_json() {
    let o = deflate(&["bench", "breadth5", "dz2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("System"));
    assert!(out.contains("5 (0 new)"));
    let o = deflate(&["bench", "ex3", "--json", "--sequential"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["name"], "ex3");
}

#[test]
fn export_round_trips_through_deflate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ex3.txt");
    let o = deflate(&["export", "ex3", "-o", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = deflate(&["deflate", path.to_str().unwrap(), "--point", "0.0006721,0.0008381", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["final_size"], 5);
    let o = deflate(&["list"]);
    assert!(stdout(&o).lines().any(|l| l == "ex6"));
}

#[test]
fn seeded_start_is_reproducible() {
    let a = deflate(&["deflate", "--case", "dz1", "--seed", "4", "--json"]);
    let b = deflate(&["deflate", "--case", "dz1", "--seed", "4", "--json"]);
    let pa: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    let pb: serde_json::Value = serde_json::from_str(&stdout(&b)).unwrap();
    assert_eq!(pa["point"], pb["point"]);
}
