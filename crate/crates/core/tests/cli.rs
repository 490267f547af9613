use std::f64::consts::TAU;
use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn cthom(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cthom")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let (code, stdout, stderr) = cthom(&all);
    assert_eq!(code, 0, "{stderr}");
    serde_json::from_str(&stdout).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cthom-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn envelope_shape() {
    let v = json(&["orbits", "--family", "linear:2", "--class", "1,0"]);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["command", "family", "parameters", "passed", "results", "schema", "tolerances"]);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["results"]["count"], 2);
}

#[test]
fn orbit_heights_of_linear_two() {
    let v = json(&["orbits", "--family", "linear:2", "--class", "0,1"]);
    let z: Vec<f64> = v["results"]["circles"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["z_root"].as_f64().unwrap())
        .collect();
    let want = [TAU / 8.0, TAU / 8.0 + TAU / 2.0];
    for (a, b) in z.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{z:?}");
    }
}

#[test]
fn verify_structure_on_giroux() {
    let v = json(&["verify-structure", "--family", "giroux:n=2,eps=0.3,freq=1", "--grid", "4"]);
    assert_eq!(v["passed"], true);
    assert_eq!(v["results"]["invariance"]["invariant"], true);
}

#[test]
fn sampled_family_from_file() {
    let mut table = format!("offset={}\n", 2.0 * TAU);
    for i in 0..=64 {
        let z = TAU * i as f64 / 64.0;
        table.push_str(&format!("{z},{}\n", 2.0 * z + 0.2 * z.sin()));
    }
    let path = scratch("h.txt", &table);
    let family = format!("giroux:file={}", path.display());
    let v = json(&["homology", "--family", &family, "--class", "1,0"]);
    assert_eq!(v["results"]["homology"][0]["rank"], v["results"]["circles"]);
    let v = json(&["conjugate", "--family", &family, "--z", "0.5"]);
    assert_eq!(v["results"]["count"], 2);
}

#[test]
fn stability_from_jump_file() {
    let path = scratch("jumps.txt", "# one jump per window\n1.5,+1,0.1,0.3,0,0.5\n0.7,-1,0.6,0.9,0.5,1\n");
    let v = json(&["stability", "--jumps", path.to_str().unwrap()]);
    let case = &v["results"]["cases"][0];
    assert_eq!(case["positive"], true);
    assert!(case["closed"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(cthom(&["homology", "--family", "linear:1"]).0, 2);
    assert_eq!(cthom(&["stability", "--random", "2", "--jumps", "x"]).0, 2);
    assert_eq!(cthom(&["homology", "--family", "giroux:n=1,eps=5", "--class", "1,0"]).0, 1);
    assert_eq!(cthom(&["equivariant", "--p", "1", "--k", "0"]).0, 1);
    assert_eq!(cthom(&["conjugate", "--family", "linear:3", "--tol", "1e-30"]).0, 3);
    let (code, _, stderr) = cthom(&["stability", "--jumps", "/nonexistent/jumps.txt"]);
    assert_eq!(code, 1);
    assert!(stderr.starts_with("error:"));
}

#[test]
fn csv_rows_match_table_rows() {
    let (_, csv, _) = cthom(&["homology", "--family", "linear:4", "--class", "2,3", "--format", "csv"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "degree,rank,torsion,group");
    assert_eq!(lines[1], "0,4,,Z^4");
    assert_eq!(lines[3], "2,0,,0");
}

#[test]
fn seeded_runs_repeat() {
    let a = cthom(&["stability", "--random", "20", "--seed", "3", "--format", "json"]);
    let b = cthom(&["stability", "--random", "20", "--seed", "3", "--format", "json"]);
    assert_eq!(a, b);
}
