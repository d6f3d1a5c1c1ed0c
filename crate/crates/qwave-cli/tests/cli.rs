//! End-to-end tests of the command-line interface: exit codes, the JSON
//! document shape, determinism, and session files.

use std::process::{Command, Output};

fn qwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (serde_json::Value, Output) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = qwave(&full);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)));
    (v, out)
}

#[test]
fn exit_codes_follow_the_contract() {
    // 0: all verdicts pass
    let out = qwave(&["verify", "--f", "0", "--K", "1", "--L", "0"]);
    assert_eq!(out.status.code(), Some(0));
    // 1: verification failure
    let out = qwave(&["verify", "--f", "u^2", "--K", "1", "--L", "u"]);
    assert_eq!(out.status.code(), Some(1));
    // 2: usage error
    let out = qwave(&["verify", "--nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    // 2: expression parse error
    let out = qwave(&["verify", "--f", "1/(", "--K", "1", "--L", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn detsys_generate_counts() {
    let (v, out) = json(&["detsys", "generate", "--form", "a-ne-0"]);
    assert_eq!(out.status.code(), Some(0));
    let members = &v["results"][0]["result"]["system"]["members"];
    assert_eq!(members.as_array().unwrap().len(), 4);

    let (v, _) = json(&["detsys", "generate", "--form", "a-eq-0"]);
    let members = &v["results"][0]["result"]["system"]["members"];
    assert_eq!(members.as_array().unwrap().len(), 2);

    let (v, _) = json(&["detsys", "generate", "--form", "a-ne-0", "--ku-zero"]);
    let members = &v["results"][0]["result"]["system"]["members"];
    assert_eq!(members.as_array().unwrap().len(), 3);
}

#[test]
fn worked_instance_verifies_through_cli() {
    let (v, out) = json(&["verify", "--f", "1/(y+z)", "--K", "z/y", "--L", "u/y"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(v["pass"], serde_json::Value::Bool(true));
    let items = v["results"][0]["result"]["report"]["items"]
        .as_array()
        .unwrap();
    assert_eq!(items.len(), 4);
    for item in items {
        assert_eq!(item["verdict"]["kind"], "Zero");
    }
}

#[test]
fn machine_output_is_deterministic() {
    let a = qwave(&["--json", "case1", "--T", "y*z", "--f", "1/(y+z)"]);
    let b = qwave(&["--json", "case1", "--T", "y*z", "--f", "1/(y+z)"]);
    assert_eq!(a.stdout, b.stdout, "reports must be byte-identical");
    // The seed is echoed.
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["seed"].is_u64());
    assert!(v["tolerance"].is_number());
}

#[test]
fn case3_failing_constraint_reported() {
    let (v, out) = json(&["case3", "--s", "y", "--d", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let fam = &v["results"][0]["result"]["family"];
    assert_eq!(fam["f"], "1/3");
    assert_eq!(fam["constraint1"], "2*y");
}

#[test]
fn classify_tags() {
    let (v, _) = json(&["classify", "--K", "z/y"]);
    assert_eq!(v["results"][0]["result"]["tag"], "Case1");
    let (v, _) = json(&["classify", "--K", "0"]);
    assert_eq!(v["results"][0]["result"]["tag"], "Case2");
    let (v, _) = json(&["classify", "--K", "exp(u)"]);
    assert_eq!(
        v["results"][0]["result"]["tag"]["Case3"]["exponential_structure"],
        serde_json::Value::Bool(true)
    );
}

#[test]
fn transform_factor_of_four() {
    let (v, _) = json(&["transform", "--F", "u^3"]);
    assert_eq!(v["results"][0]["result"]["result"], "(1/4)*u^3");
    let out = qwave(&["transform", "--F", "t*u", "--roundtrip"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn reduce_reports_the_normalized_ode() {
    let (v, out) = json(&[
        "reduce", "--T", "y*z", "--omega", "y/z", "--sigma", "y", "--f", "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = &v["results"][0]["result"];
    assert_eq!(r["reducibility"], "ReducibleSymbolic");
    assert_eq!(r["package"]["p_of_omega"], "2/omega");
    // Characteristic failure is a verification failure (exit 1).
    let out = qwave(&["reduce", "--T", "y*z", "--omega", "y+z", "--sigma", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn session_file_execution() {
    let dir = std::env::temp_dir().join("qwave-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("session.qw");
    std::fs::write(
        &path,
        "# worked example\nlet Tprod = y*z\ncase1 --T Tprod --f \"1/(y+z)\"\nverify --f \"1/(y+z)\" --K \"z/y\" --L \"u/y\"\n",
    )
    .unwrap();
    let out = qwave(&["--json", "--session", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
    assert_eq!(v["pass"], serde_json::Value::Bool(true));
}

#[test]
fn check_numeric_gate() {
    // u = c1 y + c2 z solves u_yz = 0 exactly on this stencil.
    let out = qwave(&[
        "check-numeric",
        "--u",
        "3*y + 5*z",
        "--f",
        "0",
        "--h",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(0));
    // u = y z does not solve u_yz = 0.
    let out = qwave(&["check-numeric", "--u", "y*z", "--f", "0", "--h", "0.01"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_numeric_accepts_grid_files() {
    // Sample u = y*z on a grid, check it against u_yz = 1.
    let dir = std::env::temp_dir().join("qwave-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("surface.grid");
    let mut text = String::from("9 9 1 1 0.125\n");
    for i in 0..9 {
        let y = 1.0 + i as f64 * 0.125;
        let row: Vec<String> = (0..9)
            .map(|j| format!("{:e}", y * (1.0 + j as f64 * 0.125)))
            .collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    std::fs::write(&path, text).unwrap();
    let out = qwave(&[
        "check-numeric",
        "--grid",
        path.to_str().unwrap(),
        "--f",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let out = qwave(&[
        "check-numeric",
        "--grid",
        path.to_str().unwrap(),
        "--f",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}
