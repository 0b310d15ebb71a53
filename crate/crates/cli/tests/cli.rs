use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn ownet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ownet")).args(args).output().unwrap()
}

fn ownet_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ownet"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn json_ok(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn gp(sub: &str, fig: &str, scenario: &str, extra: &[&str]) -> Vec<String> {
    let mut args = vec![
        "gp".to_string(),
        sub.to_string(),
        "--graph".to_string(),
        fixture(fig),
        "--scenario".to_string(),
        format!("{}/{scenario}", fixture(fig)),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

fn run(args: &[String]) -> Output {
    ownet(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn fig8_check_after_first_transaction() {
    let v = json_ok(&run(&gp("check", "fig08", "scenario_t1.json", &["--tx", "1,C,0.9"])));
    assert_eq!(v["takeover"], true);
    assert_eq!(v["witnesses"][0]["strategic"], "B");
    assert_eq!(v["witnesses"][0]["control_share"], json!(0.51));

    let first = json_ok(&run(&gp("check", "fig08", "scenario.json", &["--tx", "1,A,0.51", "--exact"])));
    assert_eq!(first["takeover"], false);
}

#[test]
fn gp_fixtures_reproduce_verdicts() {
    for exact in [false, true] {
        let flag: &[&'static str] = if exact { &["--exact"] } else { &[] };
        let with = |extra: &[&'static str]| [extra, flag].concat();

        let limit = json_ok(&run(&gp("limit", "fig09", "scenario.json", &with(&["--buyer", "1", "--target", "B"]))));
        assert!((limit["max_share"].as_f64().unwrap() - 0.1).abs() <= 1e-4);

        let plan = json_ok(&run(&gp("protect", "fig10", "scenario.json", &with(&[]))));
        assert_eq!(plan["acquisitions"][0]["target"], "K");
        assert!((plan["acquisitions"][0]["delta"].as_f64().unwrap() - 0.21).abs() < 1e-9);

        let plan = json_ok(&run(&gp("protect", "fig10", "scenario.json", &with(&["--with-intermediaries"]))));
        let via_e = plan["alternatives"].as_array().unwrap().iter().find(|o| o["via"] == "E").unwrap();
        let deltas: Vec<f64> = via_e["acquisitions"].as_array().unwrap().iter().map(|a| a["delta"].as_f64().unwrap()).collect();
        assert!((deltas[0] - 0.51).abs() < 1e-9 && (deltas[1] - 0.11).abs() < 1e-9, "{deltas:?}");

        let alone = json_ok(&run(&gp("check", "fig11", "scenario.json", &with(&["--tx", "2,C,0.9"]))));
        let joint = json_ok(&run(&gp("collude", "fig11", "scenario.json", &with(&["--tx", "2,C,0.9"]))));
        assert_eq!((alone["takeover"].clone(), joint["takeover"].clone()), (json!(false), json!(true)));

        let v = json_ok(&run(&gp("cautious", "fig12", "scenario.json", &with(&["--tx", "1,A,0.51", "--foreign", "1"]))));
        assert_eq!(v["takeover"], true);
    }
}

#[test]
fn scenario_defaults_to_entity_flags() {
    let g = fixture("fig08");
    let v = json_ok(&ownet(&["gp", "check", "--graph", &g, "--tx", "1,A,0.51"]));
    assert_eq!(v["takeover"], false);
    assert_eq!(v["exposure"][0]["control_share"], json!(0.2));
}

#[test]
fn usage_errors_exit_2() {
    let out = ownet(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert_eq!(ownet(&["analyze"]).status.code(), Some(2));
    let g = fixture("fig08");
    assert_eq!(ownet(&["gp", "check", "--graph", &g, "--tx", "1,A"]).status.code(), Some(2));
    assert_eq!(ownet(&["conglomerates", "--graph", &g, "--epsilon", "half"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_ownet"))
        .args(["analyze", "--graph", &g])
        .env("OWNET_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1() {
    let g = fixture("fig08");
    let out = ownet(&["ownership", "--graph", &g, "--source", "nobody"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nobody"));
    assert_eq!(ownet(&["gp", "check", "--graph", &g, "--tx", "1,A,1.5"]).status.code(), Some(1));
    assert_eq!(ownet(&["analyze", "--graph", "/nonexistent/graph.json"]).status.code(), Some(1));
}

#[test]
fn fig6_conglomerates() {
    let v = json_ok(&ownet(&["conglomerates", "--graph", &fixture("fig06"), "--epsilon", "0.5"]));
    assert_eq!(v["conglomerates"], json!([{"id": "3", "members": ["3", "5", "9"]}]));
    let v = json_ok(&ownet(&["conglomerates", "--graph", &fixture("fig06"), "--indicators"]));
    assert!(v["indicators"].is_object());
}

#[test]
fn control_and_ownership() {
    let v = json_ok(&ownet(&["control", "--graph", &fixture("fig04b"), "--controller", "A", "--exact"]));
    assert_eq!(v["controlled"], json!(["1", "3"]));
    assert_eq!(v["control_share"]["3"], json!(0.61));

    let v = json_ok(&ownet(&["ownership", "--graph", &fixture("fig03b"), "--source", "A"]));
    assert!((v["values"]["1"].as_f64().unwrap() - 0.625).abs() < 1e-9);
    let v = json_ok(&ownet(&["ownership", "--graph", &fixture("fig03a"), "--source", "A", "--epsilon", "0.1"]));
    assert_eq!(v["values"]["2"], json!(0.3));
}

#[test]
fn generate_then_analyze() {
    for seed in ["0", "1", "7", "42"] {
        let out = ownet(&["generate", "--nodes", "500", "--seed", seed]);
        assert_eq!(out.status.code(), Some(0));
        let report = json_ok(&ownet_stdin(&["analyze", "--graph", "-"], &out.stdout));
        assert_eq!(report["node_count"], 500);
        let check = json_ok(&ownet_stdin(&["validate", "--graph", "-"], &out.stdout));
        assert_eq!(check["errors"], json!([]));
        assert_eq!(check["convergence"]["convergent"], true);
    }
}

#[test]
fn generate_is_deterministic() {
    let a = ownet(&["generate", "--nodes", "1000", "--seed", "42"]);
    let b = ownet(&["generate", "--nodes", "1000", "--seed", "42"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let one = json_ok(&ownet(&["generate", "--nodes", "1"]));
    assert_eq!(one["entities"].as_array().unwrap().len(), 1);
    assert_eq!(one["edges"], json!([]));

    let out = ownet(&["generate", "--nodes", "10", "--person-fraction", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn generate_to_csv_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("g");
    let summary = json_ok(&ownet(&["generate", "--nodes", "200", "--csv-dir", csv.to_str().unwrap()]));
    assert_eq!(summary["node_count"], 200);
    let report_path = dir.path().join("report.json");
    let out = ownet(&["analyze", "--graph", csv.to_str().unwrap(), "--output", report_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&fs::read_to_string(report_path).unwrap()).unwrap();
    assert_eq!(report["node_count"], 200);

    let nodes = csv.join("nodes.csv");
    let edges = csv.join("edges.csv");
    let v = json_ok(&ownet(&[
        "analyze",
        "--graph-nodes",
        nodes.to_str().unwrap(),
        "--graph-edges",
        edges.to_str().unwrap(),
    ]));
    assert_eq!(v, report);
}

#[test]
fn filter_by_decree() {
    let dir = tempfile::tempdir().unwrap();
    let decree = dir.path().join("decree.json");
    fs::write(&decree, r#"{"allowed_prefixes": ["62"]}"#).unwrap();
    let g = fixture("fig06");
    let v = json_ok(&ownet(&["filter", "--graph", &g, "--decree", decree.to_str().unwrap()]));
    let ids: Vec<&str> = v["entities"].as_array().unwrap().iter().map(|e| e["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["1", "3", "5"]);
    let impact = json_ok(&ownet(&["filter", "--graph", &g, "--decree", decree.to_str().unwrap(), "--impact"]));
    assert_eq!(impact["Lazio"]["closed"], 2);
}

#[test]
fn validate_flags_bad_graphs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("nodes.csv"), "id,kind\nP,person\n1,company\n").unwrap();
    fs::write(dir.path().join("edges.csv"), "owner,owned,share\n1,P,0.5\n").unwrap();
    let out = ownet(&["validate", "--graph", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["errors"][0]["kind"], "person_owned");

    fs::write(dir.path().join("nodes.csv"), "id,kind\n1,company\n2,company\n").unwrap();
    fs::write(dir.path().join("edges.csv"), "owner,owned,share\n1,2,1\n2,1,1\n").unwrap();
    let out = ownet(&["validate", "--graph", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["convergence"]["convergent"], false);
}

#[test]
fn thread_cap_is_honoured() {
    let out = Command::new(env!("CARGO_BIN_EXE_ownet"))
        .args(["conglomerates", "--graph", &fixture("fig06")])
        .env("OWNET_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(json_ok(&out)["conglomerates"][0]["id"], "3");
}
