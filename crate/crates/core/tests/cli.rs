use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn volterra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volterra")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", &format!("{name}.json")].iter().collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_prints_csv() {
    let o = volterra(&["simulate", "--kernel", &fixture("geometric_half"), "--steps", "4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "n,x\n0,1\n1,0.5\n2,0.5\n3,0.5\n4,0.5\n");
    let o = volterra(&["simulate", "--kernel", &fixture("geometric_null_p3"), "--steps", "3"]);
    assert_eq!(stdout(&o), "n,x\n0,1\n1,-3\n2,0\n3,0\n");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}.csv"));
        let o = volterra(&["simulate", "--kernel", &fixture("efp"), "--steps", "5000", "--out", path_str(&out)]);
        assert!(o.status.success());
        bodies.push(fs::read(&out).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    let a = volterra(&["certify", "--kernel", &fixture("rouche_table"), "--steps", "1000"]);
    let b = volterra(&["certify", "--kernel", &fixture("rouche_table"), "--steps", "1000"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_writes_a_metadata_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("roots.json");
    let o = volterra(&["roots", "--kernel", &fixture("rouche_final"), "--n", "2", "--out", path_str(&out)]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let roots: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!((roots["r_n"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("roots.json.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "roots");
    assert_eq!(meta["params"]["n"], 2);
    assert_eq!(meta["kernel_id"].as_str().unwrap().len(), 64);
}

#[test]
fn certify_writes_the_report_and_prints_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = volterra(&["certify", "--kernel", &fixture("efp"), "--steps", "1000", "--out", path_str(&out)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "asymptotically_stable (EFP, rigorous)\n");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["final"]["verdict"], "asymptotically_stable");
    assert!(report["attempts"].as_array().unwrap().len() >= 2);
}

#[test]
fn invalid_kernel_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"prefix": [], "tail": {"kind": "parametric", "c": 1, "q": 1, "alpha": -1, "beta": 1}}"#).unwrap();
    let o = volterra(&["certify", "--kernel", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tail.alpha"));
    let missing = dir.path().join("missing.json");
    let o = volterra(&["simulate", "--kernel", path_str(&missing)]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn reproduce_paper_prints_the_table_and_passes() {
    let o = volterra(&["reproduce-paper", "--steps", "1000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "6, 0.667, 0.00024, 0.00137"), "{text}");
    assert!(text.contains("efp: asymptotically_stable (EFP, rigorous)"));
    let last = text.lines().last().unwrap();
    let (passed, total) = last.trim_start_matches("checks: ").trim_end_matches(" passed").split_once('/').unwrap();
    assert_eq!(passed, total);
}
