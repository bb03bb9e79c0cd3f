use std::fs;
use std::process::{Command, Output};

fn mcalloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcalloc")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mcalloc(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn generate_then_allocate_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    let res = dir.path().join("r.json");
    ok(&["generate", "--setup", "ss", "--seed", "4", "--out", scen.to_str().unwrap()]);
    let loaded = mcalloc::Scenario::load(&scen).unwrap();
    assert_eq!(loaded, mcalloc::generate_scenario(mcalloc::SetupClass::SS, 4));

    ok(&["allocate", "--scenario", scen.to_str().unwrap(), "--method", "m2mgs", "--q-t", "4", "--seed", "4", "--out", res.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&res).unwrap()).unwrap();
    assert_eq!(v["method"]["method"], "M2MGS");
    assert_eq!(v["method"]["q_t"], 4);
    assert_eq!(v["method"]["q_ch"], 3);
}

#[test]
fn allocate_prints_json_to_stdout() {
    let text = ok(&["allocate", "--setup", "ss", "--seed", "1", "--method", "rca", "--q-bs", "2", "--n-chpbs", "2"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["method"]["q_bs"], 2);
    assert_eq!(v["method"]["n_chpbs"], 2);
}

#[test]
fn misplaced_parameters_are_rejected() {
    assert!(!mcalloc(&["allocate", "--method", "r", "--q-t", "3"]).status.success());
    assert!(!mcalloc(&["allocate", "--method", "m2mgs", "--q-bs", "3"]).status.success());
    assert!(!mcalloc(&["allocate", "--method", "m2mgs", "--q-t", "0"]).status.success());
    assert!(!mcalloc(&["generate", "--setup", "xl", "--out", "x.json"]).status.success());
}

#[test]
fn compare_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let stdout = ok(&["compare", "--setup", "ss", "--runs", "3", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(stdout.contains("M2MGS(q_T=8;q_ch=3)"));
    let runs = fs::read_to_string(out.join("ss_comparison_runs.csv")).unwrap();
    // 7 methods x 3 runs x (4 metrics + optimality flag) + header
    assert_eq!(runs.lines().count(), 7 * 3 * 5 + 1);
    assert!(!runs.contains('\r'));
    let table = fs::read_to_string(out.join("ss_comparison_table.csv")).unwrap();
    assert!(table.starts_with("metric,statistic,R,DB,SCVB,DBSR,SCVBSR,"));
    assert!(out.join("ss_comparison_table_timing.csv").exists());
}

#[test]
fn compare_from_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    fs::write(&cfg, r#"{"setup":"SS","methods":[{"method":"R"},{"method":"DB"}],"n_runs":5,"base_seed":3}"#).unwrap();
    let out = dir.path().join("o");
    ok(&["compare", "--config", cfg.to_str().unwrap(), "--runs", "2", "--out", out.to_str().unwrap()]);
    let runs = fs::read_to_string(out.join("ss_comparison_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 2 * 2 * 5 + 1);
    assert!(runs.lines().nth(1).unwrap().starts_with("R,0,3,"));
}

#[test]
fn rca_sweep_marks_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sw");
    ok(&["sweep-rca", "--setup", "ss", "--runs", "1", "--out", out.to_str().unwrap()]);
    let t = fs::read_to_string(out.join("ss_rca_total_utility.csv")).unwrap();
    let lines: Vec<&str> = t.lines().collect();
    assert!(lines[0].starts_with("setup,SS,rows,n_chpBS,cols,q_BS,metric,total_utility"));
    assert_eq!(lines[1], "n_chpBS\\q_BS,2,3,4,5,6,7,8");
    // SS has 6 tenants and at most 3 channels per BS
    assert_eq!(lines.len(), 4);
    assert!(lines[2].ends_with(",-,-"));
}
