use std::path::PathBuf;
use std::process::{Command, Output};

use projtract::report::CheckReport;
use projtract::suites::SuiteOptions;
use projtract_cli::*;

fn projtract(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projtract")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("projtract-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn check(name: &str, max: f64, pass: bool) -> CheckReport {
    CheckReport { check: name.into(), max, mean: max, count: 1, tolerance: 1e-10, pass, worst_point: vec![0.1], details: vec![] }
}

#[test]
fn list_reports_every_registered_scenario() {
    let out = projtract(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let listed: Vec<ScenarioDescriptor> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(listed, list_registry());
    let ids: Vec<&str> = listed.iter().map(|d| d.id.as_str()).collect();
    for id in ["flat(3)", "round_sphere(5)", "perturbed(3)", "flat_model_hermitian(2,2)", "sphere_ambient(2)", "standard_contact_r3"] {
        assert!(ids.contains(&id), "{id} missing");
    }
    for d in &listed {
        assert!(d.default_suites.iter().all(|s| d.suites.contains(s)));
        assert_eq!(Scenario::parse(&d.id).unwrap().id(), d.id);
    }
}

#[test]
fn unknown_scenarios_and_checks_are_usage_errors() {
    assert_eq!(projtract(&["analyze", "--scenario", "torus(3)"]).status.code(), Some(2));
    assert_eq!(projtract(&["analyze", "--scenario", "round_sphere(4)"]).status.code(), Some(2));
    assert_eq!(projtract(&["analyze", "--scenario", "flat(3)", "--suite", "affine.nope"]).status.code(), Some(2));
    assert_eq!(projtract(&["analyze"]).status.code(), Some(2));
    assert_eq!(projtract(&["analyze", "--scenario", "flat(3)", "--points", "0"]).status.code(), Some(2));
    assert_eq!(projtract(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sasaki_suite_on_flat_space_fails_at_assembly() {
    let out = projtract(&["analyze", "--scenario", "flat(4)", "--suite", "sasaki", "--points", "10"]);
    assert_eq!(out.status.code(), Some(1));
    let doc = parse_report(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let asm = doc.scenarios[0].checks.iter().find(|c| c.check == "hermitian.assembly").expect("assembly check reported");
    assert!(!asm.pass);
}

#[test]
fn single_checks_can_be_selected() {
    let out = projtract(&["analyze", "--scenario", "flat(3)", "--suite", "affine.bianchi", "--points", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = parse_report(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let names: Vec<&str> = doc.scenarios[0].checks.iter().map(|c| c.check.as_str()).collect();
    assert_eq!(names, ["affine.bianchi"]);
    assert_eq!(doc.invocation.suites, ["affine.bianchi"]);
    assert_eq!(doc.invocation.points, 5);
}

#[test]
fn reports_round_trip_through_the_report_command() {
    let dir = scratch("roundtrip");
    let path = dir.join("r.json");
    let p = path.to_str().unwrap();
    let out = projtract(&["analyze", "--scenario", "flat(3)", "--suite", "affine", "--points", "8", "--out", p]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let doc = parse_report(&text).unwrap();
    assert_eq!(render_report(&doc).unwrap(), text);
    let summary = projtract(&["report", "--in", p]);
    assert_eq!(summary.status.code(), Some(0));
    let s = String::from_utf8(summary.stdout).unwrap();
    assert!(s.contains("affine.bianchi") && s.trim_end().ends_with("0 failed"));
    assert_eq!(projtract(&["report", "--in", dir.join("missing.json").to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(dir.join("bad.json"), "{").unwrap();
    assert_eq!(projtract(&["report", "--in", dir.join("bad.json").to_str().unwrap()]).status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_files_name_scenarios() {
    assert_eq!(scenario_from_config("family=round_sphere\nn=5\n").unwrap(), "round_sphere(5)");
    assert_eq!(scenario_from_config("# model\nfamily = flat_model_hermitian\np=2\nq=2").unwrap(), "flat_model_hermitian(2,2)");
    assert_eq!(scenario_from_config("family=standard_contact_r3").unwrap(), "standard_contact_r3");
    assert!(scenario_from_config("family=round_sphere").is_err());
    assert!(scenario_from_config("family=round_sphere\nn=4").is_err());
    assert!(scenario_from_config("n=3").is_err());
    assert!(scenario_from_config("family=torus\nn=3").is_err());

    let dir = scratch("config");
    let cfg = dir.join("s.cfg");
    std::fs::write(&cfg, "family=flat\nn=3\n").unwrap();
    let out = projtract(&["analyze", "--config", cfg.to_str().unwrap(), "--suite", "affine.beta", "--points", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = parse_report(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(doc.scenarios[0].id, "flat(3)");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn numbers_keep_full_precision_and_non_finite_values_survive() {
    let opts = SuiteOptions::default();
    let checks = vec![check("b", f64::INFINITY, false), check("a", 0.1, true), check("c", f64::NAN, false), check("d", f64::NEG_INFINITY, false)];
    let doc = ReportDocument::new(
        Invocation::new(&["flat(3)".into()], &[], &opts),
        vec![ScenarioReport { id: "flat(3)".into(), checks }],
    )
    .unwrap();
    let text = render_report(&doc).unwrap();
    assert!(text.contains("\"Infinity\"") && text.contains("\"-Infinity\"") && text.contains("\"NaN\""));
    assert!(text.contains("1.0000000000000001e-1"));
    let back = parse_report(&text).unwrap();
    let names: Vec<&str> = back.scenarios[0].checks.iter().map(|c| c.check.as_str()).collect();
    assert_eq!(names, ["a", "b", "c", "d"]);
    assert_eq!(back.scenarios[0].checks[0].max, 0.1);
    assert_eq!(back.scenarios[0].checks[1].max, f64::INFINITY);
    assert!(back.scenarios[0].checks[2].max.is_nan());
    assert!(!back.all_pass());
}

#[test]
fn empty_reports_are_rejected() {
    let inv = Invocation::new(&["flat(3)".into()], &[], &SuiteOptions::default());
    assert!(ReportDocument::new(inv, vec![ScenarioReport { id: "flat(3)".into(), checks: vec![] }]).is_err());
}

#[test]
fn inapplicable_suites_are_reported_not_run() {
    let sel = vec!["ambient".to_string()];
    assert!(run_scenario("flat(3)", &sel, &SuiteOptions::default()).is_err());
}
