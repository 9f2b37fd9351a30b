use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hjmot::format::{instance_to_json, parse_solution, solution_to_json};
use hjmot_core::{fixtures, solve_hjmot, Method, PathAtom, ProblemInstance};
use tempfile::TempDir;

fn hjmot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjmot")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_instance(dir: &TempDir, name: &str, inst: &ProblemInstance) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, instance_to_json(inst)).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_prints_summary_lines() {
    let dir = TempDir::new().unwrap();
    for (name, inst, line) in [
        ("tiny1.json", fixtures::tiny_1(), "M=0.52 atoms=1 skipped_mass=[0]"),
        ("tiny2.json", fixtures::tiny_2(), "M=1 atoms=1 skipped_mass=[1]"),
        ("mix1.json", fixtures::mix_1(), "M=0.76 atoms=2 skipped_mass=[0.5]"),
    ] {
        let path = write_instance(&dir, name, &inst);
        let out = dir.path().join(format!("{name}.sol"));
        let o = hjmot(&["solve", s(&path), "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), line);
        assert!(out.exists());
    }
}

#[test]
fn solve_then_certify_round_trip() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "tiny1.json", &fixtures::tiny_1());
    let sol = dir.path().join("sol.json");
    let report = dir.path().join("report.json");
    assert_eq!(hjmot(&["solve", s(&inst), "--out", s(&sol)]).status.code(), Some(0));
    let o = hjmot(&["certify", s(&inst), s(&sol), "--out", s(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&report).unwrap();
    for name in ["feasibility", "splitting", "cyclical", "glue", "tilde-bound", "decomposition", "twist"] {
        assert!(text.contains(&format!("\"name\": \"{name}\"")), "{name} missing");
    }
    let o = hjmot(&["report", s(&report)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("all checks passed"));
}

#[test]
fn tampered_solution_fails_feasibility() {
    let dir = TempDir::new().unwrap();
    let instance = fixtures::mix_1();
    let inst = write_instance(&dir, "mix1.json", &instance);
    let mut sol = solve_hjmot(&instance, Method::Exact).unwrap();
    sol.atoms[0].mass = 0.7;
    sol.atoms[1].mass = 0.3;
    let path = dir.path().join("sol.json");
    fs::write(&path, solution_to_json(&instance, &sol)).unwrap();
    let report = dir.path().join("report.json");
    let o = hjmot(&["certify", s(&inst), s(&path), "--out", s(&report)]);
    assert_eq!(o.status.code(), Some(1));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("\"pass\": false"));
}

#[test]
fn split_mass_solution_fails_decomposition() {
    let dir = TempDir::new().unwrap();
    let instance = fixtures::one_leg(&[0.0], &[0.0, 1.0]);
    let inst = write_instance(&dir, "split.json", &instance);
    let sol = dir.path().join("sol.json");
    assert_eq!(hjmot(&["solve", s(&inst), "--out", s(&sol)]).status.code(), Some(0));
    let report = dir.path().join("report.json");
    let o = hjmot(&["certify", s(&inst), s(&sol), "--checks", "decomposition", "--out", s(&report)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(fs::read_to_string(&report).unwrap().contains("monge-precondition-failed"));
    let o = hjmot(&["monge", s(&inst), s(&sol)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn hash_mismatch_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let tiny1 = write_instance(&dir, "tiny1.json", &fixtures::tiny_1());
    let tiny2 = write_instance(&dir, "tiny2.json", &fixtures::tiny_2());
    let sol = dir.path().join("sol.json");
    assert_eq!(hjmot(&["solve", s(&tiny1), "--out", s(&sol)]).status.code(), Some(0));
    let o = hjmot(&["certify", s(&tiny2), s(&sol)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("solution was computed for instance"));
}

#[test]
fn input_and_infeasibility_exit_codes() {
    let dir = TempDir::new().unwrap();
    let garbage = dir.path().join("bad.json");
    fs::write(&garbage, "{\"K\": 1").unwrap();
    assert_eq!(hjmot(&["solve", s(&garbage)]).status.code(), Some(2));
    assert_eq!(hjmot(&["solve", "/nonexistent/instance.json"]).status.code(), Some(2));

    let mut blocked = fixtures::tiny_2().realized().unwrap();
    blocked.allow_skips = false;
    for m in blocked.costs.matrices.values_mut() {
        m.as_mut_slice().fill(f64::INFINITY);
    }
    let path = write_instance(&dir, "blocked.json", &blocked);
    let o = hjmot(&["solve", s(&path)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn generate_is_deterministic_and_validates() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"family": "circle", "sizes": [3, 2, 3], "seed": 7}"#).unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(hjmot(&["generate", s(&spec), "--out", s(&a)]).status.code(), Some(0));
    assert_eq!(hjmot(&["generate", s(&spec), "--out", s(&b)]).status.code(), Some(0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    fs::write(&spec, r#"{"family": "euclidean", "sizes": [2, 3, 3, 2], "dimension": 2, "seed": 1}"#).unwrap();
    assert_eq!(hjmot(&["generate", s(&spec), "--out", s(&a)]).status.code(), Some(0));
    assert_eq!(hjmot(&["solve", s(&a), "--out", s(&b)]).status.code(), Some(0));

    fs::write(&spec, r#"{"family": "circle", "sizes": [2, 0, 2]}"#).unwrap();
    let o = hjmot(&["generate", s(&spec)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn probe_outputs() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "tiny1.json", &fixtures::tiny_1());
    let o = hjmot(&["probe", s(&inst), "--direction", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let header = rows.headers().unwrap().clone();
    let d_col = header.iter().position(|h| h == "D_t").unwrap();
    let last: Vec<f64> = rows.records().map(|r| r.unwrap()[d_col].parse().unwrap()).collect();
    assert_eq!(last.len(), 4);
    assert!((last[3] + 0.8).abs() < 1e-4);

    let o = hjmot(&["probe", s(&inst), "--direction", "0"]);
    let text = stdout(&o);
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert!(rows.records().all(|r| r.unwrap()[d_col].parse::<f64>().unwrap() == 0.0));

    let explicit = write_instance(&dir, "explicit.json", &fixtures::tiny_1().realized().unwrap());
    let o = hjmot(&["probe", s(&explicit), "--direction", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("probe requires kernel costs"));
}

#[test]
fn reduce_writes_table_and_paths() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "mix1.json", &fixtures::mix_1());
    let paths = dir.path().join("paths.csv");
    let o = hjmot(&["reduce", s(&inst), "--paths", s(&paths)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("source,1,11"));
    assert!(fs::read_to_string(&paths).unwrap().contains("(0, 0, 0)"));
}

#[test]
fn solution_json_reads_back_without_resolving() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "mix1.json", &fixtures::mix_1());
    let o = hjmot(&["solve", s(&inst)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("M=0.76"));
    let stored = parse_solution(&stdout(&o)).unwrap();
    assert_eq!(stored.solution.atoms.len(), 2);
    let masses: Vec<f64> = stored.solution.atoms.iter().map(|a: &PathAtom| a.mass).collect();
    assert_eq!(masses, vec![0.5, 0.5]);
}
