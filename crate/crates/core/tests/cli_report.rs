mod common;

use std::path::PathBuf;
use std::process::{Command, Output};

use common::{case_file, SMALL_CASES};
use compact_opf::bnb::Termination;
use compact_opf::report::{RunRecord, BENCH_COLUMNS};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compact-opf")).args(args).output().unwrap()
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("compact-opf-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn solve_case3_closes_at_the_published_value() {
    let dir = scratch("solve");
    let out = dir.join("case3.txt");
    let o = run(&["solve", case_file("pglib_opf_case3_lmbd").to_str().unwrap(), "--gap", "1e-4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rec = RunRecord::from_document(&text).unwrap();
    assert_eq!(rec.status, Termination::GapClosed);
    let obj = rec.objective.unwrap();
    assert!((obj - 5694.5249).abs() <= 1e-3 * 5694.5249, "{obj}");
    assert_eq!(rec.z_count, 6);
    // the written document reproduces itself exactly
    assert_eq!(rec.to_document(), text);
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn missing_file_exits_with_one() {
    let o = run(&["solve", "missing.m"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[matpower-io]"));
}

#[test]
fn gap_reports_the_root_gap_and_passes() {
    let o = run(&["gap", case_file("caseWB2").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("PASS"), "{text}");
    let gap: f64 = text.lines().find(|l| l.starts_with("gap")).unwrap().split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((gap - 1.947).abs() <= 0.1, "{gap}");
}

#[test]
fn gap_without_reference_is_an_error() {
    let dir = scratch("noref");
    let path = dir.join("renamed.m");
    let text = std::fs::read_to_string(case_file("caseWB2")).unwrap().replace("function mpc = caseWB2", "function mpc = renamed");
    std::fs::write(&path, text).unwrap();
    assert_eq!(run(&["gap", path.to_str().unwrap()]).status.code(), Some(1));
    let o = run(&["gap", path.to_str().unwrap(), "--reference", "905.67"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("given on the command line"));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn node_limit_exits_with_two() {
    let o = run(&["solve", case_file("caseWB2").to_str().unwrap(), "--node-limit", "5"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = RunRecord::from_document(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(rec.status, Termination::NodeLimit);
    assert!(rec.lower_bound <= rec.objective.unwrap());
}

#[test]
fn bench_writes_one_row_per_case() {
    let dir = scratch("bench");
    for name in SMALL_CASES {
        std::fs::copy(case_file(name), dir.join(format!("{name}.m"))).unwrap();
    }
    let table = dir.join("table.csv");
    let o = run(&["bench", dir.to_str().unwrap(), "--out", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), BENCH_COLUMNS.join(","));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 7);
    let z = BENCH_COLUMNS.iter().position(|c| *c == "z").unwrap();
    let row14 = rows.iter().find(|r| r[0] == "pglib_opf_case14_ieee").unwrap();
    assert_eq!(row14[z], "28");
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn bench_on_an_empty_directory_fails() {
    let dir = scratch("empty");
    assert_eq!(run(&["bench", dir.to_str().unwrap()]).status.code(), Some(1));
    let _ = std::fs::remove_dir_all(dir);
}
