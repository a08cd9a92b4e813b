use std::process::{Command, Output};

fn pga(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pga")).args(args).output().expect("run pga")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

#[test]
fn fmt_reprints_terms_and_files() {
    let o = pga(&["fmt", "a ; +b;(#2;!)*"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "a;+b;(#2;!)*\n");

    let dir = std::env::temp_dir().join(format!("pga-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("terms.txt");
    std::fs::write(&file, "a;b\n\n-a;!\n").unwrap();
    let o = pga(&["fmt", file.to_str().unwrap()]);
    assert_eq!(stdout(&o), "a;b\n-a;!\n");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn canon_with_trace_and_json() {
    let o = pga(&["canon", "--level", "2", "--trace", "#2;a;#3;b"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("#5;a;#3;b"));
    assert!(out.contains("PGA6 @ 0"));

    let o = pga(&["canon", "--level", "3", "--json", "-a;#1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["form"]["text"], "a;#1");
    assert_eq!(v["trace"][0]["axiom"], "PGA12");
}

#[test]
fn extract_prints_the_thread() {
    let o = pga(&["extract", "+a;!;#0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).is_empty());
    let o = pga(&["extract", "--format", "dot", "a;!"]);
    assert!(stdout(&o).starts_with("digraph"));
}

#[test]
fn eq_exit_codes_follow_the_verdict() {
    assert_eq!(pga(&["eq", "--relation", "bcong", "+a;!;!", "-a;!;!"]).status.code(), Some(0));
    assert_eq!(pga(&["eq", "--relation", "sc", "+a;!;!", "-a;!;!"]).status.code(), Some(1));
    assert_eq!(pga(&["eq", "--relation", "isc", "(a)*", "a;(a)*"]).status.code(), Some(0));
    assert_eq!(pga(&["eq", "--relation", "beq", "#1;a", "a"]).status.code(), Some(0));

    let o = pga(&["eq", "--relation", "derive", "-a;#4;#2;+a", "#3;#4;#2;+a"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "unknown\n");
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("warning:"));
    let o = pga(&["eq", "--relation", "derive", "--strict", "-a;#4;#2;+a", "#3;#4;#2;+a"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_runs_the_experiments() {
    let o = pga(&["verify", "soundness", "--samples", "5", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["axioms"].as_array().unwrap().len(), 30);

    let o = pga(&["verify", "completeness", "--max-len", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("violations: 0\n"));
}

#[test]
fn bad_input_is_a_usage_error() {
    let o = pga(&["canon", "--level", "3", "a;;"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(pga(&["verify", "completeness", "--max-len", "0"]).status.code(), Some(2));
}
