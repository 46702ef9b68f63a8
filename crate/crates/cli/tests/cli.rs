use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rooplpp_testgen::oracles::{binary_tree_values, corpus_path, CORPUS};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn rooplpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rooplpp")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn check_accepts_the_corpus() {
    for name in CORPUS {
        let o = rooplpp(&["check", p(&corpus_path(name))]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
    }
}

#[test]
fn check_reports_aliased_arguments() {
    let o = rooplpp(&["check", p(&fixture("bad/aliased_args.rplpp"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("T-Call"), "{}", stderr(&o));
    assert!(stderr(&o).contains("aliased_args.rplpp:9:"), "{}", stderr(&o));
}

#[test]
fn check_reports_syntax_errors() {
    let o = rooplpp(&["check", p(&fixture("bad/truncated.rplpp"))]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("end of input"));
}

#[test]
fn missing_files_are_io_errors() {
    for cmd in ["check", "run", "invert"] {
        assert_eq!(code(&rooplpp(&[cmd, "/nonexistent/prog.rplpp"])), 4);
    }
}

#[test]
fn run_reports_if_assertions_with_a_span() {
    let o = rooplpp(&["run", p(&fixture("errors/if_then.rplpp"))]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("if_then.rplpp:6:9: AssertionFailed-if"), "{err}");
}

#[test]
fn runtime_error_fixtures_fail_with_their_kind() {
    let dir = fixture("errors");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let src = std::fs::read_to_string(&path).unwrap();
        let expect = src.lines().find_map(|l| l.strip_prefix("// expect: ")).unwrap();
        let mut args = vec!["run"];
        args.extend(
            src.lines()
                .find_map(|l| l.strip_prefix("// args: "))
                .unwrap_or("")
                .split_whitespace(),
        );
        args.push(p(&path));
        let o = rooplpp(&args);
        assert_eq!(code(&o), 1, "{}", path.display());
        assert!(
            stderr(&o).contains(&format!(": {expect}: ")),
            "{}: {}",
            path.display(),
            stderr(&o)
        );
        count += 1;
    }
    assert!(count >= 15);
}

#[test]
fn invert_negates_updates_and_is_an_involution() {
    let o = rooplpp(&["invert", p(&fixture("good/increment.rplpp"))]);
    assert_eq!(code(&o), 0);
    let once = stdout(&o);
    assert!(once.contains("x -= 1"));

    let dir = tempfile::tempdir().unwrap();
    let inv = dir.path().join("inv.rplpp");
    std::fs::write(&inv, &once).unwrap();
    let twice = stdout(&rooplpp(&["invert", p(&inv)]));
    let canonical = printed(&fixture("good/increment.rplpp"));
    assert_eq!(twice, canonical);
}

/// The printer's output for the program at `path`.
fn printed(path: &Path) -> String {
    let src = std::fs::read_to_string(path).unwrap();
    rooplpp::pretty_print(&rooplpp::parse(&src).unwrap())
}

#[test]
fn inverted_linked_list_checks() {
    let dir = tempfile::tempdir().unwrap();
    let inv = dir.path().join("inv.rplpp");
    let o = rooplpp(&["invert", p(&corpus_path("LinkedList"))]);
    std::fs::write(&inv, stdout(&o)).unwrap();
    let c = rooplpp(&["check", p(&inv)]);
    assert_eq!(code(&c), 0, "{}", stderr(&c));
}

#[test]
fn run_prints_fields_in_declaration_order() {
    let o = rooplpp(&["run", p(&fixture("good/increment.rplpp"))]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "x = 1\ny = 3\n");
}

#[test]
fn binary_tree_sum_matches_its_inputs() {
    let o = rooplpp(&["run", "--json", p(&corpus_path("BinaryTree"))]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let total: i64 = binary_tree_values().iter().sum();
    assert_eq!(doc["fields"]["sum"], total);
    assert_eq!(doc["fields"]["mirroredSum"], total);
    let keys: Vec<_> = doc["fields"].as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["tree", "sum", "mirroredSum"]);
    assert!(doc["steps"].as_u64().unwrap() > 0);
    assert_eq!(doc["freelists"].as_array().unwrap().len(), 10);
}

#[test]
fn rtm_reports_its_final_state() {
    let o = rooplpp(&["run", p(&corpus_path("RTM"))]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("state = 6\n") && out.contains("steps = 13\n"), "{out}");
}

#[test]
fn saved_state_runs_back_to_the_start() {
    let dir = tempfile::tempdir().unwrap();
    for name in CORPUS {
        let state = dir.path().join(format!("{name}.state"));
        let prog = corpus_path(name);
        let fwd = rooplpp(&["run", "--save-state", p(&state), p(&prog)]);
        assert_eq!(code(&fwd), 0);
        let back = rooplpp(&["run", "--reverse", "--resume", p(&state), p(&prog)]);
        assert_eq!(code(&back), 0, "{}", stderr(&back));
        assert!(stdout(&back).contains("# initial state restored"), "{name}");
    }
}

#[test]
fn resume_rejects_a_different_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s");
    let prog = corpus_path("Fibonacci");
    rooplpp(&["run", "--save-state", p(&state), p(&prog)]);
    let o = rooplpp(&["run", "--freelists", "8", "--resume", p(&state), p(&prog)]);
    assert_eq!(code(&o), 4);
    std::fs::write(&state, b"garbage").unwrap();
    assert_eq!(code(&rooplpp(&["run", "--resume", p(&state), p(&prog)])), 4);
}

#[test]
fn trace_writes_one_record_per_statement() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let o = rooplpp(&["run", "--json", "--trace", p(&trace), p(&corpus_path("Fibonacci"))]);
    let steps = serde_json::from_str::<serde_json::Value>(&stdout(&o)).unwrap()["steps"]
        .as_u64()
        .unwrap();
    let text = std::fs::read_to_string(&trace).unwrap();
    let records: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len() as u64, steps);
    assert_eq!(records[0]["direction"], "forward");
    assert!(records.iter().any(|r| r["rule"] == "Call"));
}

#[test]
fn word_width_is_configurable() {
    let o = rooplpp(&["run", "--word-bits", "16", p(&corpus_path("Fibonacci"))]);
    assert_eq!(stdout(&o), "x1 = 5\nx2 = 8\nn = 0\n");
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.rplpp");
    std::fs::write(&big, "class P int x method main() x += 70000").unwrap();
    assert_eq!(code(&rooplpp(&["run", "--word-bits", "16", p(&big)])), 4);
    assert_eq!(stdout(&rooplpp(&["run", p(&big)])), "x = 70000\n");
}

#[test]
fn dump_heap_lists_free_blocks() {
    let o = rooplpp(&[
        "run",
        "--freelists",
        "4",
        "--dump-heap",
        p(&fixture("good/increment.rplpp")),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().count() > 3);
}
