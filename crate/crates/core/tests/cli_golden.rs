mod common;

use common::fixture_path;
use peerdx::cli;

fn golden(name: &str, args: &[&str]) {
    let args: Vec<String> = args
        .iter()
        .map(|a| match a.strip_prefix('@') {
            Some(f) => fixture_path(f).to_string_lossy().into_owned(),
            None => a.to_string(),
        })
        .collect();
    let out = cli::run(&args);
    let expected = std::fs::read_to_string(fixture_path(&format!("golden/{name}.txt"))).unwrap();
    assert_eq!(out.stdout, expected, "{name}: {args:?}");
    assert_eq!(out.code, 0, "{name}");
}

#[test]
fn validate() {
    golden("validate_fix_a", &["validate", "@fix_a.p2p"]);
    golden("validate_fix_b", &["validate", "@fix_b.p2p"]);
}

#[test]
fn solutions() {
    golden("solutions_fix_a_oracle", &["solutions", "@fix_a.p2p", "--peer", "P1"]);
    golden("solutions_fix_b_asp", &["solutions", "@fix_b.p2p", "--peer", "P", "--method", "asp"]);
    golden("solutions_fix_b_lav", &["solutions", "@fix_b.p2p", "--peer", "P", "--method", "lav"]);
    golden(
        "solutions_fix_c_transitive",
        &["solutions", "@fix_c.p2p", "--peer", "P", "--method", "asp", "--mode", "transitive"],
    );
    golden("solutions_fix_a_json", &["--format", "json", "solutions", "@fix_a.p2p", "--peer", "P1"]);
}

#[test]
fn answers() {
    golden(
        "answer_fix_a_r1",
        &["answer", "@fix_a.p2p", "--peer", "P1", "--query", "@q_r1.fo", "--both"],
    );
    golden(
        "answer_fix_b_join",
        &["answer", "@fix_b.p2p", "--peer", "P", "--query", "@q_join.fo", "--both"],
    );
}

#[test]
fn compile() {
    golden("compile_fix_b_direct", &["compile", "@fix_b.p2p", "--peer", "P", "--method", "asp"]);
    golden(
        "compile_fix_b_unfolded",
        &["compile", "@fix_b.p2p", "--peer", "P", "--method", "asp", "--unfold-choice"],
    );
    golden(
        "compile_fix_b_shifted",
        &["compile", "@fix_b.p2p", "--peer", "P", "--method", "asp", "--unfold-choice", "--shift-hcf"],
    );
    golden("compile_fix_b_fd", &["compile", "@fix_b_fd.p2p", "--peer", "P", "--method", "asp"]);
    golden("compile_fix_b_lav", &["compile", "@fix_b.p2p", "--peer", "P", "--method", "lav"]);
    golden(
        "compile_fix_c_transitive",
        &["compile", "@fix_c.p2p", "--peer", "P", "--method", "asp", "--mode", "transitive"],
    );
}

#[test]
fn solve() {
    golden("solve_appendix", &["solve", "@appendix.lp"]);
    golden("solve_textbook", &["solve", "@textbook.lp"]);
}

#[test]
fn check() {
    golden("check_fix_a", &["check", "@fix_a.p2p"]);
    golden("check_fix_b", &["check", "@fix_b.p2p"]);
    golden("check_fix_c", &["check", "@fix_c.p2p"]);
}

#[test]
fn exit_codes() {
    let path = |f: &str| fixture_path(f).to_string_lossy().into_owned();
    assert_eq!(cli::run(["validate", "/nonexistent.p2p"]).code, 2);
    assert_eq!(cli::run(["frobnicate"]).code, 2);
    let q = path("q_r1.fo");
    let foreign = cli::run(["answer", &path("fix_a.p2p"), "--peer", "P2", "--query", &q]);
    assert_eq!(foreign.code, 2, "{}", foreign.stdout);
    let empty = cli::run(["solve", &path("fix_b.p2p")]);
    assert_eq!(empty.code, 2);
}

#[test]
fn deterministic_across_threads() {
    let f = fixture_path("fix_a.p2p").to_string_lossy().into_owned();
    let one = cli::run(["solutions", &f, "--peer", "P1", "--threads", "1"]);
    let four = cli::run(["solutions", &f, "--peer", "P1", "--threads", "4"]);
    assert_eq!(one.stdout, four.stdout);
}
