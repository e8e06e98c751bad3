//! End-to-end tests of the `chowcalc` binary: output formats, exit codes,
//! determinism of the tables, file round trips, and agreement with the
//! library API (the CLI must stay a thin wrapper).

use std::path::Path;
use std::process::{Command, Output};

use chowcalc::fourier::degree_f;
use chowcalc::simplicial::{subdivide, CubeVertex, OrderedGraph};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chowcalc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_graph(path: &Path, g: &OrderedGraph) {
    std::fs::write(path, g.to_json_string()).unwrap();
}

#[test]
fn degree_fourier_basis() {
    let out = run(&["degree", "--d", "2", "--basis", "F", "10", "01", "11"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "16\n");
}

#[test]
fn degree_c_basis() {
    let out = run(&["degree", "--d", "2", "--basis", "C", "00", "10", "11"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1\n");
}

#[test]
fn degree_with_coefficients_and_powers() {
    // −1 · C_00² C_11 has degree +1
    let out = run(&["degree", "--d", "2", "--basis", "C", "-1", "00^2", "11"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1\n");

    // rational coefficients print exactly
    let out = run(&["degree", "--d", "1", "--basis", "C", "1/2", "0", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1/2\n");

    // multi-monomial literal: C_00 C_10 C_11 + −1 C_00² C_11 → 1 − (−1) = 2
    let out = run(&[
        "degree", "--d", "2", "--basis", "C", "00", "10", "11", "+", "-1", "00^2", "11",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "2\n");
}

#[test]
fn degree_agrees_with_library() {
    // thin-wrapper check: same inputs through the API
    let cv = |s: &str| CubeVertex::parse_bits(s).unwrap().0;
    let expected = degree_f(3, &[cv("110"), cv("101"), cv("111"), cv("111")]).unwrap();
    let out = run(&[
        "degree", "--d", "3", "--basis", "F", "110", "101", "111", "111",
    ]);
    assert_eq!(stdout(&out), format!("{expected}\n"));
    assert_eq!(expected, -128);
}

#[test]
fn table_d2_exact_and_deterministic() {
    let out1 = run(&["table", "--d", "2"]);
    assert!(out1.status.success());
    assert_eq!(stdout(&out1), "10 01 11\t16\n11 11 11\t-32\n");
    let out2 = run(&["table", "--d", "2"]);
    assert_eq!(out1.stdout, out2.stdout);
}

#[test]
fn table_d3_exact_and_deterministic() {
    let expected = "\
100 010 001 111\t-64
100 010 101 011\t-64
100 110 101 111\t-64
100 011 011 111\t128
100 111 111 111\t128
110 110 101 011\t128
110 101 111 111\t-128
111 111 111 111\t512
";
    let out1 = run(&["table", "--d", "3"]);
    assert!(out1.status.success());
    assert_eq!(stdout(&out1), expected);
    let out2 = run(&["table", "--d", "3"]);
    assert_eq!(out1.stdout, out2.stdout);
}

#[test]
fn table_rejects_other_dimensions() {
    let out = run(&["table", "--d", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn vanishing_d2_verifies_with_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("d2.cache");
    let out = run(&["vanishing", "--d", "2", "--cache", cache.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("vanishing condition for d=2: VERIFIED"));
    assert!(text.contains("counterexamples=0 verified=true"));

    // cache was written with the right header and is accepted on reuse
    let written = std::fs::read_to_string(&cache).unwrap();
    assert!(written.starts_with("chowcache v1 d=2\n"));
    let out2 = run(&[
        "vanishing",
        "--d",
        "2",
        "--cache",
        cache.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert_eq!(out2.status.code(), Some(0));
}

#[test]
fn vanishing_rejects_long_runs_without_flag() {
    let out = run(&["vanishing", "--d", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--allow-long"));
}

#[test]
fn corrupted_cache_fails_spot_check_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("bad.cache");
    std::fs::write(&cache, "chowcache v1 d=2\n10 01 11\t999\n").unwrap();
    let out = run(&["vanishing", "--d", "2", "--cache", cache.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:"));
    assert!(stderr(&out).contains("spot-check"));
}

#[test]
fn subdivide_roundtrip_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c3.json");
    let output = dir.path().join("out.json");
    let c3 = OrderedGraph::cycle(3);
    write_graph(&input, &c3);

    // n = 1 is byte-exact through the file format
    let out = run(&["subdivide", "--graph", input.to_str().unwrap(), "--n", "1"]);
    assert!(out.status.success());
    assert_eq!(out.stdout, c3.to_json_string().into_bytes());

    // n = 3 matches the library and round-trips
    let out = run(&[
        "subdivide",
        "--graph",
        input.to_str().unwrap(),
        "--n",
        "3",
        "--out",
        output.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let written = std::fs::read_to_string(&output).unwrap();
    assert_eq!(written, subdivide(&c3, 3).unwrap().to_json_string());
    let parsed = OrderedGraph::from_json_str(&written).unwrap();
    assert_eq!(parsed.vertex_count(), 9);
    assert_eq!(parsed.edge_count(), 9);

    // n = 0 is a usage error
    let out = run(&["subdivide", "--graph", input.to_str().unwrap(), "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn graph_degree_maximal_chain_in_one_cube() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c3.json");
    write_graph(&input, &OrderedGraph::cycle(3));
    let out = run(&[
        "graph-degree",
        "--graph",
        input.to_str().unwrap(),
        "--d",
        "2",
        "0,0",
        "0,1",
        "1,1",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1\n");
}

#[test]
fn orbits_prints_canonical_representative_and_size() {
    let out = run(&["orbits", "--d", "3", "111", "100", "010", "001"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "canonical: 100 010 001 111\norbit size: 24\n");
}

#[test]
fn usage_errors_exit_2_with_greppable_prefix() {
    let out = run(&["degree", "--d", "2", "--basis", "Q", "00"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["degree", "--d", "2", "--basis", "C", "banana"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error:"));

    let out = run(&[
        "graph-degree",
        "--graph",
        "/nonexistent.json",
        "--d",
        "1",
        "0",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("chowcalc"));
}
