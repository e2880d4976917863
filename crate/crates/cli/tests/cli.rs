//! End-to-end tests of the command-line interface: artifacts, exit codes,
//! determinism, and round trips.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graphon-ldp"))
}

fn write_file(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("graphon-ldp-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn bipartite_json() -> PathBuf {
    write_file(
        "bip.json",
        r#"{"gamma": [["1","2"],["1","2"]], "values": [[0.0,0.5],[0.5,0.0]]}"#,
    )
}

fn constant_json(name: &str, p: f64) -> PathBuf {
    write_file(
        name,
        &format!(r#"{{"gamma": [["1","1"]], "values": [[{p}]]}}"#),
    )
}

fn edge_graph() -> PathBuf {
    write_file("edge.txt", "2 1\n1 2\n")
}

fn c4_graph() -> PathBuf {
    write_file("c4.txt", "4 4\n1 2\n2 3\n3 4\n4 1\n")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn density_constant_graphon_c4() {
    let g = constant_json("p3.json", 0.3);
    let h = c4_graph();
    let out = run(&[
        "density",
        "--graphon",
        g.to_str().unwrap(),
        "--graph",
        h.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    let t = v["t"].as_f64().unwrap();
    assert!((t - 0.3f64.powi(4)).abs() < 1e-15);
}

#[test]
fn enumerate_reproduces_closed_form() {
    let g = bipartite_json();
    let h = edge_graph();
    let out = run(&[
        "enumerate",
        "--graphon",
        g.to_str().unwrap(),
        "--graph",
        h.to_str().unwrap(),
        "--t",
        "0.25",
        "--kn",
        "4",
    ]);
    let v = stdout_json(&out);
    assert!((v["p_hat"].as_f64().unwrap() - 0.6875).abs() < 1e-12);
    assert_eq!(v["mode"], "exact-enumeration");
}

#[test]
fn phase_consistent_with_profile() {
    let out = run(&[
        "phase", "--p", "0.05", "--gamma", "0.5", "--d", "2", "--r", "0.4",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["phase"], "broken");
    assert_eq!(v["on_minorant"], false);
    let window = v["window"].as_array().unwrap();
    let (a, b) = (window[0].as_f64().unwrap(), window[1].as_f64().unwrap());
    assert!(a < 0.4 * 0.4 && 0.4 * 0.4 < b);
    // The minorant threshold is part of the report.
    assert!((v["p_zero"].as_f64().unwrap() - 0.11920292202211755).abs() < 1e-12);
}

#[test]
fn solve_reports_witness_in_broken_regime() {
    let g = write_file(
        "bip005.json",
        r#"{"gamma": [["1","2"],["1","2"]], "values": [[0.0,0.05],[0.05,0.0]]}"#,
    );
    let h = c4_graph();
    // t(C4, f_0.4) = 2 (1/4)^2 0.4^4 = 0.0032.
    let out = run(&[
        "solve",
        "--graphon",
        g.to_str().unwrap(),
        "--graph",
        h.to_str().unwrap(),
        "--t",
        "0.0032",
        "--restarts",
        "6",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["solution"]["regime"], "broken-certified");
    let witness = &v["witness"];
    assert!(witness.is_object());
    assert!(witness["entropy_margin"].as_f64().unwrap() > 0.0);
    // The emitted optimizer graphon round-trips through the loader.
    let opt = v["solution"]["optimizer"].to_string();
    let loaded = graphon_ldp_core::io::graphon_from_json(&opt).unwrap();
    let re_emitted = graphon_ldp_core::io::graphon_to_json(&loaded);
    let reloaded = graphon_ldp_core::io::graphon_from_json(&re_emitted).unwrap();
    assert_eq!(loaded, reloaded);
}

#[test]
fn scan_emits_csv_with_header() {
    let h = c4_graph();
    let out = run(&[
        "scan",
        "--p",
        "0.3",
        "--gamma",
        "0.5",
        "--steps",
        "10",
        "--graph",
        h.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "r,t_target,on_minorant,symmetric_I,witness_I"
    );
    assert_eq!(lines.count(), 10);
    // p = 0.3 > p0: everything on the minorant, no witness column entries.
    for line in text.lines().skip(1) {
        assert!(line.contains(",true,"));
        assert!(line.ends_with(','));
    }
}

#[test]
fn sample_dump_parses_as_graph_file() {
    let g = bipartite_json();
    let out = run(&[
        "sample",
        "--graphon",
        g.to_str().unwrap(),
        "--kn",
        "8",
        "--seed",
        "5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed = graphon_ldp_core::io::graph_from_text(&text).unwrap();
    assert_eq!(parsed.vertex_count(), 8);
    // No within-side edges under the bipartite mask.
    for &(a, b) in parsed.edges() {
        assert!((a < 4) != (b < 4), "edge ({a},{b}) violates the mask");
    }
}

#[test]
fn tail_is_deterministic_and_thread_independent() {
    let g = bipartite_json();
    let h = edge_graph();
    let args = [
        "tail",
        "--graphon",
        g.to_str().unwrap(),
        "--graph",
        h.to_str().unwrap(),
        "--t",
        "0.25",
        "--kn",
        "4",
        "--samples",
        "2000",
        "--seed",
        "9",
    ];
    let a = bin().args(args).env("GRAPHON_LDP_THREADS", "1").output().unwrap();
    let b = bin().args(args).env("GRAPHON_LDP_THREADS", "4").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes_follow_the_contract() {
    // Unknown subcommand: usage + exit 1.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    // Malformed graphon file: exit 2 with the offending field named.
    let bad = write_file(
        "bad.json",
        r#"{"gamma": [["1","2"],["1","2"]], "values": [[0.0,0.5],[0.4,0.0]]}"#,
    );
    let h = edge_graph();
    let out = run(&[
        "density",
        "--graphon",
        bad.to_str().unwrap(),
        "--graph",
        h.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("symmetric"), "stderr was: {msg}");

    // Domain error: target above the maximal density.
    let g = bipartite_json();
    let c4 = c4_graph();
    let out = run(&[
        "solve",
        "--graphon",
        g.to_str().unwrap(),
        "--graph",
        c4.to_str().unwrap(),
        "--t",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Capacity error: exact cut norm beyond the block cap.
    let mut gamma = String::from("[");
    let mut values = String::from("[");
    for i in 0..25 {
        if i > 0 {
            gamma.push(',');
            values.push(',');
        }
        gamma.push_str("[\"1\",\"25\"]");
        values.push('[');
        for j in 0..25 {
            if j > 0 {
                values.push(',');
            }
            values.push_str(if (i + j) % 2 == 0 { "0.25" } else { "0.75" });
        }
        values.push(']');
    }
    gamma.push(']');
    values.push(']');
    let big = write_file(
        "big.json",
        &format!(r#"{{"gamma": {gamma}, "values": {values}}}"#),
    );
    let other = constant_json("half.json", 0.5);
    let out = run(&[
        "cutdist",
        "--graphon",
        big.to_str().unwrap(),
        "--other",
        other.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));

    // The heuristic mode still answers on the same input.
    let out = run(&[
        "cutdist",
        "--graphon",
        big.to_str().unwrap(),
        "--other",
        other.to_str().unwrap(),
        "--mode",
        "heuristic",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn out_flag_writes_artifact() {
    let g = constant_json("p4.json", 0.4);
    let h = edge_graph();
    let target = std::env::temp_dir().join("graphon-ldp-cli-tests/density.json");
    let out = run(&[
        "density",
        "--graphon",
        g.to_str().unwrap(),
        "--graph",
        h.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&target).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["t"].as_f64().unwrap() - 0.4).abs() < 1e-15);
}
