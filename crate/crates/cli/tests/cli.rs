use std::io::Write;
use std::process::{Command, Stdio};

use serde_json::Value;
use specgraph_cli::run_cli;

fn run(args: &[&str], stdin: &str) -> (i32, String, String) {
    let mut argv = vec!["specgraph"];
    argv.extend_from_slice(args);
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(argv, &mut stdin.as_bytes(), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str], stdin: &str) -> Value {
    let (code, out, err) = run(args, stdin);
    assert_eq!(code, 0, "stderr: {err}");
    serde_json::from_str(&out).unwrap()
}

fn bin(args: &[&str], stdin: &str) -> (i32, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_specgraph"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn generated_cycle_pipes_into_spectrum() {
    let (code, edges) = bin(&["gen", "cycle", "4"], "");
    assert_eq!(code, 0);
    let (code, out) = bin(&["spectrum"], &edges);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "specgraph.spectrum/1");
    let eig: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (got, want) in eig.iter().zip([0.0, 1.0, 1.0, 2.0]) {
        assert!((got - want).abs() < 1e-10, "{eig:?}");
    }
}

#[test]
fn tree_count_of_k4_is_sixteen() {
    let (_, edges) = bin(&["gen", "complete:4"], "");
    assert_eq!(bin(&["trees-exact"], &edges), (0, "16\n".to_string()));
    let v = json(&["trees-exact", "--family", "complete:4", "--format", "json"], "");
    assert_eq!(v["count"], "16");
}

#[test]
fn piped_graph_matches_family_flag() {
    let (_, edges, _) = run(&["gen", "torus", "4x4"], "");
    for cmd in [["bounds", "--grid-points", "16"].as_slice(), &["mixing"], &["resistance"]] {
        let mut piped = json(cmd, &edges);
        let mut args = cmd.to_vec();
        args.extend(["--family", "torus:4x4"]);
        let mut direct = json(&args, "");
        for v in [&mut piped, &mut direct] {
            if let Some(o) = v.as_object_mut() {
                o.remove("elapsed_ms");
            }
        }
        assert_eq!(piped, direct, "{cmd:?}");
    }
}

#[test]
fn family_comment_is_ignored_when_graph_differs() {
    let text = "# family: cycle:4\n4 3\n0 1\n1 2\n2 3\n";
    let v = json(&["bounds", "--grid-points", "8"], text);
    assert_eq!(v["graph"]["vertex_transitive"], false);
}

#[test]
fn estimate_report_structure() {
    let v = json(&["trees-estimate", "--family", "cycle:8", "--epsilon", "1", "--seed", "3", "--override-N", "200"], "");
    assert_eq!(v["schema"], "specgraph.trees-estimate/1");
    for key in ["value", "r", "s", "N", "degree_samples", "queries_used", "seed", "epsilon"] {
        assert!(v.get(key).is_some(), "missing {key}: {v}");
    }
    assert_eq!(v["r"], 90);
    assert_eq!(v["N"], 200);
    let jobs4 = json(
        &["trees-estimate", "--family", "cycle:8", "--epsilon", "1", "--seed", "3", "--override-N", "200", "--jobs", "4"],
        "",
    );
    assert_eq!(v["value"], jobs4["value"]);
}

#[test]
fn json_reports_round_trip() {
    for args in [
        ["spectrum", "--family", "path:6", "--vectors"].as_slice(),
        &["measure", "--family", "cycle:6", "--delta", "0.5"],
        &["embed", "--family", "cycle:12", "--delta", "0.5"],
        &["walk", "--family", "cycle:6", "--vertex", "0", "--time", "5", "--samples", "5000"],
        &["trees-series", "--family", "complete:5", "--r", "8"],
    ] {
        let (code, out, _) = run(args, "");
        assert_eq!(code, 0, "{args:?}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["schema"].as_str().unwrap().starts_with("specgraph."));
        let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(v, again);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"], "").0, 0);
    assert_eq!(run(&["--version"], "").0, 0);
    assert_eq!(run(&["frobnicate"], "").0, 2);
    assert_eq!(run(&["spectrum", "--family", "moebius:5"], "").0, 2);
    assert_eq!(run(&["bounds", "--family", "cycle:5", "--tolerance", "-1"], "").0, 2);
    let (code, _, err) = run(&["spectrum"], "3 1\n0 1\n");
    assert_eq!(code, 1);
    assert!(err.contains("error"), "{err}");
    assert_eq!(run(&["trees-exact"], "2 1\n0 0\n").0, 1);
    assert_eq!(run(&["spectrum", "/nonexistent/graph.txt"], "").0, 1);
    assert_eq!(run(&["bounds", "--family", "barbell:9", "--grid-points", "16"], "").0, 0);
}

#[test]
fn output_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("specgraph-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("k5.txt");
    let p = path.to_str().unwrap();
    let (code, out, _) = run(&["gen", "complete:5", "--output", p], "");
    assert_eq!((code, out.as_str()), (0, ""));
    let (code, out, _) = run(&["trees-exact", p], "");
    assert_eq!((code, out.as_str()), (0, "125\n"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn random_graph_generation_is_seeded() {
    let a = run(&["gen", "er", "20", "0.3", "--seed", "7"], "").1;
    let b = run(&["gen", "er:20:0.3", "--seed", "7"], "").1;
    let c = run(&["gen", "er", "20", "0.3", "--seed", "8"], "").1;
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(run(&["trees-exact"], &a).0, 0);
}
