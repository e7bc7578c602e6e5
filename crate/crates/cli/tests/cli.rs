mod common;

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Command, Stdio};

use common::{assert_interchange, assert_output, path};
use serde_json::Value;
use vdmn_core::{emit_interchange, merge_subtree, parse_text};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn vdmn(args: &[&str]) -> Run {
    let mut out = vec![];
    let mut err = vec![];
    let code = vdmn_cli::run(std::iter::once("vdmn").chain(args.iter().copied()), &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

const GP_BINDINGS: [&str; 6] = ["--bind", "Price=10", "--bind", "Volume=100", "--bind", "COGS=600"];

fn with_gp<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(GP_BINDINGS).collect()
}

#[test]
fn eval_computes_gross_profit_from_bindings() {
    let gp = path("fixtures/cli/gp.vdt");
    let r = vdmn(&with_gp(&["eval", &gp]));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let line = r.stdout.lines().find(|l| l.starts_with("GP ")).unwrap();
    assert_eq!(line.split_whitespace().last(), Some("400"));

    let r = vdmn(&with_gp(&["--json", "eval", &gp]));
    let v = r.json();
    assert_output("valuation", &v);
    assert_eq!(v["values"]["GP"], 400.0);
    assert_eq!(v["values"]["Revenue"], 1000.0);
    assert_eq!(v["result_type"], "actual");
}

#[test]
fn eval_reports_missing_leaves_as_not_computed() {
    let r = vdmn(&["--json", "eval", &path("fixtures/cli/gp.vdt"), "--bind", "Price=10"]);
    assert_eq!(r.code, 0);
    let v = r.json();
    assert_output("valuation", &v);
    assert_eq!(v["values"]["GP"]["not_computed"], "missing_binding");
    assert_eq!(v["values"]["Price"], 10.0);
}

#[test]
fn eval_uses_the_requested_result_type() {
    let r = vdmn(&[
        "--json",
        "eval",
        &path("fixtures/cli/gp.vdt"),
        "--bind",
        "Price=10",
        "--bind",
        "Volume=100",
        "--bind",
        "COGS=600",
        "--result-type",
        "budget",
    ]);
    let v = r.json();
    assert_eq!(v["result_type"], "budget");
    assert_eq!(v["values"]["GP"], 400.0);
}

#[test]
fn binding_a_computed_indicator_is_rejected() {
    let r = vdmn(&["--json", "eval", &path("fixtures/cli/gp.vdt"), "--bind", "Revenue=5"]);
    assert_eq!(r.code, 1);
    let v = r.json();
    assert_output("error", &v);
    assert_eq!(v["error"]["kind"], "conflicting_binding");
}

#[test]
fn deep_chain_warns_but_validates() {
    let r = vdmn(&["validate", &path("fixtures/cli/deep_chain.vdt")]);
    assert_eq!(r.code, 0);
    assert!(r.stderr.contains("V005"), "{}", r.stderr);
    assert!(r.stderr.contains("deep_chain.vdt:"), "diagnostic carries a location: {}", r.stderr);

    let v = vdmn(&["--json", "validate", &path("fixtures/cli/deep_chain.vdt")]).json();
    assert_output("validate", &v);
    assert_eq!(v["errors"], 0);
    assert_eq!(v["diagnostics"][0]["code"], "V005");
    assert_eq!(v["diagnostics"][0]["severity"], "warning");
}

#[test]
fn validate_exit_code_follows_errors() {
    let dir = common::workspace().join("fixtures/validator");
    let mut saw_error = false;
    for entry in fs::read_dir(dir).unwrap() {
        let file = entry.unwrap().path();
        let r = vdmn(&["--json", "validate", file.to_str().unwrap()]);
        let v = r.json();
        assert_output("validate", &v);
        let errors = v["errors"].as_u64().unwrap();
        saw_error |= errors > 0;
        assert_eq!(r.code, if errors > 0 { 1 } else { 0 }, "{}", file.display());
    }
    assert!(saw_error);
}

#[test]
fn models_with_errors_are_not_evaluated() {
    let r = vdmn(&["--json", "eval", &path("fixtures/validator/V001_trigger.vdt")]);
    assert_eq!(r.code, 1);
    let v = r.json();
    assert_output("error", &v);
    assert_eq!(v["error"]["kind"], "validation");
    assert!(v["diagnostics"].as_array().unwrap().iter().any(|d| d["code"] == "V001"));
}

#[test]
fn parse_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.vdt");
    fs::write(&bad, "model \"Broken\" {\n  kbi A {title \"A\"\n}\n").unwrap();
    let r = vdmn(&["validate", bad.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("bad.vdt:"), "{}", r.stderr);

    let r = vdmn(&["--json", "validate", bad.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert_output("parse_failure", &r.json());
}

#[test]
fn usage_errors_exit_two() {
    let gp = path("fixtures/cli/gp.vdt");
    for args in [
        vec![],
        vec!["frobnicate"],
        vec!["eval"],
        vec!["eval", &gp, "--bind", "Price"],
        vec!["eval", &gp, "--bind", "Price=ten"],
        vec!["eval", &gp, "--bind", "Price=inf"],
        vec!["render", &gp, "--format", "png"],
        vec!["whatif", &gp],
        vec!["validate", "/nonexistent/model.vdt"],
        vec!["sensitivity", &gp, "--epsilon", "0"],
    ] {
        let r = vdmn(&args);
        assert_eq!(r.code, 2, "{args:?}: {}", r.stderr);
        assert!(!r.stderr.is_empty());
    }
    let r = vdmn(&["--json", "validate", "/nonexistent/model.vdt"]);
    assert_eq!(r.code, 2);
    assert_output("error", &r.json());
}

#[test]
fn help_and_version_succeed() {
    let r = vdmn(&["--help"]);
    assert_eq!(r.code, 0);
    for sub in ["validate", "eval", "whatif", "sensitivity", "render", "coverage", "extract", "cut", "serve"] {
        assert!(r.stdout.contains(sub), "{sub} missing from help");
    }
    assert_eq!(vdmn(&["--version"]).code, 0);
}

#[test]
fn whatif_moves_gross_profit() {
    let r = vdmn(&with_gp(&["--json", "whatif", &path("fixtures/cli/gp.vdt"), "--set", "Volume=110"]));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_output("whatif", &v);
    let gp = v["entries"].as_array().unwrap().iter().find(|e| e["id"] == "GP").unwrap();
    assert_eq!(gp["base"], 400.0);
    assert_eq!(gp["new"], 500.0);
    assert_eq!(gp["abs_delta"], 100.0);
    assert_eq!(gp["pct_delta"], 25.0);

    let text = vdmn(&with_gp(&["whatif", &path("fixtures/cli/gp.vdt"), "--set", "Volume=110"]));
    assert!(text.stdout.contains("GP: 400 -> 500  +100 (+25.00%)"), "{}", text.stdout);
}

#[test]
fn whatif_refuses_computed_targets() {
    let r = vdmn(&with_gp(&["--json", "whatif", &path("fixtures/cli/gp.vdt"), "--set", "Revenue=5"]));
    assert_eq!(r.code, 1);
    assert_eq!(r.json()["error"]["kind"], "override_not_a_leaf_driver");
}

#[test]
fn sensitivity_ranks_drivers() {
    let r = vdmn(&["--json", "sensitivity", &path("corpus/gross_profit.vdt"), "--epsilon", "1e-3"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_output("sensitivity", &v);
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries[0]["driver"], "Volume");
    let magnitudes: Vec<f64> = entries.iter().map(|e| e["elasticity"].as_f64().unwrap().abs()).collect();
    assert!(magnitudes.windows(2).all(|w| w[0] >= w[1]));
    let text = vdmn(&["sensitivity", &path("corpus/gross_profit.vdt")]);
    assert!(text.stdout.lines().nth(2).unwrap().contains("Volume"));
}

#[test]
fn coverage_of_the_corpus() {
    let r = vdmn(&["coverage", &path("corpus")]);
    assert_eq!(r.code, 0);
    let first = r.stdout.lines().next().unwrap();
    let used: usize = first.split('/').next().unwrap().parse().unwrap();
    assert!(used >= 20, "{first}");

    let v = vdmn(&["--json", "coverage", &path("corpus")]).json();
    assert_output("coverage", &v);
    assert_eq!(v["models"], 2);

    assert_eq!(vdmn(&["coverage", "--require-complete", &path("corpus")]).code, 1);
}

#[test]
fn coverage_of_the_fixtures_is_complete() {
    let r = vdmn(&["--json", "coverage", "--require-complete", &path("fixtures"), &path("corpus")]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let v = r.json();
    assert_eq!(v["unused"], Value::Array(vec![]));
}

#[test]
fn render_dot_and_svg() {
    let roce = path("corpus/roce.vdt");
    let dot = vdmn(&["render", &roce, "--format", "dot"]);
    assert_eq!(dot.code, 0);
    assert!(dot.stdout.starts_with("digraph"));

    let svg = vdmn(&["render", &roce, "--format", "svg", "--values"]);
    assert_eq!(svg.code, 0);
    assert_svg_document(&svg.stdout);

    let bare = vdmn(&["render", &roce, "--show-operators", "false", "--format", "dot"]);
    assert_ne!(bare.stdout, dot.stdout);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("roce.svg");
    let r = vdmn(&["--json", "render", &roce, "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert_output("render", &r.json());
    assert!(fs::read_to_string(&out).unwrap().starts_with("<svg"));

    let r = vdmn(&["--json", "render", &roce, "--format", "dot"]);
    let v = r.json();
    assert_output("render", &v);
    assert_eq!(v["content"].as_str().unwrap(), dot.stdout);
}

fn assert_svg_document(svg: &str) {
    assert!(svg.starts_with("<svg"), "{}", &svg[..svg.len().min(80)]);
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn extract_writes_both_halves() {
    let dir = tempfile::tempdir().unwrap();
    let r = vdmn(&[
        "--json",
        "extract",
        &path("corpus/gross_profit.vdt"),
        "--node",
        "Production",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let v = r.json();
    assert_output("extract", &v);
    let read = |key: &str| {
        let text = fs::read_to_string(v[key]["file"].as_str().unwrap()).unwrap();
        parse_text(&text).into_result().unwrap()
    };
    let (remainder, extracted) = (read("remainder"), read("extracted"));
    assert_eq!(extracted.root(), "Production");
    assert!(remainder.is_leaf("Production"));

    let original = parse_text(&fs::read_to_string(path("corpus/gross_profit.vdt")).unwrap())
        .into_result()
        .unwrap();
    assert_eq!(merge_subtree(&remainder, &extracted).unwrap(), original);
}

#[test]
fn extract_refuses_entangled_branches() {
    let dir = tempfile::tempdir().unwrap();
    let r = vdmn(&[
        "extract",
        &path("corpus/gross_profit.vdt"),
        "--node",
        "Revenue",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("Price -> Bonus"), "{}", r.stderr);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn cut_replaces_a_branch() {
    let r = vdmn(&["--json", "cut", &path("corpus/gross_profit.vdt"), "--node", "Production", "--label", "Plant model"]);
    assert_eq!(r.code, 0);
    let v = r.json();
    assert_output("cut", &v);
    let model = parse_text(v["content"].as_str().unwrap()).into_result().unwrap();
    assert!(model.is_leaf("Production"));
    assert_eq!(model.tree_cut("Production").map(|c| c.label.as_str()), Some("Plant model"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cut.vdt");
    let r = vdmn(&[
        "cut",
        &path("corpus/gross_profit.vdt"),
        "--node",
        "Production",
        "--label",
        "Plant model",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0);
    assert_eq!(fs::read_to_string(out).unwrap(), v["content"].as_str().unwrap());
}

#[test]
fn interchange_files_are_accepted() {
    let model = parse_text(&fs::read_to_string(path("corpus/roce.vdt")).unwrap())
        .into_result()
        .unwrap();
    let doc = emit_interchange(&model);
    assert_interchange(&serde_json::from_str(&doc).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("roce.vdt.json");
    fs::write(&file, doc).unwrap();
    let from_json = vdmn(&["--json", "eval", file.to_str().unwrap()]);
    let from_text = vdmn(&["--json", "eval", &path("corpus/roce.vdt")]);
    assert_eq!(from_json.code, 0);
    assert_eq!(from_json.stdout, from_text.stdout);
}

#[test]
fn binary_evaluates_and_serves_the_model_directory() {
    let bin = env!("CARGO_BIN_EXE_vdmn");
    let out = Command::new(bin)
        .args(["eval", &path("fixtures/cli/gp.vdt")])
        .args(GP_BINDINGS)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).lines().any(|l| l.split_whitespace().eq(["GP", "400"])));

    let out = Command::new(bin).arg("serve").env_remove("VDMN_MODEL_DIR").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let mut child = Command::new(bin)
        .args(["serve", "--port", "0"])
        .env("VDMN_MODEL_DIR", path("corpus"))
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut banner = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut banner).unwrap();
    let addr = banner.trim().rsplit("http://").next().unwrap().to_string();
    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /models HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.ends_with(r#"["Gross Profit","ROCE"]"#), "{response}");
}
