use std::fs;
use std::path::PathBuf;

use serde_json::Value;
use vdmn_core::engine::{sensitivity, what_if, DEFAULT_EPSILON};
use vdmn_core::model::ResultType;
use vdmn_core::validate::coverage_report;
use vdmn_core::{construct_inventory, evaluate, parse_text, validate, Bindings, Construct, FunctionRegistry, Model};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(rel: &str) -> Model {
    let path = root().join(rel);
    let src = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_text(&src)
        .into_result()
        .unwrap_or_else(|d| panic!("{rel}: {d:#?}"))
}

fn expected(name: &str) -> Value {
    let path = root().join(format!("corpus/{name}.expected.json"));
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn root_value(m: &Model, b: &Bindings) -> f64 {
    let v = evaluate(m, b, &FunctionRegistry::builtin(), &ResultType::Actual).unwrap();
    v.number(m.root()).unwrap()
}

#[test]
fn corpus_matches_expectations() {
    for name in ["gross_profit", "roce"] {
        let m = load(&format!("corpus/{name}.vdt"));
        let exp = expected(name);
        assert_eq!(m.root(), exp["root"].as_str().unwrap());
        let got = root_value(&m, &Bindings::new());
        let want = exp["value"].as_f64().unwrap();
        assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{name}: {got} vs {want}");

        let diags: Vec<(String, Vec<String>)> = validate(&m)
            .into_iter()
            .map(|d| (d.code, d.subjects))
            .collect();
        let want_diags: Vec<(String, Vec<String>)> = exp["diagnostics"]
            .as_array()
            .unwrap()
            .iter()
            .map(|d| (d["code"].as_str().unwrap().to_string(), serde_json::from_value(d["subjects"].clone()).unwrap()))
            .collect();
        assert_eq!(diags, want_diags, "{name}");
    }
}

#[test]
fn volume_what_if() {
    let m = load("corpus/gross_profit.vdt");
    let r = what_if(
        &m,
        &Bindings::new(),
        &Bindings::new().with("Volume", 110.0),
        &FunctionRegistry::builtin(),
        &ResultType::Actual,
    )
    .unwrap();
    let gp = r.entry("GP").unwrap();
    assert_eq!((gp.base.number(), gp.new.number()), (Some(400.0), Some(500.0)));
}

#[test]
fn price_and_volume_lead_gross_profit() {
    let m = load("corpus/gross_profit.vdt");
    let s = sensitivity(&m, &Bindings::new(), &FunctionRegistry::builtin(), &ResultType::Actual, DEFAULT_EPSILON).unwrap();
    // GP = P*V - 200 - 50*W - 5*P, so e_P = (1000 - 50)/400 and e_V = 1000/400.
    let e = |id: &str| s.entry(id).unwrap().elasticity.unwrap();
    assert!((e("Price") - 950.0 / 400.0).abs() < 1e-4);
    assert!((e("Volume") - 2.5).abs() < 1e-4);
    assert_eq!(s.entries[0].driver, "Volume");
    assert!(!s.entry("WageRate").unwrap().controllable);
}

#[test]
fn corpus_covers_the_core_constructs() {
    let inv = construct_inventory(&load("corpus/gross_profit.vdt"));
    for c in [Construct::IndirectAnalyticalLink, Construct::TreeCut, Construct::KeyValueIndicator] {
        assert!(inv.contains(&c), "{c:?}");
    }
    let inv = construct_inventory(&load("corpus/roce.vdt"));
    for c in [Construct::LogicalAllocation, Construct::ValueDriverGroup, Construct::SubsidiaryResults] {
        assert!(inv.contains(&c), "{c:?}");
    }
}

#[test]
fn fixtures_and_corpus_cover_every_construct() {
    let mut models = vec![];
    for dir in ["fixtures/validator", "fixtures/coverage", "corpus"] {
        let mut paths: Vec<PathBuf> = fs::read_dir(root().join(dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "vdt"))
            .collect();
        paths.sort();
        for p in paths {
            models.push(load(p.strip_prefix(root()).unwrap().to_str().unwrap()));
        }
    }
    let report = coverage_report(&models).unwrap();
    assert!(report.is_complete(), "unused: {:?}", report.unused);
}

#[test]
fn all_constructs_fixture_is_clean_and_evaluates() {
    let m = load("fixtures/coverage/all_constructs.vdt");
    let inv = construct_inventory(&m);
    let missing: Vec<_> = Construct::ALL.iter().filter(|c| !inv.contains(c)).collect();
    assert!(missing.is_empty(), "{missing:?}");
    let errors: Vec<_> = validate(&m).into_iter().filter(|d| d.severity == vdmn_core::Severity::Error).collect();
    assert!(errors.is_empty(), "{errors:#?}");
    // Sales 200, Shipping picks Standard (30 < 50) = 20, Handling 5*6 + 10*1 = 40, Insurance 10.
    assert_eq!(root_value(&m, &Bindings::new()), 200.0 - 70.0);
}
