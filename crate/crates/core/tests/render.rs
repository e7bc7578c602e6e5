use std::fs;
use std::path::PathBuf;

use roxmltree::{Document, Node};
use vdmn_core::engine::derived_development;
use vdmn_core::model::ResultType;
use vdmn_core::render::{to_dot, to_svg, to_svg_with_values, RenderError, RenderOptions};
use vdmn_core::{evaluate, parse_text, Bindings, FunctionRegistry, Model};

fn load(rel: &str) -> Model {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel);
    parse_text(&fs::read_to_string(path).unwrap()).into_result().unwrap()
}

fn models() -> Vec<Model> {
    vec![
        load("corpus/gross_profit.vdt"),
        load("corpus/roce.vdt"),
        load("fixtures/coverage/all_constructs.vdt"),
    ]
}

fn by_id<'a, 'i>(doc: &'a Document<'i>, id: &str) -> Node<'a, 'i> {
    doc.descendants()
        .find(|n| n.attribute("id") == Some(id))
        .unwrap_or_else(|| panic!("no element {id}"))
}

fn rect_of<'a, 'i>(g: Node<'a, 'i>) -> Node<'a, 'i> {
    g.children().find(|c| c.has_tag_name("rect")).unwrap()
}

fn num(n: Node, attr: &str) -> f64 {
    n.attribute(attr).unwrap().parse().unwrap()
}

#[test]
fn dot_parses_with_graphviz_grammar() {
    for m in models() {
        for opts in [
            RenderOptions::default(),
            RenderOptions {
                show_operators: false,
                show_levels: false,
                show_clusters: false,
                show_content: false,
                ..Default::default()
            },
        ] {
            let dot = to_dot(&m, &opts);
            graphviz_rust::parse(&dot).unwrap_or_else(|e| panic!("{}: {e}\n{dot}", m.name()));
        }
    }
}

#[test]
fn dot_has_one_node_per_indicator_and_one_edge_per_link() {
    let m = load("corpus/roce.vdt");
    let dot = to_dot(
        &m,
        &RenderOptions {
            show_operators: false,
            show_levels: false,
            show_clusters: false,
            ..Default::default()
        },
    );
    assert_eq!(dot.matches(" -> ").count(), m.links().len());
    for ind in m.indicators() {
        assert!(dot.contains(&format!("  \"{}\" [label=", ind.id)), "{}", ind.id);
    }
}

#[test]
fn svg_is_well_formed_with_a_group_per_indicator() {
    for m in models() {
        let svg = to_svg(&m, &RenderOptions::default()).unwrap();
        let doc = Document::parse(&svg).unwrap_or_else(|e| panic!("{}: {e}", m.name()));
        let groups: Vec<&str> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("indicator"))
            .map(|n| n.attribute("id").unwrap())
            .collect();
        let mut ids: Vec<&str> = m.indicators().map(|i| i.id.as_str()).collect();
        ids.sort();
        let mut sorted = groups.clone();
        sorted.sort();
        assert_eq!(sorted, ids);
        let lines = doc.descendants().filter(|n| n.has_tag_name("line") && n.attribute("id").is_some_and(|i| i.starts_with("link:"))).count();
        assert_eq!(lines, m.links().len());
    }
}

#[test]
fn gross_profit_styles() {
    let m = load("corpus/gross_profit.vdt");
    let svg = to_svg(&m, &RenderOptions::default()).unwrap();
    let doc = Document::parse(&svg).unwrap();
    let gp = rect_of(by_id(&doc, "GP"));
    assert_eq!(gp.attribute("fill"), Some("#000000"));
    assert!(by_id(&doc, "GP")
        .children()
        .filter(|c| c.has_tag_name("text"))
        .all(|t| t.attribute("fill") == Some("#ffffff")));
    assert_eq!(rect_of(by_id(&doc, "Price")).attribute("fill"), Some("#bfbfbf"));
    assert_eq!(rect_of(by_id(&doc, "Volume")).attribute("fill"), Some("#bfbfbf"));
    assert_eq!(rect_of(by_id(&doc, "Revenue")).attribute("fill"), Some("#ffffff"));
    assert_eq!(rect_of(by_id(&doc, "Revenue")).attribute("stroke-dasharray"), None);
    let material = by_id(&doc, "Material");
    assert!(rect_of(material).attribute("stroke-dasharray").is_some());
    assert!(material.descendants().any(|t| t.text().is_some_and(|s| s.contains('\u{2702}'))));
    let bonus = by_id(&doc, "link:Price~>Bonus");
    assert_eq!(bonus.attribute("class"), Some("indirect"));
    assert!(bonus.attribute("stroke-dasharray").is_some());
}

#[test]
fn roce_styles() {
    let m = load("corpus/roce.vdt");
    let svg = to_svg(&m, &RenderOptions::default()).unwrap();
    let doc = Document::parse(&svg).unwrap();
    assert_eq!(rect_of(by_id(&doc, "MaterialCost")).attribute("fill"), Some("none"));
    assert!(rect_of(by_id(&doc, "AssetTurnover")).attribute("stroke-dasharray").is_some());
    assert_eq!(rect_of(by_id(&doc, "AssetTurnover")).attribute("fill"), Some("#ffffff"));
    assert_eq!(by_id(&doc, "link:Training..>COGS").attribute("class"), Some("allocation"));
    let badge = by_id(&doc, "op:ROCE");
    assert!(badge.descendants().any(|t| t.text() == Some(":")));
    let ebit = by_id(&doc, "op:EBIT");
    assert!(ebit.descendants().any(|t| t.text() == Some("\u{2212}")));
}

#[test]
fn cluster_frames_contain_their_members() {
    for m in models() {
        let svg = to_svg(&m, &RenderOptions::default()).unwrap();
        let doc = Document::parse(&svg).unwrap();
        for c in m.clusters() {
            let frame = rect_of(by_id(&doc, &format!("cluster:{}:{}", c.kind, c.name)));
            let (fx, fy) = (num(frame, "x"), num(frame, "y"));
            let (fw, fh) = (num(frame, "width"), num(frame, "height"));
            for member in &c.members {
                let r = rect_of(by_id(&doc, member));
                let (x, y, w, h) = (num(r, "x"), num(r, "y"), num(r, "width"), num(r, "height"));
                assert!(x >= fx && y >= fy && x + w <= fx + fw && y + h <= fy + fh, "{member} outside {}", c.name);
            }
        }
    }
}

#[test]
fn indicator_boxes_do_not_overlap() {
    for m in models() {
        let svg = to_svg(&m, &RenderOptions::default()).unwrap();
        let doc = Document::parse(&svg).unwrap();
        let rects: Vec<(f64, f64, f64, f64)> = m
            .indicators()
            .map(|i| {
                let r = rect_of(by_id(&doc, &i.id));
                (num(r, "x"), num(r, "y"), num(r, "width"), num(r, "height"))
            })
            .collect();
        for (i, a) in rects.iter().enumerate() {
            for b in &rects[i + 1..] {
                let apart = a.0 + a.2 <= b.0 || b.0 + b.2 <= a.0 || a.1 + a.3 <= b.1 || b.1 + b.3 <= a.1;
                assert!(apart, "{}: {a:?} overlaps {b:?}", m.name());
            }
        }
    }
}

#[test]
fn root_is_drawn_above_its_children() {
    let m = load("corpus/roce.vdt");
    let svg = to_svg(&m, &RenderOptions::default()).unwrap();
    let doc = Document::parse(&svg).unwrap();
    let y = |id: &str| num(rect_of(by_id(&doc, id)), "y");
    assert!(y("ROCE") < y("EBIT"));
    assert!(y("EBIT") < y("Revenue"));
    assert!(y("Revenue") < y("SalesVolume"));
}

#[test]
fn output_is_deterministic() {
    for m in models() {
        let opts = RenderOptions::default();
        assert_eq!(to_dot(&m, &opts), to_dot(&m, &opts));
        assert_eq!(to_svg(&m, &opts).unwrap(), to_svg(&m, &opts).unwrap());
    }
}

#[test]
fn evaluated_values_and_trends_are_shown() {
    let m = load("corpus/gross_profit.vdt");
    let b = Bindings::new();
    let v = evaluate(&m, &b, &FunctionRegistry::builtin(), &ResultType::Actual).unwrap();
    let trends = derived_development(&m, &v, &b);
    let svg = to_svg_with_values(&m, &RenderOptions::default(), &v, &trends).unwrap();
    let doc = Document::parse(&svg).unwrap();
    // 400 against a budget of 350.
    assert!(by_id(&doc, "GP").descendants().any(|t| t.text() == Some("400 \u{25b2} $")));
}

#[test]
fn oversized_band_is_rejected() {
    let mut src = String::from("model \"Wide\" { kbi R {}\n");
    for i in 0..30 {
        src.push_str(&format!("driver D{i} {{}} D{i} -> R [order={i}]\n"));
    }
    src.push_str("op R = + }");
    let m = parse_text(&src).into_result().unwrap();
    let err = to_svg(
        &m,
        &RenderOptions {
            max_band_width: 2000.0,
            ..Default::default()
        },
    )
    .unwrap_err();
    assert!(matches!(err, RenderError::LayoutOverflow { .. }));
    assert!(to_svg(&m, &RenderOptions::default()).is_ok());
}
