use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use vdmn_core::model::{
    Band, ClusterKind, ClusterSpec, Comparator, ComparativeValue, Development, FunctionRole, GatewayGuard,
    Indicator, IndicatorType, LevelKind, LevelSpec, Link, LinkKind, Operator, OperatorSpec, ResultType,
    SubTreeRef, TreeCut, Trend, Unit, ValueType,
};
use vdmn_core::{build_model, Model, ModelParts};

/// Shape of the models produced by [`random_model`].
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub gateways: bool,
    pub functions: bool,
    pub logical: bool,
    /// Allow `-` and `:` next to `+` and `*`.
    pub subtract_divide: bool,
    /// Extra indirect links, turning the tree into a DAG.
    pub shared_children: bool,
    /// Levels, clusters, allocations, decomposition, notes and rich content.
    pub decorations: bool,
}

impl GenConfig {
    /// Every construct the model can hold.
    pub fn full() -> Self {
        GenConfig {
            min_nodes: 2,
            max_nodes: 40,
            gateways: true,
            functions: true,
            logical: true,
            subtract_divide: true,
            shared_children: true,
            decorations: true,
        }
    }

    pub fn gateway_free() -> Self {
        GenConfig {
            min_nodes: 2,
            max_nodes: 50,
            gateways: false,
            functions: true,
            logical: false,
            subtract_divide: true,
            shared_children: true,
            decorations: false,
        }
    }

    /// Only `+ - * :`, no embedded values beyond the leaves.
    pub fn arithmetic() -> Self {
        GenConfig {
            min_nodes: 2,
            max_nodes: 25,
            gateways: false,
            functions: false,
            logical: false,
            subtract_divide: true,
            shared_children: true,
            decorations: false,
        }
    }
}

const UNITS: &[&str] = &["$", "%", "h", "piece", "$/piece", "h*FTE^-1", "1", "kg^2/m"];
const TITLES: &[&str] = &[
    "Revenue",
    "Cost \"direct\"",
    "Back\\slash",
    "Größe",
    "\u{2702} braces {x}",
    "two words",
];

#[derive(Clone, Copy, PartialEq)]
enum OpKind {
    Arith(u8),
    Fx(&'static str),
    Logical,
    Gateway,
}

fn id(i: usize) -> String {
    if i == 0 {
        "R".to_string()
    } else {
        format!("N{i}")
    }
}

fn value<R: Rng>(rng: &mut R, rich: bool) -> f64 {
    if rich && rng.gen_bool(0.3) {
        // full-precision and extreme magnitudes for the printers
        let m: f64 = rng.gen_range(-1.0..1.0);
        m * 10f64.powi(rng.gen_range(-12..12))
    } else {
        rng.gen_range(1.0..10.0)
    }
}

/// Generates a valid model. Every leaf carries an actual value, so the root
/// always evaluates unless a divisor is exactly zero.
pub fn random_model<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Model {
    loop {
        if let Ok(m) = build_model(random_parts(rng, cfg)) {
            return m;
        }
    }
}

fn random_parts<R: Rng>(rng: &mut R, cfg: &GenConfig) -> ModelParts {
    let n = rng.gen_range(cfg.min_nodes.max(2)..=cfg.max_nodes.max(2));
    let rich = cfg.decorations;

    // random recursive tree, biased towards recent nodes for some depth
    let mut parent = vec![usize::MAX; n];
    let mut children: Vec<Vec<usize>> = vec![vec![]; n];
    for (i, slot) in parent.iter_mut().enumerate().skip(1) {
        let p = if rng.gen_bool(0.5) { rng.gen_range(i.saturating_sub(3)..i) } else { rng.gen_range(0..i) };
        *slot = p;
        children[p].push(i);
    }
    let internal: Vec<usize> = (0..n).filter(|&i| !children[i].is_empty()).collect();
    let leaves: Vec<usize> = (0..n).filter(|&i| children[i].is_empty()).collect();

    let mut kinds: BTreeMap<usize, OpKind> = BTreeMap::new();
    for &p in &internal {
        let mut menu = vec![OpKind::Arith(b'+'), OpKind::Arith(b'*')];
        if cfg.subtract_divide {
            menu.extend([OpKind::Arith(b'-'), OpKind::Arith(b':')]);
        }
        if cfg.functions {
            menu.extend([OpKind::Fx("sum"), OpKind::Fx("avg"), OpKind::Fx("min"), OpKind::Fx("max"), OpKind::Fx("weighted_sum")]);
            if children[p].len() == 1 {
                menu.push(OpKind::Fx("linear"));
            }
        }
        if cfg.logical && p != 0 {
            menu.push(OpKind::Logical);
        }
        if cfg.gateways {
            menu.push(OpKind::Gateway);
        }
        kinds.insert(p, *menu.choose(rng).unwrap());
    }

    // descendants over the analytical graph built so far
    let below = |children: &Vec<Vec<usize>>, from: usize| -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(x) = stack.pop() {
            for &c in &children[x] {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        seen
    };

    let mut selectors: BTreeMap<usize, usize> = BTreeMap::new();
    for (&p, k) in kinds.iter_mut() {
        if *k == OpKind::Gateway {
            let sub = below(&children, p);
            let options: Vec<usize> = leaves.iter().copied().filter(|l| !sub.contains(l)).collect();
            match options.choose(rng) {
                Some(&s) => {
                    selectors.insert(p, s);
                }
                None => *k = OpKind::Arith(b'+'),
            }
        }
    }

    let mut indirect: Vec<(usize, usize)> = vec![];
    if cfg.shared_children {
        for _ in 0..n / 5 {
            let s = rng.gen_range(1..n);
            let t = *internal.choose(rng).unwrap();
            let under_s = below(&children, s);
            let blocked = matches!(kinds[&t], OpKind::Gateway | OpKind::Fx("linear"))
                || t == s
                || children[t].contains(&s)
                || under_s.contains(&t)
                // a gateway's selector must stay outside its branch
                || selectors.iter().any(|(&g, &sel)| {
                    (g == t || below(&children, g).contains(&t)) && (sel == s || under_s.contains(&sel))
                });
            if !blocked {
                children[t].push(s);
                indirect.push((s, t));
            }
        }
    }
    let indirect_set: BTreeSet<(usize, usize)> = indirect.iter().copied().collect();

    let mut indicators = vec![];
    for (i, below) in children.iter().enumerate() {
        let itype = if i == 0 {
            IndicatorType::KeyBusiness
        } else if !below.is_empty() {
            if rich && rng.gen_bool(0.2) {
                IndicatorType::SubsidiaryResult
            } else {
                IndicatorType::Financial
            }
        } else if rng.gen_bool(0.8) {
            IndicatorType::ValueDriver
        } else {
            IndicatorType::External
        };
        let mut ind = Indicator::new(id(i), itype);
        if below.is_empty() || kinds.get(&i) == Some(&OpKind::Logical) {
            ind.content.results.insert(ResultType::Actual, value(rng, rich));
        }
        if rich {
            decorate(rng, &mut ind);
        }
        indicators.push(ind);
    }

    let mut links = vec![];
    let mut operators = vec![];
    for &p in &internal {
        let kids = &children[p];
        for (order, &c) in kids.iter().enumerate() {
            let kind = if indirect_set.contains(&(c, p)) || (rich && parent[c] == p && rng.gen_bool(0.1)) {
                LinkKind::IndirectAnalytical
            } else {
                LinkKind::DirectAnalytical
            };
            let mut link = Link::new(id(c), id(p), kind, order as u32);
            if kinds[&p] == OpKind::Gateway {
                link.guard = Some(if order + 1 == kids.len() {
                    GatewayGuard::Default
                } else {
                    GatewayGuard::When {
                        comparator: *Comparator::ALL.choose(rng).unwrap(),
                        threshold: rng.gen_range(1.0..10.0),
                    }
                });
            }
            links.push(link);
        }
        let op = match kinds[&p] {
            OpKind::Arith(b'+') => Operator::Add,
            OpKind::Arith(b'-') => Operator::Subtract,
            OpKind::Arith(b'*') => Operator::Multiply,
            OpKind::Arith(_) => Operator::Divide,
            OpKind::Logical => Operator::Logical,
            OpKind::Gateway => Operator::Gateway {
                selector: id(selectors[&p]),
            },
            OpKind::Fx(name) => {
                let mut params = BTreeMap::new();
                match name {
                    "weighted_sum" => {
                        for k in 1..=kids.len() {
                            params.insert(format!("w{k}"), rng.gen_range(-2.0..2.0));
                        }
                    }
                    "linear" => {
                        params.insert("a".to_string(), rng.gen_range(0.5..2.0));
                        params.insert("b".to_string(), rng.gen_range(-5.0..5.0));
                    }
                    _ => {}
                }
                Operator::Function {
                    name: name.to_string(),
                    params,
                }
            }
        };
        operators.push(OperatorSpec::new(id(p), op));
    }

    let mut parts = ModelParts {
        name: format!("Generated {n}"),
        indicators,
        links,
        operators,
        ..Default::default()
    };
    if rich {
        decorate_model(rng, &mut parts, &children);
    }
    parts
}

fn decorate<R: Rng>(rng: &mut R, ind: &mut Indicator) {
    let c = &mut ind.content;
    c.title = format!("{} {}", TITLES.choose(rng).unwrap(), ind.id);
    if rng.gen_bool(0.4) {
        c.value_type = ValueType::ALL.choose(rng).copied();
    }
    if rng.gen_bool(0.5) {
        c.unit = UNITS.choose(rng).unwrap().parse::<Unit>().ok();
    }
    if rng.gen_bool(0.3) {
        c.data_attributes.insert("source".to_string(), "erp \"ledger\"".to_string());
        if rng.gen_bool(0.5) {
            c.data_attributes.insert("refresh-rate".to_string(), "daily".to_string());
        }
    }
    if rng.gen_bool(0.3) {
        let rt = [ResultType::Budget, ResultType::Forecast, ResultType::Plan, ResultType::Other("stretch_goal".into())]
            .choose(rng)
            .unwrap()
            .clone();
        c.results.insert(rt, value(rng, true));
    }
    if rng.gen_bool(0.3) {
        c.comparative = Some(ComparativeValue {
            result_type: [ResultType::Budget, ResultType::Other("last-year".into())].choose(rng).unwrap().clone(),
            value: value(rng, true),
        });
    }
    if rng.gen_bool(0.3) {
        c.development = Some(if rng.gen_bool(0.5) {
            Development::Derived
        } else {
            Development::Fixed(*Trend::ALL.choose(rng).unwrap())
        });
    }
    if rng.gen_bool(0.2) {
        c.responsibility = Some("Head of \"Ops\"".to_string());
    }
    if ind.itype != IndicatorType::KeyBusiness {
        ind.role = *FunctionRole::ALL.choose(rng).unwrap();
    }
}

fn decorate_model<R: Rng>(rng: &mut R, parts: &mut ModelParts, children: &[Vec<usize>]) {
    let n = parts.indicators.len();
    let ids: Vec<String> = parts.indicators.iter().map(|i| i.id.clone()).collect();
    let leaves: Vec<usize> = (0..n).filter(|&i| children[i].is_empty()).collect();
    let internal: Vec<usize> = (0..n).filter(|&i| !children[i].is_empty()).collect();
    parts.name = format!("{} \"decorated\"", parts.name);

    if rng.gen_bool(0.7) {
        let bands = IndicatorType::ALL
            .iter()
            .map(|t| Band {
                name: format!("{t} band"),
                members: parts.indicators.iter().filter(|i| i.itype == *t).map(|i| i.id.clone()).collect(),
            })
            .filter(|b| !b.members.is_empty())
            .collect();
        parts.levels.push(LevelSpec {
            kind: LevelKind::IndicatorType,
            bands,
        });
    }
    for kind in [LevelKind::Branch, LevelKind::TimeHorizon] {
        if rng.gen_bool(0.4) {
            let k = rng.gen_range(1..=3);
            let mut bands: Vec<Band> = (0..k)
                .map(|b| Band {
                    name: format!("{kind} {b}"),
                    members: BTreeSet::new(),
                })
                .collect();
            for i in &ids {
                if rng.gen_bool(0.5) {
                    bands[rng.gen_range(0..k)].members.insert(i.clone());
                }
            }
            parts.levels.push(LevelSpec { kind, bands });
        }
    }

    for c in 0..rng.gen_range(0..=3) {
        let kind = *ClusterKind::ALL.choose(rng).unwrap();
        let count = rng.gen_range(1..=3.min(n));
        let members: BTreeSet<String> = ids.choose_multiple(rng, count).cloned().collect();
        let attached_to = (kind == ClusterKind::ValueDriverGroup).then(|| id(*internal.choose(rng).unwrap()));
        parts.clusters.push(ClusterSpec {
            name: format!("Group {c}"),
            kind,
            members,
            attached_to,
        });
    }

    let mut alloc_order: BTreeMap<String, u32> = BTreeMap::new();
    for _ in 0..rng.gen_range(0..=3) {
        let s = rng.gen_range(1..n);
        let t = rng.gen_range(0..n);
        if s == t || parts.links.iter().any(|l| l.kind == LinkKind::LogicalAllocation && l.source == ids[s] && l.target == ids[t]) {
            continue;
        }
        let order = alloc_order.entry(ids[t].clone()).or_insert(0);
        parts.links.push(Link::new(&ids[s], &ids[t], LinkKind::LogicalAllocation, *order));
        *order += 1;
    }

    let mut free: Vec<usize> = leaves.clone();
    free.shuffle(rng);
    if let Some(l) = free.pop().filter(|_| rng.gen_bool(0.4)) {
        parts.decomposition.tree_cuts.push(TreeCut {
            node: id(l),
            label: "Detailed \"breakdown\"".to_string(),
        });
    }
    if let Some(l) = free.pop().filter(|_| rng.gen_bool(0.4)) {
        parts.decomposition.sub_trees.push(SubTreeRef {
            boundary: id(l),
            model: format!("Sub model of {}", id(l)),
        });
    }
    if rng.gen_bool(0.4) {
        let target = ids.choose(rng).unwrap().clone();
        parts.annotations.insert(target, "checked with \"finance\"\nsecond line".to_string());
    }
}

/// Non-leaf, non-root nodes whose branch shares no link, gateway selector or
/// value driver group anchor with the rest of the model.
pub fn separable_boundaries(model: &Model) -> Vec<String> {
    let mut kids: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for l in model.links().iter().filter(|l| l.kind.is_analytical()) {
        kids.entry(&l.target).or_default().push(&l.source);
    }
    let mut pairs: Vec<(&str, &str)> = model.links().iter().map(|l| (l.source.as_str(), l.target.as_str())).collect();
    for (p, op) in model.operators() {
        if let Operator::Gateway { selector } = op {
            pairs.push((selector, p));
        }
    }
    for c in model.clusters() {
        if let (ClusterKind::ValueDriverGroup, Some(a)) = (c.kind, &c.attached_to) {
            pairs.extend(c.members.iter().map(|m| (m.as_str(), a.as_str())));
        }
    }
    let mut out = vec![];
    for b in kids.keys().copied() {
        if b == model.root() {
            continue;
        }
        let mut strict = BTreeSet::new();
        let mut stack = vec![b];
        while let Some(x) = stack.pop() {
            for &c in kids.get(x).map(Vec::as_slice).unwrap_or(&[]) {
                if strict.insert(c) {
                    stack.push(c);
                }
            }
        }
        let outside = |x: &str| x != b && !strict.contains(x);
        let crosses = pairs
            .iter()
            .any(|&(s, t)| (strict.contains(s) && outside(t)) || (outside(s) && strict.contains(t)))
            || matches!(model.declared_operator(b), Some(Operator::Gateway { selector }) if outside(selector));
        if !crosses {
            out.push(b.to_string());
        }
    }
    out
}

/// A model with at least one separable boundary, and one such boundary.
pub fn random_separable<R: Rng>(rng: &mut R, cfg: &GenConfig) -> (Model, String) {
    loop {
        let m = random_model(rng, cfg);
        if let Some(b) = separable_boundaries(&m).choose(rng) {
            return (m.clone(), b.clone());
        }
    }
}

/// A model and one of its non-root parents to cut at.
pub fn random_cut<R: Rng>(rng: &mut R, cfg: &GenConfig) -> (Model, String) {
    loop {
        let m = random_model(rng, cfg);
        let candidates: Vec<String> = m
            .links()
            .iter()
            .filter(|l| l.kind.is_analytical() && l.target != m.root())
            .map(|l| l.target.clone())
            .collect();
        if let Some(c) = candidates.choose(rng) {
            return (m.clone(), c.clone());
        }
    }
}

/// `R = X1 * (X2 * (... * Xk))` as nested two-factor products.
pub fn multiplicative_chain(k: usize, values: &[f64]) -> Model {
    assert!(k >= 2 && values.len() == k);
    let mut parts = ModelParts {
        name: format!("Chain {k}"),
        ..Default::default()
    };
    parts.indicators.push(Indicator::new("R", IndicatorType::KeyBusiness));
    let mut parent = "R".to_string();
    for i in 1..k {
        let x = format!("X{i}");
        let mut leaf = Indicator::new(&x, IndicatorType::ValueDriver);
        leaf.content.results.insert(ResultType::Actual, values[i - 1]);
        parts.indicators.push(leaf);
        parts.links.push(Link::direct(&x, &parent, 0));
        parts.operators.push(OperatorSpec::new(&parent, Operator::Multiply));
        let next = if i + 1 == k {
            let mut last = Indicator::new(format!("X{k}"), IndicatorType::ValueDriver);
            last.content.results.insert(ResultType::Actual, values[k - 1]);
            parts.indicators.push(last);
            format!("X{k}")
        } else {
            let p = format!("P{i}");
            parts.indicators.push(Indicator::new(&p, IndicatorType::Financial));
            p
        };
        parts.links.push(Link::direct(&next, &parent, 1));
        parent = next;
    }
    build_model(parts).expect("chain is well formed")
}
