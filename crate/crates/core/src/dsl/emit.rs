use std::fmt::Write;

use super::lexer::quote;
use crate::model::{
    Development, GatewayGuard, Indicator, Model, Operator, ResultType,
};

/// Indicators in canonical emission order: by type, then id.
pub(crate) fn canonical_indicators(model: &Model) -> Vec<&Indicator> {
    let mut v: Vec<_> = model.indicators().collect();
    v.sort_by(|a, b| (a.itype, &a.id).cmp(&(b.itype, &b.id)));
    v
}

fn result_type(rt: &ResultType) -> String {
    if rt.is_builtin() {
        rt.name().to_string()
    } else {
        quote(rt.name())
    }
}

fn content(ind: &Indicator) -> String {
    let c = &ind.content;
    let mut parts = vec![format!("title {}", quote(&c.title))];
    if let Some(vt) = c.value_type {
        parts.push(format!("value_type {vt}"));
    }
    if let Some(u) = &c.unit {
        parts.push(format!("unit {}", quote(&u.to_string())));
    }
    for (rt, v) in &c.results {
        parts.push(format!("result {} {v}", result_type(rt)));
    }
    if let Some(cmp) = &c.comparative {
        parts.push(format!("compare {} {}", result_type(&cmp.result_type), cmp.value));
    }
    match c.development {
        Some(Development::Derived) => parts.push("dev derived".to_string()),
        Some(Development::Fixed(t)) => parts.push(format!("dev {t}")),
        None => {}
    }
    if let Some(r) = &c.responsibility {
        parts.push(format!("resp {}", quote(r)));
    }
    for (k, v) in &c.data_attributes {
        parts.push(format!("attr {} {}", quote(k), quote(v)));
    }
    parts.join(" ")
}

fn operator(op: &Operator) -> String {
    match op {
        Operator::Function { name, params } => {
            let mut s = format!("fx({name}");
            for (k, v) in params {
                let _ = write!(s, ", {k}={v}");
            }
            s.push(')');
            s
        }
        Operator::Gateway { selector } => format!("X({selector})"),
        other => other.symbol().to_string(),
    }
}

/// Canonical text form of a model.
pub fn emit_text(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {} {{", quote(model.name()));
    for ind in canonical_indicators(model) {
        let flag = match ind.role {
            crate::model::FunctionRole::Regular => String::new(),
            role => format!(" @{role}"),
        };
        let _ = writeln!(
            out,
            "  {} {}{} {{{}}}",
            ind.itype,
            ind.id,
            flag,
            content(ind)
        );
    }
    for link in model.links() {
        let arrow = match link.kind {
            crate::model::LinkKind::DirectAnalytical => "->",
            crate::model::LinkKind::IndirectAnalytical => "~>",
            crate::model::LinkKind::LogicalAllocation => "..>",
        };
        let guard = match link.guard {
            None => String::new(),
            Some(GatewayGuard::Default) => ", default".to_string(),
            Some(GatewayGuard::When {
                comparator,
                threshold,
            }) => format!(", when {comparator} {threshold}"),
        };
        let _ = writeln!(
            out,
            "  {} {arrow} {} [order={}{guard}]",
            link.source, link.target, link.order
        );
    }
    for (parent, op) in model.operators() {
        let _ = writeln!(out, "  op {parent} = {}", operator(op));
    }
    for level in model.levels() {
        let bands: Vec<String> = level
            .bands
            .iter()
            .map(|b| {
                let members: Vec<&str> = b.members.iter().map(String::as_str).collect();
                format!("    {}: [{}]", quote(&b.name), members.join(", "))
            })
            .collect();
        if bands.is_empty() {
            let _ = writeln!(out, "  level {} {{}}", level.kind);
        } else {
            let _ = writeln!(out, "  level {} {{\n{}\n  }}", level.kind, bands.join(",\n"));
        }
    }
    for cluster in model.clusters() {
        let attached = cluster
            .attached_to
            .as_ref()
            .map(|a| format!(" @{a}"))
            .unwrap_or_default();
        let members: Vec<&str> = cluster.members.iter().map(String::as_str).collect();
        let _ = writeln!(
            out,
            "  cluster {} {}{attached} [{}]",
            cluster.kind,
            quote(&cluster.name),
            members.join(", ")
        );
    }
    for s in &model.decomposition().sub_trees {
        let _ = writeln!(out, "  subtree {} => {}", s.boundary, quote(&s.model));
    }
    for c in &model.decomposition().tree_cuts {
        let _ = writeln!(out, "  cut {} => {}", c.node, quote(&c.label));
    }
    for (id, text) in model.annotations() {
        let _ = writeln!(out, "  note {id} {}", quote(text));
    }
    out.push_str("}\n");
    out
}
