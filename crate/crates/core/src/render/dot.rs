use std::fmt::Write;

use super::{content_lines, operator_label, style_for, Border, Fill, RenderOptions};
use crate::model::{GatewayGuard, LevelKind, LinkKind, Model};

fn q(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn badge_id(parent: &str) -> String {
    format!("op:{parent}")
}

fn edge_style(kind: LinkKind) -> &'static str {
    match kind {
        LinkKind::DirectAnalytical => "solid",
        LinkKind::IndirectAnalytical => "dashed",
        LinkKind::LogicalAllocation => "dotted",
    }
}

pub(super) fn guard_label(guard: &GatewayGuard) -> String {
    match guard {
        GatewayGuard::Default => "default".to_string(),
        GatewayGuard::When {
            comparator,
            threshold,
        } => format!("{comparator} {}", super::format_number(*threshold)),
    }
}

/// Graphviz rendering. Edges point from child to parent; with `rankdir=BT`
/// the root is drawn on top.
pub fn to_dot(model: &Model, options: &RenderOptions) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", q(model.name()));
    out.push_str("  rankdir=BT;\n");
    out.push_str("  node [shape=box, fontname=\"Helvetica\"];\n");
    out.push_str("  edge [arrowsize=0.7];\n");

    let primary_level = model
        .level(LevelKind::IndicatorType)
        .or_else(|| model.levels().first());

    for ind in model.indicators() {
        let style = style_for(ind, model.is_reference_leaf(&ind.id));
        let value = ind
            .content
            .results
            .get(&crate::model::ResultType::Actual)
            .map(|v| super::format_number(*v));
        let label = content_lines(model, ind, value, options.show_content).join("\n");
        let mut styles = vec![];
        if style.fill != Fill::Transparent {
            styles.push("filled");
        }
        if style.border == Border::Dashed {
            styles.push("dashed");
        }
        let mut attrs = vec![
            format!("label={}", q(&label)),
            format!("style={}", q(&styles.join(","))),
            format!("fontcolor={}", q(style.text_color())),
        ];
        if style.fill != Fill::Transparent {
            attrs.push(format!("fillcolor={}", q(style.fill.color())));
        }
        let others: Vec<String> = model
            .levels()
            .iter()
            .filter(|l| Some(l.kind) != primary_level.map(|p| p.kind))
            .filter_map(|l| l.band_of(&ind.id).map(|b| format!("{}: {b}", l.kind)))
            .collect();
        if options.show_levels && !others.is_empty() {
            attrs.push(format!("tooltip={}", q(&others.join("; "))));
        }
        let _ = writeln!(out, "  {} [{}];", q(&ind.id), attrs.join(", "));
    }

    let badged = |parent: &str| options.show_operators && model.effective_operator(parent).is_some();
    if options.show_operators {
        for ind in model.indicators() {
            if let Some(op) = model.effective_operator(&ind.id).filter(|_| !model.is_leaf(&ind.id)) {
                let _ = writeln!(
                    out,
                    "  {} [label={}, shape=circle, width=0.3, height=0.3, fixedsize=true, fontsize=10];",
                    q(&badge_id(&ind.id)),
                    q(operator_label(op))
                );
                let _ = writeln!(out, "  {} -> {};", q(&badge_id(&ind.id)), q(&ind.id));
            }
        }
    }

    for link in model.links() {
        let target = if link.kind.is_analytical() && badged(&link.target) {
            badge_id(&link.target)
        } else {
            link.target.clone()
        };
        let mut attrs = vec![format!("style={}", edge_style(link.kind))];
        if let Some(g) = &link.guard {
            attrs.push(format!("label={}", q(&guard_label(g))));
        }
        let _ = writeln!(
            out,
            "  {} -> {} [{}];",
            q(&link.source),
            q(&target),
            attrs.join(", ")
        );
    }

    if options.show_levels {
        if let Some(level) = primary_level {
            for (i, band) in level.bands.iter().enumerate() {
                if band.members.is_empty() {
                    continue;
                }
                let label_id = format!("band:{}:{i}", level.kind);
                let _ = write!(
                    out,
                    "  subgraph {} {{ rank=same; {} [label={}, shape=plaintext];",
                    q(&format!("band_{i}")),
                    q(&label_id),
                    q(&band.name)
                );
                for m in &band.members {
                    let _ = write!(out, " {};", q(m));
                }
                out.push_str(" }\n");
            }
        }
    }

    if options.show_clusters {
        for (i, cluster) in model.clusters().iter().enumerate() {
            let mut label = format!("{}: {}", cluster.kind, cluster.name);
            if let Some(a) = &cluster.attached_to {
                let _ = write!(label, " \u{2192} {a}");
            }
            let _ = writeln!(out, "  subgraph {} {{", q(&format!("cluster_{i}")));
            let _ = writeln!(out, "    label={};", q(&label));
            out.push_str("    style=\"rounded,dashed\";\n");
            for m in &cluster.members {
                let _ = writeln!(out, "    {};", q(m));
            }
            out.push_str("  }\n");
        }
    }

    for (id, text) in model.annotations() {
        let note = format!("note:{id}");
        let _ = writeln!(out, "  {} [label={}, shape=note, fontsize=9];", q(&note), q(text));
        let _ = writeln!(out, "  {} -> {} [style=dotted, arrowhead=none];", q(&note), q(id));
    }

    out.push_str("}\n");
    out
}
