use std::collections::BTreeMap;
use std::fmt::Write;

use super::dot::guard_label;
use super::layout::{layout, Rect, LINE_HEIGHT, MARGIN, NODE_PADDING};
use super::{content_lines, format_number, operator_label, style_for, Border, RenderError, RenderOptions};
use crate::engine::{NodeValue, Valuation};
use crate::model::{Development, LinkKind, Model, ResultType, Trend};

pub(super) const CLUSTER_PAD: f64 = 8.0;
const BADGE_RADIUS: f64 = 10.0;
const BADGE_OFFSET: f64 = 20.0;
const NOTE_WIDTH: f64 = 240.0;

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn n(v: f64) -> String {
    format!("{:.1}", v)
}

fn arrow(t: Trend) -> &'static str {
    match t {
        Trend::Up => "\u{25b2}",
        Trend::Flat => "\u{25b6}",
        Trend::Down => "\u{25bc}",
    }
}

/// SVG using the values recorded in the model for actual results.
pub fn to_svg(model: &Model, options: &RenderOptions) -> Result<String, RenderError> {
    let values = model
        .indicators()
        .filter_map(|i| {
            i.content
                .results
                .get(&ResultType::Actual)
                .map(|v| (i.id.clone(), format_number(*v)))
        })
        .collect();
    render(model, options, values, &BTreeMap::new())
}

/// SVG showing evaluated values and derived trends.
pub fn to_svg_with_values(
    model: &Model,
    options: &RenderOptions,
    valuation: &Valuation,
    trends: &BTreeMap<String, Trend>,
) -> Result<String, RenderError> {
    let values = valuation
        .values
        .iter()
        .map(|(id, v)| {
            let text = match v {
                NodeValue::Number(x) => format_number(*x),
                NodeValue::NotComputed { .. } => "n/a".to_string(),
            };
            (id.clone(), text)
        })
        .collect();
    render(model, options, values, trends)
}

fn render(
    model: &Model,
    options: &RenderOptions,
    mut values: BTreeMap<String, String>,
    trends: &BTreeMap<String, Trend>,
) -> Result<String, RenderError> {
    let mut lines: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for ind in model.indicators() {
        let trend = trends.get(&ind.id).copied().or(match ind.content.development {
            Some(Development::Fixed(t)) => Some(t),
            _ => None,
        });
        let value = values.remove(&ind.id).map(|v| match trend {
            Some(t) if options.show_content => format!("{v} {}", arrow(t)),
            _ => v,
        });
        lines.insert(ind.id.clone(), content_lines(model, ind, value, options.show_content));
    }
    let counts = lines.iter().map(|(k, v)| (k.clone(), v.len())).collect();
    let lay = layout(model, options, &counts)?;
    let notes = model.annotations();
    let width = lay.width + if notes.is_empty() { 0.0 } else { NOTE_WIDTH };
    let height = lay
        .height
        .max(MARGIN * 2.0 + notes.len() as f64 * LINE_HEIGHT * 2.0);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="Helvetica, Arial, sans-serif" font-size="12">"#,
        w = n(width),
        h = n(height)
    );
    let _ = writeln!(out, "<title>{}</title>", esc(model.name()));
    out.push_str(r##"<defs><marker id="arrow" viewBox="0 0 8 8" refX="8" refY="4" markerWidth="8" markerHeight="8" orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="#000000"/></marker></defs>"##);
    out.push('\n');

    if options.show_levels && !lay.bands.is_empty() {
        out.push_str("<g id=\"levels\">\n");
        for (i, b) in lay.bands.iter().enumerate() {
            let shade = if i % 2 == 0 { "#f4f4f4" } else { "#e9e9e9" };
            let _ = writeln!(
                out,
                r##"<rect class="band" x="0" y="{}" width="{}" height="{}" fill="{shade}" stroke="none"/>"##,
                n(b.y),
                n(lay.width),
                n(b.h)
            );
            let _ = writeln!(
                out,
                r#"<text class="band-label" x="{}" y="{}">{}</text>"#,
                n(MARGIN / 2.0),
                n(b.y + b.h / 2.0),
                esc(&b.name)
            );
        }
        out.push_str("</g>\n");
    }

    if options.show_clusters && !model.clusters().is_empty() {
        out.push_str("<g id=\"clusters\">\n");
        for c in model.clusters() {
            let rects: Vec<&Rect> = c.members.iter().filter_map(|m| lay.nodes.get(m)).collect();
            let x0 = rects.iter().map(|r| r.x).fold(f64::INFINITY, f64::min) - CLUSTER_PAD;
            let y0 = rects.iter().map(|r| r.y).fold(f64::INFINITY, f64::min) - CLUSTER_PAD;
            let x1 = rects.iter().map(|r| r.x + r.w).fold(f64::NEG_INFINITY, f64::max) + CLUSTER_PAD;
            let y1 = rects.iter().map(|r| r.bottom()).fold(f64::NEG_INFINITY, f64::max) + CLUSTER_PAD;
            let _ = writeln!(
                out,
                r##"<g class="cluster" id="cluster:{}:{}"><rect x="{}" y="{}" width="{}" height="{}" rx="6" fill="none" stroke="#555555" stroke-dasharray="6,3"/><text x="{}" y="{}" font-size="10">{}</text></g>"##,
                c.kind,
                esc(&c.name),
                n(x0),
                n(y0),
                n(x1 - x0),
                n(y1 - y0),
                n(x0 + 4.0),
                n(y0 - 3.0),
                esc(&c.name)
            );
        }
        out.push_str("</g>\n");
    }

    let badge_center = |parent: &str| {
        let r = &lay.nodes[parent];
        (r.cx(), r.bottom() + BADGE_OFFSET)
    };
    let has_badge = |parent: &str| options.show_operators && !model.is_leaf(parent);

    out.push_str("<g id=\"links\">\n");
    for link in model.links() {
        let s = &lay.nodes[&link.source];
        let (tx, ty) = if link.kind.is_analytical() && has_badge(&link.target) {
            let (x, y) = badge_center(&link.target);
            (x, y + BADGE_RADIUS)
        } else {
            let t = &lay.nodes[&link.target];
            (t.cx(), t.bottom())
        };
        let dash = match link.kind {
            LinkKind::DirectAnalytical => "",
            LinkKind::IndirectAnalytical => r#" stroke-dasharray="8,4""#,
            LinkKind::LogicalAllocation => r#" stroke-dasharray="2,3""#,
        };
        let arrow = match link.kind {
            LinkKind::DirectAnalytical => "->",
            LinkKind::IndirectAnalytical => "~>",
            LinkKind::LogicalAllocation => "..>",
        };
        let _ = writeln!(
            out,
            r##"<line id="{}" class="{}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#000000"{dash} marker-end="url(#arrow)"/>"##,
            esc(&format!("link:{}{arrow}{}", link.source, link.target)),
            link.kind,
            n(s.cx()),
            n(s.y),
            n(tx),
            n(ty)
        );
        if let Some(g) = &link.guard {
            let _ = writeln!(
                out,
                r#"<text class="guard" x="{}" y="{}" font-size="10">{}</text>"#,
                n((s.cx() + tx) / 2.0 + 4.0),
                n((s.y + ty) / 2.0),
                esc(&guard_label(g))
            );
        }
    }
    out.push_str("</g>\n");

    if options.show_operators {
        out.push_str("<g id=\"operators\">\n");
        for ind in model.indicators() {
            if !has_badge(&ind.id) {
                continue;
            }
            let op = model.effective_operator(&ind.id).expect("parent has an operator");
            let (cx, cy) = badge_center(&ind.id);
            let _ = writeln!(
                out,
                r##"<g class="operator" id="{}"><line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#000000"/><circle cx="{x}" cy="{}" r="{}" fill="#ffffff" stroke="#000000"/><text x="{x}" y="{}" text-anchor="middle" font-size="10">{}</text></g>"##,
                esc(&format!("op:{}", ind.id)),
                n(cy - BADGE_RADIUS),
                n(lay.nodes[&ind.id].bottom()),
                n(cy),
                n(BADGE_RADIUS),
                n(cy + 3.5),
                esc(operator_label(op)),
                x = n(cx),
            );
        }
        out.push_str("</g>\n");
    }

    out.push_str("<g id=\"indicators\">\n");
    for ind in model.indicators() {
        let r = &lay.nodes[&ind.id];
        let style = style_for(ind, model.is_reference_leaf(&ind.id));
        let dash = if style.border == Border::Dashed {
            r#" stroke-dasharray="5,3""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r##"<g class="indicator" id="{}" data-type="{}" data-role="{}"><rect x="{}" y="{}" width="{}" height="{}" fill="{}" stroke="#000000"{dash}/>"##,
            esc(&ind.id),
            ind.itype,
            ind.role,
            n(r.x),
            n(r.y),
            n(r.w),
            n(r.h),
            style.fill.color(),
        );
        for (i, line) in lines[&ind.id].iter().enumerate() {
            let weight = if i == 0 { r#" font-weight="bold""# } else { "" };
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{}"{weight}>{}</text>"#,
                n(r.cx()),
                n(r.y + NODE_PADDING + LINE_HEIGHT * (i as f64 + 0.75)),
                style.text_color(),
                esc(line)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</g>\n");

    if !notes.is_empty() {
        out.push_str("<g id=\"notes\">\n");
        for (i, (id, text)) in notes.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text class="note" x="{}" y="{}" font-size="10">{}</text>"#,
                n(lay.width),
                n(MARGIN + i as f64 * LINE_HEIGHT * 2.0 + LINE_HEIGHT),
                esc(&format!("{id}: {text}"))
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}
