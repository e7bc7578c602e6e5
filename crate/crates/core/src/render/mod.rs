//! Diagram output in Graphviz DOT and standalone SVG.
//!
//! | indicator                   | fill        | border |
//! |-----------------------------|-------------|--------|
//! | key business indicator      | black       | solid  |
//! | role `input`                | transparent | solid  |
//! | role `key`                  | grey        | solid  |
//! | subsidiary result           | white       | dashed |
//! | anything else               | white       | solid  |
//!
//! The first matching row wins. Tree cuts and sub-tree boundaries get a
//! dashed border and a reference glyph on top of their row.

mod dot;
mod layout;
mod svg;

use serde::Serialize;
use thiserror::Error;

pub use dot::to_dot;
pub use svg::{to_svg, to_svg_with_values};

use crate::model::{FunctionRole, Indicator, IndicatorType, Model, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Rectangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fill {
    Black,
    Grey,
    White,
    Transparent,
}

impl Fill {
    /// Paint value usable in both DOT and SVG.
    pub fn color(self) -> &'static str {
        match self {
            Fill::Black => "#000000",
            Fill::Grey => "#bfbfbf",
            Fill::White => "#ffffff",
            Fill::Transparent => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Border {
    Solid,
    Dashed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VisualStyle {
    pub shape: Shape,
    pub fill: Fill,
    pub border: Border,
    /// Marks tree cuts and sub-tree boundaries.
    pub reference_glyph: bool,
}

impl VisualStyle {
    pub fn text_color(&self) -> &'static str {
        if self.fill == Fill::Black {
            "#ffffff"
        } else {
            "#000000"
        }
    }
}

pub const REFERENCE_GLYPH: &str = "\u{2702}";

pub fn style_for(indicator: &Indicator, is_cut: bool) -> VisualStyle {
    let (fill, border) = if indicator.itype == IndicatorType::KeyBusiness {
        (Fill::Black, Border::Solid)
    } else if indicator.role == FunctionRole::Input {
        (Fill::Transparent, Border::Solid)
    } else if indicator.role == FunctionRole::KeyValueIndicator {
        (Fill::Grey, Border::Solid)
    } else if indicator.itype == IndicatorType::SubsidiaryResult {
        (Fill::White, Border::Dashed)
    } else {
        (Fill::White, Border::Solid)
    };
    VisualStyle {
        shape: Shape::Rectangle,
        fill,
        border: if is_cut { Border::Dashed } else { border },
        reference_glyph: is_cut,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub show_operators: bool,
    pub show_levels: bool,
    pub show_clusters: bool,
    pub show_content: bool,
    /// Widest band the SVG layout accepts, in pixels.
    pub max_band_width: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            show_operators: true,
            show_levels: true,
            show_clusters: true,
            show_content: true,
            max_band_width: 10_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("band {band} is {width:.0}px wide, above the {max:.0}px limit; split the model")]
    LayoutOverflow { band: usize, width: f64, max: f64 },
}

/// Badge text for an operator.
pub fn operator_label(op: &Operator) -> &'static str {
    match op {
        Operator::Subtract => "\u{2212}",
        other => other.symbol(),
    }
}

/// Reference text shown on cut and sub-tree nodes.
fn reference_text(model: &Model, id: &str) -> Option<String> {
    if let Some(c) = model.tree_cut(id) {
        Some(format!("{REFERENCE_GLYPH} {}", c.label))
    } else {
        model
            .sub_tree(id)
            .map(|s| format!("{REFERENCE_GLYPH} {}", s.model))
    }
}

/// Lines of the content block: title first.
fn content_lines(model: &Model, ind: &Indicator, value: Option<String>, show_content: bool) -> Vec<String> {
    let c = &ind.content;
    let mut lines = vec![c.title.clone()];
    if show_content {
        let unit = c.unit.as_ref().map(|u| format!(" {u}")).unwrap_or_default();
        if let Some(v) = value {
            lines.push(format!("{v}{unit}"));
        } else if !unit.is_empty() {
            lines.push(format!("[{}]", unit.trim_start()));
        }
        if let Some(r) = &c.responsibility {
            lines.push(format!("resp: {r}"));
        }
    }
    if let Some(r) = reference_text(model, &ind.id) {
        lines.push(r);
    }
    lines
}

fn format_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FunctionRole as R, IndicatorType as T};

    fn style(t: T, r: R, cut: bool) -> VisualStyle {
        style_for(&Indicator::new("X", t).with_role(r), cut)
    }

    #[test]
    fn notation_styles() {
        let kbi = style(T::KeyBusiness, R::Regular, false);
        assert_eq!((kbi.fill, kbi.border, kbi.text_color()), (Fill::Black, Border::Solid, "#ffffff"));
        assert_eq!(style(T::ValueDriver, R::KeyValueIndicator, false).fill, Fill::Grey);
        assert_eq!(style(T::SubsidiaryResult, R::Regular, false).border, Border::Dashed);
        assert_eq!(style(T::ValueDriver, R::Input, false).fill, Fill::Transparent);
    }

    #[test]
    fn precedence() {
        assert_eq!(style(T::KeyBusiness, R::Input, false).fill, Fill::Black);
        assert_eq!(style(T::ValueDriver, R::Input, false).fill, Fill::Transparent);
        let s = style(T::SubsidiaryResult, R::KeyValueIndicator, false);
        assert_eq!((s.fill, s.border), (Fill::Grey, Border::Solid));
    }

    #[test]
    fn style_table_is_total() {
        for t in T::ALL {
            for r in R::ALL {
                for cut in [false, true] {
                    let s = style(*t, *r, cut);
                    assert_eq!(s.reference_glyph, cut);
                    if cut {
                        assert_eq!(s.border, Border::Dashed);
                    }
                }
            }
        }
    }

    #[test]
    fn numbers() {
        assert_eq!(format_number(400.0), "400");
        assert_eq!(format_number(0.125), "0.125");
        assert_eq!(format_number(1.0 / 3.0), "0.3333");
    }
}
