//! Longest-path layering with one barycenter sweep.

use std::collections::{BTreeMap, BTreeSet};

use super::{RenderError, RenderOptions};
use crate::model::{LevelKind, LevelSpec, Model};

pub(super) const NODE_WIDTH: f64 = 170.0;
pub(super) const LINE_HEIGHT: f64 = 16.0;
pub(super) const NODE_PADDING: f64 = 12.0;
pub(super) const H_GAP: f64 = 40.0;
pub(super) const V_GAP: f64 = 70.0;
pub(super) const MARGIN: f64 = 30.0;
pub(super) const BAND_LABEL_WIDTH: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn cx(&self) -> f64 {
        self.x + self.w / 2.0
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }
}

#[derive(Debug, Clone)]
pub(super) struct BandStrip {
    pub name: String,
    pub y: f64,
    pub h: f64,
}

#[derive(Debug, Clone)]
pub(super) struct Layout {
    pub nodes: BTreeMap<String, Rect>,
    pub bands: Vec<BandStrip>,
    pub width: f64,
    pub height: f64,
}

/// Level used for horizontal bands: the indicator-type level if declared.
pub(super) fn primary_level(model: &Model) -> Option<&LevelSpec> {
    model
        .level(LevelKind::IndicatorType)
        .or_else(|| model.levels().first())
}

/// Hierarchy layer of every node, root = 1. Nodes outside the root's
/// hierarchy sit one layer below whatever they attach to.
fn layers(model: &Model) -> BTreeMap<String, usize> {
    let mut layer = model.levels_from_root();
    fn place(
        model: &Model,
        id: &str,
        layer: &mut BTreeMap<String, usize>,
        visiting: &mut BTreeSet<String>,
    ) -> usize {
        if let Some(l) = layer.get(id) {
            return *l;
        }
        if !visiting.insert(id.to_string()) {
            return 1;
        }
        let mut uppers: Vec<String> = model.analytical_parents(id).to_vec();
        uppers.extend(
            model
                .links()
                .iter()
                .filter(|l| !l.kind.is_analytical() && l.source == id)
                .map(|l| l.target.clone()),
        );
        let l = uppers
            .iter()
            .map(|u| place(model, u, layer, visiting) + 1)
            .max()
            .unwrap_or(1);
        layer.insert(id.to_string(), l);
        l
    }
    let ids: Vec<String> = model.indicators().map(|i| i.id.clone()).collect();
    let mut visiting = BTreeSet::new();
    for id in &ids {
        place(model, id, &mut layer, &mut visiting);
    }
    layer
}

/// Nodes drawn above `id` that it connects to.
fn uppers<'m>(model: &'m Model, id: &'m str) -> impl Iterator<Item = &'m str> {
    model
        .links()
        .iter()
        .filter(move |l| l.source == id)
        .map(|l| l.target.as_str())
}

pub(super) fn layout(
    model: &Model,
    options: &RenderOptions,
    line_counts: &BTreeMap<String, usize>,
) -> Result<Layout, RenderError> {
    let layer = layers(model);
    let level = primary_level(model).filter(|_| options.show_levels);
    let n_bands = level.map_or(0, |l| l.bands.len());
    let band_index = |id: &str| -> usize {
        level
            .and_then(|l| l.bands.iter().position(|b| b.members.contains(id)))
            .unwrap_or(n_bands)
    };

    let mut rows: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    for ind in model.indicators() {
        rows.entry((band_index(&ind.id), layer[&ind.id]))
            .or_default()
            .push(ind.id.clone());
    }
    let widest = rows.values().map(Vec::len).max().unwrap_or(0);
    let row_width = |n: usize| n as f64 * NODE_WIDTH + n.saturating_sub(1) as f64 * H_GAP;
    for (i, row) in rows.values().enumerate() {
        let w = row_width(row.len());
        if w > options.max_band_width {
            return Err(RenderError::LayoutOverflow {
                band: i,
                width: w,
                max: options.max_band_width,
            });
        }
    }

    let left = MARGIN + if level.is_some() { BAND_LABEL_WIDTH } else { 0.0 };
    let content_width = row_width(widest);
    let height_of = |id: &str| NODE_PADDING * 2.0 + LINE_HEIGHT * line_counts.get(id).copied().unwrap_or(1) as f64;

    let mut nodes: BTreeMap<String, Rect> = BTreeMap::new();
    let mut band_spans: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    let mut y = MARGIN;
    for ((band, _), ids) in &rows {
        let mut keyed: Vec<(f64, &String)> = ids
            .iter()
            .map(|id| {
                let xs: Vec<f64> = uppers(model, id)
                    .filter_map(|u| nodes.get(u).map(Rect::cx))
                    .collect();
                let bary = if xs.is_empty() {
                    f64::INFINITY
                } else {
                    xs.iter().sum::<f64>() / xs.len() as f64
                };
                (bary, id)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        let h = ids.iter().map(|id| height_of(id)).fold(0.0, f64::max);
        let x0 = left + (content_width - row_width(ids.len())) / 2.0;
        for (i, (_, id)) in keyed.iter().enumerate() {
            nodes.insert(
                (*id).clone(),
                Rect {
                    x: x0 + i as f64 * (NODE_WIDTH + H_GAP),
                    y,
                    w: NODE_WIDTH,
                    h: height_of(id),
                },
            );
        }
        let span = band_spans.entry(*band).or_insert((y, y + h));
        span.1 = y + h;
        y += h + V_GAP;
    }

    let bands = level
        .map(|l| {
            l.bands
                .iter()
                .enumerate()
                .filter_map(|(i, b)| {
                    band_spans.get(&i).map(|(y0, y1)| BandStrip {
                        name: b.name.clone(),
                        y: y0 - V_GAP / 4.0,
                        h: y1 - y0 + V_GAP / 2.0,
                    })
                })
                .collect()
        })
        .unwrap_or_default();

    Ok(Layout {
        nodes,
        bands,
        width: left + content_width + MARGIN,
        height: y - V_GAP + MARGIN,
    })
}
