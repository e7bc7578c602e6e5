//! Splitting models into sub-trees, pruning branches behind tree cuts, and
//! merging extracted sub-trees back.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{
    build_model, Band, ClusterKind, ClusterSpec, IndicatorType, LevelSpec, Model, ModelError,
    ModelParts, Operator, SubTreeRef, TreeCut,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("`{0}` is not an indicator of the model")]
    UnknownReference(String),
    #[error("`{0}` is the root and cannot be split off")]
    IsRoot(String),
    #[error("branch is not separable; escaping connections: {}", fmt_pairs(.0))]
    NonSeparable(Vec<(String, String)>),
    #[error("no sub-tree reference in `{remainder}` names model `{extracted}`")]
    ReferenceMismatch { remainder: String, extracted: String },
    #[error("indicators defined in both models: {}", .0.join(", "))]
    IdCollision(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn fmt_pairs(pairs: &[(String, String)]) -> String {
    pairs
        .iter()
        .map(|(a, b)| format!("{a} -> {b}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// The two halves of a model split at a boundary indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct SubTreeExtraction {
    pub boundary: String,
    /// Boundary and its descendants, with the boundary as root.
    pub extracted: Model,
    /// Everything else, with the boundary left as a reference leaf.
    pub remainder: Model,
}

fn check_node(model: &Model, id: &str) -> Result<(), TransformError> {
    if !model.contains(id) {
        return Err(TransformError::UnknownReference(id.to_string()));
    }
    if model.root() == id {
        return Err(TransformError::IsRoot(id.to_string()));
    }
    Ok(())
}

/// Name given to the model extracted at `boundary`.
pub fn extracted_name(model: &Model, boundary: &str) -> String {
    format!("{} / {boundary}", model.name())
}

/// Keeps only the levels' and clusters' members in `keep`. Empty clusters
/// and value driver groups whose anchor is gone are dropped. Empty bands
/// survive only when `keep_empty_bands` is set.
fn restrict_structures(
    parts: &mut ModelParts,
    keep: &BTreeSet<String>,
    keep_empty_bands: bool,
) {
    parts.levels = std::mem::take(&mut parts.levels)
        .into_iter()
        .filter_map(|level| {
            let bands: Vec<Band> = level
                .bands
                .into_iter()
                .map(|b| Band {
                    name: b.name,
                    members: b.members.intersection(keep).cloned().collect(),
                })
                .filter(|b| keep_empty_bands || !b.members.is_empty())
                .collect();
            (!bands.is_empty()).then_some(LevelSpec {
                kind: level.kind,
                bands,
            })
        })
        .collect();
    parts.clusters = std::mem::take(&mut parts.clusters)
        .into_iter()
        .filter_map(|c| {
            let members: BTreeSet<String> = c.members.intersection(keep).cloned().collect();
            let attached_to = c.attached_to.filter(|a| keep.contains(a));
            let orphaned = c.kind == ClusterKind::ValueDriverGroup && attached_to.is_none();
            (!members.is_empty() && !orphaned).then_some(ClusterSpec {
                members,
                attached_to,
                ..c
            })
        })
        .collect();
    parts.decomposition.sub_trees.retain(|s| keep.contains(&s.boundary));
    parts.decomposition.tree_cuts.retain(|c| keep.contains(&c.node));
    parts.annotations.retain(|id, _| keep.contains(id));
}

/// Splits `model` at `boundary`.
///
/// The branch must be self-contained: no link, gateway selector or value
/// driver group may connect a node strictly below the boundary with a node
/// outside the branch.
pub fn extract_subtree(model: &Model, boundary: &str) -> Result<SubTreeExtraction, TransformError> {
    check_node(model, boundary)?;
    let below = model.descendants(boundary);
    let mut branch = below.clone();
    branch.insert(boundary.to_string());
    let side = |id: &str| (below.contains(id), !branch.contains(id));

    let mut escaping = Vec::new();
    let mut own = Vec::new();
    let mut crossing = |a: &str, b: &str| {
        let (a_in, a_out) = side(a);
        let (b_in, b_out) = side(b);
        if (a_in && b_out) || (a_out && b_in) {
            escaping.push((a.to_string(), b.to_string()));
        }
    };
    for l in model.links() {
        crossing(&l.source, &l.target);
    }
    for (parent, op) in model.operators() {
        if let Operator::Gateway { selector } = op {
            // the boundary's own operator moves into the extracted branch
            if parent == boundary && !branch.contains(selector.as_str()) {
                own.push((selector.clone(), parent.to_string()));
            }
            crossing(selector, parent);
        }
    }
    for c in model.clusters() {
        if let (ClusterKind::ValueDriverGroup, Some(anchor)) = (c.kind, &c.attached_to) {
            for m in &c.members {
                crossing(m, anchor);
            }
        }
    }
    escaping.extend(own);
    if !escaping.is_empty() {
        escaping.sort();
        escaping.dedup();
        return Err(TransformError::NonSeparable(escaping));
    }

    let original = model.to_parts();
    let name = extracted_name(model, boundary);

    let mut ext = original.clone();
    ext.name = name.clone();
    ext.indicators.retain(|i| branch.contains(&i.id));
    let original_type = model.indicator(boundary).expect("checked").itype;
    for i in &mut ext.indicators {
        if i.id == boundary {
            i.itype = IndicatorType::KeyBusiness;
        }
    }
    ext.links
        .retain(|l| branch.contains(&l.source) && branch.contains(&l.target));
    ext.operators.retain(|o| branch.contains(&o.parent));
    restrict_structures(&mut ext, &branch, false);
    ext.annotations.insert(
        boundary.to_string(),
        format!(
            "extracted from \"{}\"; originally a {original_type} indicator",
            model.name()
        ),
    );

    let keep: BTreeSet<String> = model
        .indicators()
        .map(|i| i.id.clone())
        .filter(|id| !below.contains(id))
        .collect();
    let mut rem = original;
    rem.indicators.retain(|i| keep.contains(&i.id));
    rem.links
        .retain(|l| keep.contains(&l.source) && keep.contains(&l.target) && !(l.target == boundary && l.kind.is_analytical()));
    rem.operators.retain(|o| keep.contains(&o.parent) && o.parent != boundary);
    restrict_structures(&mut rem, &keep, true);
    rem.decomposition.sub_trees.retain(|s| s.boundary != boundary);
    rem.decomposition.tree_cuts.retain(|c| c.node != boundary);
    rem.decomposition.sub_trees.push(SubTreeRef {
        boundary: boundary.to_string(),
        model: name,
    });

    Ok(SubTreeExtraction {
        boundary: boundary.to_string(),
        extracted: build_model(ext)?,
        remainder: build_model(rem)?,
    })
}

/// Prunes everything that reaches the rest of the model only through
/// `node` and turns `node` into a tree-cut leaf labelled `label`.
pub fn apply_tree_cut(model: &Model, node: &str, label: &str) -> Result<Model, TransformError> {
    check_node(model, node)?;
    let below = model.descendants(node);

    // Descendants still reachable downward from the rest of the model, or
    // needed as gateway selectors there, survive the cut.
    let mut kept: BTreeSet<String> = model
        .indicators()
        .map(|i| i.id.clone())
        .filter(|id| !below.contains(id))
        .collect();
    loop {
        let mut stack: Vec<String> = kept.iter().filter(|id| *id != node).cloned().collect();
        for (parent, op) in model.operators() {
            if let Operator::Gateway { selector } = op {
                if parent != node && kept.contains(parent) {
                    stack.push(selector.clone());
                }
            }
        }
        let before = kept.len();
        while let Some(id) = stack.pop() {
            kept.insert(id.clone());
            for c in model.children_of(&id) {
                if c != node && !kept.contains(c) {
                    stack.push(c.clone());
                }
            }
        }
        if kept.len() == before {
            break;
        }
    }

    let mut parts = model.to_parts();
    parts.indicators.retain(|i| kept.contains(&i.id));
    parts.links.retain(|l| {
        kept.contains(&l.source)
            && kept.contains(&l.target)
            && !(l.target == node && l.kind.is_analytical())
    });
    parts.operators.retain(|o| kept.contains(&o.parent) && o.parent != node);
    restrict_structures(&mut parts, &kept, true);
    parts.decomposition.tree_cuts.retain(|c| c.node != node);
    parts.decomposition.tree_cuts.push(TreeCut {
        node: node.to_string(),
        label: label.to_string(),
    });
    Ok(build_model(parts)?)
}

/// Inverse of [`extract_subtree`]: replaces the remainder's reference to
/// `extracted` by the extracted branch.
pub fn merge_subtree(remainder: &Model, extracted: &Model) -> Result<Model, TransformError> {
    let mismatch = || TransformError::ReferenceMismatch {
        remainder: remainder.name().to_string(),
        extracted: extracted.name().to_string(),
    };
    let boundary = remainder
        .decomposition()
        .sub_trees
        .iter()
        .find(|s| s.model == extracted.name())
        .map(|s| s.boundary.clone())
        .ok_or_else(mismatch)?;
    if extracted.root() != boundary {
        return Err(mismatch());
    }
    let collisions: Vec<String> = extracted
        .indicators()
        .filter(|i| i.id != boundary && remainder.contains(&i.id))
        .map(|i| i.id.clone())
        .collect();
    if !collisions.is_empty() {
        return Err(TransformError::IdCollision(collisions));
    }

    let ext = extracted.to_parts();
    let mut parts = remainder.to_parts();
    parts
        .indicators
        .extend(ext.indicators.into_iter().filter(|i| i.id != boundary));
    parts.links.extend(ext.links);
    parts.operators.retain(|o| o.parent != boundary);
    parts.operators.extend(ext.operators);

    for level in ext.levels {
        let Some(target) = parts.levels.iter_mut().find(|l| l.kind == level.kind) else {
            parts.levels.push(level);
            continue;
        };
        for band in level.bands {
            match target.bands.iter_mut().find(|b| b.name == band.name) {
                Some(b) => b.members.extend(band.members),
                None => target.bands.push(band),
            }
        }
    }
    for cluster in ext.clusters {
        match parts
            .clusters
            .iter_mut()
            .find(|c| c.kind == cluster.kind && c.name == cluster.name)
        {
            Some(c) => {
                c.members.extend(cluster.members);
                if c.attached_to.is_none() {
                    c.attached_to = cluster.attached_to;
                }
            }
            None => parts.clusters.push(cluster),
        }
    }
    parts
        .decomposition
        .sub_trees
        .retain(|s| !(s.boundary == boundary && s.model == extracted.name()));
    parts.decomposition.sub_trees.extend(ext.decomposition.sub_trees);
    parts.decomposition.tree_cuts.extend(ext.decomposition.tree_cuts);
    for (id, note) in ext.annotations {
        if id != boundary {
            parts.annotations.entry(id).or_insert(note);
        }
    }
    Ok(build_model(parts)?)
}
