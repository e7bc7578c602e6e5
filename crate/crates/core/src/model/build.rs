use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{
    is_valid_id, GatewayGuard, IndicatorType, LinkKind, Model, ModelParts, Operator,
};

/// Structural failure while assembling a [`Model`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("analytical links form a cycle: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("unknown indicator `{0}`")]
    UnknownReference(String),
    #[error("model has no key business indicator")]
    NoRoot,
    #[error("model has more than one key business indicator: {}", .0.join(", "))]
    MultipleRoots(Vec<String>),
    #[error("indicator `{0}` has more than one direct parent")]
    MultipleDirectParents(String),
    #[error("gateway `{0}` has more than one default guard")]
    DuplicateGuardDefault(String),
    #[error("{message}")]
    InvalidStructure { subject: Option<String>, message: String },
}

impl ModelError {
    /// Stable diagnostic code.
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::DuplicateId(_) => "M001",
            ModelError::CycleDetected(_) => "M002",
            ModelError::UnknownReference(_) => "M003",
            ModelError::NoRoot => "M004",
            ModelError::MultipleRoots(_) => "M005",
            ModelError::MultipleDirectParents(_) => "M006",
            ModelError::DuplicateGuardDefault(_) => "M007",
            ModelError::InvalidStructure { .. } => "M008",
        }
    }

    /// Indicator id the error is about, when there is one.
    pub fn subject(&self) -> Option<&str> {
        match self {
            ModelError::DuplicateId(id)
            | ModelError::UnknownReference(id)
            | ModelError::MultipleDirectParents(id)
            | ModelError::DuplicateGuardDefault(id) => Some(id),
            ModelError::CycleDetected(path) => path.first().map(String::as_str),
            ModelError::MultipleRoots(ids) => ids.get(1).map(String::as_str),
            ModelError::NoRoot => None,
            ModelError::InvalidStructure { subject, .. } => subject.as_deref(),
        }
    }

    fn invalid(subject: impl Into<Option<String>>, message: impl Into<String>) -> Self {
        ModelError::InvalidStructure {
            subject: subject.into(),
            message: message.into(),
        }
    }
}

/// Assembles a [`Model`] from raw parts, checking every structural invariant.
///
/// Returns the first violation found; checks run in a fixed order so the
/// reported error is deterministic.
pub fn build_model(parts: ModelParts) -> Result<Model, ModelError> {
    let ModelParts {
        name,
        indicators: raw_indicators,
        mut links,
        operators: raw_operators,
        mut levels,
        mut clusters,
        mut decomposition,
        annotations,
    } = parts;

    let mut indicators = BTreeMap::new();
    for ind in raw_indicators {
        if !is_valid_id(&ind.id) {
            return Err(ModelError::invalid(
                ind.id.clone(),
                format!("`{}` is not a valid indicator id", ind.id),
            ));
        }
        if ind.content.title.is_empty() {
            return Err(ModelError::invalid(
                ind.id.clone(),
                format!("indicator `{}` has an empty title", ind.id),
            ));
        }
        let numbers = ind
            .content
            .results
            .values()
            .chain(ind.content.comparative.as_ref().map(|c| &c.value));
        for v in numbers {
            if !v.is_finite() {
                return Err(ModelError::invalid(
                    ind.id.clone(),
                    format!("indicator `{}` carries a non-finite value", ind.id),
                ));
            }
        }
        if indicators.contains_key(&ind.id) {
            return Err(ModelError::DuplicateId(ind.id));
        }
        indicators.insert(ind.id.clone(), ind);
    }

    let roots: Vec<String> = indicators
        .values()
        .filter(|i| i.itype == IndicatorType::KeyBusiness)
        .map(|i| i.id.clone())
        .collect();
    let root = match roots.len() {
        0 => return Err(ModelError::NoRoot),
        1 => roots[0].clone(),
        _ => return Err(ModelError::MultipleRoots(roots)),
    };

    let exists = |id: &str| -> Result<(), ModelError> {
        if indicators.contains_key(id) {
            Ok(())
        } else {
            Err(ModelError::UnknownReference(id.to_string()))
        }
    };

    for link in &links {
        exists(&link.source)?;
        exists(&link.target)?;
    }
    for link in &links {
        if link.source == link.target {
            if link.kind.is_analytical() {
                return Err(ModelError::CycleDetected(vec![
                    link.source.clone(),
                    link.target.clone(),
                ]));
            }
            return Err(ModelError::invalid(
                link.source.clone(),
                format!("`{}` is allocated to itself", link.source),
            ));
        }
        if let Some(GatewayGuard::When { threshold, .. }) = link.guard {
            if !threshold.is_finite() {
                return Err(ModelError::invalid(
                    link.target.clone(),
                    "guard threshold must be finite",
                ));
            }
        }
    }
    links.sort_by(|a, b| {
        (&a.target, a.order, a.kind, &a.source).cmp(&(&b.target, b.order, b.kind, &b.source))
    });
    {
        let mut seen = BTreeSet::new();
        let mut orders = BTreeSet::new();
        for link in &links {
            if !seen.insert((&link.source, &link.target, link.kind)) {
                return Err(ModelError::invalid(
                    link.source.clone(),
                    format!(
                        "duplicate {} link `{}` -> `{}`",
                        link.kind, link.source, link.target
                    ),
                ));
            }
            let order_class = link.kind.is_analytical();
            if !orders.insert((&link.target, order_class, link.order)) {
                return Err(ModelError::invalid(
                    link.target.clone(),
                    format!(
                        "children of `{}` share order {}",
                        link.target, link.order
                    ),
                ));
            }
        }
    }

    let mut operators = BTreeMap::new();
    for spec in raw_operators {
        exists(&spec.parent)?;
        match &spec.op {
            Operator::Function { name, params } => {
                if !is_valid_id(name) {
                    return Err(ModelError::invalid(
                        spec.parent.clone(),
                        format!("invalid function name `{name}`"),
                    ));
                }
                for (k, v) in params {
                    if !is_valid_id(k) || !v.is_finite() {
                        return Err(ModelError::invalid(
                            spec.parent.clone(),
                            format!("invalid function parameter `{k}`"),
                        ));
                    }
                }
            }
            Operator::Gateway { selector } => exists(selector)?,
            _ => {}
        }
        if operators.contains_key(&spec.parent) {
            return Err(ModelError::DuplicateId(spec.parent));
        }
        operators.insert(spec.parent, spec.op);
    }

    let mut defaults: BTreeMap<&str, usize> = BTreeMap::new();
    for link in links.iter().filter(|l| l.kind.is_analytical()) {
        if matches!(link.guard, Some(GatewayGuard::Default)) {
            let n = defaults.entry(&link.target).or_default();
            *n += 1;
            if *n > 1 {
                return Err(ModelError::DuplicateGuardDefault(link.target.clone()));
            }
        }
    }

    if let Some(link) = links
        .iter()
        .find(|l| l.kind.is_analytical() && l.source == root)
    {
        return Err(ModelError::invalid(
            root.clone(),
            format!(
                "key business indicator `{}` cannot feed `{}`",
                root, link.target
            ),
        ));
    }

    let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut parents: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for link in links.iter().filter(|l| l.kind.is_analytical()) {
        // links are sorted by (target, order), so children come out ordered
        children
            .entry(link.target.clone())
            .or_default()
            .push(link.source.clone());
        parents
            .entry(link.source.clone())
            .or_default()
            .push(link.target.clone());
    }
    for ps in parents.values_mut() {
        ps.sort();
        ps.dedup();
    }

    if let Some(cycle) = find_cycle(indicators.keys(), &parents) {
        return Err(ModelError::CycleDetected(cycle));
    }

    let mut direct_parent_count: BTreeMap<&str, usize> = BTreeMap::new();
    for link in links
        .iter()
        .filter(|l| l.kind == LinkKind::DirectAnalytical)
    {
        let n = direct_parent_count.entry(&link.source).or_default();
        *n += 1;
        if *n > 1 {
            return Err(ModelError::MultipleDirectParents(link.source.clone()));
        }
    }

    levels.sort_by_key(|l| l.kind);
    for pair in levels.windows(2) {
        if pair[0].kind == pair[1].kind {
            return Err(ModelError::invalid(
                None,
                format!("more than one `{}` level", pair[0].kind),
            ));
        }
    }
    for level in &levels {
        let mut seen_members = BTreeSet::new();
        let mut seen_names = BTreeSet::new();
        for band in &level.bands {
            if !seen_names.insert(band.name.as_str()) {
                return Err(ModelError::invalid(
                    None,
                    format!("band `{}` declared twice in `{}` level", band.name, level.kind),
                ));
            }
            for m in &band.members {
                exists(m)?;
                if !seen_members.insert(m.as_str()) {
                    return Err(ModelError::invalid(
                        m.clone(),
                        format!("`{m}` belongs to two bands of the `{}` level", level.kind),
                    ));
                }
            }
        }
    }

    for cluster in &clusters {
        if cluster.members.is_empty() {
            return Err(ModelError::invalid(
                None,
                format!("cluster `{}` has no members", cluster.name),
            ));
        }
        for m in &cluster.members {
            exists(m)?;
        }
        if let Some(a) = &cluster.attached_to {
            exists(a)?;
        }
    }
    clusters.sort_by(|a, b| (a.kind, &a.name).cmp(&(b.kind, &b.name)));
    for pair in clusters.windows(2) {
        if pair[0].kind == pair[1].kind && pair[0].name == pair[1].name {
            return Err(ModelError::invalid(
                None,
                format!("cluster `{}` declared twice", pair[0].name),
            ));
        }
    }

    decomposition.sub_trees.sort();
    decomposition.tree_cuts.sort();
    for s in &decomposition.sub_trees {
        exists(&s.boundary)?;
    }
    for c in &decomposition.tree_cuts {
        exists(&c.node)?;
    }
    for pair in decomposition.sub_trees.windows(2) {
        if pair[0].boundary == pair[1].boundary {
            return Err(ModelError::invalid(
                pair[0].boundary.clone(),
                format!("`{}` references two sub-trees", pair[0].boundary),
            ));
        }
    }
    for pair in decomposition.tree_cuts.windows(2) {
        if pair[0].node == pair[1].node {
            return Err(ModelError::invalid(
                pair[0].node.clone(),
                format!("`{}` is cut twice", pair[0].node),
            ));
        }
    }

    for id in annotations.keys() {
        exists(id)?;
    }

    let topo = topological_order(indicators.keys(), &children, &parents);

    Ok(Model {
        name,
        indicators,
        links,
        operators,
        levels,
        clusters,
        decomposition,
        annotations,
        root,
        children,
        parents,
        topo,
    })
}

/// Depth-first search for a cycle following child -> parent edges.
fn find_cycle<'a>(
    ids: impl Iterator<Item = &'a String>,
    parents: &BTreeMap<String, Vec<String>>,
) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();
    for start in ids {
        if marks.contains_key(start.as_str()) {
            continue;
        }
        // explicit stack of (node, next parent index)
        let mut stack: Vec<(&str, usize)> = vec![(start.as_str(), 0)];
        marks.insert(start, Mark::Open);
        while let Some((node, idx)) = stack.last_mut() {
            let ps = parents.get(*node).map(Vec::as_slice).unwrap_or(&[]);
            if *idx < ps.len() {
                let next = ps[*idx].as_str();
                *idx += 1;
                match marks.get(next) {
                    Some(Mark::Open) => {
                        let pos = stack.iter().position(|(n, _)| *n == next).unwrap();
                        let mut path: Vec<String> =
                            stack[pos..].iter().map(|(n, _)| n.to_string()).collect();
                        path.push(next.to_string());
                        return Some(path);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(next, Mark::Open);
                        stack.push((next, 0));
                    }
                }
            } else {
                marks.insert(node, Mark::Done);
                stack.pop();
            }
        }
    }
    None
}

/// Kahn's algorithm, children before parents, ties broken by id.
fn topological_order<'a>(
    ids: impl Iterator<Item = &'a String>,
    children: &BTreeMap<String, Vec<String>>,
    parents: &BTreeMap<String, Vec<String>>,
) -> Vec<String> {
    let mut pending: BTreeMap<&str, usize> = BTreeMap::new();
    let mut ready = BTreeSet::new();
    for id in ids {
        let n = children.get(id).map(|c| {
            let set: BTreeSet<_> = c.iter().collect();
            set.len()
        });
        let n = n.unwrap_or(0);
        if n == 0 {
            ready.insert(id.as_str());
        } else {
            pending.insert(id, n);
        }
    }
    let mut order = Vec::new();
    while let Some(id) = ready.pop_first() {
        order.push(id.to_string());
        for p in parents.get(id).into_iter().flatten() {
            let n = pending.get_mut(p.as_str()).expect("parent pending");
            *n -= 1;
            if *n == 0 {
                pending.remove(p.as_str());
                ready.insert(p.as_str());
            }
        }
    }
    order
}
