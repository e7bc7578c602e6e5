use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{LinkKind, Model, ModelError, Operator};

impl Model {
    /// Children joined to `parent` by direct or indirect links, in link order.
    pub fn analytical_children(&self, parent: &str) -> Result<&[String], ModelError> {
        if !self.contains(parent) {
            return Err(ModelError::UnknownReference(parent.to_string()));
        }
        Ok(self.children_of(parent))
    }

    /// Like [`Model::analytical_children`] for ids known to exist.
    pub(crate) fn children_of(&self, parent: &str) -> &[String] {
        self.children.get(parent).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Analytical parents of `child`, sorted by id.
    pub fn analytical_parents(&self, child: &str) -> &[String] {
        self.parents.get(child).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_leaf(&self, id: &str) -> bool {
        self.children_of(id).is_empty()
    }

    /// The operator a parent is evaluated with: the declared one, or Logical
    /// when the parent has children but no declaration.
    pub fn effective_operator(&self, parent: &str) -> Option<&Operator> {
        const LOGICAL: &Operator = &Operator::Logical;
        match self.declared_operator(parent) {
            Some(op) => Some(op),
            None if !self.is_leaf(parent) => Some(LOGICAL),
            None => None,
        }
    }

    /// Every indicator with its analytical children before itself.
    /// Identical across runs for equal models.
    pub fn topological_order(&self) -> &[String] {
        &self.topo
    }

    /// Link from `child` into `parent` of an analytical kind.
    pub fn analytical_link(&self, child: &str, parent: &str) -> Option<&super::Link> {
        self.links
            .iter()
            .find(|l| l.kind.is_analytical() && l.source == child && l.target == parent)
    }

    /// All analytical descendants of `id`, excluding `id` itself.
    pub fn descendants(&self, id: &str) -> BTreeSet<String> {
        self.reach(id, |m, n| m.children_of(n))
    }

    /// All analytical ancestors of `id`, excluding `id` itself.
    pub fn ancestors(&self, id: &str) -> BTreeSet<String> {
        self.reach(id, |m, n| m.analytical_parents(n))
    }

    fn reach<'a>(
        &'a self,
        start: &str,
        next: impl Fn(&'a Model, &str) -> &'a [String],
    ) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([start.to_string()]);
        while let Some(n) = queue.pop_front() {
            for m in next(self, &n) {
                if seen.insert(m.clone()) {
                    queue.push_back(m.clone());
                }
            }
        }
        seen
    }

    /// True if the root is reachable from `id` along analytical links.
    pub fn feeds_root(&self, id: &str) -> bool {
        id == self.root() || self.ancestors(id).contains(self.root())
    }

    /// Longest analytical path from a leaf to the root, counting nodes.
    pub fn hierarchy_depth(&self) -> usize {
        self.levels_from_root().values().copied().max().unwrap_or(1)
    }

    /// Longest-path level of every node that feeds the root (root = 1).
    pub fn levels_from_root(&self) -> BTreeMap<String, usize> {
        let mut level = BTreeMap::new();
        level.insert(self.root().to_string(), 1usize);
        // reverse topological order visits parents before children
        for id in self.topological_order().iter().rev() {
            let Some(&here) = level.get(id) else { continue };
            for c in self.children_of(id) {
                let entry = level.entry(c.clone()).or_insert(0);
                *entry = (*entry).max(here + 1);
            }
        }
        level
    }

    /// Nodes reachable from `id` along direct links only, upward.
    pub fn direct_ancestors(&self, id: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut current = id.to_string();
        while let Some(link) = self
            .links
            .iter()
            .find(|l| l.kind == LinkKind::DirectAnalytical && l.source == current)
        {
            out.push(link.target.clone());
            current = link.target.clone();
        }
        out
    }
}

/// Longest path in nodes from any leaf to the root.
pub fn hierarchy_depth(model: &Model) -> usize {
    model.hierarchy_depth()
}

/// Children of `parent` ordered by link order.
pub fn analytical_children<'m>(model: &'m Model, parent: &str) -> Result<&'m [String], ModelError> {
    model.analytical_children(parent)
}

#[cfg(test)]
mod tests {
    use crate::model::{
        build_model, Indicator, IndicatorType as T, Link, LinkKind, ModelParts, Operator,
        OperatorSpec,
    };

    fn gp_tree() -> crate::model::Model {
        build_model(ModelParts {
            name: "GP".into(),
            indicators: vec![
                Indicator::new("GP", T::KeyBusiness),
                Indicator::new("REV", T::Financial),
                Indicator::new("COGS", T::Financial),
                Indicator::new("P", T::ValueDriver),
                Indicator::new("V", T::ValueDriver),
            ],
            links: vec![
                Link::direct("REV", "GP", 0),
                Link::direct("COGS", "GP", 1),
                Link::direct("P", "REV", 0),
                Link::direct("V", "REV", 1),
            ],
            operators: vec![
                OperatorSpec::new("GP", Operator::Subtract),
                OperatorSpec::new("REV", Operator::Multiply),
            ],
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn children_in_declared_order() {
        let m = gp_tree();
        assert_eq!(m.analytical_children("GP").unwrap(), ["REV", "COGS"]);
        assert!(m.analytical_children("P").unwrap().is_empty());
        assert!(m.analytical_children("nope").is_err());
    }

    #[test]
    fn indirect_children_are_listed() {
        let mut parts = gp_tree().to_parts();
        parts.indicators.push(Indicator::new("X", T::ValueDriver));
        parts.links.push(Link::direct("X", "COGS", 0));
        parts
            .links
            .push(Link::new("P", "COGS", LinkKind::IndirectAnalytical, 1));
        parts
            .links
            .push(Link::new("V", "COGS", LinkKind::LogicalAllocation, 0));
        let m = build_model(parts).unwrap();
        assert_eq!(m.analytical_children("COGS").unwrap(), ["X", "P"]);
    }

    #[test]
    fn depth_counts_nodes() {
        assert_eq!(gp_tree().hierarchy_depth(), 3);
        let root_only = build_model(ModelParts {
            name: "R".into(),
            indicators: vec![Indicator::new("GP", T::KeyBusiness)],
            ..Default::default()
        })
        .unwrap();
        assert_eq!(root_only.hierarchy_depth(), 1);
    }

    #[test]
    fn default_operator_is_logical() {
        let mut parts = gp_tree().to_parts();
        parts.operators.retain(|o| o.parent != "REV");
        let m = build_model(parts).unwrap();
        assert_eq!(m.effective_operator("REV"), Some(&Operator::Logical));
        assert_eq!(m.effective_operator("P"), None);
    }

    #[test]
    fn reachability() {
        let m = gp_tree();
        assert_eq!(m.descendants("GP").len(), 4);
        assert!(m.ancestors("P").contains("GP"));
        assert!(m.feeds_root("V"));
        assert_eq!(m.direct_ancestors("P"), ["REV", "GP"]);
    }
}
