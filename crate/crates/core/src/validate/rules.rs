use std::collections::BTreeSet;

use crate::diagnostic::Severity;
use crate::model::{
    ClusterKind, FunctionRole, IndicatorType, LinkKind, Model, Operator, Unit,
};

type Finding = (Vec<String>, String);

pub struct Rule {
    pub code: &'static str,
    pub severity: Severity,
    pub summary: &'static str,
    pub check: fn(&Model) -> Vec<Finding>,
}

pub const RULES: &[Rule] = &[
    Rule {
        code: "V001",
        severity: Severity::Error,
        summary: "operator has too few analytical children",
        check: operator_arity,
    },
    Rule {
        code: "V002",
        severity: Severity::Error,
        summary: "gateway lacks exactly one default guard or has an unusable selector",
        check: gateway_guards,
    },
    Rule {
        code: "V003",
        severity: Severity::Error,
        summary: "tree-cut indicator still has analytical children",
        check: cut_with_children,
    },
    Rule {
        code: "V004",
        severity: Severity::Error,
        summary: "logical allocation into an arithmetic parent without analytical children",
        check: allocation_into_uncomputable,
    },
    Rule {
        code: "V005",
        severity: Severity::Warning,
        summary: "hierarchy deeper than four levels",
        check: too_deep,
    },
    Rule {
        code: "V006",
        severity: Severity::Warning,
        summary: "large model without levels or clusters",
        check: unstructured,
    },
    Rule {
        code: "V007",
        severity: Severity::Warning,
        summary: "key value role on an indicator that is not a value driver",
        check: key_role_on_non_driver,
    },
    Rule {
        code: "V008",
        severity: Severity::Warning,
        summary: "cluster member without any analytical link",
        check: grouping_without_links,
    },
    Rule {
        code: "V009",
        severity: Severity::Warning,
        summary: "inconsistent metric units",
        check: unit_consistency,
    },
    Rule {
        code: "V010",
        severity: Severity::Warning,
        summary: "computed parent without a declared operator",
        check: missing_operator,
    },
    Rule {
        code: "V011",
        severity: Severity::Warning,
        summary: "subsidiary result placed in the direct hierarchy",
        check: subsidiary_on_spine,
    },
    Rule {
        code: "V012",
        severity: Severity::Error,
        summary: "value driver group not attached to an indicator in the tree",
        check: group_attachment,
    },
    Rule {
        code: "V013",
        severity: Severity::Warning,
        summary: "external indicator marked as key value indicator",
        check: external_key_role,
    },
];

fn parents(model: &Model) -> impl Iterator<Item = (&str, &Operator)> {
    model.operators()
}

fn operator_arity(model: &Model) -> Vec<Finding> {
    let mut out = Vec::new();
    for (parent, op) in parents(model) {
        let children = model.children_of(parent);
        let (count, needed, what) = match op {
            Operator::Add | Operator::Subtract | Operator::Multiply | Operator::Divide => {
                (children.len(), 2, "analytical children")
            }
            Operator::Function { .. } => (children.len(), 1, "analytical children"),
            Operator::Gateway { .. } => {
                let guarded = children
                    .iter()
                    .filter(|c| {
                        model
                            .analytical_link(c, parent)
                            .is_some_and(|l| l.guard.is_some())
                    })
                    .count();
                (guarded, 2, "guarded children")
            }
            Operator::Logical => continue,
        };
        if count < needed {
            out.push((
                vec![parent.to_string()],
                format!(
                    "operator `{}` on `{parent}` needs at least {needed} {what}, has {count}",
                    op.symbol()
                ),
            ));
        }
    }
    out
}

fn gateway_guards(model: &Model) -> Vec<Finding> {
    let mut out = Vec::new();
    for (parent, op) in parents(model) {
        let Operator::Gateway { selector } = op else { continue };
        let defaults = model
            .links()
            .iter()
            .filter(|l| {
                l.kind.is_analytical()
                    && l.target == parent
                    && l.guard.is_some_and(|g| g.is_default())
            })
            .count();
        if defaults != 1 {
            out.push((
                vec![parent.to_string()],
                format!("gateway `{parent}` has {defaults} default guards, needs exactly one"),
            ));
        }
        if selector == parent || model.descendants(parent).contains(selector) {
            out.push((
                vec![parent.to_string(), selector.clone()],
                format!(
                    "selector `{selector}` of gateway `{parent}` depends on the gateway's own branch"
                ),
            ));
        }
    }
    out
}

fn cut_with_children(model: &Model) -> Vec<Finding> {
    model
        .decomposition()
        .tree_cuts
        .iter()
        .filter(|c| !model.is_leaf(&c.node))
        .map(|c| {
            (
                vec![c.node.clone()],
                format!(
                    "tree cut `{}` still has {} analytical children",
                    c.node,
                    model.children_of(&c.node).len()
                ),
            )
        })
        .collect()
}

fn allocation_into_uncomputable(model: &Model) -> Vec<Finding> {
    let mut out = Vec::new();
    for link in model
        .links()
        .iter()
        .filter(|l| l.kind == LinkKind::LogicalAllocation)
    {
        let Some(op) = model.declared_operator(&link.target) else { continue };
        let arithmetic = op.is_arithmetic() || matches!(op, Operator::Function { .. });
        if arithmetic && model.is_leaf(&link.target) {
            out.push((
                vec![link.target.clone(), link.source.clone()],
                format!(
                    "`{}` declares operator `{}` but is only fed by logical allocation from `{}`",
                    link.target,
                    op.symbol(),
                    link.source
                ),
            ));
        }
    }
    out
}

fn too_deep(model: &Model) -> Vec<Finding> {
    let depth = model.hierarchy_depth();
    if depth <= 4 {
        return Vec::new();
    }
    let levels = model.levels_from_root();
    let deepest: Vec<String> = levels
        .iter()
        .filter(|(_, l)| **l == depth)
        .map(|(id, _)| id.clone())
        .collect();
    vec![(
        deepest,
        format!("hierarchy has {depth} levels; more than four makes the tree hard to read"),
    )]
}

fn unstructured(model: &Model) -> Vec<Finding> {
    if model.len() > 10 && model.levels().is_empty() && model.clusters().is_empty() {
        vec![(
            vec![model.root().to_string()],
            format!(
                "{} indicators but no levels or clusters organise them",
                model.len()
            ),
        )]
    } else {
        Vec::new()
    }
}

fn key_role_on_non_driver(model: &Model) -> Vec<Finding> {
    model
        .indicators()
        .filter(|i| {
            i.role == FunctionRole::KeyValueIndicator && i.itype != IndicatorType::ValueDriver
        })
        .map(|i| {
            (
                vec![i.id.clone()],
                format!("`{}` is a {} indicator marked as key value indicator", i.id, i.itype),
            )
        })
        .collect()
}

fn grouping_without_links(model: &Model) -> Vec<Finding> {
    let linked: BTreeSet<&str> = model
        .links()
        .iter()
        .filter(|l| l.kind.is_analytical())
        .flat_map(|l| [l.source.as_str(), l.target.as_str()])
        .collect();
    let mut out = Vec::new();
    for cluster in model.clusters() {
        for m in &cluster.members {
            if !linked.contains(m.as_str()) {
                out.push((
                    vec![m.clone()],
                    format!(
                        "`{m}` in cluster `{}` has no analytical link",
                        cluster.name
                    ),
                ));
            }
        }
    }
    out
}

fn unit_of<'m>(model: &'m Model, id: &str) -> Option<&'m Unit> {
    model.indicator(id).and_then(|i| i.content.unit.as_ref())
}

fn unit_consistency(model: &Model) -> Vec<Finding> {
    let mut out = Vec::new();
    for (parent, op) in parents(model) {
        let children = model.children_of(parent);
        if children.is_empty() {
            continue;
        }
        let parent_unit = unit_of(model, parent);
        match op {
            Operator::Add | Operator::Subtract => {
                let with_units: Vec<(&String, &Unit)> = children
                    .iter()
                    .filter_map(|c| unit_of(model, c).map(|u| (c, u)))
                    .collect();
                let Some((_, first)) = with_units.first() else { continue };
                if let Some((other, u)) = with_units.iter().find(|(_, u)| !u.same_dimension(first)) {
                    out.push((
                        vec![parent.to_string(), with_units[0].0.clone(), (*other).clone()],
                        format!(
                            "`{parent}` combines `{}` [{}] with `{other}` [{u}]",
                            with_units[0].0, first
                        ),
                    ));
                } else if let Some(pu) = parent_unit {
                    if !pu.same_dimension(first) {
                        out.push((
                            vec![parent.to_string()],
                            format!("`{parent}` is recorded in [{pu}] but its children are in [{first}]"),
                        ));
                    }
                }
            }
            Operator::Multiply | Operator::Divide => {
                let Some(pu) = parent_unit else { continue };
                let units: Option<Vec<&Unit>> = children.iter().map(|c| unit_of(model, c)).collect();
                let Some(units) = units else { continue };
                let derived = units[1..].iter().fold(units[0].clone(), |acc, u| {
                    if matches!(op, Operator::Multiply) {
                        acc.mul(u)
                    } else {
                        acc.div(u)
                    }
                });
                if !pu.same_dimension(&derived) {
                    out.push((
                        vec![parent.to_string()],
                        format!("`{parent}` is recorded in [{pu}] but its operands give [{derived}]"),
                    ));
                }
            }
            _ => {}
        }
    }
    out
}

fn missing_operator(model: &Model) -> Vec<Finding> {
    model
        .indicators()
        .filter(|i| !model.is_leaf(&i.id) && model.declared_operator(&i.id).is_none())
        .map(|i| {
            (
                vec![i.id.clone()],
                format!("`{}` has children but no operator; it defaults to logical", i.id),
            )
        })
        .collect()
}

fn subsidiary_on_spine(model: &Model) -> Vec<Finding> {
    let mut out = Vec::new();
    for ind in model
        .indicators()
        .filter(|i| i.itype == IndicatorType::SubsidiaryResult)
    {
        let on_spine = model
            .direct_ancestors(&ind.id)
            .last()
            .is_some_and(|top| top == model.root());
        let has_direct_children = model
            .links()
            .iter()
            .any(|l| l.kind == LinkKind::DirectAnalytical && l.target == ind.id);
        if on_spine {
            out.push((
                vec![ind.id.clone()],
                format!(
                    "subsidiary result `{}` sits on the direct path to the root; attach it with an indirect link",
                    ind.id
                ),
            ));
        } else if has_direct_children {
            out.push((
                vec![ind.id.clone()],
                format!("subsidiary result `{}` has direct analytical children", ind.id),
            ));
        }
    }
    out
}

fn group_attachment(model: &Model) -> Vec<Finding> {
    let mut out = Vec::new();
    for cluster in model
        .clusters()
        .iter()
        .filter(|c| c.kind == ClusterKind::ValueDriverGroup)
    {
        match &cluster.attached_to {
            None => out.push((
                cluster.members.iter().cloned().collect(),
                format!("value driver group `{}` is not attached to an indicator", cluster.name),
            )),
            Some(a) if !model.feeds_root(a) => out.push((
                vec![a.clone()],
                format!(
                    "value driver group `{}` is attached to `{a}`, which is not part of the tree",
                    cluster.name
                ),
            )),
            Some(_) => {}
        }
    }
    out
}

fn external_key_role(model: &Model) -> Vec<Finding> {
    model
        .indicators()
        .filter(|i| i.itype == IndicatorType::External && i.role == FunctionRole::KeyValueIndicator)
        .map(|i| {
            (
                vec![i.id.clone()],
                format!("external indicator `{}` cannot be steered but is marked key", i.id),
            )
        })
        .collect()
}
