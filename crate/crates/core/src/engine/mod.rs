//! Bottom-up evaluation of a model under driver bindings.
//!
//! Values flow from children to parents over direct and indirect links.
//! Logical allocations carry no numbers. A node that cannot be computed is
//! reported as [`NodeValue::NotComputed`] and poisons its ancestors, while
//! arithmetic faults such as division by zero abort the whole evaluation.

mod analysis;
mod functions;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

pub use analysis::{
    derived_development, sensitivity, what_if, SensitivityEntry, SensitivityReport, WhatIfEntry,
    WhatIfReport, DEFAULT_EPSILON,
};
pub use functions::{FunctionImpl, FunctionRegistry};

use crate::model::{GatewayGuard, Model, Operator, ResultType};

/// Values supplied from outside the model, keyed by indicator and result type.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    values: BTreeMap<String, BTreeMap<ResultType, f64>>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, id: impl Into<String>, result_type: ResultType, value: f64) -> &mut Self {
        self.values
            .entry(id.into())
            .or_default()
            .insert(result_type, value);
        self
    }

    /// Builder form of [`Bindings::set`] for actual figures.
    pub fn with(mut self, id: impl Into<String>, value: f64) -> Self {
        self.set(id, ResultType::Actual, value);
        self
    }

    pub fn get(&self, id: &str, result_type: &ResultType) -> Option<f64> {
        self.values.get(id).and_then(|m| m.get(result_type)).copied()
    }

    pub fn remove(&mut self, id: &str, result_type: &ResultType) -> Option<f64> {
        let m = self.values.get_mut(id)?;
        let v = m.remove(result_type);
        if m.is_empty() {
            self.values.remove(id);
        }
        v
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ResultType, f64)> {
        self.values
            .iter()
            .flat_map(|(id, m)| m.iter().map(move |(rt, v)| (id.as_str(), rt, *v)))
    }

    /// `other`'s entries replace ours.
    pub fn overlay(&self, other: &Bindings) -> Bindings {
        let mut out = self.clone();
        for (id, rt, v) in other.iter() {
            out.set(id, rt.clone(), v);
        }
        out
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        let mut b = Bindings::new();
        for (id, v) in iter {
            b.set(id, ResultType::Actual, v);
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NotComputedReason {
    /// Logical parent without a bound value.
    LogicalOperator,
    /// Leaf without a bound or recorded value.
    MissingBinding,
    /// Tree cut or sub-tree boundary without a value.
    CutWithoutValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum NodeValue {
    Number(f64),
    NotComputed { not_computed: NotComputedReason },
}

impl NodeValue {
    pub fn number(self) -> Option<f64> {
        match self {
            NodeValue::Number(v) => Some(v),
            NodeValue::NotComputed { .. } => None,
        }
    }

    fn missing(reason: NotComputedReason) -> Self {
        NodeValue::NotComputed {
            not_computed: reason,
        }
    }
}

/// Result of one evaluation. Every indicator of the model has exactly one entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Valuation {
    pub result_type: ResultType,
    pub values: BTreeMap<String, NodeValue>,
    /// Child picked by each evaluated gateway.
    pub gateway_choices: BTreeMap<String, String>,
}

impl Valuation {
    pub fn get(&self, id: &str) -> Option<NodeValue> {
        self.values.get(id).copied()
    }

    pub fn number(&self, id: &str) -> Option<f64> {
        self.get(id).and_then(NodeValue::number)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("`{0}` is not an indicator of the model")]
    UnknownIndicator(String),
    #[error("value bound to `{0}` is not finite")]
    NonFiniteBinding(String),
    #[error("division by zero while computing `{0}`")]
    DivisionByZero(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{name}` failed on `{parent}`: {message}")]
    FunctionFailed {
        parent: String,
        name: String,
        message: String,
    },
    #[error("no guard of gateway `{0}` matches its selector")]
    GuardUnresolvable(String),
    #[error("`{0}` is computed by its operator and cannot also be bound")]
    ConflictingBinding(String),
    #[error("`{0}` is not a leaf value driver, external indicator or cut")]
    OverrideNotALeafDriver(String),
    #[error("root `{0}` cannot be computed under these bindings")]
    RootNotComputable(String),
    #[error("step size {0} is outside (0, 1)")]
    InvalidEpsilon(f64),
}

impl EngineError {
    /// Stable snake_case name of the variant for machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            EngineError::UnknownIndicator(_) => "unknown_indicator",
            EngineError::NonFiniteBinding(_) => "non_finite_binding",
            EngineError::DivisionByZero(_) => "division_by_zero",
            EngineError::UnknownFunction(_) => "unknown_function",
            EngineError::FunctionFailed { .. } => "function_failed",
            EngineError::GuardUnresolvable(_) => "guard_unresolvable",
            EngineError::ConflictingBinding(_) => "conflicting_binding",
            EngineError::OverrideNotALeafDriver(_) => "override_not_a_leaf_driver",
            EngineError::RootNotComputable(_) => "root_not_computable",
            EngineError::InvalidEpsilon(_) => "invalid_epsilon",
        }
    }
}

/// Explicit binding, else the value recorded in the model.
fn supplied(model: &Model, bindings: &Bindings, id: &str, rt: &ResultType) -> Option<f64> {
    bindings.get(id, rt).or_else(|| {
        model
            .indicator(id)
            .and_then(|i| i.content.results.get(rt))
            .copied()
    })
}

/// Evaluation order: children before parents, and gateway selectors before
/// their gateways.
fn schedule(model: &Model) -> Result<Vec<String>, EngineError> {
    let mut deps: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for ind in model.indicators() {
        let entry = deps.entry(ind.id.as_str()).or_default();
        if model.is_reference_leaf(&ind.id) {
            continue;
        }
        entry.extend(model.children_of(&ind.id).iter().map(String::as_str));
        if let Some(Operator::Gateway { selector }) = model.declared_operator(&ind.id) {
            entry.insert(selector.as_str());
        }
    }
    let mut dependents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut pending: BTreeMap<&str, usize> = BTreeMap::new();
    for (node, ds) in &deps {
        pending.insert(node, ds.len());
        for d in ds {
            dependents.entry(d).or_default().push(node);
        }
    }
    let mut ready: BTreeSet<&str> = pending
        .iter()
        .filter(|(_, n)| **n == 0)
        .map(|(id, _)| *id)
        .collect();
    let mut order = Vec::with_capacity(deps.len());
    while let Some(next) = ready.pop_first() {
        order.push(next.to_string());
        for dep in dependents.get(next).into_iter().flatten() {
            let n = pending.get_mut(dep).expect("known node");
            *n -= 1;
            if *n == 0 {
                ready.insert(dep);
            }
        }
    }
    if order.len() < deps.len() {
        let stuck = pending
            .iter()
            .find(|(id, n)| {
                **n > 0 && matches!(model.declared_operator(id), Some(Operator::Gateway { .. }))
            })
            .map(|(id, _)| id.to_string())
            .unwrap_or_default();
        return Err(EngineError::GuardUnresolvable(stuck));
    }
    Ok(order)
}

/// Evaluates every indicator for `result_type`.
pub fn evaluate(
    model: &Model,
    bindings: &Bindings,
    registry: &FunctionRegistry,
    result_type: &ResultType,
) -> Result<Valuation, EngineError> {
    for (id, _, v) in bindings.iter() {
        if !model.contains(id) {
            return Err(EngineError::UnknownIndicator(id.to_string()));
        }
        if !v.is_finite() {
            return Err(EngineError::NonFiniteBinding(id.to_string()));
        }
    }
    let mut values: BTreeMap<String, NodeValue> = BTreeMap::new();
    let mut gateway_choices = BTreeMap::new();
    for id in schedule(model)? {
        let value = evaluate_node(
            model,
            bindings,
            registry,
            result_type,
            &id,
            &values,
            &mut gateway_choices,
        )?;
        values.insert(id, value);
    }
    Ok(Valuation {
        result_type: result_type.clone(),
        values,
        gateway_choices,
    })
}

fn evaluate_node(
    model: &Model,
    bindings: &Bindings,
    registry: &FunctionRegistry,
    rt: &ResultType,
    id: &str,
    values: &BTreeMap<String, NodeValue>,
    choices: &mut BTreeMap<String, String>,
) -> Result<NodeValue, EngineError> {
    use NotComputedReason::*;

    let given = supplied(model, bindings, id, rt);
    if model.is_reference_leaf(id) {
        return Ok(given.map_or(NodeValue::missing(CutWithoutValue), NodeValue::Number));
    }
    let children = model.children_of(id);
    let Some(op) = model.effective_operator(id).filter(|_| !children.is_empty()) else {
        return Ok(given.map_or(NodeValue::missing(MissingBinding), NodeValue::Number));
    };
    if let Operator::Logical = op {
        return Ok(given.map_or(NodeValue::missing(LogicalOperator), NodeValue::Number));
    }
    if bindings.get(id, rt).is_some() {
        return Err(EngineError::ConflictingBinding(id.to_string()));
    }
    let value_of = |c: &str| values[c];

    if let Operator::Gateway { selector } = op {
        let s = match value_of(selector) {
            NodeValue::Number(s) => s,
            missing => return Ok(missing),
        };
        let mut fallback = None;
        let mut chosen = None;
        for c in children {
            match model.analytical_link(c, id).and_then(|l| l.guard) {
                Some(GatewayGuard::When {
                    comparator,
                    threshold,
                }) if comparator.holds(s, threshold) => {
                    chosen = Some(c);
                    break;
                }
                Some(GatewayGuard::Default) if fallback.is_none() => fallback = Some(c),
                _ => {}
            }
        }
        let c = chosen
            .or(fallback)
            .ok_or_else(|| EngineError::GuardUnresolvable(id.to_string()))?;
        choices.insert(id.to_string(), c.clone());
        return Ok(value_of(c));
    }

    let mut xs = Vec::with_capacity(children.len());
    for c in children {
        match value_of(c) {
            NodeValue::Number(v) => xs.push(v),
            missing => return Ok(missing),
        }
    }
    let v = match op {
        Operator::Add => xs.iter().sum(),
        Operator::Multiply => xs.iter().product(),
        Operator::Subtract => xs[1..].iter().fold(xs[0], |acc, x| acc - x),
        Operator::Divide => {
            if xs[1..].contains(&0.0) {
                return Err(EngineError::DivisionByZero(id.to_string()));
            }
            xs[1..].iter().fold(xs[0], |acc, x| acc / x)
        }
        Operator::Function { name, params } => {
            let f = registry
                .get(name)
                .ok_or_else(|| EngineError::UnknownFunction(name.clone()))?;
            f(&xs, params).map_err(|message| EngineError::FunctionFailed {
                parent: id.to_string(),
                name: name.clone(),
                message,
            })?
        }
        Operator::Logical | Operator::Gateway { .. } => unreachable!("handled above"),
    };
    Ok(NodeValue::Number(v))
}
