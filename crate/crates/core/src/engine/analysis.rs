use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use super::{evaluate, Bindings, EngineError, FunctionRegistry, NodeValue, Valuation};
use crate::model::{IndicatorType, Model, ResultType, Trend};

pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhatIfEntry {
    pub id: String,
    pub base: NodeValue,
    pub new: NodeValue,
    pub abs_delta: Option<f64>,
    /// Change relative to `|base|`, in percent. Absent when base is zero.
    pub pct_delta: Option<f64>,
}

impl WhatIfEntry {
    pub fn changed(&self) -> bool {
        self.base != self.new
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhatIfReport {
    pub result_type: ResultType,
    pub root: String,
    /// Changed indicators plus the root, in evaluation order.
    pub entries: Vec<WhatIfEntry>,
    pub base: Valuation,
    pub scenario: Valuation,
}

impl WhatIfReport {
    pub fn entry(&self, id: &str) -> Option<&WhatIfEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn changed(&self) -> impl Iterator<Item = &WhatIfEntry> {
        self.entries.iter().filter(|e| e.changed())
    }
}

/// Whether `id` may be overridden in a scenario.
pub(crate) fn is_overridable(model: &Model, id: &str) -> bool {
    let Some(ind) = model.indicator(id) else {
        return false;
    };
    model.is_reference_leaf(id)
        || (matches!(ind.itype, IndicatorType::ValueDriver | IndicatorType::External)
            && model.is_leaf(id))
}

/// Evaluates the base bindings and the base with `overrides` laid over them.
pub fn what_if(
    model: &Model,
    base: &Bindings,
    overrides: &Bindings,
    registry: &FunctionRegistry,
    result_type: &ResultType,
) -> Result<WhatIfReport, EngineError> {
    for id in overrides.ids() {
        if !model.contains(id) {
            return Err(EngineError::UnknownIndicator(id.to_string()));
        }
        if !is_overridable(model, id) {
            return Err(EngineError::OverrideNotALeafDriver(id.to_string()));
        }
    }
    let before = evaluate(model, base, registry, result_type)?;
    let after = evaluate(model, &base.overlay(overrides), registry, result_type)?;
    let entries = model
        .topological_order()
        .iter()
        .filter_map(|id| {
            let (b, n) = (before.values[id], after.values[id]);
            if b == n && id != model.root() {
                return None;
            }
            let (abs_delta, pct_delta) = match (b.number(), n.number()) {
                (Some(b), Some(n)) => {
                    let d = n - b;
                    (Some(d), (b != 0.0).then(|| d / b.abs() * 100.0))
                }
                _ => (None, None),
            };
            Some(WhatIfEntry {
                id: id.clone(),
                base: b,
                new: n,
                abs_delta,
                pct_delta,
            })
        })
        .collect();
    Ok(WhatIfReport {
        result_type: result_type.clone(),
        root: model.root().to_string(),
        entries,
        base: before,
        scenario: after,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityEntry {
    pub driver: String,
    /// False for external indicators, which the company cannot steer.
    pub controllable: bool,
    pub value: f64,
    /// Change of the root per unit change of the driver.
    pub delta: f64,
    /// Percent change of the root per percent change of the driver. Absent
    /// when the driver or the root is zero.
    pub elasticity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub root: String,
    pub root_value: f64,
    pub epsilon: f64,
    /// Ranked by |elasticity|, undefined elasticities last by |delta|.
    pub entries: Vec<SensitivityEntry>,
}

impl SensitivityReport {
    pub fn entry(&self, driver: &str) -> Option<&SensitivityEntry> {
        self.entries.iter().find(|e| e.driver == driver)
    }
}

fn root_value(model: &Model, v: &Valuation) -> Result<f64, EngineError> {
    v.number(model.root())
        .ok_or_else(|| EngineError::RootNotComputable(model.root().to_string()))
}

/// Central finite differences of the root with respect to every leaf value
/// driver and external indicator that has a value.
pub fn sensitivity(
    model: &Model,
    bindings: &Bindings,
    registry: &FunctionRegistry,
    result_type: &ResultType,
    epsilon: f64,
) -> Result<SensitivityReport, EngineError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(EngineError::InvalidEpsilon(epsilon));
    }
    let base = evaluate(model, bindings, registry, result_type)?;
    let root = root_value(model, &base)?;
    let root_at = |id: &str, x: f64| -> Result<f64, EngineError> {
        let mut b = bindings.clone();
        b.set(id, result_type.clone(), x);
        root_value(model, &evaluate(model, &b, registry, result_type)?)
    };

    let mut entries = Vec::new();
    for ind in model.indicators() {
        let controllable = match ind.itype {
            IndicatorType::ValueDriver => true,
            IndicatorType::External => false,
            _ => continue,
        };
        if !is_overridable(model, &ind.id) {
            continue;
        }
        let Some(d) = base.number(&ind.id) else { continue };
        let (up, down, span) = if d == 0.0 {
            (epsilon, -epsilon, 2.0 * epsilon)
        } else {
            (d * (1.0 + epsilon), d * (1.0 - epsilon), 2.0 * epsilon * d)
        };
        let delta = (root_at(&ind.id, up)? - root_at(&ind.id, down)?) / span;
        let elasticity = (d != 0.0 && root != 0.0).then(|| delta * d / root);
        entries.push(SensitivityEntry {
            driver: ind.id.clone(),
            controllable,
            value: d,
            delta,
            elasticity,
        });
    }
    entries.sort_by(rank);
    Ok(SensitivityReport {
        root: model.root().to_string(),
        root_value: root,
        epsilon,
        entries,
    })
}

fn rank(a: &SensitivityEntry, b: &SensitivityEntry) -> Ordering {
    let by_magnitude = match (a.elasticity, b.elasticity) {
        (Some(x), Some(y)) => y.abs().total_cmp(&x.abs()),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => b.delta.abs().total_cmp(&a.delta.abs()),
    };
    by_magnitude.then_with(|| a.driver.cmp(&b.driver))
}

/// Trend of each computed indicator against its comparative value. A bound
/// value for the comparison's result type takes precedence over the one
/// recorded in the model.
pub fn derived_development(
    model: &Model,
    valuation: &Valuation,
    bindings: &Bindings,
) -> BTreeMap<String, Trend> {
    let mut out = BTreeMap::new();
    for ind in model.indicators() {
        let Some(cmp) = &ind.content.comparative else { continue };
        let Some(v) = valuation.number(&ind.id) else { continue };
        let other = bindings.get(&ind.id, &cmp.result_type).unwrap_or(cmp.value);
        let diff = v - other;
        let trend = if diff.abs() <= 1e-9 * v.abs().max(1.0) {
            Trend::Flat
        } else if diff > 0.0 {
            Trend::Up
        } else {
            Trend::Down
        };
        out.insert(ind.id.clone(), trend);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_text;

    const GP: &str = r#"model "GP" {
  kbi GP {title "Gross Profit" compare budget 350}
  fin REV {title "Revenue" compare budget 1000}
  fin COGS {title "Cost of goods sold"}
  driver P {title "Price"}
  driver V {title "Volume"}
  external X {title "Unused index"}
  fin L {title "Logical"}
  driver U {title "Logical input"}
  P -> REV [order=0]
  V -> REV [order=1]
  REV -> GP [order=0]
  COGS -> GP [order=1]
  U -> L
  op REV = *
  op GP = -
}"#;

    fn setup() -> (Model, Bindings) {
        let m = parse_text(GP).into_result().unwrap();
        let b = Bindings::new()
            .with("P", 10.0)
            .with("V", 100.0)
            .with("COGS", 600.0)
            .with("X", 3.0)
            .with("U", 1.0);
        (m, b)
    }

    fn reg() -> FunctionRegistry {
        FunctionRegistry::builtin()
    }

    #[test]
    fn volume_override() {
        let (m, b) = setup();
        let r = what_if(&m, &b, &Bindings::new().with("V", 110.0), &reg(), &ResultType::Actual).unwrap();
        let ids: Vec<_> = r.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["V", "REV", "GP"]);
        let gp = r.entry("GP").unwrap();
        assert_eq!((gp.base.number(), gp.new.number()), (Some(400.0), Some(500.0)));
        assert_eq!(gp.abs_delta, Some(100.0));
        assert_eq!(gp.pct_delta, Some(25.0));
        assert_eq!(r.entry("REV").unwrap().new.number(), Some(1100.0));
    }

    #[test]
    fn empty_override_changes_nothing() {
        let (m, b) = setup();
        let r = what_if(&m, &b, &Bindings::new(), &reg(), &ResultType::Actual).unwrap();
        assert_eq!(r.changed().count(), 0);
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.entries[0].abs_delta, Some(0.0));
    }

    #[test]
    fn override_on_logical_branch_leaves_root() {
        let (m, b) = setup();
        let r = what_if(&m, &b, &Bindings::new().with("U", 5.0), &reg(), &ResultType::Actual).unwrap();
        assert_eq!(r.entry("GP").unwrap().abs_delta, Some(0.0));
        assert!(r.entry("U").unwrap().changed());
    }

    #[test]
    fn override_on_financial_rejected() {
        let (m, b) = setup();
        let err = what_if(&m, &b, &Bindings::new().with("REV", 1.0), &reg(), &ResultType::Actual);
        assert_eq!(err.unwrap_err(), EngineError::OverrideNotALeafDriver("REV".into()));
    }

    #[test]
    fn price_elasticity() {
        let (m, b) = setup();
        let s = sensitivity(&m, &b, &reg(), &ResultType::Actual, DEFAULT_EPSILON).unwrap();
        let p = s.entry("P").unwrap();
        assert!((p.delta - 100.0).abs() < 1e-9);
        assert!((p.elasticity.unwrap() - 2.5).abs() < 1e-9);
        // P and V tie at 2.5 analytically, so only their block is fixed
        let mut ids: Vec<_> = s.entries.iter().map(|e| e.driver.as_str()).collect();
        ids[..2].sort();
        assert_eq!(ids, ["P", "V", "U", "X"]);
        let x = s.entry("X").unwrap();
        assert_eq!((x.delta, x.elasticity, x.controllable), (0.0, Some(0.0), false));
    }

    #[test]
    fn zero_driver_has_undefined_elasticity() {
        let (m, b) = setup();
        let b = b.with("P", 0.0).with("COGS", -100.0);
        let s = sensitivity(&m, &b, &reg(), &ResultType::Actual, DEFAULT_EPSILON).unwrap();
        let p = s.entry("P").unwrap();
        assert_eq!(p.elasticity, None);
        assert!((p.delta - 100.0).abs() < 1e-9);
        assert_eq!(s.entries.last().unwrap().driver, "P");
    }

    #[test]
    fn root_must_be_computable() {
        let (m, _) = setup();
        let b = Bindings::new().with("P", 1.0);
        assert_eq!(
            sensitivity(&m, &b, &reg(), &ResultType::Actual, DEFAULT_EPSILON),
            Err(EngineError::RootNotComputable("GP".into()))
        );
    }

    #[test]
    fn development_against_comparatives() {
        let (m, b) = setup();
        let v = evaluate(&m, &b, &reg(), &ResultType::Actual).unwrap();
        let d = derived_development(&m, &v, &b);
        assert_eq!(d["GP"], Trend::Up);
        assert_eq!(d["REV"], Trend::Flat);
        assert!(!d.contains_key("P"));
        let b2 = b.clone().overlay(&{
            let mut o = Bindings::new();
            o.set("GP", ResultType::Budget, 450.0);
            o
        });
        assert_eq!(derived_development(&m, &v, &b2)["GP"], Trend::Down);
    }

    #[test]
    fn development_omits_uncomputed() {
        let (m, _) = setup();
        let b = Bindings::new().with("P", 1.0);
        let v = evaluate(&m, &b, &reg(), &ResultType::Actual).unwrap();
        assert!(derived_development(&m, &v, &b).is_empty());
    }
}
