//! JSON interchange format, version 1.0.
//!
//! The document schema is published as `schema/vdmn-1.0.json`. Keys are
//! emitted in a fixed order and maps are sorted, so emission is
//! byte-for-byte deterministic.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{
    build_model, Band, ClusterKind, ClusterSpec, ComparativeValue, Comparator, Decomposition,
    Development, FunctionRole, GatewayGuard, Indicator, IndicatorContent, IndicatorType,
    LevelKind, LevelSpec, Link, LinkKind, Model, ModelError, ModelParts, Operator, OperatorSpec,
    ResultType, SubTreeRef, TreeCut, Trend, Unit, ValueType,
};

pub const VDMN_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterchangeError {
    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl InterchangeError {
    pub fn code(&self) -> &'static str {
        match self {
            InterchangeError::SchemaViolation { .. } => "S001",
            InterchangeError::Model(e) => e.code(),
        }
    }

    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        InterchangeError::SchemaViolation {
            path: path.into(),
            message: message.into(),
        }
    }
}

macro_rules! wire_enum {
    ($name:ident for $model:ident { $($variant:ident = $text:literal => $mv:ident),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, Serialize, Deserialize)]
        enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl From<$name> for $model {
            fn from(w: $name) -> $model {
                match w {
                    $($name::$variant => $model::$mv),+
                }
            }
        }

        impl From<$model> for $name {
            fn from(m: $model) -> $name {
                match m {
                    $($model::$mv => $name::$variant),+
                }
            }
        }
    };
}

wire_enum!(TypeDoc for IndicatorType {
    KeyBusiness = "key_business" => KeyBusiness,
    Financial = "financial" => Financial,
    ValueDriver = "value_driver" => ValueDriver,
    External = "external" => External,
    Subsidiary = "subsidiary_result" => SubsidiaryResult,
});

wire_enum!(RoleDoc for FunctionRole {
    Key = "key_value" => KeyValueIndicator,
    Regular = "regular" => Regular,
    Input = "input" => Input,
    Calculation = "calculation" => Calculation,
});

wire_enum!(ValueTypeDoc for ValueType {
    Quantitative = "quantitative" => Quantitative,
    Qualitative = "qualitative" => Qualitative,
    Leading = "leading" => Leading,
    Lagging = "lagging" => Lagging,
});

wire_enum!(LinkKindDoc for LinkKind {
    Direct = "direct" => DirectAnalytical,
    Indirect = "indirect" => IndirectAnalytical,
    Allocation = "allocation" => LogicalAllocation,
});

wire_enum!(ComparatorDoc for Comparator {
    Lt = "lt" => Lt,
    Le = "le" => Le,
    Eq = "eq" => Eq,
    Ge = "ge" => Ge,
    Gt = "gt" => Gt,
    Ne = "ne" => Ne,
});

wire_enum!(LevelKindDoc for LevelKind {
    IndicatorType = "indicator_type" => IndicatorType,
    Branch = "branch" => Branch,
    Time = "time_horizon" => TimeHorizon,
});

wire_enum!(ClusterKindDoc for ClusterKind {
    Group = "value_driver_group" => ValueDriverGroup,
    Business = "business_model" => BusinessModel,
    Functions = "functions" => Functions,
    Calculation = "calculation" => Calculation,
});

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
enum OpDoc {
    #[serde(rename = "L")]
    Logical,
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Subtract,
    #[serde(rename = "*")]
    Multiply,
    #[serde(rename = ":")]
    Divide,
    #[serde(rename = "fx")]
    Function,
    #[serde(rename = "X")]
    Gateway,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DevelopmentDoc {
    Up,
    Flat,
    Down,
    Derived,
}

/// Units travel as their canonical text form.
#[derive(Debug, Clone)]
struct UnitDoc(Unit);

impl Serialize for UnitDoc {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for UnitDoc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse::<Unit>()
            .map(UnitDoc)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    vdmn_version: String,
    name: String,
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    links: Vec<LinkDoc>,
    #[serde(default)]
    operators: Vec<OperatorDoc>,
    #[serde(default)]
    levels: Vec<LevelDoc>,
    #[serde(default)]
    clusters: Vec<ClusterDoc>,
    #[serde(default)]
    decomposition: DecompositionDoc,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    annotations: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    #[serde(rename = "type")]
    itype: TypeDoc,
    #[serde(default = "regular")]
    role: RoleDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value_type: Option<ValueTypeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit: Option<UnitDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    results: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    comparative: Option<ComparativeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    development: Option<DevelopmentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    responsibility: Option<String>,
}

fn regular() -> RoleDoc {
    RoleDoc::Regular
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComparativeDoc {
    result_type: String,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    source: String,
    target: String,
    kind: LinkKindDoc,
    order: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    guard: Option<GuardDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum GuardDoc {
    When {
        comparator: ComparatorDoc,
        threshold: f64,
    },
    Default,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorDoc {
    parent: String,
    op: OpDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    function: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selector: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelDoc {
    kind: LevelKindDoc,
    bands: Vec<BandDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandDoc {
    name: String,
    members: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterDoc {
    name: String,
    kind: ClusterKindDoc,
    members: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attached_to: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecompositionDoc {
    #[serde(default)]
    sub_trees: Vec<SubTreeDoc>,
    #[serde(default)]
    tree_cuts: Vec<TreeCutDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubTreeDoc {
    boundary: String,
    model: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeCutDoc {
    node: String,
    label: String,
}

fn development_to_doc(d: Development) -> DevelopmentDoc {
    match d {
        Development::Fixed(Trend::Up) => DevelopmentDoc::Up,
        Development::Fixed(Trend::Flat) => DevelopmentDoc::Flat,
        Development::Fixed(Trend::Down) => DevelopmentDoc::Down,
        Development::Derived => DevelopmentDoc::Derived,
    }
}

fn development_from_doc(d: DevelopmentDoc) -> Development {
    match d {
        DevelopmentDoc::Up => Development::Fixed(Trend::Up),
        DevelopmentDoc::Flat => Development::Fixed(Trend::Flat),
        DevelopmentDoc::Down => Development::Fixed(Trend::Down),
        DevelopmentDoc::Derived => Development::Derived,
    }
}

/// Reads a JSON interchange document into a model.
pub fn parse_interchange(document: &str) -> Result<Model, InterchangeError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        InterchangeError::schema(path, e.into_inner().to_string())
    })?;
    if doc.vdmn_version != VDMN_VERSION {
        return Err(InterchangeError::schema(
            "vdmn_version",
            format!("unsupported version `{}`", doc.vdmn_version),
        ));
    }
    let parts = parts_from_doc(doc)?;
    Ok(build_model(parts)?)
}

fn parts_from_doc(doc: Document) -> Result<ModelParts, InterchangeError> {
    let indicators = doc
        .nodes
        .into_iter()
        .map(|n| Indicator {
            content: IndicatorContent {
                title: n.title.unwrap_or_else(|| n.id.clone()),
                value_type: n.value_type.map(Into::into),
                unit: n.unit.map(|u| u.0),
                data_attributes: n.attributes,
                results: n
                    .results
                    .into_iter()
                    .map(|(k, v)| (ResultType::from_name(&k), v))
                    .collect(),
                comparative: n.comparative.map(|c| ComparativeValue {
                    result_type: ResultType::from_name(&c.result_type),
                    value: c.value,
                }),
                development: n.development.map(development_from_doc),
                responsibility: n.responsibility,
            },
            id: n.id,
            itype: n.itype.into(),
            role: n.role.into(),
        })
        .collect();

    let links = doc
        .links
        .into_iter()
        .map(|l| Link {
            source: l.source,
            target: l.target,
            kind: l.kind.into(),
            order: l.order,
            guard: l.guard.map(|g| match g {
                GuardDoc::Default => GatewayGuard::Default,
                GuardDoc::When {
                    comparator,
                    threshold,
                } => GatewayGuard::When {
                    comparator: comparator.into(),
                    threshold,
                },
            }),
        })
        .collect();

    let mut operators = Vec::new();
    for (i, o) in doc.operators.into_iter().enumerate() {
        let at = |field: &str| format!("operators[{i}].{field}");
        let op = match o.op {
            OpDoc::Function => {
                let name = o
                    .function
                    .ok_or_else(|| InterchangeError::schema(at("function"), "required for fx"))?;
                if o.selector.is_some() {
                    return Err(InterchangeError::schema(at("selector"), "only allowed for X"));
                }
                Operator::Function {
                    name,
                    params: o.params.unwrap_or_default(),
                }
            }
            OpDoc::Gateway => {
                let selector = o
                    .selector
                    .ok_or_else(|| InterchangeError::schema(at("selector"), "required for X"))?;
                if o.function.is_some() || o.params.is_some() {
                    return Err(InterchangeError::schema(at("function"), "only allowed for fx"));
                }
                Operator::Gateway { selector }
            }
            simple => {
                if o.function.is_some() || o.params.is_some() {
                    return Err(InterchangeError::schema(at("function"), "only allowed for fx"));
                }
                if o.selector.is_some() {
                    return Err(InterchangeError::schema(at("selector"), "only allowed for X"));
                }
                match simple {
                    OpDoc::Logical => Operator::Logical,
                    OpDoc::Add => Operator::Add,
                    OpDoc::Subtract => Operator::Subtract,
                    OpDoc::Multiply => Operator::Multiply,
                    _ => Operator::Divide,
                }
            }
        };
        operators.push(OperatorSpec {
            parent: o.parent,
            op,
        });
    }

    let levels = doc
        .levels
        .into_iter()
        .map(|l| LevelSpec {
            kind: l.kind.into(),
            bands: l
                .bands
                .into_iter()
                .map(|b| Band {
                    name: b.name,
                    members: b.members.into_iter().collect(),
                })
                .collect(),
        })
        .collect();

    let clusters = doc
        .clusters
        .into_iter()
        .map(|c| ClusterSpec {
            name: c.name,
            kind: c.kind.into(),
            members: c.members.into_iter().collect(),
            attached_to: c.attached_to,
        })
        .collect();

    Ok(ModelParts {
        name: doc.name,
        indicators,
        links,
        operators,
        levels,
        clusters,
        decomposition: Decomposition {
            sub_trees: doc
                .decomposition
                .sub_trees
                .into_iter()
                .map(|s| SubTreeRef {
                    boundary: s.boundary,
                    model: s.model,
                })
                .collect(),
            tree_cuts: doc
                .decomposition
                .tree_cuts
                .into_iter()
                .map(|c| TreeCut {
                    node: c.node,
                    label: c.label,
                })
                .collect(),
        },
        annotations: doc.annotations,
    })
}

fn doc_from_model(model: &Model) -> Document {
    let nodes = crate::dsl::canonical_indicators(model)
        .into_iter()
        .map(|ind| {
            let c = &ind.content;
            NodeDoc {
                id: ind.id.clone(),
                itype: ind.itype.into(),
                role: ind.role.into(),
                title: Some(c.title.clone()),
                value_type: c.value_type.map(Into::into),
                unit: c.unit.clone().map(UnitDoc),
                attributes: c.data_attributes.clone(),
                results: c
                    .results
                    .iter()
                    .map(|(k, v)| (k.name().to_string(), *v))
                    .collect(),
                comparative: c.comparative.as_ref().map(|cmp| ComparativeDoc {
                    result_type: cmp.result_type.name().to_string(),
                    value: cmp.value,
                }),
                development: c.development.map(development_to_doc),
                responsibility: c.responsibility.clone(),
            }
        })
        .collect();
    let links = model
        .links()
        .iter()
        .map(|l| LinkDoc {
            source: l.source.clone(),
            target: l.target.clone(),
            kind: l.kind.into(),
            order: l.order,
            guard: l.guard.map(|g| match g {
                GatewayGuard::Default => GuardDoc::Default,
                GatewayGuard::When {
                    comparator,
                    threshold,
                } => GuardDoc::When {
                    comparator: comparator.into(),
                    threshold,
                },
            }),
        })
        .collect();
    let operators = model
        .operators()
        .map(|(parent, op)| {
            let (opdoc, function, params, selector) = match op {
                Operator::Logical => (OpDoc::Logical, None, None, None),
                Operator::Add => (OpDoc::Add, None, None, None),
                Operator::Subtract => (OpDoc::Subtract, None, None, None),
                Operator::Multiply => (OpDoc::Multiply, None, None, None),
                Operator::Divide => (OpDoc::Divide, None, None, None),
                Operator::Function { name, params } => (
                    OpDoc::Function,
                    Some(name.clone()),
                    (!params.is_empty()).then(|| params.clone()),
                    None,
                ),
                Operator::Gateway { selector } => {
                    (OpDoc::Gateway, None, None, Some(selector.clone()))
                }
            };
            OperatorDoc {
                parent: parent.to_string(),
                op: opdoc,
                function,
                params,
                selector,
            }
        })
        .collect();
    Document {
        vdmn_version: VDMN_VERSION.to_string(),
        name: model.name().to_string(),
        nodes,
        links,
        operators,
        levels: model
            .levels()
            .iter()
            .map(|l| LevelDoc {
                kind: l.kind.into(),
                bands: l
                    .bands
                    .iter()
                    .map(|b| BandDoc {
                        name: b.name.clone(),
                        members: b.members.iter().cloned().collect(),
                    })
                    .collect(),
            })
            .collect(),
        clusters: model
            .clusters()
            .iter()
            .map(|c| ClusterDoc {
                name: c.name.clone(),
                kind: c.kind.into(),
                members: c.members.iter().cloned().collect(),
                attached_to: c.attached_to.clone(),
            })
            .collect(),
        decomposition: DecompositionDoc {
            sub_trees: model
                .decomposition()
                .sub_trees
                .iter()
                .map(|s| SubTreeDoc {
                    boundary: s.boundary.clone(),
                    model: s.model.clone(),
                })
                .collect(),
            tree_cuts: model
                .decomposition()
                .tree_cuts
                .iter()
                .map(|c| TreeCutDoc {
                    node: c.node.clone(),
                    label: c.label.clone(),
                })
                .collect(),
        },
        annotations: model.annotations().clone(),
    }
}

/// Serializes a model as a pretty-printed interchange document.
pub fn emit_interchange(model: &Model) -> String {
    let mut s = serde_json::to_string_pretty(&doc_from_model(model))
        .expect("interchange document always serializes");
    s.push('\n');
    s
}

/// The interchange document as a JSON value, for embedding in API responses.
pub fn interchange_value(model: &Model) -> serde_json::Value {
    serde_json::to_value(doc_from_model(model)).expect("interchange document always serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_text;

    const GP: &str = r#"model "M" { kbi GP {title "Gross Profit"} fin REV {} fin COGS {} REV -> GP [order=0] COGS -> GP [order=1] op GP = - }"#;

    const GP_JSON: &str = r#"{
      "vdmn_version": "1.0",
      "name": "M",
      "nodes": [
        {"id": "GP", "type": "key_business", "title": "Gross Profit"},
        {"id": "REV", "type": "financial"},
        {"id": "COGS", "type": "financial"}
      ],
      "links": [
        {"source": "REV", "target": "GP", "kind": "direct", "order": 0},
        {"source": "COGS", "target": "GP", "kind": "direct", "order": 1}
      ],
      "operators": [{"parent": "GP", "op": "-"}]
    }"#;

    #[test]
    fn json_and_dsl_agree() {
        let from_dsl = parse_text(GP).into_result().unwrap();
        let from_json = parse_interchange(GP_JSON).unwrap();
        assert_eq!(from_dsl, from_json);
    }

    #[test]
    fn missing_version_is_schema_violation() {
        let doc = GP_JSON.replace("\"vdmn_version\": \"1.0\",", "");
        let err = parse_interchange(&doc).unwrap_err();
        assert!(matches!(err, InterchangeError::SchemaViolation { ref message, .. } if message.contains("vdmn_version")));
        let doc = GP_JSON.replace("\"1.0\"", "\"2.0\"");
        assert!(matches!(
            parse_interchange(&doc),
            Err(InterchangeError::SchemaViolation { ref path, .. }) if path == "vdmn_version"
        ));
    }

    #[test]
    fn unknown_operator_points_at_field() {
        let doc = GP_JSON.replace("\"op\": \"-\"", "\"op\": \"%\"");
        match parse_interchange(&doc).unwrap_err() {
            InterchangeError::SchemaViolation { path, .. } => assert_eq!(path, "operators[0].op"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn operator_payload_checked() {
        let doc = GP_JSON.replace("\"op\": \"-\"", "\"op\": \"fx\"");
        match parse_interchange(&doc).unwrap_err() {
            InterchangeError::SchemaViolation { path, .. } => {
                assert_eq!(path, "operators[0].function")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_errors_pass_through() {
        let doc = GP_JSON.replace("\"type\": \"financial\"}", "\"type\": \"key_business\"}");
        let err = parse_interchange(&doc).unwrap_err();
        assert_eq!(err.code(), "M005");
    }

    #[test]
    fn emission_is_deterministic_and_invertible() {
        let m = parse_text(GP).into_result().unwrap();
        let a = emit_interchange(&m);
        assert_eq!(a, emit_interchange(&m));
        assert_eq!(parse_interchange(&a).unwrap(), m);
    }

    #[test]
    fn unicode_titles_preserved() {
        let src = GP.replace("Gross Profit", "Bruttogewinn – Ü €");
        let m = parse_text(&src).into_result().unwrap();
        let json = emit_interchange(&m);
        assert!(json.contains("Bruttogewinn – Ü €"));
        let back = parse_interchange(&json).unwrap();
        assert_eq!(back.indicator("GP").unwrap().content.title, "Bruttogewinn – Ü €");
    }

    #[test]
    fn double_round_trip_reaches_fixed_point() {
        let m = parse_text(GP).into_result().unwrap();
        let text1 = crate::dsl::emit_text(&m);
        let via_json = parse_interchange(&emit_interchange(&m)).unwrap();
        let text2 = crate::dsl::emit_text(&via_json);
        assert_eq!(text1, text2);
    }
}
