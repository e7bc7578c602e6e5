//! In-memory representation of a value driver tree.
//!
//! A [`Model`] is only obtainable through [`build_model`], which enforces the
//! structural invariants (unique root, acyclic analytical links, direct-link
//! forest, resolved references). Models are immutable; editing means taking
//! the parts back out with [`Model::to_parts`] and rebuilding.

mod build;
mod construct;
mod query;
mod unit;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

pub use build::{build_model, ModelError};
pub use construct::{construct_inventory, Construct};
pub use query::{analytical_children, hierarchy_depth};
pub use unit::{Unit, UnitParseError};

/// Words that start a top-level DSL item and therefore cannot be indicator ids.
pub const RESERVED_WORDS: &[&str] = &[
    "model",
    "kbi",
    "fin",
    "driver",
    "external",
    "subsidiary",
    "op",
    "level",
    "cluster",
    "subtree",
    "cut",
    "note",
];

/// Returns true if `id` is usable as an indicator id.
pub fn is_valid_id(id: &str) -> bool {
    let mut chars = id.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        && !RESERVED_WORDS.contains(&id)
}

/// Generates `as_str`/`FromStr`/`Display` for closed keyword enums.
macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($(#[$vmeta:meta])* $variant:ident => $kw:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($(#[$vmeta])* $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $kw),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($kw => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} `{}`",
                        stringify!($name),
                        other
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }
    };
}

keyword_enum! {
    /// What an indicator represents in the tree.
    IndicatorType {
        KeyBusiness => "kbi",
        Financial => "fin",
        ValueDriver => "driver",
        External => "external",
        SubsidiaryResult => "subsidiary",
    }
}

keyword_enum! {
    /// Relevance / controllability of an indicator.
    #[derive(Default)]
    FunctionRole {
        KeyValueIndicator => "key",
        #[default]
        Regular => "regular",
        Input => "input",
        Calculation => "calc",
    }
}

keyword_enum! {
    ValueType {
        Quantitative => "quantitative",
        Qualitative => "qualitative",
        Leading => "leading",
        Lagging => "lagging",
    }
}

keyword_enum! {
    Trend {
        Up => "up",
        Flat => "flat",
        Down => "down",
    }
}

keyword_enum! {
    LinkKind {
        DirectAnalytical => "direct",
        IndirectAnalytical => "indirect",
        LogicalAllocation => "allocation",
    }
}

impl LinkKind {
    pub fn is_analytical(self) -> bool {
        !matches!(self, LinkKind::LogicalAllocation)
    }
}

keyword_enum! {
    Comparator {
        Lt => "<",
        Le => "<=",
        Eq => "==",
        Ge => ">=",
        Gt => ">",
        Ne => "!=",
    }
}

impl Comparator {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ne => lhs != rhs,
        }
    }
}

keyword_enum! {
    LevelKind {
        IndicatorType => "type",
        Branch => "branch",
        TimeHorizon => "time",
    }
}

keyword_enum! {
    ClusterKind {
        ValueDriverGroup => "vdgroup",
        BusinessModel => "bizmodel",
        Functions => "function",
        Calculation => "calc",
    }
}

/// Which set of figures a value belongs to.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResultType {
    #[default]
    Actual,
    Budget,
    Forecast,
    Plan,
    /// Any other named result type. Names of the fixed variants are never
    /// stored here; use [`ResultType::from_name`].
    Other(String),
}

impl ResultType {
    pub fn from_name(name: &str) -> ResultType {
        match name {
            "actual" => ResultType::Actual,
            "budget" => ResultType::Budget,
            "forecast" => ResultType::Forecast,
            "plan" => ResultType::Plan,
            other => ResultType::Other(other.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            ResultType::Actual => "actual",
            ResultType::Budget => "budget",
            ResultType::Forecast => "forecast",
            ResultType::Plan => "plan",
            ResultType::Other(s) => s,
        }
    }

    /// Fixed variants have a bare keyword spelling in the DSL.
    pub fn is_builtin(&self) -> bool {
        !matches!(self, ResultType::Other(_))
    }
}

impl serde::Serialize for ResultType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for ResultType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Ok(ResultType::from_name(&name))
    }
}

impl fmt::Display for ResultType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Development {
    Fixed(Trend),
    /// Computed from the indicator's value and its comparative value.
    Derived,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparativeValue {
    pub result_type: ResultType,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndicatorContent {
    pub title: String,
    pub value_type: Option<ValueType>,
    pub unit: Option<Unit>,
    pub data_attributes: BTreeMap<String, String>,
    pub results: BTreeMap<ResultType, f64>,
    pub comparative: Option<ComparativeValue>,
    pub development: Option<Development>,
    pub responsibility: Option<String>,
}

impl IndicatorContent {
    pub fn titled(title: impl Into<String>) -> Self {
        IndicatorContent {
            title: title.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Indicator {
    pub id: String,
    pub itype: IndicatorType,
    pub role: FunctionRole,
    pub content: IndicatorContent,
}

impl Indicator {
    /// An indicator with default role whose title is its id.
    pub fn new(id: impl Into<String>, itype: IndicatorType) -> Self {
        let id = id.into();
        Indicator {
            content: IndicatorContent::titled(id.clone()),
            id,
            itype,
            role: FunctionRole::Regular,
        }
    }

    pub fn with_role(mut self, role: FunctionRole) -> Self {
        self.role = role;
        self
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.content.title = title.into();
        self
    }
}

/// Condition attached to a child link of a gateway parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GatewayGuard {
    When { comparator: Comparator, threshold: f64 },
    Default,
}

impl GatewayGuard {
    pub fn is_default(&self) -> bool {
        matches!(self, GatewayGuard::Default)
    }
}

/// Edge from a child (`source`) to a parent (`target`).
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub source: String,
    pub target: String,
    pub kind: LinkKind,
    /// Position among the target's children.
    pub order: u32,
    pub guard: Option<GatewayGuard>,
}

impl Link {
    pub fn new(source: impl Into<String>, target: impl Into<String>, kind: LinkKind, order: u32) -> Self {
        Link {
            source: source.into(),
            target: target.into(),
            kind,
            order,
            guard: None,
        }
    }

    pub fn direct(source: impl Into<String>, target: impl Into<String>, order: u32) -> Self {
        Link::new(source, target, LinkKind::DirectAnalytical, order)
    }

    pub fn with_guard(mut self, guard: GatewayGuard) -> Self {
        self.guard = Some(guard);
        self
    }
}

/// How a parent combines its analytical children.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Logical,
    Add,
    Subtract,
    Multiply,
    Divide,
    Function {
        name: String,
        params: BTreeMap<String, f64>,
    },
    /// Selects one child based on the value of `selector`.
    Gateway { selector: String },
}

impl Operator {
    /// Short symbol as drawn in diagrams and written in the DSL.
    pub fn symbol(&self) -> &'static str {
        match self {
            Operator::Logical => "L",
            Operator::Add => "+",
            Operator::Subtract => "-",
            Operator::Multiply => "*",
            Operator::Divide => ":",
            Operator::Function { .. } => "fx",
            Operator::Gateway { .. } => "X",
        }
    }

    pub fn is_arithmetic(&self) -> bool {
        matches!(
            self,
            Operator::Add | Operator::Subtract | Operator::Multiply | Operator::Divide
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub parent: String,
    pub op: Operator,
}

impl OperatorSpec {
    pub fn new(parent: impl Into<String>, op: Operator) -> Self {
        OperatorSpec {
            parent: parent.into(),
            op,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Band {
    pub name: String,
    pub members: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSpec {
    pub kind: LevelKind,
    pub bands: Vec<Band>,
}

impl LevelSpec {
    /// Band name of the member, if any.
    pub fn band_of(&self, id: &str) -> Option<&str> {
        self.bands
            .iter()
            .find(|b| b.members.contains(id))
            .map(|b| b.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSpec {
    pub name: String,
    pub kind: ClusterKind,
    pub members: BTreeSet<String>,
    pub attached_to: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubTreeRef {
    pub boundary: String,
    /// Name of the model holding the boundary's wider connections.
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TreeCut {
    pub node: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Decomposition {
    pub sub_trees: Vec<SubTreeRef>,
    pub tree_cuts: Vec<TreeCut>,
}

/// Unvalidated model collections, as produced by the parsers and transforms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelParts {
    pub name: String,
    pub indicators: Vec<Indicator>,
    pub links: Vec<Link>,
    pub operators: Vec<OperatorSpec>,
    pub levels: Vec<LevelSpec>,
    pub clusters: Vec<ClusterSpec>,
    pub decomposition: Decomposition,
    /// Free-text side notes keyed by indicator id.
    pub annotations: BTreeMap<String, String>,
}

/// A validated value driver tree.
///
/// Collections are stored in canonical order, so two models built from the
/// same parts in different declaration orders compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    name: String,
    indicators: BTreeMap<String, Indicator>,
    links: Vec<Link>,
    operators: BTreeMap<String, Operator>,
    levels: Vec<LevelSpec>,
    clusters: Vec<ClusterSpec>,
    decomposition: Decomposition,
    annotations: BTreeMap<String, String>,
    root: String,
    /// Analytical children per parent, sorted by link order.
    children: BTreeMap<String, Vec<String>>,
    /// Analytical parents per child, sorted by id.
    parents: BTreeMap<String, Vec<String>>,
    topo: Vec<String>,
}

impl Model {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn indicators(&self) -> impl Iterator<Item = &Indicator> {
        self.indicators.values()
    }

    pub fn indicator(&self, id: &str) -> Option<&Indicator> {
        self.indicators.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.indicators.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.indicators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicators.is_empty()
    }

    /// All links sorted by (target, order, kind, source).
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Declared operator of a parent, if any.
    pub fn declared_operator(&self, parent: &str) -> Option<&Operator> {
        self.operators.get(parent)
    }

    pub fn operators(&self) -> impl Iterator<Item = (&str, &Operator)> {
        self.operators.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn levels(&self) -> &[LevelSpec] {
        &self.levels
    }

    pub fn level(&self, kind: LevelKind) -> Option<&LevelSpec> {
        self.levels.iter().find(|l| l.kind == kind)
    }

    pub fn clusters(&self) -> &[ClusterSpec] {
        &self.clusters
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn annotations(&self) -> &BTreeMap<String, String> {
        &self.annotations
    }

    /// The unique key business indicator.
    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn tree_cut(&self, id: &str) -> Option<&TreeCut> {
        self.decomposition.tree_cuts.iter().find(|c| c.node == id)
    }

    pub fn sub_tree(&self, id: &str) -> Option<&SubTreeRef> {
        self.decomposition.sub_trees.iter().find(|s| s.boundary == id)
    }

    /// True for tree-cut nodes and sub-tree boundaries: leaves that stand in
    /// for connections held elsewhere.
    pub fn is_reference_leaf(&self, id: &str) -> bool {
        self.tree_cut(id).is_some() || self.sub_tree(id).is_some()
    }

    /// Copies the model back into editable parts.
    pub fn to_parts(&self) -> ModelParts {
        ModelParts {
            name: self.name.clone(),
            indicators: self.indicators.values().cloned().collect(),
            links: self.links.clone(),
            operators: self
                .operators
                .iter()
                .map(|(p, op)| OperatorSpec::new(p.clone(), op.clone()))
                .collect(),
            levels: self.levels.clone(),
            clusters: self.clusters.clone(),
            decomposition: self.decomposition.clone(),
            annotations: self.annotations.clone(),
        }
    }

    /// Same model without annotations.
    pub fn without_annotations(&self) -> Model {
        let mut m = self.clone();
        m.annotations.clear();
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_pattern() {
        assert!(is_valid_id("GP"));
        assert!(is_valid_id("_x-1"));
        assert!(is_valid_id("X"));
        assert!(!is_valid_id(""));
        assert!(!is_valid_id("1abc"));
        assert!(!is_valid_id("a b"));
        assert!(!is_valid_id("op"));
        assert!(!is_valid_id("a.b"));
    }

    #[test]
    fn keyword_enums_round_trip() {
        for t in IndicatorType::ALL {
            assert_eq!(t.as_str().parse::<IndicatorType>().unwrap(), *t);
        }
        for c in Comparator::ALL {
            assert_eq!(c.as_str().parse::<Comparator>().unwrap(), *c);
        }
        assert_eq!(IndicatorType::ALL.len(), 5);
    }

    #[test]
    fn result_type_names() {
        assert_eq!(ResultType::from_name("budget"), ResultType::Budget);
        assert_eq!(
            ResultType::from_name("scenario-a"),
            ResultType::Other("scenario-a".into())
        );
        assert_eq!(ResultType::default(), ResultType::Actual);
        assert_eq!(FunctionRole::default(), FunctionRole::Regular);
    }

    #[test]
    fn comparators() {
        assert!(Comparator::Ge.holds(0.0, 0.0));
        assert!(!Comparator::Gt.holds(0.0, 0.0));
        assert!(Comparator::Ne.holds(1.0, 0.0));
        assert!(Comparator::Lt.holds(-1.0, 0.0));
    }
}
