//! The fixed universe of notation constructs and per-model inventories.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::{ClusterKind, FunctionRole, IndicatorType, LevelKind, LinkKind, Model, Operator};

/// One modelling construct of the notation. There are exactly 34.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Construct {
    // indicator type
    KeyBusinessIndicator,
    FinancialIndicator,
    ValueDriver,
    ExternalIndicator,
    SubsidiaryResults,
    // indicator function
    KeyValueIndicator,
    InputCalculation,
    // indicator content
    Title,
    ValueType,
    MetricUnit,
    DataAttributes,
    ResultType,
    ComparativeValues,
    Development,
    Responsibility,
    // links
    DirectAnalyticalLink,
    IndirectAnalyticalLink,
    LogicalAllocation,
    // operators
    Logical,
    Addition,
    Subtraction,
    Multiplication,
    Division,
    Function,
    Gateway,
    // levels
    IndicatorTypeLevel,
    BranchLevel,
    TimeHorizon,
    // clusters
    ValueDriverGroup,
    BusinessModel,
    Functions,
    Calculation,
    // decomposition
    SubTree,
    TreeCut,
}

impl Construct {
    pub const ALL: [Construct; 34] = [
        Construct::KeyBusinessIndicator,
        Construct::FinancialIndicator,
        Construct::ValueDriver,
        Construct::ExternalIndicator,
        Construct::SubsidiaryResults,
        Construct::KeyValueIndicator,
        Construct::InputCalculation,
        Construct::Title,
        Construct::ValueType,
        Construct::MetricUnit,
        Construct::DataAttributes,
        Construct::ResultType,
        Construct::ComparativeValues,
        Construct::Development,
        Construct::Responsibility,
        Construct::DirectAnalyticalLink,
        Construct::IndirectAnalyticalLink,
        Construct::LogicalAllocation,
        Construct::Logical,
        Construct::Addition,
        Construct::Subtraction,
        Construct::Multiplication,
        Construct::Division,
        Construct::Function,
        Construct::Gateway,
        Construct::IndicatorTypeLevel,
        Construct::BranchLevel,
        Construct::TimeHorizon,
        Construct::ValueDriverGroup,
        Construct::BusinessModel,
        Construct::Functions,
        Construct::Calculation,
        Construct::SubTree,
        Construct::TreeCut,
    ];

    /// Canonical tag, stable across releases.
    pub fn tag(self) -> &'static str {
        match self {
            Construct::KeyBusinessIndicator => "KeyBusinessIndicator",
            Construct::FinancialIndicator => "FinancialIndicator",
            Construct::ValueDriver => "ValueDriver",
            Construct::ExternalIndicator => "ExternalIndicator",
            Construct::SubsidiaryResults => "SubsidiaryResults",
            Construct::KeyValueIndicator => "KeyValueIndicator",
            Construct::InputCalculation => "InputCalculation",
            Construct::Title => "Title",
            Construct::ValueType => "ValueType",
            Construct::MetricUnit => "MetricUnit",
            Construct::DataAttributes => "DataAttributes",
            Construct::ResultType => "ResultType",
            Construct::ComparativeValues => "ComparativeValues",
            Construct::Development => "Development",
            Construct::Responsibility => "Responsibility",
            Construct::DirectAnalyticalLink => "DirectAnalyticalLink",
            Construct::IndirectAnalyticalLink => "IndirectAnalyticalLink",
            Construct::LogicalAllocation => "LogicalAllocation",
            Construct::Logical => "Logical",
            Construct::Addition => "Addition",
            Construct::Subtraction => "Subtraction",
            Construct::Multiplication => "Multiplication",
            Construct::Division => "Division",
            Construct::Function => "Function",
            Construct::Gateway => "Gateway",
            Construct::IndicatorTypeLevel => "IndicatorTypeLevel",
            Construct::BranchLevel => "BranchLevel",
            Construct::TimeHorizon => "TimeHorizon",
            Construct::ValueDriverGroup => "ValueDriverGroup",
            Construct::BusinessModel => "BusinessModel",
            Construct::Functions => "Functions",
            Construct::Calculation => "Calculation",
            Construct::SubTree => "SubTree",
            Construct::TreeCut => "TreeCut",
        }
    }

    /// Dimension the construct belongs to: indicators, connections or structure.
    pub fn dimension(self) -> &'static str {
        use Construct::*;
        match self {
            KeyBusinessIndicator | FinancialIndicator | ValueDriver | ExternalIndicator
            | SubsidiaryResults | KeyValueIndicator | InputCalculation | Title | ValueType
            | MetricUnit | DataAttributes | ResultType | ComparativeValues | Development
            | Responsibility => "indicators",
            DirectAnalyticalLink | IndirectAnalyticalLink | LogicalAllocation | Logical
            | Addition | Subtraction | Multiplication | Division | Function | Gateway => {
                "connections"
            }
            _ => "structure",
        }
    }
}

impl fmt::Display for Construct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl serde::Serialize for Construct {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl FromStr for Construct {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Construct::ALL
            .iter()
            .copied()
            .find(|c| c.tag() == s)
            .ok_or_else(|| format!("unknown construct `{s}`"))
    }
}

/// Constructs a model actually uses.
///
/// Function roles count only when a non-default role appears; operators count
/// only when declared (an undeclared parent defaults to Logical silently).
pub fn construct_inventory(model: &Model) -> BTreeSet<Construct> {
    let mut out = BTreeSet::new();
    for ind in model.indicators() {
        out.insert(match ind.itype {
            IndicatorType::KeyBusiness => Construct::KeyBusinessIndicator,
            IndicatorType::Financial => Construct::FinancialIndicator,
            IndicatorType::ValueDriver => Construct::ValueDriver,
            IndicatorType::External => Construct::ExternalIndicator,
            IndicatorType::SubsidiaryResult => Construct::SubsidiaryResults,
        });
        match ind.role {
            FunctionRole::KeyValueIndicator => {
                out.insert(Construct::KeyValueIndicator);
            }
            FunctionRole::Input | FunctionRole::Calculation => {
                out.insert(Construct::InputCalculation);
            }
            FunctionRole::Regular => {}
        }
        let c = &ind.content;
        out.insert(Construct::Title);
        let flags = [
            (c.value_type.is_some(), Construct::ValueType),
            (c.unit.is_some(), Construct::MetricUnit),
            (!c.data_attributes.is_empty(), Construct::DataAttributes),
            (!c.results.is_empty(), Construct::ResultType),
            (c.comparative.is_some(), Construct::ComparativeValues),
            (c.development.is_some(), Construct::Development),
            (c.responsibility.is_some(), Construct::Responsibility),
        ];
        out.extend(flags.into_iter().filter(|(on, _)| *on).map(|(_, k)| k));
    }
    for link in model.links() {
        out.insert(match link.kind {
            LinkKind::DirectAnalytical => Construct::DirectAnalyticalLink,
            LinkKind::IndirectAnalytical => Construct::IndirectAnalyticalLink,
            LinkKind::LogicalAllocation => Construct::LogicalAllocation,
        });
    }
    for (_, op) in model.operators() {
        out.insert(match op {
            Operator::Logical => Construct::Logical,
            Operator::Add => Construct::Addition,
            Operator::Subtract => Construct::Subtraction,
            Operator::Multiply => Construct::Multiplication,
            Operator::Divide => Construct::Division,
            Operator::Function { .. } => Construct::Function,
            Operator::Gateway { .. } => Construct::Gateway,
        });
    }
    for level in model.levels() {
        out.insert(match level.kind {
            LevelKind::IndicatorType => Construct::IndicatorTypeLevel,
            LevelKind::Branch => Construct::BranchLevel,
            LevelKind::TimeHorizon => Construct::TimeHorizon,
        });
    }
    for cluster in model.clusters() {
        out.insert(match cluster.kind {
            ClusterKind::ValueDriverGroup => Construct::ValueDriverGroup,
            ClusterKind::BusinessModel => Construct::BusinessModel,
            ClusterKind::Functions => Construct::Functions,
            ClusterKind::Calculation => Construct::Calculation,
        });
    }
    if !model.decomposition().sub_trees.is_empty() {
        out.insert(Construct::SubTree);
    }
    if !model.decomposition().tree_cuts.is_empty() {
        out.insert(Construct::TreeCut);
    }
    out
}
