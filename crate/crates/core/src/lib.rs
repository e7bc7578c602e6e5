//! Value driver tree toolkit: typed model, textual and JSON formats,
//! validation, evaluation with what-if and sensitivity analysis,
//! decomposition transforms and diagram rendering.

pub mod model;

pub use model::{build_model, construct_inventory, Construct, Model, ModelError, ModelParts};
pub mod diagnostic;
pub mod dsl;

pub use diagnostic::{Severity, SourceSpan};
pub use dsl::{emit_text, parse_text, ParseDiagnostic, ParseOutcome};
pub mod interchange;

pub use interchange::{emit_interchange, parse_interchange, InterchangeError};
pub mod engine;
pub use engine::{evaluate, Bindings, EngineError, FunctionRegistry, NodeValue, Valuation};
pub mod transform;
pub use transform::{apply_tree_cut, extract_subtree, merge_subtree, SubTreeExtraction, TransformError};
pub mod render;
pub mod validate;
pub use validate::{coverage_report, validate, CoverageReport, ValidationDiagnostic};
