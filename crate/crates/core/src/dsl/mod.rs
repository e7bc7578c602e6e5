//! Textual notation for value driver trees.
//!
//! ```text
//! model "Gross Profit" {
//!   kbi GP {title "Gross Profit" unit "$"}
//!   fin REV {title "Revenue"}
//!   fin COGS {title "Cost of goods sold"}
//!   REV -> GP [order=0]
//!   COGS -> GP [order=1]
//!   op GP = -
//! }
//! ```
//!
//! `->` is a direct analytical link, `~>` an indirect one and `..>` a logical
//! allocation. Parsing never stops at the first problem: every recoverable
//! error is reported with its source span.

mod emit;
mod lexer;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use emit::emit_text;
pub(crate) use emit::canonical_indicators;

use crate::diagnostic::{Severity, SourceSpan};
use crate::model::Model;

/// A problem found while reading a model file. Codes `P*` are syntax
/// problems, `M*` structural ones reported by model construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub span: SourceSpan,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}[{}]: {}", self.span, self.severity, self.code, self.message)
    }
}

/// Declaration sites of the model and its indicators.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap {
    pub file: String,
    pub model: Option<SourceSpan>,
    pub indicators: BTreeMap<String, SourceSpan>,
}

#[derive(Debug, Clone)]
pub struct ParseOutcome {
    /// Present iff no diagnostic has error severity.
    pub model: Option<Model>,
    pub diagnostics: Vec<ParseDiagnostic>,
    pub spans: SourceMap,
}

impl ParseOutcome {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }

    /// The model, or every diagnostic when construction failed.
    pub fn into_result(self) -> Result<Model, Vec<ParseDiagnostic>> {
        match self.model {
            Some(m) => Ok(m),
            None => Err(self.diagnostics),
        }
    }
}

/// Parses DSL text read from an unnamed source.
pub fn parse_text(source: &str) -> ParseOutcome {
    parse_text_named(source, "<input>")
}

/// Parses DSL text; `file` only labels diagnostic spans.
pub fn parse_text_named(source: &str, file: &str) -> ParseOutcome {
    parser::Parser::new(source, file).run()
}
