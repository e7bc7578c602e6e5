//! Well-formedness and modelling-guidance checks.
//!
//! Each rule owns one stable code. Structural impossibilities are errors;
//! modelling recommendations are warnings.

mod coverage;
mod rules;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use coverage::{coverage_report, CoverageError, CoverageReport};
pub use rules::{Rule, RULES};

use crate::diagnostic::Severity;
use crate::dsl::SourceMap;
use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationDiagnostic {
    pub code: String,
    pub severity: Severity,
    pub subjects: Vec<String>,
    pub message: String,
}

impl ValidationDiagnostic {
    /// Human-readable line, prefixed with the first subject's location when known.
    pub fn render(&self, spans: Option<&SourceMap>) -> String {
        let location = spans.and_then(|s| {
            self.subjects
                .first()
                .and_then(|id| s.indicators.get(id))
                .map(|span| format!("{span}: "))
        });
        format!(
            "{}{}[{}]: {}",
            location.unwrap_or_default(),
            self.severity,
            self.code,
            self.message
        )
    }
}

impl fmt::Display for ValidationDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(None))
    }
}

/// Runs every rule. The result is sorted by code, then subjects, and is
/// empty iff the model passes all rules.
pub fn validate(model: &Model) -> Vec<ValidationDiagnostic> {
    let mut out = Vec::new();
    for rule in RULES {
        for (subjects, message) in (rule.check)(model) {
            out.push(ValidationDiagnostic {
                code: rule.code.to_string(),
                severity: rule.severity,
                subjects,
                message,
            });
        }
    }
    out.sort_by(|a, b| (&a.code, &a.subjects, &a.message).cmp(&(&b.code, &b.subjects, &b.message)));
    out.dedup();
    out
}

pub fn has_errors(diags: &[ValidationDiagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}
