use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::{construct_inventory, Construct, Model};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverageError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// How often each construct appears across a set of models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub models: usize,
    /// Number of models using each construct; every construct has an entry.
    pub usage: BTreeMap<Construct, usize>,
    pub unused: Vec<Construct>,
}

impl CoverageReport {
    pub fn used(&self) -> usize {
        self.usage.values().filter(|&&n| n > 0).count()
    }

    pub fn is_complete(&self) -> bool {
        self.unused.is_empty()
    }
}

pub fn coverage_report(models: &[Model]) -> Result<CoverageReport, CoverageError> {
    if models.is_empty() {
        return Err(CoverageError::InvalidArgument(
            "coverage needs at least one model".to_string(),
        ));
    }
    let mut usage: BTreeMap<Construct, usize> = Construct::ALL.iter().map(|c| (*c, 0)).collect();
    for m in models {
        for c in construct_inventory(m) {
            *usage.entry(c).or_insert(0) += 1;
        }
    }
    let unused = usage
        .iter()
        .filter(|(_, n)| **n == 0)
        .map(|(c, _)| *c)
        .collect();
    Ok(CoverageReport {
        models: models.len(),
        usage,
        unused,
    })
}
