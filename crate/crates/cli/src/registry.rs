//! Loading model files and the named collection served over HTTP.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;
use vdmn_core::dsl::{parse_text_named, SourceMap};
use vdmn_core::model::SubTreeRef;
use vdmn_core::{parse_interchange, InterchangeError, Model, ParseDiagnostic};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {} problem(s) while parsing", diagnostics.len())]
    Parse {
        path: PathBuf,
        diagnostics: Vec<ParseDiagnostic>,
    },
    #[error("{path}: {error}")]
    Interchange {
        path: PathBuf,
        error: InterchangeError,
    },
    #[error("model name `{name}` is used by both {} and {}", first.display(), second.display())]
    DuplicateName {
        name: String,
        first: PathBuf,
        second: PathBuf,
    },
}

/// A model file read from disk. Spans are only known for DSL sources.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub model: Model,
    pub spans: Option<SourceMap>,
    /// Warnings reported by the parser.
    pub diagnostics: Vec<ParseDiagnostic>,
}

pub fn is_model_file(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".vdt") || name.ends_with(".vdt.json")
}

fn file_stem(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.trim_end_matches(".json").trim_end_matches(".vdt").to_string()
}

/// Reads a `.vdt` DSL file, or an interchange document when the name ends
/// in `.json`.
pub fn load_file(path: &Path) -> Result<Loaded, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if path.extension().is_some_and(|e| e == "json") {
        let model = parse_interchange(&text).map_err(|error| LoadError::Interchange {
            path: path.to_path_buf(),
            error,
        })?;
        return Ok(Loaded {
            model,
            spans: None,
            diagnostics: vec![],
        });
    }
    let outcome = parse_text_named(&text, &path.display().to_string());
    let spans = outcome.spans.clone();
    match outcome.model {
        Some(model) => Ok(Loaded {
            model,
            spans: Some(spans),
            diagnostics: outcome.diagnostics,
        }),
        None => Err(LoadError::Parse {
            path: path.to_path_buf(),
            diagnostics: outcome.diagnostics,
        }),
    }
}

/// Model files under `root`, recursively, in path order.
pub fn model_files(root: &Path) -> Result<Vec<PathBuf>, LoadError> {
    let io = |source| LoadError::Io {
        path: root.to_path_buf(),
        source,
    };
    if root.is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut out = vec![];
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.is_dir() {
                stack.push(path);
            } else if is_model_file(&path) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone)]
struct Entry {
    model: Arc<Model>,
    file: PathBuf,
}

/// Models keyed by their declared name. Lookups also accept the file stem,
/// so `gross_profit` finds the model declared in `gross_profit.vdt`.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    models: BTreeMap<String, Entry>,
    stems: BTreeMap<String, String>,
}

impl ModelRegistry {
    pub fn load_dir(dir: &Path) -> Result<Self, LoadError> {
        let mut reg = ModelRegistry::default();
        for path in model_files(dir)? {
            let loaded = load_file(&path)?;
            reg.insert(loaded.model, path)?;
        }
        Ok(reg)
    }

    pub fn insert(&mut self, model: Model, file: PathBuf) -> Result<(), LoadError> {
        let name = model.name().to_string();
        if let Some(prev) = self.models.get(&name) {
            return Err(LoadError::DuplicateName {
                name,
                first: prev.file.clone(),
                second: file,
            });
        }
        self.stems.entry(file_stem(&file)).or_insert_with(|| name.clone());
        self.models.insert(
            name,
            Entry {
                model: Arc::new(model),
                file,
            },
        );
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Arc<Model>> {
        let key = if self.models.contains_key(name) {
            name
        } else {
            self.stems.get(name)?.as_str()
        };
        self.models.get(key).map(|e| &e.model)
    }

    pub fn models(&self) -> impl Iterator<Item = &Model> {
        self.models.values().map(|e| e.model.as_ref())
    }

    /// Sub-tree references of `name` whose target model is not registered.
    pub fn unresolved_sub_trees(&self, name: &str) -> Vec<SubTreeRef> {
        self.get(name)
            .map(|m| {
                m.decomposition()
                    .sub_trees
                    .iter()
                    .filter(|s| !self.models.contains_key(&s.model))
                    .cloned()
                    .collect()
            })
            .unwrap_or_default()
    }
}
