//! Transcribed branches from the literature, kept as JSON data.

use crate::closure::ClosureKind;
use crate::expr::{Expr, Symbol};
use crate::parser::{parse_equation_file, parse_expr, Context, ModelSpec, Scope};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed catalog {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("catalog entry `{locator}`: {msg}")]
    Entry { locator: String, msg: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogModel {
    pub name: String,
    /// Path relative to the catalog file.
    pub equation_file: String,
    pub sigma: i8,
    /// Ansatz order used in the source (overrides the balance).
    #[serde(default)]
    pub order: Option<usize>,
    /// Numeric values for symbols left free by a branch.
    #[serde(default)]
    pub defaults: BTreeMap<String, f64>,
    /// Coefficient equations as printed, in the z/z' notation.
    #[serde(default)]
    pub printed_system: Vec<String>,
    /// Branch count claimed in the source.
    #[serde(default)]
    pub claimed_branches: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub locator: String,
    pub model: String,
    pub case: ClosureKind,
    pub unknowns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub locator: String,
    pub model: String,
    pub case: ClosureKind,
    /// Scenario this branch belongs to.
    pub scenario: String,
    pub assignments: BTreeMap<String, String>,
    #[serde(default)]
    pub free: Vec<String>,
    /// Algebraic roots: name -> polynomial in `Z`.
    #[serde(default)]
    pub roots: BTreeMap<String, String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub models: Vec<CatalogModel>,
    pub scenarios: Vec<Scenario>,
    pub entries: Vec<CatalogEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    builtin: bool,
}

const BUILTIN_CATALOG: &str = include_str!("../../data/catalog.json");
const BUILTIN_EQUATIONS: &[(&str, &str)] = &[
    ("klein_gordon.eq", include_str!("../../data/klein_gordon.eq")),
    ("bbm.eq", include_str!("../../data/bbm.eq")),
];

/// Text of a shipped equation file, by file name.
pub fn builtin_equation(file: &str) -> Option<&'static str> {
    BUILTIN_EQUATIONS.iter().find(|(n, _)| *n == file).map(|(_, t)| *t)
}

fn dsl(s: &str) -> Result<Expr, String> {
    parse_expr(s, &Scope::open(Context::Ode)).map_err(|e| e.to_string())
}

impl CatalogEntry {
    pub fn parsed_assignments(&self) -> Result<BTreeMap<Symbol, Expr>, CatalogError> {
        self.parse_map(&self.assignments)
    }

    pub fn parsed_roots(&self) -> Result<BTreeMap<Symbol, Expr>, CatalogError> {
        self.parse_map(&self.roots)
    }

    fn parse_map(&self, m: &BTreeMap<String, String>) -> Result<BTreeMap<Symbol, Expr>, CatalogError> {
        m.iter()
            .map(|(k, v)| {
                dsl(v)
                    .map(|e| (Symbol::new(k), e))
                    .map_err(|msg| CatalogError::Entry {
                        locator: self.locator.clone(),
                        msg: format!("`{k}`: {msg}"),
                    })
            })
            .collect()
    }
}

impl Catalog {
    pub fn load(path: &Path) -> Result<Catalog, CatalogError> {
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut c = Self::from_json(&text, path)?;
        c.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        c.validate()?;
        Ok(c)
    }

    /// The catalog shipped with the crate.
    pub fn builtin() -> Catalog {
        let mut c = Self::from_json(BUILTIN_CATALOG, Path::new("catalog.json")).expect("shipped catalog parses");
        c.builtin = true;
        c.validate().expect("shipped catalog is valid");
        c
    }

    fn from_json(text: &str, path: &Path) -> Result<Catalog, CatalogError> {
        serde_json::from_str(text).map_err(|source| CatalogError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    fn validate(&self) -> Result<(), CatalogError> {
        for e in &self.entries {
            let err = |msg: String| CatalogError::Entry {
                locator: e.locator.clone(),
                msg,
            };
            if self.model(&e.model).is_none() {
                return Err(err(format!("unknown model `{}`", e.model)));
            }
            match self.scenario(&e.scenario) {
                Some(s) if s.model == e.model && s.case == e.case => {}
                Some(_) => return Err(err(format!("scenario `{}` has a different model or case", e.scenario))),
                None => return Err(err(format!("unknown scenario `{}`", e.scenario))),
            }
            e.parsed_assignments()?;
            e.parsed_roots()?;
        }
        for m in &self.models {
            for (i, eq) in m.printed_system.iter().enumerate() {
                dsl(eq).map_err(|msg| CatalogError::Entry {
                    locator: format!("{}/printed-system/{}", m.name, i + 1),
                    msg,
                })?;
            }
        }
        Ok(())
    }

    pub fn model(&self, name: &str) -> Option<&CatalogModel> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn scenario(&self, locator: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.locator == locator)
    }

    pub fn entries_for(&self, model: &str) -> impl Iterator<Item = &CatalogEntry> {
        let model = model.to_string();
        self.entries.iter().filter(move |e| e.model == model)
    }

    pub fn equation_path(&self, m: &CatalogModel) -> PathBuf {
        self.base_dir.join(&m.equation_file)
    }

    /// Parse the model's equation file.
    pub fn load_model(&self, m: &CatalogModel) -> Result<ModelSpec, CatalogError> {
        let path = self.equation_path(m);
        if self.builtin {
            let text = builtin_equation(&m.equation_file).ok_or_else(|| CatalogError::Entry {
                locator: m.name.clone(),
                msg: format!("no shipped equation file `{}`", m.equation_file),
            })?;
            return parse_equation_file(text).map_err(|e| CatalogError::Entry {
                locator: m.name.clone(),
                msg: format!("{}: {e}", m.equation_file),
            });
        }
        let text = std::fs::read_to_string(&path).map_err(|source| CatalogError::Io {
            path: path.clone(),
            source,
        })?;
        parse_equation_file(&text).map_err(|e| CatalogError::Entry {
            locator: m.name.clone(),
            msg: format!("{}: {e}", path.display()),
        })
    }

    pub fn printed_system(&self, m: &CatalogModel) -> Vec<Expr> {
        m.printed_system.iter().filter_map(|s| dsl(s).ok()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_catalog_loads() {
        let c = Catalog::builtin();
        assert_eq!(c.entries_for("klein-gordon").count(), 14);
        assert_eq!(c.entries_for("bbm").count(), 3);
        for m in &c.models {
            c.load_model(m).unwrap();
            assert_eq!(c.printed_system(m).len(), m.printed_system.len());
        }
    }
}
