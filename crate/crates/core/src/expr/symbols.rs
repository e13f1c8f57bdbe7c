use super::{Expr, Node};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    IndependentVariable,
    UnknownFunction,
    AuxiliaryFunction,
    ModelParameter,
    MethodParameter,
    AnsatzCoefficient,
    ClosureParameter,
    IntegrationConstant,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SymbolTableError {
    #[error("symbol `{name}` already registered as {existing:?}, cannot re-register as {requested:?}")]
    Conflict {
        name: String,
        existing: Role,
        requested: Role,
    },
    #[error("unregistered symbol `{0}`")]
    Unregistered(String),
}

/// Name → role registry. A name holds exactly one role.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymbolTable {
    roles: BTreeMap<String, Role>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Table pre-populated with the method's fixed inventory.
    pub fn standard() -> Self {
        let mut t = Self::new();
        for v in ["x", "t", "zeta"] {
            t.register(v, Role::IndependentVariable).unwrap();
        }
        t.register("u", Role::UnknownFunction).unwrap();
        t.register("z", Role::AuxiliaryFunction).unwrap();
        for p in ["mu", "c", "lambda", "pi"] {
            t.register(p, Role::MethodParameter).unwrap();
        }
        for p in ["h", "A", "B"] {
            t.register(p, Role::ClosureParameter).unwrap();
        }
        for p in ["C1", "C2"] {
            t.register(p, Role::IntegrationConstant).unwrap();
        }
        t
    }

    pub fn register(&mut self, name: &str, role: Role) -> Result<(), SymbolTableError> {
        match self.roles.get(name) {
            Some(&existing) if existing != role => Err(SymbolTableError::Conflict {
                name: name.to_string(),
                existing,
                requested: role,
            }),
            _ => {
                self.roles.insert(name.to_string(), role);
                Ok(())
            }
        }
    }

    pub fn role(&self, name: &str) -> Option<Role> {
        self.roles.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.roles.contains_key(name)
    }

    pub fn names_with_role(&self, role: Role) -> Vec<String> {
        self.roles
            .iter()
            .filter(|(_, r)| **r == role)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Every symbol and field name in `e` must be registered.
    pub fn check(&self, e: &Expr) -> Result<(), SymbolTableError> {
        let mut missing = None;
        e.visit(&mut |n| {
            if missing.is_some() {
                return;
            }
            let name = match n.node() {
                Node::Sym(s) => s.as_str().to_string(),
                Node::Field(f) => f.name.as_str().to_string(),
                _ => return,
            };
            if !self.contains(&name) {
                missing = Some(name);
            }
        });
        match missing {
            Some(n) => Err(SymbolTableError::Unregistered(n)),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_role_per_name() {
        let mut t = SymbolTable::standard();
        assert!(t.register("g0", Role::AnsatzCoefficient).is_ok());
        assert!(t.register("g0", Role::AnsatzCoefficient).is_ok());
        assert!(matches!(
            t.register("zeta", Role::ModelParameter),
            Err(SymbolTableError::Conflict { .. })
        ));
    }

    #[test]
    fn check_reports_unregistered() {
        let t = SymbolTable::standard();
        let e = Expr::sym("alpha") * Expr::deriv_atom("z", "zeta", 1);
        assert_eq!(t.check(&e), Err(SymbolTableError::Unregistered("alpha".into())));
    }
}
