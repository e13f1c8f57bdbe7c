//! Model equations and the equation-file format.
//!
//! ```text
//! # comment
//! name: klein-gordon
//! params: a, alpha, beta = 1, n
//! n: 3
//! u_tt - a^2*u_xx + alpha*u - beta*u^n = 0
//! ```
//!
//! Header lines are `key: value`; everything else is the equation (it may
//! span several lines). `n:` binds the nonlinearity exponent; without it,
//! the largest integer power of `u` is used.

use super::grammar::{parse_relation, Scope};
use super::ParseError;
use crate::expr::{Expr, Func, Node};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub name: Option<String>,
    /// Left-hand side of `lhs = 0`, in the PDE context.
    pub lhs: Expr,
    pub unknown: String,
    pub vars: Vec<String>,
    /// Declared parameters in declaration order.
    pub params: Vec<String>,
    pub bindings: BTreeMap<String, f64>,
    pub n: Option<i64>,
    /// Equation text as written.
    pub source: String,
}

/// Serializable description of an equation file, kept in outputs so that
/// downstream steps need not re-read the source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationFile {
    pub name: Option<String>,
    pub params: Vec<String>,
    pub bindings: BTreeMap<String, f64>,
    pub n: Option<i64>,
    pub equation: String,
}

impl EquationFile {
    pub fn to_model(&self) -> Result<ModelSpec, ParseError> {
        let mut m = parse_equation(&self.equation, &self.params)?;
        m.name = self.name.clone();
        m.bindings = self.bindings.clone();
        if self.n.is_some() {
            m.n = self.n;
        }
        Ok(m)
    }
}

impl ModelSpec {
    pub fn to_file(&self) -> EquationFile {
        EquationFile {
            name: self.name.clone(),
            params: self.params.clone(),
            bindings: self.bindings.clone(),
            n: self.n,
            equation: self.source.trim().to_string(),
        }
    }
}

/// Largest integer power applied directly to the bare unknown.
fn inferred_n(lhs: &Expr, unknown: &str) -> Option<i64> {
    let mut best: Option<i64> = None;
    lhs.visit(&mut |e| {
        if let Node::Pow(b, k) = e.node() {
            if let Node::Field(f) = b.node() {
                if f.name.as_str() == unknown && f.order() == 0 && *k > 1 {
                    best = Some(best.map_or(*k, |v| v.max(*k)));
                }
            }
        }
    });
    best
}

/// Parse `text` (an equation in u(x, t)) with the given parameter names.
pub fn parse_equation<S: AsRef<str>>(text: &str, params: &[S]) -> Result<ModelSpec, ParseError> {
    let scope = Scope::pde(params);
    let lhs = parse_relation(text, &scope)?;
    let has_symbolic_power = {
        let mut found = false;
        lhs.visit(&mut |e| {
            if let Node::Func(Func::Pow, _) = e.node() {
                found = true;
            }
        });
        found
    };
    let n = if has_symbolic_power {
        None
    } else {
        inferred_n(&lhs, &scope.unknown)
    };
    Ok(ModelSpec {
        name: None,
        lhs,
        unknown: scope.unknown.clone(),
        vars: vec!["x".into(), "t".into()],
        params: params.iter().map(|p| p.as_ref().to_string()).collect(),
        bindings: BTreeMap::new(),
        n,
        source: text.to_string(),
    })
}

fn header_error(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Header {
        line,
        msg: msg.into(),
    }
}

/// Parse a complete equation file.
pub fn parse_equation_file(text: &str) -> Result<ModelSpec, ParseError> {
    let mut name = None;
    let mut params: Vec<String> = Vec::new();
    let mut bindings = BTreeMap::new();
    let mut n: Option<i64> = None;
    let mut body = String::new();
    let mut any_equation = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("");
        let header = line
            .split_once(':')
            .map(|(k, v)| (k.trim(), v.trim()))
            .filter(|(k, _)| matches!(*k, "name" | "params" | "n"));
        match header {
            Some(("name", v)) => name = Some(v.to_string()),
            Some(("params", v)) => {
                for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (p, val) = match item.split_once('=') {
                        Some((p, val)) => (p.trim(), Some(val.trim())),
                        None => (item, None),
                    };
                    if p.is_empty() || !p.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                        return Err(header_error(lineno, format!("bad parameter name `{p}`")));
                    }
                    if let Some(val) = val {
                        let x: f64 = val
                            .parse()
                            .map_err(|_| header_error(lineno, format!("bad value `{val}` for `{p}`")))?;
                        bindings.insert(p.to_string(), x);
                    }
                    params.push(p.to_string());
                }
            }
            Some(("n", v)) => {
                let k: i64 = v
                    .parse()
                    .map_err(|_| header_error(lineno, format!("`n:` expects an integer, got `{v}`")))?;
                if k < 1 {
                    return Err(header_error(lineno, format!("`n:` must be positive, got {k}")));
                }
                n = Some(k);
            }
            _ => {
                if !line.trim().is_empty() {
                    any_equation = true;
                }
                body.push_str(line);
            }
        }
        body.push('\n');
    }
    if !any_equation {
        return Err(header_error(text.lines().count().max(1), "no equation found"));
    }
    let mut m = parse_equation(&body, &params)?;
    m.name = name;
    m.bindings = bindings;
    if n.is_some() {
        m.n = n;
    }
    m.source = body.trim().to_string();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn klein_gordon_quadratic() {
        let m = parse_equation("u_tt - a^2*u_xx + alpha*u - beta*u^2 = 0", &["a", "alpha", "beta"]).unwrap();
        assert_eq!(m.n, Some(2));
    }

    #[test]
    fn bbm_quadratic() {
        let m = parse_equation("u_t + u_x + a*u^2*u_x + u_xxx = 0", &["a"]).unwrap();
        assert_eq!(m.n, Some(2));
    }

    #[test]
    fn equals_moves_right_side() {
        let a = parse_equation("u_t = u_xx", &[] as &[&str]).unwrap();
        let b = parse_equation("u_t - u_xx", &[] as &[&str]).unwrap();
        assert_eq!(a.lhs, b.lhs);
    }

    #[test]
    fn file_headers() {
        let text = "# generalized\nname: kg\nparams: a, alpha = 2, beta, n\nn: 3\n\nu_tt - a^2*u_xx\n  + alpha*u - beta*u^n = 0\n";
        let m = parse_equation_file(text).unwrap();
        assert_eq!(m.name.as_deref(), Some("kg"));
        assert_eq!(m.n, Some(3));
        assert_eq!(m.bindings.get("alpha"), Some(&2.0));
        assert_eq!(m.params, vec!["a", "alpha", "beta", "n"]);
    }

    #[test]
    fn file_errors_keep_line_numbers() {
        let text = "params: a\n\nu_t + b*u = 0\n";
        let err = parse_equation_file(text).unwrap_err();
        assert_eq!(err.position(), Some((3, 7)));
    }
}
