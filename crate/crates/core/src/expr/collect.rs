use super::{split_coeff, Expr, Node};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub const AUX: &str = "z";
pub const WAVE_VAR: &str = "zeta";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CollectMode {
    /// Coefficients of every z^i z'^j zeta^k vanish.
    #[default]
    Strict,
    /// Coefficients of z^i z'^j vanish; zeta may stay inside them.
    Paper,
}

impl fmt::Display for CollectMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CollectMode::Strict => "strict",
            CollectMode::Paper => "paper",
        })
    }
}

impl std::str::FromStr for CollectMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "strict" => Ok(CollectMode::Strict),
            "paper" => Ok(CollectMode::Paper),
            other => Err(format!("unknown collection mode `{other}` (expected strict|paper)")),
        }
    }
}

/// Exponents of z, z' and zeta in a monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MonomialKey {
    pub z: u32,
    pub dz: u32,
    pub zeta: u32,
}

impl MonomialKey {
    pub fn new(z: u32, dz: u32, zeta: u32) -> Self {
        MonomialKey { z, dz, zeta }
    }

    pub fn monomial(&self) -> Expr {
        Expr::mul_all([
            Expr::pow(&Expr::deriv_atom(AUX, WAVE_VAR, 0), self.z as i64),
            Expr::pow(&Expr::deriv_atom(AUX, WAVE_VAR, 1), self.dz as i64),
            Expr::pow(&Expr::sym(WAVE_VAR), self.zeta as i64),
        ])
    }
}

impl fmt::Display for MonomialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z^{}*z'^{}*zeta^{}", self.z, self.dz, self.zeta)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CollectError {
    #[error("derivative z^({0}) present; apply the Hermite rewrite before collecting")]
    MissingRewrite(usize),
    #[error("term `{0}` is not polynomial in z, z'")]
    NonPolynomialAux(String),
    #[error("term `{0}` is not polynomial in zeta (strict collection)")]
    NonPolynomialZeta(String),
}

/// Group `e` by monomials in z, z' (and zeta in strict mode).
pub fn collect(e: &Expr, mode: CollectMode) -> Result<BTreeMap<MonomialKey, Expr>, CollectError> {
    let mut groups: BTreeMap<MonomialKey, Vec<Expr>> = BTreeMap::new();
    for term in e.terms() {
        let (c, m) = split_coeff(&term);
        let factors: Vec<Expr> = match m.node() {
            Node::Mul(fs) => fs.clone(),
            _ if m.is_one() => Vec::new(),
            _ => vec![m.clone()],
        };
        let mut key = MonomialKey::new(0, 0, 0);
        let mut rest = vec![Expr::num(c)];
        for f in factors {
            let (base, k) = match f.node() {
                Node::Pow(b, k) => (b.clone(), *k),
                _ => (f.clone(), 1),
            };
            match base.node() {
                Node::Field(a) if a.name.as_str() == AUX => {
                    if a.order() >= 2 {
                        return Err(CollectError::MissingRewrite(a.order()));
                    }
                    if k < 0 {
                        return Err(CollectError::NonPolynomialAux(term.to_string()));
                    }
                    if a.order() == 0 {
                        key.z += k as u32;
                    } else {
                        key.dz += k as u32;
                    }
                }
                Node::Sym(s) if mode == CollectMode::Strict && s.as_str() == WAVE_VAR => {
                    if k < 0 {
                        return Err(CollectError::NonPolynomialZeta(term.to_string()));
                    }
                    key.zeta += k as u32;
                }
                _ => {
                    let mut bad_aux = false;
                    let mut bad_zeta = false;
                    base.visit(&mut |n| match n.node() {
                        Node::Field(a) if a.name.as_str() == AUX => bad_aux = true,
                        Node::Sym(s) if s.as_str() == WAVE_VAR => bad_zeta = true,
                        _ => {}
                    });
                    if bad_aux {
                        return Err(CollectError::NonPolynomialAux(term.to_string()));
                    }
                    if bad_zeta && mode == CollectMode::Strict {
                        return Err(CollectError::NonPolynomialZeta(term.to_string()));
                    }
                    rest.push(f.clone());
                }
            }
        }
        groups.entry(key).or_default().push(Expr::mul_all(rest));
    }
    Ok(groups
        .into_iter()
        .map(|(k, v)| (k, Expr::add_all(v)))
        .filter(|(_, c)| !c.is_zero())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: &str) -> Expr {
        Expr::sym(n)
    }

    fn sample() -> Expr {
        let z = Expr::deriv_atom("z", "zeta", 0);
        let z1 = Expr::deriv_atom("z", "zeta", 1);
        Expr::int(2) * s("zeta") * z1 * s("g1") + s("lambda") * z * s("g1")
    }

    #[test]
    fn paper_mode_keeps_zeta_in_coefficients() {
        let c = collect(&sample(), CollectMode::Paper).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[&MonomialKey::new(0, 1, 0)], Expr::int(2) * s("zeta") * s("g1"));
        assert_eq!(c[&MonomialKey::new(1, 0, 0)], s("lambda") * s("g1"));
    }

    #[test]
    fn strict_mode_splits_zeta() {
        let c = collect(&sample(), CollectMode::Strict).unwrap();
        assert_eq!(c[&MonomialKey::new(0, 1, 1)], Expr::int(2) * s("g1"));
        assert_eq!(c[&MonomialKey::new(1, 0, 0)], s("lambda") * s("g1"));
    }

    #[test]
    fn second_derivative_rejected() {
        let e = Expr::deriv_atom("z", "zeta", 2) * s("g1");
        assert_eq!(collect(&e, CollectMode::Paper), Err(CollectError::MissingRewrite(2)));
    }

    #[test]
    fn recombination_restores_input() {
        let e = sample() + s("alpha") * s("zeta").powi(2);
        for mode in [CollectMode::Strict, CollectMode::Paper] {
            let c = collect(&e, mode).unwrap();
            let back = Expr::add_all(c.iter().map(|(k, v)| k.monomial() * v));
            assert_eq!(back, e);
        }
    }
}
