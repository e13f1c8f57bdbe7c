//! Balance exponent, polynomial ansatz in z, Hermite rewriting and assembly
//! of the coefficient system.
//!
//! Degrees follow the usual bookkeeping deg(u) = N, deg(u^(k)) = N + k,
//! even though z' is not itself polynomial in z.

use crate::expr::{
    collect, differentiate, substitute, substitute_fields, CollectError, CollectMode, Expr,
    FieldAtom, MonomialKey, Node, Rational, Symbol, AUX, WAVE_VAR,
};
use crate::reduce::ReducedOde;
use num::{Signed, ToPrimitive};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BalanceError {
    #[error("balance gives N = {0}, which is not a positive integer")]
    NotPositiveInteger(Rational),
    #[error("equation has no nonlinear term in u")]
    Linear,
    #[error("equation has no linear derivative term in u")]
    NoLinearDerivative,
    #[error("term `{0}` is not polynomial in u and its derivatives")]
    NonPolynomial(String),
}

/// (total u-degree a, total derivative weight b) of one term: degree a*N + b.
fn term_weight(t: &Expr, unknown: &str) -> Result<(i64, i64), BalanceError> {
    let factors: Vec<Expr> = match t.node() {
        Node::Mul(fs) => fs.clone(),
        _ => vec![t.clone()],
    };
    let (mut a, mut b) = (0i64, 0i64);
    for f in factors {
        let (base, k) = match f.node() {
            Node::Pow(b, k) => (b.clone(), *k),
            _ => (f.clone(), 1),
        };
        match base.node() {
            Node::Field(fa) if fa.name.as_str() == unknown => {
                if k < 0 {
                    return Err(BalanceError::NonPolynomial(t.to_string()));
                }
                a += k;
                b += k * fa.order() as i64;
            }
            _ => {
                if base.fields().iter().any(|fa| fa.name.as_str() == unknown) {
                    return Err(BalanceError::NonPolynomial(t.to_string()));
                }
            }
        }
    }
    Ok((a, b))
}

/// Balance the highest linear derivative against the strongest nonlinearity.
pub fn compute_balance(ode: &ReducedOde) -> Result<usize, BalanceError> {
    let unknown = ode.model.unknown.as_str();
    let mut linear: Option<i64> = None;
    let mut nonlinear: Option<(i64, i64)> = None;
    for t in ode.lhs.terms() {
        let (a, b) = term_weight(&t, unknown)?;
        if a == 1 && b > 0 {
            linear = Some(linear.map_or(b, |m| m.max(b)));
        } else if a >= 2 {
            nonlinear = Some(nonlinear.map_or((a, b), |best| best.max((a, b))));
        }
    }
    let m = linear.ok_or(BalanceError::NoLinearDerivative)?;
    let (a, b) = nonlinear.ok_or(BalanceError::Linear)?;
    let n = Rational::new((m - b).into(), (a - 1).into());
    if !n.is_integer() || !n.is_positive() {
        return Err(BalanceError::NotPositiveInteger(n));
    }
    Ok(n.to_integer().to_usize().unwrap_or(0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzSpec {
    pub n: usize,
    pub coeffs: Vec<Symbol>,
    /// g0 + g1*z + ... + gN*z^N.
    pub expr: Expr,
    pub lambda: Symbol,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnsatzError {
    #[error("ansatz order must be at least 1, got {0}")]
    Order(usize),
}

pub fn coefficient_symbol(i: usize) -> Symbol {
    Symbol::new(&format!("g{i}"))
}

pub fn aux(k: usize) -> Expr {
    Expr::deriv_atom(AUX, WAVE_VAR, k)
}

pub fn build_ansatz(n: usize) -> Result<AnsatzSpec, AnsatzError> {
    if n < 1 {
        return Err(AnsatzError::Order(n));
    }
    let coeffs: Vec<Symbol> = (0..=n).map(coefficient_symbol).collect();
    let expr = Expr::add_all(
        coeffs
            .iter()
            .enumerate()
            .map(|(i, g)| Expr::symbol(g.clone()) * Expr::pow(&aux(0), i as i64))
            .collect::<Vec<_>>(),
    );
    Ok(AnsatzSpec {
        n,
        coeffs,
        expr,
        lambda: Symbol::new("lambda"),
    })
}

/// z^(k) expressed through z and z' using z'' = 2 zeta z' + lambda z.
pub fn hermite_derivative(k: usize) -> Expr {
    let second = Expr::int(2) * Expr::sym(WAVE_VAR) * aux(1) + Expr::sym("lambda") * aux(0);
    let mut cur = match k {
        0 => return aux(0),
        1 => return aux(1),
        _ => second.clone(),
    };
    for _ in 2..k {
        cur = substitute(&differentiate(&cur, WAVE_VAR), &aux(2), &second);
    }
    cur
}

/// Eliminate every z-derivative of order two or more.
pub fn hermite_rewrite(e: &Expr) -> Expr {
    let mut table: BTreeMap<usize, Expr> = BTreeMap::new();
    substitute_fields(e, &mut |a: &FieldAtom| {
        if a.name.as_str() != AUX || a.order() < 2 {
            return None;
        }
        Some(
            table
                .entry(a.order())
                .or_insert_with(|| hermite_derivative(a.order()))
                .clone(),
        )
    })
}

/// Replace u(zeta) and its derivatives by the ansatz and its derivatives.
pub fn substitute_ansatz(ode: &ReducedOde, spec: &AnsatzSpec) -> Expr {
    let mut derivs: Vec<Expr> = vec![spec.expr.clone()];
    substitute_fields(&ode.lhs, &mut |a: &FieldAtom| {
        if a.name.as_str() != ode.model.unknown {
            return None;
        }
        while derivs.len() <= a.order() {
            let next = differentiate(derivs.last().unwrap(), WAVE_VAR);
            derivs.push(next);
        }
        Some(derivs[a.order()].clone())
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraicSystem {
    pub equations: Vec<(MonomialKey, Expr)>,
    pub unknowns: Vec<Symbol>,
    pub mode: CollectMode,
    /// Rewritten ODE in z, z' (and zeta) the equations were collected from.
    pub source: Expr,
}

impl AlgebraicSystem {
    pub fn with_unknowns(mut self, unknowns: Vec<Symbol>) -> Self {
        self.unknowns = unknowns;
        self
    }

    /// Monomial-weighted sum of the equations.
    pub fn recombine(&self) -> Expr {
        Expr::add_all(
            self.equations
                .iter()
                .map(|(k, e)| k.monomial() * e)
                .collect::<Vec<_>>(),
        )
    }

    pub fn equation(&self, key: MonomialKey) -> Option<&Expr> {
        self.equations.iter().find(|(k, _)| *k == key).map(|(_, e)| e)
    }
}

/// Substitute the ansatz, rewrite with the Hermite equation and collect.
pub fn assemble_system(
    ode: &ReducedOde,
    spec: &AnsatzSpec,
    mode: CollectMode,
) -> Result<AlgebraicSystem, CollectError> {
    let source = hermite_rewrite(&substitute_ansatz(ode, spec));
    let groups = collect(&source, mode)?;
    Ok(AlgebraicSystem {
        equations: groups.into_iter().collect(),
        unknowns: spec.coeffs.clone(),
        mode,
        source,
    })
}

/// Coefficients of z^i only, with z' left inside them (the grouping used
/// for printed systems).
pub fn group_by_z(e: &Expr) -> Result<BTreeMap<u32, Expr>, CollectError> {
    let groups = collect(e, CollectMode::Paper)?;
    let mut out: BTreeMap<u32, Vec<Expr>> = BTreeMap::new();
    for (k, c) in groups {
        out.entry(k.z)
            .or_default()
            .push(Expr::pow(&aux(1), k.dz as i64) * c);
    }
    Ok(out
        .into_iter()
        .map(|(k, v)| (k, Expr::add_all(v)))
        .filter(|(_, v)| !v.is_zero())
        .collect())
}
