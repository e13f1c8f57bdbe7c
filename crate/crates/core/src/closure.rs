//! Closure assumptions on z' and the z(zeta) formulas that go with them.
//!
//! For the constant and trigonometric cases the assumed z' is used as
//! printed; it is not the derivative of the accompanying z. The gap is
//! measured, not repaired.

use crate::ansatz::{aux, AlgebraicSystem};
use crate::expr::{
    collect, differentiate, substitute, CollectError, CollectMode, Expr, Symbol, WAVE_VAR,
};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureKind {
    /// z' = h.
    Constant,
    /// z from Kummer functions; z' is its true derivative.
    Kummer,
    /// z' = A sin(zeta) + B cos(zeta).
    Trig,
}

impl fmt::Display for ClosureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClosureKind::Constant => "constant",
            ClosureKind::Kummer => "kummer",
            ClosureKind::Trig => "trig",
        })
    }
}

impl std::str::FromStr for ClosureKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "constant" | "1" => Ok(ClosureKind::Constant),
            "kummer" | "2" => Ok(ClosureKind::Kummer),
            "trig" | "3" => Ok(ClosureKind::Trig),
            other => Err(format!("unknown closure case `{other}` (expected constant|kummer|trig)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosureCase {
    pub kind: ClosureKind,
    pub z: Expr,
    /// The z' used when collecting (assumed form for constant/trig).
    pub dz: Expr,
    /// Symbols this case adds to the pool of possible unknowns.
    pub extra_unknowns: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClosureError {
    #[error("lambda = 0 is excluded for the constant-derivative closure")]
    LambdaZero,
    #[error("lambda = -1 is excluded for the trigonometric closure")]
    LambdaMinusOne,
    #[error("lambda = {0} < 0 makes exp(zeta*sqrt(lambda)) complex")]
    Complex(f64),
}

fn s(name: &str) -> Expr {
    Expr::sym(name)
}

fn zeta() -> Expr {
    s(WAVE_VAR)
}

/// C2 exp(zeta sqrt(lambda)) + C1 exp(-zeta sqrt(lambda)).
fn exponential_pair(lambda: &Expr) -> Expr {
    let r = zeta() * lambda.sqrt();
    s("C2") * r.exp() + s("C1") * r.neg().exp()
}

/// Kummer parameter 1/2 + lambda/4 of the odd solution.
pub fn kummer_a(lambda: &Expr) -> Expr {
    Expr::rational(1, 2) + lambda.clone() / Expr::int(4)
}

pub fn closure_formula(kind: ClosureKind, lambda: &Expr) -> Result<ClosureCase, ClosureError> {
    match kind {
        ClosureKind::Constant => {
            if lambda.is_zero() {
                return Err(ClosureError::LambdaZero);
            }
            let z = exponential_pair(lambda) - Expr::int(2) * s("h") * zeta() / lambda.clone();
            Ok(ClosureCase {
                kind,
                z,
                dz: s("h"),
                extra_unknowns: vec![Symbol::new("h")],
            })
        }
        ClosureKind::Kummer => {
            let a = kummer_a(lambda);
            let b = Expr::rational(3, 2);
            let x = zeta().powi(2);
            let z = s("C1") * zeta() * Expr::kummer_m(a.clone(), b.clone(), x.clone())
                + s("C2") * zeta() * Expr::kummer_u(a, b, x);
            let dz = differentiate(&z, WAVE_VAR);
            Ok(ClosureCase {
                kind,
                z,
                dz,
                extra_unknowns: Vec::new(),
            })
        }
        ClosureKind::Trig => {
            let l1 = lambda.clone() + Expr::one();
            if l1.is_zero() {
                return Err(ClosureError::LambdaMinusOne);
            }
            let (a, b) = (s("A"), s("B"));
            let num = (Expr::int(-2) * b.clone() * l1.clone() * zeta() - Expr::int(4) * a.clone()) * zeta().cos()
                - Expr::int(2) * (a.clone() * l1.clone() * zeta() - Expr::int(2) * b.clone()) * zeta().sin();
            let z = exponential_pair(lambda) - num / l1.powi(2);
            Ok(ClosureCase {
                kind,
                z,
                dz: a * zeta().sin() + b * zeta().cos(),
                extra_unknowns: vec![Symbol::new("A"), Symbol::new("B")],
            })
        }
    }
}

impl ClosureCase {
    /// z with the exponential (homogeneous) part removed.
    pub fn particular_part(&self) -> Expr {
        let zero = Expr::zero();
        let e = substitute(&self.z, &s("C1"), &zero);
        substitute(&e, &s("C2"), &zero)
    }

    /// d/dzeta of z minus the z' used for collection.
    pub fn derivative_gap(&self) -> Expr {
        differentiate(&self.z, WAVE_VAR) - self.dz.clone()
    }

    /// Whether numeric lambda is admissible for this case given the
    /// integration constants (exponentials need lambda > 0).
    pub fn check_lambda(&self, lambda: f64, c1: f64, c2: f64) -> Result<(), ClosureError> {
        match self.kind {
            ClosureKind::Kummer => Ok(()),
            _ if lambda < 0.0 && (c1 != 0.0 || c2 != 0.0) => Err(ClosureError::Complex(lambda)),
            _ => Ok(()),
        }
    }
}

/// z'' - 2 zeta z' - lambda z for an explicit z(zeta), using its true
/// derivatives.
pub fn hermite_residual(z: &Expr, lambda: &Expr) -> Expr {
    let d1 = differentiate(z, WAVE_VAR);
    let d2 = differentiate(&d1, WAVE_VAR);
    d2 - Expr::int(2) * zeta() * d1 - lambda.clone() * z.clone()
}

/// Paper-mode systems: replace z' by the closure's z' and regroup by powers
/// of z. Strict systems are returned unchanged.
pub fn apply_closure(sys: &AlgebraicSystem, case: &ClosureCase) -> Result<AlgebraicSystem, CollectError> {
    if sys.mode == CollectMode::Strict {
        return Ok(sys.clone());
    }
    let source = substitute(&sys.source, &aux(1), &case.dz);
    let groups = collect(&source, CollectMode::Paper)?;
    Ok(AlgebraicSystem {
        equations: groups.into_iter().collect(),
        unknowns: sys.unknowns.clone(),
        mode: sys.mode,
        source,
    })
}
