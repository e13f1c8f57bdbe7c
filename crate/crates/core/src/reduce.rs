//! Travelling-wave reduction u(x, t) = u(zeta), zeta = mu*(x + sigma*c*t).

use crate::expr::{substitute_fields, substitute_symbols, Expr, FieldAtom, Func, Node, Symbol, WAVE_VAR};
use crate::parser::ModelSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct TravelingWaveFrame {
    pub c: Expr,
    pub mu: Expr,
    /// -1 gives zeta = mu*(x - c*t), +1 gives zeta = mu*(x + c*t).
    pub sigma: i8,
}

impl Default for TravelingWaveFrame {
    fn default() -> Self {
        TravelingWaveFrame {
            c: Expr::sym("c"),
            mu: Expr::sym("mu"),
            sigma: -1,
        }
    }
}

impl TravelingWaveFrame {
    pub fn with_sigma(sigma: i8) -> Self {
        TravelingWaveFrame {
            sigma,
            ..Self::default()
        }
    }

    /// zeta as an expression in x and t.
    pub fn zeta(&self) -> Expr {
        self.mu.clone() * (Expr::sym("x") + Expr::int(self.sigma as i64) * self.c.clone() * Expr::sym("t"))
    }
}

/// Serializable frame summary (symbol names or numbers rendered as text).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameInfo {
    pub c: String,
    pub mu: String,
    pub sigma: i8,
}

impl From<&TravelingWaveFrame> for FrameInfo {
    fn from(f: &TravelingWaveFrame) -> Self {
        FrameInfo {
            c: f.c.to_string(),
            mu: f.mu.to_string(),
            sigma: f.sigma,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReducedOde {
    /// Left-hand side in u(zeta) and its derivatives.
    pub lhs: Expr,
    pub frame: TravelingWaveFrame,
    pub model: ModelSpec,
    /// Highest derivative order of u present.
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReduceError {
    #[error("exponent `{0}` must be bound to an integer before reduction")]
    UnboundExponent(String),
    #[error("frame parameter `{0}` is zero")]
    ZeroFrame(&'static str),
    #[error("sigma must be -1 or +1, got {0}")]
    BadSigma(i8),
    #[error("reduced equation still depends on `{0}`")]
    ResidualVariable(String),
}

/// u(zeta) or one of its derivatives.
pub fn ode_field(unknown: &str, k: usize) -> Expr {
    Expr::deriv_atom(unknown, WAVE_VAR, k)
}

/// Bind the nonlinearity exponent and check none stays symbolic on u.
fn bind_exponent(m: &ModelSpec) -> Result<Expr, ReduceError> {
    let mut lhs = m.lhs.clone();
    if let Some(n) = m.n {
        let mut map = BTreeMap::new();
        map.insert(Symbol::new("n"), Expr::int(n));
        lhs = substitute_symbols(&lhs, &map);
    }
    let mut bad: Option<String> = None;
    lhs.visit(&mut |e| {
        if let Node::Func(Func::Pow, args) = e.node() {
            if !args[0].fields().is_empty() && bad.is_none() {
                bad = Some(args[1].to_string());
            }
        }
    });
    match bad {
        Some(s) => Err(ReduceError::UnboundExponent(s)),
        None => Ok(lhs),
    }
}

/// Replace d^(nx+nt) u / dx^nx dt^nt by mu^nx (sigma c mu)^nt u^(nx+nt)(zeta).
pub fn apply_wave_transform(m: &ModelSpec, f: &TravelingWaveFrame) -> Result<ReducedOde, ReduceError> {
    if f.c.is_zero() {
        return Err(ReduceError::ZeroFrame("c"));
    }
    if f.mu.is_zero() {
        return Err(ReduceError::ZeroFrame("mu"));
    }
    if f.sigma != 1 && f.sigma != -1 {
        return Err(ReduceError::BadSigma(f.sigma));
    }
    let lhs = bind_exponent(m)?;
    let dt = Expr::int(f.sigma as i64) * f.c.clone() * f.mu.clone();
    let mut order = 0;
    let out = substitute_fields(&lhs, &mut |a: &FieldAtom| {
        if a.name.as_str() != m.unknown {
            return None;
        }
        let nx = a.count("x");
        let nt = a.count("t");
        order = order.max(nx + nt);
        Some(Expr::pow(&f.mu, nx as i64) * Expr::pow(&dt, nt as i64) * ode_field(&m.unknown, nx + nt))
    });
    for v in &m.vars {
        if out.contains_symbol(v) {
            return Err(ReduceError::ResidualVariable(v.clone()));
        }
    }
    Ok(ReducedOde {
        lhs: out,
        frame: f.clone(),
        model: m.clone(),
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_equation, parse_expr, Context, Scope};

    fn ode(s: &str) -> Expr {
        parse_expr(s, &Scope::open(Context::Ode)).unwrap()
    }

    #[test]
    fn klein_gordon_generic_n() {
        let mut m = parse_equation("u_tt - a^2*u_xx + alpha*u - beta*u^n = 0", &["a", "alpha", "beta", "n"]).unwrap();
        assert!(matches!(
            apply_wave_transform(&m, &TravelingWaveFrame::default()),
            Err(ReduceError::UnboundExponent(_))
        ));
        m.n = Some(3);
        let r = apply_wave_transform(&m, &TravelingWaveFrame::default()).unwrap();
        assert_eq!(r.lhs, ode("mu^2*(c^2 - a^2)*u'' + alpha*u - beta*u^3"));
        assert_eq!(r.order, 2);
    }

    #[test]
    fn single_time_derivative() {
        let m = parse_equation("u_t = 0", &[] as &[&str]).unwrap();
        let r = apply_wave_transform(&m, &TravelingWaveFrame::default()).unwrap();
        assert_eq!(r.lhs, ode("-c*mu*u'"));
    }

    #[test]
    fn bbm_both_signs() {
        let m = parse_equation("u_t + u_x + a*u^2*u_x + u_xxx = 0", &["a"]).unwrap();
        let r = apply_wave_transform(&m, &TravelingWaveFrame::default()).unwrap();
        assert_eq!(r.lhs, ode("mu*(1 - c)*u' + a*mu*u^2*u' + mu^3*u'''"));
        let r = apply_wave_transform(&m, &TravelingWaveFrame::with_sigma(1)).unwrap();
        assert_eq!(r.lhs, ode("mu*(1 + c)*u' + a*mu*u^2*u' + mu^3*u'''"));
    }

    #[test]
    fn zero_frame_rejected() {
        let m = parse_equation("u_t = 0", &[] as &[&str]).unwrap();
        let f = TravelingWaveFrame {
            c: Expr::zero(),
            ..TravelingWaveFrame::default()
        };
        assert_eq!(apply_wave_transform(&m, &f).unwrap_err(), ReduceError::ZeroFrame("c"));
    }

    #[test]
    fn explicit_coordinates_rejected() {
        let m = parse_equation("u_t + x*u = 0", &[] as &[&str]).unwrap();
        assert!(matches!(
            apply_wave_transform(&m, &TravelingWaveFrame::default()),
            Err(ReduceError::ResidualVariable(_))
        ));
    }
}
