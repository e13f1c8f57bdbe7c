//! Numeric evaluation over `f64` or truncated bivariate Taylor jets.
//!
//! A [`Jet`] carries the Taylor coefficients of a function of two variables up
//! to a fixed total order, so evaluating an expression on jets yields exact
//! (to rounding) partial derivatives without symbolic expansion.

use super::{Expr, FieldAtom, Func, KummerKind, Node};
use crate::specfun;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("cannot evaluate field `{0}` numerically")]
    Field(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Numeric types an [`Expr`] can be evaluated over.
pub trait Scalar: Clone + Sized + Send + Sync {
    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;
    /// Highest Taylor order carried (0 for plain numbers).
    fn order(&self) -> usize;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    /// `f(self)` given `derivs[k] = f^(k)(self.value())` for k = 0..=order.
    fn compose(&self, derivs: &[f64]) -> Self;
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn order(&self) -> usize {
        0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn compose(&self, derivs: &[f64]) -> Self {
        derivs[0]
    }
}

/// Truncated Taylor polynomial in two variables (x, t).
/// Coefficient `(i, j)` is `d^{i+j} f / dx^i dt^j / (i! j!)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: Vec<f64>,
}

impl Jet {
    fn idx(order: usize, i: usize, j: usize) -> usize {
        i * (order + 1) + j
    }

    fn zeros(order: usize) -> Self {
        Jet {
            order,
            c: vec![0.0; (order + 1) * (order + 1)],
        }
    }

    /// Independent variable `axis` (0 = x, 1 = t) at `value`.
    pub fn variable(value: f64, axis: usize, order: usize) -> Self {
        let mut j = Jet::zeros(order);
        j.c[0] = value;
        if order > 0 {
            let k = if axis == 0 { Jet::idx(order, 1, 0) } else { Jet::idx(order, 0, 1) };
            j.c[k] = 1.0;
        }
        j
    }

    fn promote(&self, order: usize) -> Jet {
        if self.order == order {
            return self.clone();
        }
        let mut out = Jet::zeros(order);
        for i in 0..=self.order.min(order) {
            for j in 0..=(self.order.min(order) - i) {
                out.c[Jet::idx(order, i, j)] = self.c[Jet::idx(self.order, i, j)];
            }
        }
        out
    }

    /// Partial derivative d^{i+j}/dx^i dt^j at the expansion point.
    pub fn derivative(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            return 0.0;
        }
        self.c[Jet::idx(self.order, i, j)] * factorial(i) * factorial(j)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

impl Scalar for Jet {
    fn constant(v: f64) -> Self {
        Jet { order: 0, c: vec![v] }
    }
    fn value(&self) -> f64 {
        self.c[0]
    }
    fn order(&self) -> usize {
        self.order
    }
    fn add(&self, o: &Self) -> Self {
        let n = self.order.max(o.order);
        let (a, b) = (self.promote(n), o.promote(n));
        Jet {
            order: n,
            c: a.c.iter().zip(&b.c).map(|(x, y)| x + y).collect(),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        let n = self.order.max(o.order);
        if self.order == 0 {
            return o.promote(n).scale(self.c[0]);
        }
        if o.order == 0 {
            return self.promote(n).scale(o.c[0]);
        }
        let (a, b) = (self.promote(n), o.promote(n));
        let mut out = Jet::zeros(n);
        for i1 in 0..=n {
            for j1 in 0..=(n - i1) {
                let av = a.c[Jet::idx(n, i1, j1)];
                if av == 0.0 {
                    continue;
                }
                for i2 in 0..=(n - i1 - j1) {
                    for j2 in 0..=(n - i1 - j1 - i2) {
                        out.c[Jet::idx(n, i1 + i2, j1 + j2)] += av * b.c[Jet::idx(n, i2, j2)];
                    }
                }
            }
        }
        out
    }
    fn scale(&self, s: f64) -> Self {
        Jet {
            order: self.order,
            c: self.c.iter().map(|x| x * s).collect(),
        }
    }
    fn compose(&self, derivs: &[f64]) -> Self {
        let n = self.order;
        let mut delta = self.clone();
        delta.c[0] = 0.0;
        let mut out = Jet::constant(derivs[0]).promote(n);
        let mut power = Jet::constant(1.0).promote(n);
        let mut fact = 1.0;
        for (k, d) in derivs.iter().enumerate().skip(1).take(n) {
            power = power.mul(&delta);
            fact *= k as f64;
            out = out.add(&power.scale(d / fact));
        }
        out
    }
}

/// Symbol lookup for evaluation. The symbol `pi` falls back to π.
pub trait VarEnv<T> {
    fn symbol(&self, name: &str) -> Option<T>;
    fn field(&self, _atom: &FieldAtom) -> Option<T> {
        None
    }
}

impl<T: Clone> VarEnv<T> for BTreeMap<String, T> {
    fn symbol(&self, name: &str) -> Option<T> {
        self.get(name).cloned()
    }
}

impl<T, F: Fn(&str) -> Option<T>> VarEnv<T> for F {
    fn symbol(&self, name: &str) -> Option<T> {
        self(name)
    }
}

pub fn eval<T: Scalar>(e: &Expr, env: &dyn VarEnv<T>) -> Result<T, EvalError> {
    match e.node() {
        Node::Num(q) => Ok(T::constant(rational_to_f64(q))),
        Node::Sym(s) => env.symbol(s.as_str()).map_or_else(
            || {
                if s.as_str() == "pi" {
                    Ok(T::constant(std::f64::consts::PI))
                } else {
                    Err(EvalError::Unbound(s.as_str().to_string()))
                }
            },
            Ok,
        ),
        Node::Field(f) => env
            .field(f)
            .ok_or_else(|| EvalError::Field(Expr::field(f.clone()).to_string())),
        Node::Add(ts) => {
            let mut acc = eval(&ts[0], env)?;
            for t in &ts[1..] {
                acc = acc.add(&eval(t, env)?);
            }
            Ok(acc)
        }
        Node::Mul(fs) => {
            let mut acc = eval(&fs[0], env)?;
            for f in &fs[1..] {
                acc = acc.mul(&eval(f, env)?);
            }
            Ok(acc)
        }
        Node::Pow(b, k) => powi(&eval(b, env)?, *k),
        Node::Func(f, args) => eval_func(*f, args, env),
    }
}

pub(crate) fn rational_to_f64(q: &super::Rational) -> f64 {
    use num::ToPrimitive;
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

fn powi<T: Scalar>(x: &T, k: i64) -> Result<T, EvalError> {
    let base = if k < 0 { recip(x)? } else { x.clone() };
    let mut e = k.unsigned_abs();
    let mut acc = T::constant(1.0);
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.mul(&sq);
        }
        e >>= 1;
        if e > 0 {
            sq = sq.mul(&sq);
        }
    }
    Ok(acc)
}

fn recip<T: Scalar>(x: &T) -> Result<T, EvalError> {
    let v = x.value();
    if v == 0.0 {
        return Err(EvalError::Domain("division by zero".into()));
    }
    let n = x.order();
    let mut d = Vec::with_capacity(n + 1);
    // d^k/dv^k v^-1 = (-1)^k k! v^{-k-1}
    let mut f = 1.0 / v;
    for k in 0..=n {
        d.push(f);
        f *= -((k + 1) as f64) / v;
    }
    Ok(x.compose(&d))
}

/// Derivative sequence of v^p for real p.
fn real_power_derivs(v: f64, p: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut coef = 1.0;
    for k in 0..=n {
        out.push(coef * v.powf(p - k as f64));
        coef *= p - k as f64;
    }
    out
}

fn eval_func<T: Scalar>(f: Func, args: &[Expr], env: &dyn VarEnv<T>) -> Result<T, EvalError> {
    match f {
        Func::Sin | Func::Cos => {
            let x = eval(&args[0], env)?;
            let v = x.value();
            let cycle = if f == Func::Sin {
                [v.sin(), v.cos(), -v.sin(), -v.cos()]
            } else {
                [v.cos(), -v.sin(), -v.cos(), v.sin()]
            };
            let d: Vec<f64> = (0..=x.order()).map(|k| cycle[k % 4]).collect();
            Ok(x.compose(&d))
        }
        Func::Exp => {
            let x = eval(&args[0], env)?;
            let e = x.value().exp();
            Ok(x.compose(&vec![e; x.order() + 1]))
        }
        Func::Ln => {
            let x = eval(&args[0], env)?;
            let v = x.value();
            if v <= 0.0 {
                return Err(EvalError::Domain(format!("ln of nonpositive value {v}")));
            }
            let mut d = vec![v.ln()];
            let mut c = 1.0;
            for k in 1..=x.order() {
                d.push(c * v.powi(-(k as i32)));
                c *= -(k as f64);
            }
            Ok(x.compose(&d))
        }
        Func::Sqrt => {
            let x = eval(&args[0], env)?;
            let v = x.value();
            if v < 0.0 {
                return Err(EvalError::Domain(format!("sqrt of negative value {v}")));
            }
            if v == 0.0 && x.order() > 0 {
                return Err(EvalError::Domain("sqrt is not differentiable at 0".into()));
            }
            Ok(x.compose(&real_power_derivs(v, 0.5, x.order())))
        }
        Func::Pow => {
            let b = eval(&args[0], env)?;
            let e = eval(&args[1], env)?;
            let bv = b.value();
            if e.order() == 0 || is_constant(&e) {
                let p = e.value();
                if bv < 0.0 && p.fract() != 0.0 {
                    return Err(EvalError::Domain(format!("{bv}^{p} is not real")));
                }
                if p.fract() == 0.0 && p.abs() < 64.0 {
                    return powi(&b, p as i64);
                }
                return Ok(b.compose(&real_power_derivs(bv, p, b.order())));
            }
            if bv <= 0.0 {
                return Err(EvalError::Domain(format!("{bv}^(variable exponent) is not real")));
            }
            let lnb = b.compose(&{
                let mut d = vec![bv.ln()];
                let mut c = 1.0;
                for k in 1..=b.order() {
                    d.push(c * bv.powi(-(k as i32)));
                    c *= -(k as f64);
                }
                d
            });
            let prod = e.mul(&lnb);
            let ev = prod.value().exp();
            Ok(prod.compose(&vec![ev; prod.order() + 1]))
        }
        Func::Kummer { kind, da, db, dx } => {
            let a = eval(&args[0], env)?;
            let b = eval(&args[1], env)?;
            let x = eval(&args[2], env)?;
            if !is_constant(&a) || !is_constant(&b) {
                return Err(EvalError::Domain(
                    "Kummer parameters must not vary with the jet variables".into(),
                ));
            }
            let (av, bv, xv) = (a.value(), b.value(), x.value());
            let mut d = Vec::with_capacity(x.order() + 1);
            for k in 0..=x.order() {
                d.push(kummer_value(kind, da, db, dx as usize + k, av, bv, xv)?);
            }
            Ok(x.compose(&d))
        }
    }
}

fn is_constant<T: Scalar>(x: &T) -> bool {
    x.order() == 0
}

/// d^dx/dx^dx of the Kummer function, with parameter derivatives by central
/// differences.
pub(crate) fn kummer_value(
    kind: KummerKind,
    da: u8,
    db: u8,
    dx: usize,
    a: f64,
    b: f64,
    x: f64,
) -> Result<f64, EvalError> {
    const STEP: f64 = 1e-5;
    if da > 0 {
        let h = STEP * a.abs().max(1.0);
        let p = kummer_value(kind, da - 1, db, dx, a + h, b, x)?;
        let m = kummer_value(kind, da - 1, db, dx, a - h, b, x)?;
        return Ok((p - m) / (2.0 * h));
    }
    if db > 0 {
        let h = STEP * b.abs().max(1.0);
        let p = kummer_value(kind, da, db - 1, dx, a, b + h, x)?;
        let m = kummer_value(kind, da, db - 1, dx, a, b - h, x)?;
        return Ok((p - m) / (2.0 * h));
    }
    let k = dx as f64;
    let dom = |e: specfun::SpecFunError| EvalError::Domain(e.to_string());
    match kind {
        KummerKind::M => {
            let coef = specfun::pochhammer(a, dx) / specfun::pochhammer(b, dx);
            if coef == 0.0 {
                return Ok(0.0);
            }
            Ok(coef * specfun::kummer_m(a + k, b + k, x).map_err(dom)?)
        }
        KummerKind::U => {
            let coef = specfun::pochhammer(a, dx) * if dx.is_multiple_of(2) { 1.0 } else { -1.0 };
            if coef == 0.0 {
                return Ok(0.0);
            }
            Ok(coef * specfun::kummer_u(a + k, b + k, x).map_err(dom)?)
        }
    }
}
