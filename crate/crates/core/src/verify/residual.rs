//! Residuals of the Hermite equation and of the original PDE.

use super::fd::{central, mixed, ode_step};
use super::{ResidualReport, VerifyError, MIN_GRID_POINTS};
use crate::ansatz::{aux, build_ansatz};
use crate::closure::{hermite_residual, ClosureCase};
use crate::expr::poly::{coefficients_in, primitive_part};
use crate::expr::{eval, substitute, substitute_fields, substitute_symbols, Expr, FieldAtom, Jet, Scalar, Symbol, WAVE_VAR};
use crate::parser::ModelSpec;
use crate::reduce::TravelingWaveFrame;
use crate::solve::{clear_denominators, univariate_roots};
use rayon::prelude::*;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

type PointFn<T> = Box<dyn Fn(f64) -> Result<T, String> + Sync>;

/// z as a function of zeta, either as plain values (derivatives by finite
/// differences) or with its own first and second derivatives.
pub enum ZEval {
    Values(PointFn<f64>),
    WithDerivatives(PointFn<[f64; 3]>),
}

/// Derivatives of an explicit z(zeta) by Taylor jets; `env` gives every
/// other symbol at the node.
pub fn expr_z(z: &Expr, env: impl Fn(f64) -> Result<BTreeMap<String, f64>, String> + Sync + 'static) -> ZEval {
    let z = z.clone();
    ZEval::WithDerivatives(Box::new(move |zeta| {
        let vals = env(zeta)?;
        let lookup = |name: &str| -> Option<Jet> {
            if name == WAVE_VAR {
                Some(Jet::variable(zeta, 0, 2))
            } else {
                vals.get(name).map(|v| Jet::constant(*v))
            }
        };
        let j = eval(&z, &lookup).map_err(|e| e.to_string())?;
        Ok([j.value(), j.derivative(1, 0), j.derivative(2, 0)])
    }))
}

/// z'' - 2 zeta z' - lambda z over `grid`.
pub fn ode_residual(
    z: &ZEval,
    lambda: &(dyn Fn(f64) -> Result<f64, String> + Sync),
    grid: &[f64],
) -> Result<ResidualReport, VerifyError> {
    if grid.len() < MIN_GRID_POINTS {
        return Err(VerifyError::GridTooSmall(grid.len()));
    }
    let samples: Vec<Result<(f64, f64), String>> = grid
        .par_iter()
        .map(|&zeta| {
            let [v, d1, d2] = match z {
                ZEval::WithDerivatives(f) => f(zeta)?,
                ZEval::Values(f) => {
                    let h = ode_step(zeta);
                    [f(zeta)?, central(&**f, zeta, h, 1)?, central(&**f, zeta, h, 2)?]
                }
            };
            let l = lambda(zeta)?;
            let terms = [d2, -2.0 * zeta * d1, -l * v];
            let r: f64 = terms.iter().sum();
            Ok((r, terms.iter().fold(0.0f64, |m, x| m.max(x.abs()))))
        })
        .collect();
    let report = ResidualReport::from_samples("hermite", &grid_label(grid), &samples, None);
    check_failures(&report)?;
    Ok(report)
}

/// Hermite residual of an explicit z with lambda (and anything else) read
/// from `env` at each node.
pub fn ode_residual_expr(
    z: &Expr,
    lambda: &Expr,
    env: impl Fn(f64) -> Result<BTreeMap<String, f64>, String> + Sync + Clone + 'static,
    grid: &[f64],
) -> Result<ResidualReport, VerifyError> {
    let zf = expr_z(z, env.clone());
    let lambda = lambda.clone();
    let lf = move |zeta: f64| -> Result<f64, String> {
        let mut vals = env(zeta)?;
        vals.insert(WAVE_VAR.to_string(), zeta);
        eval(&lambda, &vals).map_err(|e| e.to_string())
    };
    ode_residual(&zf, &lf, grid)
}

fn grid_label(grid: &[f64]) -> String {
    match (grid.first(), grid.last()) {
        (Some(a), Some(b)) => format!("zeta in [{a}, {b}], {} points", grid.len()),
        _ => "empty".into(),
    }
}

fn check_failures(r: &ResidualReport) -> Result<(), VerifyError> {
    if r.failures * 10 > r.points {
        return Err(VerifyError::Evaluation {
            failed: r.failures,
            total: r.points,
            first: r.first_failure.clone().unwrap_or_default(),
        });
    }
    Ok(())
}

/// A parameter value, free of zeta, on which a symbolic residual vanishes
/// identically. Tried over `candidates` in order.
pub fn find_locus(residual: &Expr, candidates: &[Symbol]) -> Option<(Symbol, Expr)> {
    if residual.size() > LOCUS_MAX_SIZE {
        return None;
    }
    let r = clear_denominators(residual);
    if r.is_zero() {
        return None;
    }
    let p = primitive_part(&r);
    for s in candidates {
        let Some(c) = coefficients_in(&p, s) else { continue };
        if c.len() < 2 {
            continue;
        }
        let Some(roots) = univariate_roots(&c) else { continue };
        for root in roots {
            if root.contains_symbol(WAVE_VAR) {
                continue;
            }
            let mut m = BTreeMap::new();
            m.insert(s.clone(), root.clone());
            if clear_denominators(&substitute_symbols(&p, &m)).is_zero() {
                return Some((s.clone(), root));
            }
        }
    }
    None
}

/// Larger residuals are not searched for a locus.
pub const LOCUS_MAX_SIZE: usize = 400;

/// Hermite residual of a closure's z in symbolic form.
pub fn closure_residual(case: &ClosureCase) -> Expr {
    hermite_residual(&case.z, &Expr::sym("lambda"))
}

/// A branch to evaluate: assignments (possibly depending on zeta, x, t) and
/// named algebraic roots `name -> polynomial in Z`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Candidate {
    pub assignments: BTreeMap<Symbol, Expr>,
    pub roots: BTreeMap<Symbol, Expr>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMethod {
    /// Taylor jets in (x, t).
    Jets,
    /// Nested five-point central differences with step `h`.
    FiniteDifference(f64),
}

pub struct PdeProblem<'a> {
    pub model: &'a ModelSpec,
    pub frame: &'a TravelingWaveFrame,
    pub closure: &'a ClosureCase,
    /// Ansatz order N.
    pub order: usize,
    pub bindings: &'a BTreeMap<String, f64>,
    pub method: DerivativeMethod,
}

/// Per-node values of every symbol, assignments frozen at the node.
struct Resolver<'a> {
    cand: &'a Candidate,
    bindings: &'a BTreeMap<String, f64>,
    zeta: Expr,
    x: f64,
    t: f64,
    cache: RefCell<BTreeMap<String, f64>>,
    active: RefCell<BTreeSet<String>>,
    /// Frame symbols whose assignment depends on zeta; zeta itself uses
    /// their bound values.
    nominal: BTreeSet<String>,
}

/// Whether the assignment of `name` mentions zeta, directly or through
/// other assignments.
fn depends_on_zeta(cand: &Candidate, name: &str, seen: &mut BTreeSet<String>) -> bool {
    if !seen.insert(name.to_string()) {
        return false;
    }
    let Some(e) = cand.assignments.get(&Symbol::new(name)) else {
        return false;
    };
    e.free_symbols()
        .iter()
        .any(|s| s.as_str() == WAVE_VAR || depends_on_zeta(cand, s.as_str(), seen))
}

impl<'a> Resolver<'a> {
    fn new(cand: &'a Candidate, bindings: &'a BTreeMap<String, f64>, zeta: &Expr, x: f64, t: f64) -> Self {
        Resolver {
            cand,
            bindings,
            zeta: zeta.clone(),
            x,
            t,
            cache: RefCell::new(BTreeMap::new()),
            active: RefCell::new(BTreeSet::new()),
            nominal: zeta
                .free_symbols()
                .iter()
                .map(|s| s.as_str().to_string())
                .filter(|s| depends_on_zeta(cand, s, &mut BTreeSet::new()))
                .collect(),
        }
    }

    fn get(&self, name: &str) -> Result<f64, String> {
        if let Some(v) = self.cache.borrow().get(name) {
            return Ok(*v);
        }
        if !self.active.borrow_mut().insert(name.to_string()) {
            return Err(format!("assignment for `{name}` refers to itself"));
        }
        let out = self.compute(name);
        self.active.borrow_mut().remove(name);
        let v = out?;
        self.cache.borrow_mut().insert(name.to_string(), v);
        Ok(v)
    }

    fn eval(&self, e: &Expr) -> Result<f64, String> {
        let err: RefCell<Option<String>> = RefCell::new(None);
        let lookup = |n: &str| -> Option<f64> {
            match self.get(n) {
                Ok(v) => Some(v),
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    None
                }
            }
        };
        let r = eval(e, &lookup);
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        r.map_err(|e| e.to_string())
    }

    fn compute(&self, name: &str) -> Result<f64, String> {
        match name {
            "x" => return Ok(self.x),
            "t" => return Ok(self.t),
            "pi" => return Ok(std::f64::consts::PI),
            _ => {}
        }
        let sym = Symbol::new(name);
        if let Some(v) = self.cand.assignments.get(&sym) {
            return self.eval(v);
        }
        if name == WAVE_VAR {
            if self.nominal.is_empty() {
                return self.eval(&self.zeta);
            }
            let lookup = |n: &str| -> Option<f64> {
                if self.nominal.contains(n) {
                    self.bindings.get(n).copied()
                } else {
                    self.get(n).ok()
                }
            };
            return eval(&self.zeta, &lookup).map_err(|e| e.to_string());
        }
        if let Some(p) = self.cand.roots.get(&sym) {
            return self.root(name, p);
        }
        self.bindings
            .get(name)
            .copied()
            .ok_or_else(|| format!("unbound symbol `{name}`"))
    }

    /// Largest real root of the polynomial in Z at this node.
    fn root(&self, name: &str, p: &Expr) -> Result<f64, String> {
        let z = Symbol::new("Z");
        let coeffs = coefficients_in(p, &z).ok_or_else(|| format!("`{name}` is not polynomial in Z"))?;
        let c = |k: u32| -> Result<f64, String> { coeffs.get(&k).map_or(Ok(0.0), |e| self.eval(e)) };
        let (c0, c1, c2) = (c(0)?, c(1)?, c(2)?);
        let none = || format!("`{name}` has no real value at x = {}, t = {}", self.x, self.t);
        match coeffs.keys().next_back() {
            Some(1) => Ok(-c0 / c1),
            Some(2) => {
                let disc = c1 * c1 - 4.0 * c2 * c0;
                if disc < 0.0 {
                    return Err(none());
                }
                let r = (-c1 + disc.sqrt()) / (2.0 * c2);
                let s = (-c1 - disc.sqrt()) / (2.0 * c2);
                Ok(r.max(s))
            }
            _ => Err(format!("`{name}` must be linear or quadratic in Z")),
        }
    }
}

/// Model LHS with the exponent bound and u-derivatives as plain symbols
/// `u__ij` (i x-derivatives, j t-derivatives).
fn lhs_with_slots(model: &ModelSpec) -> (Expr, Vec<(usize, usize)>) {
    let mut lhs = model.lhs.clone();
    if let Some(n) = model.n {
        lhs = substitute(&lhs, &Expr::sym("n"), &Expr::int(n));
    }
    let mut slots = BTreeSet::new();
    let out = substitute_fields(&lhs, &mut |a: &FieldAtom| {
        if a.name.as_str() != model.unknown {
            return None;
        }
        let (i, j) = (a.count("x"), a.count("t"));
        slots.insert((i, j));
        Some(Expr::sym(&slot_name(i, j)))
    });
    (out, slots.into_iter().collect())
}

fn slot_name(i: usize, j: usize) -> String {
    format!("u__{i}{j}")
}

/// u(zeta) = sum g_i z^i with the closure's z.
pub fn assembled_u(closure: &ClosureCase, order: usize) -> Expr {
    let spec = build_ansatz(order).expect("order >= 1");
    substitute(&spec.expr, &aux(0), &closure.z)
}

/// Residual of the model PDE for `cand` over `grid`.
pub fn pde_residual(
    cand: &Candidate,
    prob: &PdeProblem,
    grid: &super::Grid2d,
) -> Result<ResidualReport, VerifyError> {
    if grid.len() < MIN_GRID_POINTS {
        return Err(VerifyError::GridTooSmall(grid.len()));
    }
    let u = assembled_u(prob.closure, prob.order);
    let (lhs, slots) = lhs_with_slots(prob.model);
    let zeta = prob.frame.zeta();
    check_bound(cand, prob, [&u, &lhs, &zeta])?;
    let max_order = slots.iter().map(|(i, j)| i + j).max().unwrap_or(0);
    let nodes = grid.nodes();
    let samples: Vec<Result<(f64, f64), String>> = nodes
        .par_iter()
        .map(|&(x, t)| {
            let res = Resolver::new(cand, prob.bindings, &zeta, x, t);
            let derivs = node_derivatives(&res, &u, &zeta, &slots, max_order, x, t, prob.method)?;
            let mut env: BTreeMap<String, f64> = BTreeMap::new();
            for s in lhs.free_symbols() {
                let n = s.as_str();
                let v = match derivs.get(n) {
                    Some(v) => *v,
                    None => res.get(n)?,
                };
                env.insert(n.to_string(), v);
            }
            let mut total = 0.0;
            let mut scale = 0.0f64;
            for term in lhs.terms() {
                let v = eval(&term, &env).map_err(|e| e.to_string())?;
                total += v;
                scale = scale.max(v.abs());
            }
            Ok((total, scale))
        })
        .collect();
    let target = match &prob.model.name {
        Some(n) => format!("{n} pde"),
        None => "pde".into(),
    };
    let report = ResidualReport::from_samples(&target, &grid.to_string(), &samples, None);
    Ok(report)
}

/// u(x, t) at each node. Per-node failures are kept in place.
pub fn sample_u(
    cand: &Candidate,
    prob: &PdeProblem,
    nodes: &[(f64, f64)],
) -> Result<Vec<Result<f64, String>>, VerifyError> {
    let u = assembled_u(prob.closure, prob.order);
    let zeta = prob.frame.zeta();
    check_bound(cand, prob, [&u, &zeta, &zeta])?;
    Ok(nodes
        .par_iter()
        .map(|&(x, t)| Resolver::new(cand, prob.bindings, &zeta, x, t).eval(&u))
        .collect())
}

/// Every symbol reachable from `exprs` and the assignments must be bound.
fn check_bound(cand: &Candidate, prob: &PdeProblem, exprs: [&Expr; 3]) -> Result<(), VerifyError> {
    let mut needed: BTreeSet<Symbol> = BTreeSet::new();
    for e in exprs {
        needed.extend(e.free_symbols());
    }
    for v in cand.assignments.values().chain(cand.roots.values()) {
        needed.extend(v.free_symbols());
    }
    let unbound: Vec<String> = needed
        .iter()
        .map(|s| s.as_str().to_string())
        .filter(|n| {
            !matches!(n.as_str(), "x" | "t" | "pi" | "Z" | WAVE_VAR)
                && !n.starts_with("u__")
                && !cand.assignments.contains_key(&Symbol::new(n))
                && !cand.roots.contains_key(&Symbol::new(n))
                && !prob.bindings.contains_key(n)
        })
        .collect();
    if unbound.is_empty() {
        Ok(())
    } else {
        Err(VerifyError::Unbound(unbound))
    }
}

/// Hermite residual of the closure's z at the zeta of each (x, t) node,
/// with lambda and every assignment frozen at the node.
pub fn ode_residual_on_nodes(
    cand: &Candidate,
    prob: &PdeProblem,
    grid: &super::Grid2d,
) -> Result<ResidualReport, VerifyError> {
    if grid.len() < MIN_GRID_POINTS {
        return Err(VerifyError::GridTooSmall(grid.len()));
    }
    let z = &prob.closure.z;
    let zeta = prob.frame.zeta();
    let lambda = Expr::sym("lambda");
    check_bound(cand, prob, [z, &lambda, &zeta])?;
    let samples: Vec<Result<(f64, f64), String>> = grid
        .nodes()
        .par_iter()
        .map(|&(x, t)| {
            let res = Resolver::new(cand, prob.bindings, &zeta, x, t);
            let zv = res.get(WAVE_VAR)?;
            let mut frozen: BTreeMap<String, f64> = BTreeMap::new();
            for s in z.free_symbols() {
                if s.as_str() != WAVE_VAR {
                    frozen.insert(s.as_str().to_string(), res.get(s.as_str())?);
                }
            }
            let l = res.get("lambda")?;
            let lookup = |name: &str| -> Option<Jet> {
                if name == WAVE_VAR {
                    Some(Jet::variable(zv, 0, 2))
                } else {
                    frozen.get(name).map(|v| Jet::constant(*v))
                }
            };
            let j = eval(z, &lookup).map_err(|e| e.to_string())?;
            let terms = [j.derivative(2, 0), -2.0 * zv * j.derivative(1, 0), -l * j.value()];
            Ok((terms.iter().sum(), terms.iter().fold(0.0f64, |m, x| m.max(x.abs()))))
        })
        .collect();
    Ok(ResidualReport::from_samples(
        "hermite",
        &format!("{grid} (zeta at nodes)"),
        &samples,
        None,
    ))
}

#[allow(clippy::too_many_arguments)]
fn node_derivatives(
    res: &Resolver,
    u: &Expr,
    zeta: &Expr,
    slots: &[(usize, usize)],
    max_order: usize,
    x: f64,
    t: f64,
    method: DerivativeMethod,
) -> Result<BTreeMap<String, f64>, String> {
    // Freeze every symbol other than x, t and zeta at this node.
    let mut frozen: BTreeMap<String, f64> = BTreeMap::new();
    for s in u.free_symbols().into_iter().chain(zeta.free_symbols()) {
        let n = s.as_str();
        if matches!(n, "x" | "t" | WAVE_VAR) {
            continue;
        }
        frozen.insert(n.to_string(), res.get(n)?);
    }
    let mut out = BTreeMap::new();
    match method {
        DerivativeMethod::Jets => {
            let xj = Jet::variable(x, 0, max_order);
            let tj = Jet::variable(t, 1, max_order);
            let base = |n: &str| -> Option<Jet> {
                match n {
                    "x" => Some(xj.clone()),
                    "t" => Some(tj.clone()),
                    _ => frozen.get(n).map(|v| Jet::constant(*v)),
                }
            };
            let zj = eval(zeta, &base).map_err(|e| e.to_string())?;
            let full = |n: &str| -> Option<Jet> {
                if n == WAVE_VAR {
                    Some(zj.clone())
                } else {
                    base(n)
                }
            };
            let uj = eval(u, &full).map_err(|e| e.to_string())?;
            for (i, j) in slots {
                out.insert(slot_name(*i, *j), uj.derivative(*i, *j));
            }
        }
        DerivativeMethod::FiniteDifference(h) => {
            let f = |xx: f64, tt: f64| -> Result<f64, String> {
                let mut env = frozen.clone();
                env.insert("x".into(), xx);
                env.insert("t".into(), tt);
                let z = eval(zeta, &env).map_err(|e| e.to_string())?;
                env.insert(WAVE_VAR.into(), z);
                eval(u, &env).map_err(|e| e.to_string())
            };
            for (i, j) in slots {
                out.insert(slot_name(*i, *j), mixed(&f, x, t, h, *i, *j)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::{closure_formula, ClosureKind};
    use crate::verify::{Classification, Grid2d};

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn zero_function_is_exact() {
        let z = ZEval::Values(Box::new(|_| Ok(0.0)));
        let r = ode_residual(&z, &|_| Ok(0.6), &grid(0.1, 2.0, 64)).unwrap();
        assert_eq!(r.classification, Classification::Exact);
    }

    #[test]
    fn small_grid_rejected() {
        let z = ZEval::Values(Box::new(|_| Ok(0.0)));
        assert_eq!(ode_residual(&z, &|_| Ok(0.6), &grid(0.1, 2.0, 10)), Err(VerifyError::GridTooSmall(10)));
    }

    #[test]
    fn finite_differences_agree_with_jets_for_exponential() {
        let lam = 0.6f64;
        let zf = ZEval::Values(Box::new(move |z: f64| Ok((z * lam.sqrt()).exp())));
        let g = grid(0.5, 1.5, 65);
        let fd = ode_residual(&zf, &|_| Ok(lam), &g).unwrap();
        let e = (Expr::sym(WAVE_VAR) * Expr::sym("lambda").sqrt()).exp();
        let an = ode_residual_expr(&e, &Expr::sym("lambda"), |_| Ok([("lambda".to_string(), 0.6)].into()), &g).unwrap();
        assert_eq!(an.classification, Classification::Inconsistent);
        assert!((fd.max_abs - an.max_abs).abs() < 1e-4 * an.max_abs);
    }

    #[test]
    fn locus_of_linear_particular_part() {
        let c = closure_formula(ClosureKind::Constant, &Expr::sym("lambda")).unwrap();
        let r = hermite_residual(&c.particular_part(), &Expr::sym("lambda"));
        assert_eq!(find_locus(&r, &[Symbol::new("lambda")]), Some((Symbol::new("lambda"), Expr::int(-2))));
        assert_eq!(find_locus(&closure_residual(&c), &[Symbol::new("lambda")]), None);
    }

    #[test]
    fn zero_branch_is_exact_on_klein_gordon() {
        let m = crate::parser::parse_equation("u_tt - a^2*u_xx + alpha*u - beta*u^3 = 0", &["a", "alpha", "beta"]).unwrap();
        let closure = closure_formula(ClosureKind::Constant, &Expr::sym("lambda")).unwrap();
        let frame = TravelingWaveFrame::default();
        let bindings: BTreeMap<String, f64> = [("a", 1.0), ("alpha", 1.0), ("beta", 1.0), ("c", 0.8), ("mu", 0.1), ("lambda", 0.6), ("h", 2.0), ("C1", 1.0), ("C2", 2.0)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let cand = Candidate {
            assignments: ["g0", "g1", "g2"].iter().map(|g| (Symbol::new(g), Expr::zero())).collect(),
            roots: BTreeMap::new(),
        };
        let prob = PdeProblem {
            model: &m,
            frame: &frame,
            closure: &closure,
            order: 2,
            bindings: &bindings,
            method: DerivativeMethod::Jets,
        };
        let r = pde_residual(&cand, &prob, &Grid2d::default()).unwrap();
        assert_eq!(r.classification, Classification::Exact);
        let mut partial = cand.clone();
        partial.assignments.remove(&Symbol::new("g2"));
        assert_eq!(pde_residual(&partial, &prob, &Grid2d::default()), Err(VerifyError::Unbound(vec!["g2".into()])));
    }

    #[test]
    fn jets_and_differences_agree_on_pde() {
        let m = crate::parser::parse_equation("u_t + u_x + a*u^2*u_x + u_xxx = 0", &["a"]).unwrap();
        let closure = closure_formula(ClosureKind::Constant, &Expr::sym("lambda")).unwrap();
        let frame = TravelingWaveFrame::with_sigma(1);
        let bindings: BTreeMap<String, f64> = [("a", 1.0), ("c", 0.8), ("mu", 0.5), ("lambda", 0.6), ("h", 2.0), ("C1", 1.0), ("C2", 2.0), ("g0", 0.3), ("g1", 0.7)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let cand = Candidate::default();
        let mut prob = PdeProblem {
            model: &m,
            frame: &frame,
            closure: &closure,
            order: 1,
            bindings: &bindings,
            method: DerivativeMethod::Jets,
        };
        let a = pde_residual(&cand, &prob, &Grid2d::default()).unwrap();
        prob.method = DerivativeMethod::FiniteDifference(1e-2);
        let b = pde_residual(&cand, &prob, &Grid2d::default()).unwrap();
        assert!((a.max_abs - b.max_abs).abs() < 1e-4 * a.max_abs.max(1.0), "{} vs {}", a.max_abs, b.max_abs);
    }
}
