//! Branching solver for polynomial systems in the ansatz coefficients.
//!
//! Parameters other than the chosen unknowns are treated as generic and
//! nonzero. Equations that end up free of unknowns become conditions on the
//! branch instead of pruning it, unless they are nonzero constants.

mod newton;
mod resultant;
mod roots;

pub use newton::{newton_refine, NewtonError, NewtonOptions};
pub use resultant::{determinant, resultant};
pub use roots::{quadratic, univariate_roots};

use crate::expr::poly::{coefficients_in, content, is_zero_rational, numerator, primitive_part};
use crate::expr::{eval, substitute_symbols, Expr, Func, Node, Symbol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Search nodes visited before the result is flagged incomplete.
    pub max_branches: usize,
    /// Largest total degree allowed for a resultant.
    pub max_elimination_degree: u32,
    /// Symbols that may never be set to zero.
    pub nonzero: Vec<Symbol>,
    pub probe_seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_branches: 512,
            max_elimination_degree: 8,
            nonzero: ["c", "mu", "beta"].iter().map(|s| Symbol::new(s)).collect(),
            probe_seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionBranch {
    pub assignments: BTreeMap<Symbol, Expr>,
    /// Unknowns left unconstrained.
    pub free: Vec<Symbol>,
    /// Residual equations free of unknowns; the branch holds where they vanish.
    pub conditions: Vec<Expr>,
    /// Equations in the unknowns that could not be solved in closed form.
    pub unresolved: Vec<Expr>,
    /// Solver steps leading to this branch.
    pub provenance: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrunedBranch {
    pub assignments: BTreeMap<Symbol, Expr>,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct SolveResult {
    pub branches: Vec<SolutionBranch>,
    pub pruned: Vec<PrunedBranch>,
    /// The search budget ran out before every branch was explored.
    pub incomplete: bool,
    pub explored: usize,
}

#[derive(Clone)]
struct State {
    eqs: Vec<Expr>,
    assign: BTreeMap<Symbol, Expr>,
    steps: Vec<String>,
    eliminations: usize,
}

enum Step {
    Assign(Symbol, Expr, String),
    Replace(usize, Expr, String),
    Add(Expr, String),
}

struct Solver<'a> {
    unknowns: &'a [Symbol],
    opts: &'a SolveOptions,
    out: SolveResult,
}

/// Remove denominators (including sums under negative powers).
pub fn clear_denominators(e: &Expr) -> Expr {
    let mut cur = e.clone();
    for _ in 0..8 {
        let n = numerator(&cur);
        if n == cur {
            break;
        }
        cur = n;
    }
    cur
}

/// Exact zero test with a seeded numeric probe as fallback for
/// expressions the rational test cannot decide (nested radicals).
pub fn is_zero_expr(e: &Expr, seed: u64) -> bool {
    if is_zero_rational(e) {
        return true;
    }
    let syms: Vec<Symbol> = e.free_symbols().into_iter().collect();
    for probe in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(probe));
        let vals: BTreeMap<String, f64> = syms
            .iter()
            .map(|s| (s.as_str().to_string(), rng.gen_range(0.3..1.7)))
            .collect();
        let Ok(v) = eval(e, &vals) else {
            return false;
        };
        let scale: f64 = e
            .terms()
            .iter()
            .filter_map(|t| eval(t, &vals).ok())
            .map(f64::abs)
            .sum::<f64>()
            .max(1.0);
        if !(v.abs() <= 1e-9 * scale) {
            return false;
        }
    }
    true
}

fn has_negative_radicand(e: &Expr) -> bool {
    let mut bad = false;
    e.visit(&mut |x| {
        if let Node::Func(Func::Sqrt, args) = x.node() {
            if args[0].as_num().is_some_and(|q| q < &crate::expr::Rational::from_integer(0.into())) {
                bad = true;
            }
        }
    });
    bad
}

fn mentions(e: &Expr, unknowns: &[Symbol]) -> Vec<Symbol> {
    let fs = e.free_symbols();
    unknowns.iter().filter(|u| fs.contains(*u)).cloned().collect()
}

fn describe(assign: &BTreeMap<Symbol, Expr>) -> String {
    assign
        .iter()
        .map(|(k, v)| format!("{k} = {v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Total degree in the unknowns, or `None` if not polynomial in them.
fn total_degree(e: &Expr, unknowns: &[Symbol]) -> Option<u32> {
    let mut best = 0;
    for t in e.terms() {
        let mut d = 0;
        for u in unknowns {
            d += coefficients_in(&t, u)?.keys().next_back().copied().unwrap_or(0);
        }
        best = best.max(d);
    }
    Some(best)
}

impl<'a> Solver<'a> {
    fn prune(&mut self, st: &State, reason: String) {
        self.out.pruned.push(PrunedBranch {
            assignments: st.assign.clone(),
            reason,
        });
    }

    /// Substitute, clear denominators, drop solved equations. `Err` on a
    /// contradiction.
    fn simplify(&self, st: &mut State) -> Result<(), String> {
        let mut kept: Vec<Expr> = Vec::new();
        for eq in &st.eqs {
            let e = clear_denominators(&substitute_symbols(eq, &st.assign));
            if is_zero_expr(&e, self.opts.probe_seed) {
                continue;
            }
            if mentions(&e, self.unknowns).is_empty() {
                if e.as_num().is_some() {
                    return Err(format!("contradiction {e} = 0"));
                }
                let p = primitive_part(&e);
                if p.as_num().is_some() {
                    let (_, mono) = content(&e);
                    let generic = mono.keys().all(|a| {
                        a.as_sym().is_some_and(|s| self.opts.nonzero.contains(s))
                    });
                    if generic {
                        return Err(format!("{e} = 0 needs a nonzero parameter to vanish"));
                    }
                }
                continue;
            }
            let p = self.reduce_content(&e);
            if !kept.iter().any(|k| *k == p || *k == p.neg()) {
                kept.push(p);
            }
        }
        kept.sort_by_key(|e| e.size());
        st.eqs = kept;
        Ok(())
    }

    /// Divide out the rational coefficient and every monomial factor that
    /// is not a positive power of an unknown.
    fn reduce_content(&self, e: &Expr) -> Expr {
        let (c, mono) = content(e);
        let mut factors: Vec<Expr> = mono
            .into_iter()
            .filter(|(a, k)| !(*k > 0 && a.as_sym().is_some_and(|s| self.unknowns.contains(s))))
            .map(|(a, k)| Expr::pow(&a, -k))
            .collect();
        factors.push(Expr::num(c.recip()));
        Expr::add_all(
            e.terms()
                .into_iter()
                .map(|t| Expr::mul_all(factors.iter().cloned().chain(std::iter::once(t))))
                .collect::<Vec<_>>(),
        )
    }

    fn assign(&self, st: &State, x: &Symbol, v: &Expr) -> Result<State, String> {
        if self.opts.nonzero.contains(x) && is_zero_expr(v, self.opts.probe_seed) {
            return Err(format!("{x} = 0 is excluded"));
        }
        if has_negative_radicand(v) {
            return Err(format!("{x} = {v} is not real"));
        }
        let mut map = BTreeMap::new();
        map.insert(x.clone(), v.clone());
        let mut next = st.clone();
        for val in next.assign.values_mut() {
            *val = substitute_symbols(val, &map);
        }
        next.assign.insert(x.clone(), v.clone());
        Ok(next)
    }

    fn zero_unknown_factors(&self, e: &Expr) -> Vec<Symbol> {
        let (_, mono) = content(e);
        mono.iter()
            .filter(|(_, k)| **k > 0)
            .filter_map(|(a, _)| a.as_sym().cloned())
            .filter(|s| self.unknowns.contains(s))
            .collect()
    }

    fn plan(&self, st: &State) -> Option<Vec<Step>> {
        // Monomial factors in the unknowns.
        let mut best: Option<Vec<Step>> = None;
        for (i, e) in st.eqs.iter().enumerate() {
            let zs = self.zero_unknown_factors(e);
            if zs.is_empty() {
                continue;
            }
            let mut steps: Vec<Step> = zs
                .iter()
                .map(|z| Step::Assign(z.clone(), Expr::zero(), format!("factor {z} of {e}")))
                .collect();
            steps.push(Step::Replace(i, primitive_part(e), format!("cofactor of {e}")));
            if best.as_ref().is_none_or(|b| steps.len() < b.len()) {
                best = Some(steps);
            }
        }
        if best.is_some() {
            return best;
        }
        // Linear in one unknown with a coefficient free of unknowns.
        let mut linear: Option<((usize, usize), Step)> = None;
        let mut monomial: Option<(usize, Vec<Step>)> = None;
        for e in &st.eqs {
            let us = mentions(e, self.unknowns);
            for x in &us {
                let Some(c) = coefficients_in(e, x) else { continue };
                if c.keys().next_back() != Some(&1) {
                    continue;
                }
                let p = c[&1].clone();
                let q = c.get(&0).cloned().unwrap_or_else(Expr::zero);
                let v = (q / p.clone()).neg();
                let pu = mentions(&p, self.unknowns);
                if pu.is_empty() {
                    let score = (us.len(), e.size());
                    if linear.as_ref().is_none_or(|(s, _)| score < *s) {
                        linear = Some((score, Step::Assign(x.clone(), v, format!("solve {e} for {x}"))));
                    }
                } else if p.terms().len() == 1 && monomial.is_none() {
                    let mut steps = vec![Step::Assign(x.clone(), v, format!("solve {e} for {x}"))];
                    for y in pu {
                        steps.push(Step::Assign(y.clone(), Expr::zero(), format!("coefficient of {x} in {e} vanishes")));
                    }
                    monomial = Some((e.size(), steps));
                }
            }
        }
        if let Some((_, s)) = linear {
            return Some(vec![s]);
        }
        if let Some((_, s)) = monomial {
            return Some(s);
        }
        // Univariate polynomial equations.
        for e in &st.eqs {
            let us = mentions(e, self.unknowns);
            if us.len() != 1 {
                continue;
            }
            let x = &us[0];
            let Some(c) = coefficients_in(e, x) else { continue };
            if let Some(rs) = univariate_roots(&c) {
                return Some(
                    rs.into_iter()
                        .map(|r| Step::Assign(x.clone(), r, format!("root of {e} in {x}")))
                        .collect(),
                );
            }
        }
        // Elimination by resultants.
        let live: BTreeSet<Symbol> = st.eqs.iter().flat_map(|e| mentions(e, self.unknowns)).collect();
        if live.len() > 3 || st.eliminations >= 6 {
            return None;
        }
        for i in 0..st.eqs.len() {
            for j in i + 1..st.eqs.len() {
                let (f, g) = (&st.eqs[i], &st.eqs[j]);
                let shared: Vec<Symbol> = mentions(f, self.unknowns)
                    .into_iter()
                    .filter(|u| mentions(g, self.unknowns).contains(u))
                    .collect();
                for x in shared {
                    let deg_ok = |e: &Expr| {
                        coefficients_in(e, &x).is_some_and(|c| c.keys().next_back().is_some_and(|d| *d <= 4))
                    };
                    if !deg_ok(f) || !deg_ok(g) {
                        continue;
                    }
                    let Some(r) = resultant(f, g, &x) else { continue };
                    let r = clear_denominators(&r);
                    if is_zero_rational(&r) {
                        continue;
                    }
                    let rp = primitive_part(&r);
                    if st.eqs.contains(&rp) || st.eqs.contains(&rp.neg()) {
                        continue;
                    }
                    let others: Vec<Symbol> = live.iter().filter(|u| **u != x).cloned().collect();
                    if total_degree(&rp, &others).is_none_or(|d| d > self.opts.max_elimination_degree) {
                        continue;
                    }
                    return Some(vec![Step::Add(rp, format!("eliminate {x}"))]);
                }
            }
        }
        None
    }

    fn emit(&mut self, st: &State) {
        self.out.branches.push(SolutionBranch {
            assignments: st.assign.clone(),
            free: Vec::new(),
            conditions: Vec::new(),
            unresolved: st.eqs.clone(),
            provenance: st.steps.clone(),
        });
    }

    fn search(&mut self, mut st: State) {
        self.out.explored += 1;
        if self.out.explored > self.opts.max_branches {
            self.out.incomplete = true;
            return;
        }
        if let Err(reason) = self.simplify(&mut st) {
            self.prune(&st, reason);
            return;
        }
        if st.eqs.is_empty() {
            self.emit(&st);
            return;
        }
        let Some(steps) = self.plan(&st) else {
            self.emit(&st);
            return;
        };
        if steps.is_empty() {
            self.prune(&st, "no real roots".into());
        }
        for step in steps {
            let child = match step {
                Step::Assign(x, v, note) => match self.assign(&st, &x, &v) {
                    Ok(mut c) => {
                        c.steps.push(format!("{note}: {x} = {v}"));
                        c
                    }
                    Err(reason) => {
                        let mut a = st.assign.clone();
                        a.insert(x, v);
                        self.out.pruned.push(PrunedBranch { assignments: a, reason });
                        continue;
                    }
                },
                Step::Replace(i, e, note) => {
                    let mut c = st.clone();
                    c.eqs[i] = e;
                    c.steps.push(note);
                    c
                }
                Step::Add(e, note) => {
                    let mut c = st.clone();
                    c.eqs.push(e);
                    c.eliminations += 1;
                    c.steps.push(note);
                    c
                }
            };
            self.search(child);
        }
    }
}

/// Residual checks of a candidate against the original equations.
fn finish(b: SolutionBranch, eqs: &[Expr], unknowns: &[Symbol], seed: u64) -> SolutionBranch {
    let free: Vec<Symbol> = unknowns.iter().filter(|u| !b.assignments.contains_key(*u)).cloned().collect();
    let mut conditions: Vec<Expr> = Vec::new();
    let mut unresolved: Vec<Expr> = Vec::new();
    for eq in eqs {
        let r = clear_denominators(&substitute_symbols(eq, &b.assignments));
        if is_zero_expr(&r, seed) {
            continue;
        }
        let (c, _) = content(&r);
        let p = r * Expr::num(c.recip());
        let bucket = if mentions(&p, unknowns).is_empty() {
            &mut conditions
        } else {
            &mut unresolved
        };
        if !bucket.iter().any(|k| *k == p || *k == p.neg()) {
            bucket.push(p);
        }
    }
    SolutionBranch {
        free,
        conditions,
        unresolved,
        ..b
    }
}

/// Solve `eqs = 0` for `unknowns`.
pub fn branch_solve(eqs: &[Expr], unknowns: &[Symbol], opts: &SolveOptions) -> SolveResult {
    let mut solver = Solver {
        unknowns,
        opts,
        out: SolveResult::default(),
    };
    solver.search(State {
        eqs: eqs.to_vec(),
        assign: BTreeMap::new(),
        steps: Vec::new(),
        eliminations: 0,
    });
    let mut out = solver.out;
    let seed = opts.probe_seed;
    let mut branches: Vec<SolutionBranch> = out
        .branches
        .into_par_iter()
        .map(|b| finish(b, eqs, unknowns, seed))
        .collect();
    branches.sort_by_key(|b| (b.assignments.len(), describe(&b.assignments)));
    let mut kept: Vec<SolutionBranch> = Vec::new();
    for b in branches {
        let subsumed = kept.iter().any(|k| {
            k.conditions.is_empty()
                && k.unresolved.is_empty()
                && k.assignments.iter().all(|(s, v)| b.assignments.get(s) == Some(v))
        });
        if !subsumed {
            kept.push(b);
        }
    }
    out.branches = kept;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: &str) -> Expr {
        Expr::sym(n)
    }

    fn syms(names: &[&str]) -> Vec<Symbol> {
        names.iter().map(|n| Symbol::new(n)).collect()
    }

    #[test]
    fn two_branches() {
        let eqs = vec![s("x").powi(2) - Expr::one(), s("x") + s("y")];
        let r = branch_solve(&eqs, &syms(&["x", "y"]), &SolveOptions::default());
        assert_eq!(r.branches.len(), 2);
        for b in &r.branches {
            assert!(b.conditions.is_empty() && b.unresolved.is_empty() && b.free.is_empty());
        }
        assert!(!r.incomplete);
    }

    #[test]
    fn empty_system_is_all_free() {
        let r = branch_solve(&[], &syms(&["x", "y"]), &SolveOptions::default());
        assert_eq!(r.branches.len(), 1);
        assert_eq!(r.branches[0].free, syms(&["x", "y"]));
    }

    #[test]
    fn factors_split_and_nonzero_prunes() {
        let eqs = vec![s("c") * (s("g") - s("k"))];
        let r = branch_solve(&eqs, &syms(&["c", "g"]), &SolveOptions::default());
        assert_eq!(r.branches.len(), 1);
        assert_eq!(r.branches[0].assignments[&Symbol::new("g")], s("k"));
        assert!(r.pruned.iter().any(|p| p.reason.contains("excluded")));
    }

    #[test]
    fn leftover_becomes_condition() {
        let eqs = vec![s("x") * s("p"), s("q") * s("r") + s("x")];
        let r = branch_solve(&eqs, &syms(&["x"]), &SolveOptions::default());
        assert_eq!(r.branches.len(), 1);
        assert_eq!(r.branches[0].conditions, vec![s("q") * s("r")]);
    }

    #[test]
    fn monomial_coefficient_branch() {
        let eqs = vec![s("x").powi(2) + s("y").powi(2) - Expr::int(5), s("x") * s("y") - Expr::int(2)];
        let r = branch_solve(&eqs, &syms(&["x", "y"]), &SolveOptions::default());
        assert_eq!(r.branches.len(), 4);
    }

    #[test]
    fn elimination_by_resultant() {
        let eqs = vec![
            s("x").powi(2) + s("y").powi(2) - Expr::int(5),
            s("x").powi(2) - s("y").powi(2) - Expr::int(3),
        ];
        let r = branch_solve(&eqs, &syms(&["x", "y"]), &SolveOptions::default());
        assert_eq!(r.branches.len(), 4);
        for b in &r.branches {
            assert!(b.unresolved.is_empty() && b.conditions.is_empty());
            assert!(b.provenance.iter().any(|p| p.starts_with("eliminate")));
        }
    }

    #[test]
    fn inconsistent_system_has_no_branch() {
        let eqs = vec![s("x") - Expr::one(), s("x") - Expr::int(2)];
        let r = branch_solve(&eqs, &syms(&["x"]), &SolveOptions::default());
        assert!(r.branches.is_empty());
        assert!(!r.pruned.is_empty());
    }
}
