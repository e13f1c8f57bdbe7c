//! Laurent-polynomial view of normalized expressions.
//!
//! A normalized expression is a sum of `coefficient * Π atom^k` terms where
//! atoms are symbols, field atoms, function applications, or (under negative
//! exponents) primitive sums. This module treats those atoms as independent
//! indeterminates for content extraction, clearing denominators, exact
//! division and degree queries.

use super::{split_coeff, Expr, Node, Rational, Symbol};
use num::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

pub type Mono = BTreeMap<Expr, i64>;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Mono, Rational>,
}

fn term_parts(t: &Expr) -> (Rational, Mono) {
    let (c, m) = split_coeff(t);
    let mut mono = Mono::new();
    let factors: Vec<Expr> = match m.node() {
        Node::Mul(fs) => fs.clone(),
        _ if m.is_one() => Vec::new(),
        _ => vec![m],
    };
    for f in factors {
        let (b, k) = match f.node() {
            Node::Pow(b, k) => (b.clone(), *k),
            _ => (f.clone(), 1),
        };
        *mono.entry(b).or_insert(0) += k;
    }
    (c, mono)
}

fn mono_expr(m: &Mono) -> Expr {
    Expr::mul_all(m.iter().map(|(b, k)| Expr::pow(b, *k)).collect::<Vec<_>>())
}

impl Poly {
    pub fn from_expr(e: &Expr) -> Poly {
        let mut terms = BTreeMap::new();
        for t in e.terms() {
            let (c, m) = term_parts(&t);
            let slot = terms.entry(m).or_insert_with(Rational::zero);
            *slot += c;
        }
        terms.retain(|_, c: &mut Rational| !c.is_zero());
        Poly { terms }
    }

    pub fn to_expr(&self) -> Expr {
        Expr::add_all(
            self.terms
                .iter()
                .map(|(m, c)| Expr::num(c.clone()) * mono_expr(m))
                .collect::<Vec<_>>(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn atoms(&self) -> BTreeSet<Expr> {
        self.terms.keys().flat_map(|m| m.keys().cloned()).collect()
    }

    fn exponent_vector(m: &Mono, atoms: &[Expr]) -> Vec<i64> {
        atoms.iter().map(|a| m.get(a).copied().unwrap_or(0)).collect()
    }

    fn leading(&self, atoms: &[Expr]) -> Option<(Mono, Rational)> {
        self.terms
            .iter()
            .max_by(|(a, _), (b, _)| {
                Poly::exponent_vector(a, atoms).cmp(&Poly::exponent_vector(b, atoms))
            })
            .map(|(m, c)| (m.clone(), c.clone()))
    }

    fn sub_scaled(&mut self, other: &Poly, coef: &Rational, shift: &Mono) {
        for (m, c) in &other.terms {
            let mut nm = m.clone();
            for (a, k) in shift {
                let e = nm.entry(a.clone()).or_insert(0);
                *e += k;
                if *e == 0 {
                    nm.remove(a);
                }
            }
            let slot = self.terms.entry(nm.clone()).or_insert_with(Rational::zero);
            *slot -= c * coef;
            if slot.is_zero() {
                self.terms.remove(&nm);
            }
        }
    }
}

/// Largest monomial (with integer exponents, possibly negative) dividing
/// every term, together with the first term's rational coefficient.
pub fn content(e: &Expr) -> (Rational, Mono) {
    let p = Poly::from_expr(e);
    let mut iter = p.terms.iter();
    let Some((first_m, first_c)) = iter.next() else {
        return (Rational::one(), Mono::new());
    };
    let atoms = p.atoms();
    let mut mins: Mono = atoms
        .iter()
        .map(|a| (a.clone(), first_m.get(a).copied().unwrap_or(0)))
        .collect();
    for (m, _) in iter {
        for (a, v) in mins.iter_mut() {
            *v = (*v).min(m.get(a).copied().unwrap_or(0));
        }
    }
    mins.retain(|_, v| *v != 0);
    (first_c.clone(), mins)
}

/// `e` divided by its monomial content and leading rational coefficient.
/// The result has no negative exponents on any atom and no common monomial
/// factor; it vanishes exactly where `e` does (for nonzero atoms).
pub fn primitive_part(e: &Expr) -> Expr {
    if e.is_zero() {
        return Expr::zero();
    }
    let (c, m) = content(e);
    let mut factors: Vec<Expr> = m.into_iter().map(|(a, k)| Expr::pow(&a, -k)).collect();
    factors.push(Expr::num(c.recip()));
    scale_terms(e, &factors)
}

/// Multiply every term of `e` by all `factors` in one product, so that
/// sum atoms cancel against their inverses before any expansion.
fn scale_terms(e: &Expr, factors: &[Expr]) -> Expr {
    Expr::add_all(
        e.terms()
            .into_iter()
            .map(|t| Expr::mul_all(factors.iter().cloned().chain(std::iter::once(t))))
            .collect::<Vec<_>>(),
    )
}

/// Multiply out every negative-exponent atom, keeping the common monomial
/// content (only denominators are cleared).
pub fn numerator(e: &Expr) -> Expr {
    if e.is_zero() {
        return Expr::zero();
    }
    let (_, m) = content(e);
    let clear: Vec<Expr> = m
        .into_iter()
        .filter(|(_, k)| *k < 0)
        .map(|(a, k)| Expr::pow(&a, -k))
        .collect();
    if clear.is_empty() {
        return e.clone();
    }
    scale_terms(e, &clear)
}

/// Exact division in the Laurent polynomial ring over the atoms.
pub fn exact_div(f: &Expr, g: &Expr) -> Option<Expr> {
    let gp = Poly::from_expr(g);
    if gp.is_zero() {
        return None;
    }
    let mut r = Poly::from_expr(f);
    let mut atoms: BTreeSet<Expr> = r.atoms();
    atoms.extend(gp.atoms());
    let atoms: Vec<Expr> = atoms.into_iter().collect();
    let (glm, glc) = gp.leading(&atoms)?;
    let mut q = Poly::default();
    let limit = 4 * (r.terms.len() + 1) * (gp.terms.len() + 1) + 256;
    for _ in 0..limit {
        let Some((rlm, rlc)) = r.leading(&atoms) else {
            return Some(q.to_expr());
        };
        let coef = &rlc / &glc;
        let mut shift = rlm.clone();
        for (a, k) in &glm {
            let e = shift.entry(a.clone()).or_insert(0);
            *e -= k;
            if *e == 0 {
                shift.remove(a);
            }
        }
        let slot = q.terms.entry(shift.clone()).or_insert_with(Rational::zero);
        *slot += &coef;
        r.sub_scaled(&gp, &coef, &shift);
    }
    None
}

/// Coefficients of `e` as a polynomial in the symbol `x`. `None` if `x`
/// occurs anywhere other than as a bare atom with a nonnegative exponent.
pub fn coefficients_in(e: &Expr, x: &Symbol) -> Option<BTreeMap<u32, Expr>> {
    let mut out: BTreeMap<u32, Vec<Expr>> = BTreeMap::new();
    for t in e.terms() {
        let (c, mut m) = term_parts(&t);
        let xe = Expr::symbol(x.clone());
        let k = m.remove(&xe).unwrap_or(0);
        if k < 0 {
            return None;
        }
        if m.keys().any(|a| a.contains_symbol(x.as_str())) {
            return None;
        }
        out.entry(k as u32)
            .or_default()
            .push(Expr::num(c) * mono_expr(&m));
    }
    Some(
        out.into_iter()
            .map(|(k, v)| (k, Expr::add_all(v)))
            .filter(|(_, v)| !v.is_zero())
            .collect(),
    )
}

pub fn degree_in(e: &Expr, x: &Symbol) -> Option<u32> {
    coefficients_in(e, x).map(|c| c.keys().next_back().copied().unwrap_or(0))
}

/// Exact zero test for rational expressions over the atoms: clear every
/// denominator (including sums under negative powers) and test the result.
pub fn is_zero_rational(e: &Expr) -> bool {
    if e.is_zero() {
        return true;
    }
    let mut cur = e.clone();
    for _ in 0..8 {
        let n = numerator(&cur);
        if n.is_zero() {
            return true;
        }
        if n == cur {
            return false;
        }
        cur = n;
    }
    false
}

/// True when every rational coefficient is negative of the corresponding
/// one in `other` (used to compare equations up to sign).
pub fn equal_up_to_scale(a: &Expr, b: &Expr) -> bool {
    if a.is_zero() || b.is_zero() {
        return a.is_zero() && b.is_zero();
    }
    let pa = primitive_part(a);
    let pb = primitive_part(b);
    pa == pb || pa == pb.neg()
}

pub fn is_negative_rational(e: &Expr) -> bool {
    e.as_num().is_some_and(|q| q.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: &str) -> Expr {
        Expr::sym(n)
    }

    #[test]
    fn content_and_primitive() {
        let e = Expr::int(6) * s("g1").powi(2) * s("mu") + Expr::int(4) * s("g1") * s("mu").powi(3);
        let (_, m) = content(&e);
        assert_eq!(m.get(&s("g1")), Some(&1));
        assert_eq!(m.get(&s("mu")), Some(&1));
        let p = primitive_part(&e);
        let a = Expr::int(3) * s("g1") + Expr::int(2) * s("mu").powi(2);
        assert!(p == a.clone() / Expr::int(2) || p == a / Expr::int(3), "{p}");
    }

    #[test]
    fn exact_division_of_factored_product() {
        let a = s("x") + s("y").sin();
        let b = s("x") * s("y") - Expr::int(3) / s("zeta");
        let f = a.clone() * b.clone();
        assert_eq!(exact_div(&f, &a), Some(b.clone()));
        assert_eq!(exact_div(&f, &b), Some(a));
        assert_eq!(exact_div(&(f + Expr::one()), &b), None);
    }

    #[test]
    fn polynomial_coefficients() {
        let x = Symbol::new("x");
        let e = s("a") * s("x").powi(2) + s("b") * s("x") + s("c");
        let c = coefficients_in(&e, &x).unwrap();
        assert_eq!(c[&2], s("a"));
        assert_eq!(c[&1], s("b"));
        assert_eq!(c[&0], s("c"));
        assert!(coefficients_in(&s("x").sin(), &x).is_none());
        assert!(coefficients_in(&s("x").recip(), &x).is_none());
    }

    #[test]
    fn rational_zero_test() {
        let d1 = s("a") + s("b");
        let d2 = s("a") - s("b");
        let e = d1.recip() + d2.recip() - Expr::int(2) * s("a") / (s("a").powi(2) - s("b").powi(2));
        assert!(!e.is_zero());
        assert!(is_zero_rational(&e));
    }
}
