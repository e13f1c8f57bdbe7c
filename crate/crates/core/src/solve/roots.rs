//! Real roots of univariate polynomials with symbolic coefficients.

use crate::expr::poly::is_zero_rational;
use crate::expr::{Expr, Rational};
use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Roots in closed form, or `None` when the polynomial is out of reach
/// (degree above two without rational or biquadratic structure).
/// `Some(vec![])` means no real root exists.
pub fn univariate_roots(coeffs: &BTreeMap<u32, Expr>) -> Option<Vec<Expr>> {
    let coeffs: BTreeMap<u32, Expr> = coeffs
        .iter()
        .filter(|(_, c)| !is_zero_rational(c))
        .map(|(k, c)| (*k, c.clone()))
        .collect();
    let low = *coeffs.keys().next()?;
    let mut out = Vec::new();
    if low > 0 {
        out.push(Expr::zero());
    }
    let shifted: BTreeMap<u32, Expr> = coeffs.into_iter().map(|(k, c)| (k - low, c)).collect();
    let deg = *shifted.keys().next_back().unwrap();
    let get = |k: u32| shifted.get(&k).cloned().unwrap_or_else(Expr::zero);
    let rest = match deg {
        0 => Vec::new(),
        1 => vec![(get(0) / get(1)).neg()],
        2 => quadratic(&get(2), &get(1), &get(0)),
        _ => {
            if let Some(r) = rational_coefficients(&shifted).and_then(|q| rational_case(&q)) {
                r
            } else if deg == 4 && shifted.keys().all(|k| k % 2 == 0) {
                biquadratic(&get(4), &get(2), &get(0))
            } else {
                return None;
            }
        }
    };
    for r in rest {
        if !out.contains(&r) {
            out.push(r);
        }
    }
    Some(out)
}

/// Real roots of a x^2 + b x + c with a != 0.
pub fn quadratic(a: &Expr, b: &Expr, c: &Expr) -> Vec<Expr> {
    let h = (b.clone() / (Expr::int(2) * a.clone())).neg();
    let disc = h.clone() * h.clone() - c.clone() / a.clone();
    if is_zero_rational(&disc) {
        return vec![h];
    }
    if let Some(q) = disc.as_num() {
        if q.is_negative() {
            return Vec::new();
        }
    }
    let s = disc.sqrt();
    vec![h.clone() + s.clone(), h - s]
}

fn biquadratic(a: &Expr, b: &Expr, c: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    for y in quadratic(a, b, c) {
        if y.is_zero() {
            out.push(Expr::zero());
            continue;
        }
        if y.as_num().is_some_and(|q| q.is_negative()) {
            continue;
        }
        let r = y.sqrt();
        out.push(r.clone());
        out.push(r.neg());
    }
    out
}

fn rational_coefficients(c: &BTreeMap<u32, Expr>) -> Option<Vec<Rational>> {
    let deg = *c.keys().next_back()? as usize;
    let mut v = vec![Rational::zero(); deg + 1];
    for (k, e) in c {
        v[*k as usize] = e.as_num()?.clone();
    }
    Some(v)
}

fn divisors(n: &BigInt) -> Option<Vec<i64>> {
    let n = n.abs().to_i64()?;
    if n == 0 || n > 1_000_000_000_000 {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1i64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
        if d > 1_000_000 {
            return None;
        }
    }
    Some(out)
}

fn horner(p: &[Rational], x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

/// Divide by (x - r); `p` is lowest degree first.
fn deflate(p: &[Rational], r: &Rational) -> Vec<Rational> {
    let n = p.len() - 1;
    let mut q = vec![Rational::zero(); n];
    let mut carry = Rational::zero();
    for k in (1..=n).rev() {
        carry = &p[k] + carry * r;
        q[k - 1] = carry.clone();
    }
    q
}

/// Rational roots, then the leftover factor if it has degree at most two.
fn rational_case(p: &[Rational]) -> Option<Vec<Expr>> {
    let lcm = p.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = p.iter().map(|q| (q * Rational::from(lcm.clone())).to_integer()).collect();
    let c0 = ints.first()?;
    let cn = ints.last()?;
    if c0.is_zero() {
        return None;
    }
    let (ps, qs) = (divisors(c0)?, divisors(cn)?);
    let mut cur: Vec<Rational> = p.to_vec();
    let mut roots: Vec<Expr> = Vec::new();
    for pn in &ps {
        for qd in &qs {
            for sign in [1i64, -1] {
                let r = Rational::new(BigInt::from(sign * pn), BigInt::from(*qd));
                while cur.len() > 1 && horner(&cur, &r).is_zero() {
                    cur = deflate(&cur, &r);
                    let e = Expr::num(r.clone());
                    if !roots.contains(&e) {
                        roots.push(e);
                    }
                }
            }
        }
    }
    match cur.len() - 1 {
        0 => Some(roots),
        1 => {
            roots.push(Expr::num(-&cur[0] / &cur[1]));
            Some(roots)
        }
        2 => {
            let e = |q: &Rational| Expr::num(q.clone());
            roots.extend(quadratic(&e(&cur[2]), &e(&cur[1]), &e(&cur[0])));
            Some(roots)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[(u32, Expr)]) -> BTreeMap<u32, Expr> {
        c.iter().cloned().collect()
    }

    #[test]
    fn cubic_with_rational_roots() {
        // (x - 1)(x + 2)(2x - 3) = 2x^3 - x^2 - 7x + 6
        let r = univariate_roots(&poly(&[(0, Expr::int(6)), (1, Expr::int(-7)), (2, Expr::int(-1)), (3, Expr::int(2))])).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.contains(&Expr::rational(3, 2)));
        assert!(r.contains(&Expr::int(-2)));
    }

    #[test]
    fn complex_quadratic_has_no_real_roots() {
        assert_eq!(univariate_roots(&poly(&[(0, Expr::one()), (2, Expr::one())])), Some(vec![]));
    }

    #[test]
    fn symbolic_quadratic() {
        let r = univariate_roots(&poly(&[(0, Expr::sym("p").neg()), (2, Expr::one())])).unwrap();
        assert_eq!(r, vec![Expr::sym("p").sqrt(), Expr::sym("p").sqrt().neg()]);
    }

    #[test]
    fn biquadratic_symbolic() {
        let r = univariate_roots(&poly(&[(0, Expr::sym("q")), (2, Expr::int(-3)), (4, Expr::sym("p"))])).unwrap();
        assert_eq!(r.len(), 4);
    }

    #[test]
    fn irreducible_symbolic_cubic_is_unsolved() {
        assert_eq!(univariate_roots(&poly(&[(0, Expr::sym("p")), (1, Expr::one()), (3, Expr::one())])), None);
    }
}
