//! Sylvester resultants with fraction-free (Bareiss) elimination.

use crate::expr::poly::{coefficients_in, exact_div, is_zero_rational};
use crate::expr::{Expr, Symbol};

/// Res_x(f, g). `None` if either is not polynomial in `x`, has degree zero
/// in it, or a Bareiss division fails to be exact.
pub fn resultant(f: &Expr, g: &Expr, x: &Symbol) -> Option<Expr> {
    let cf = coefficients_in(f, x)?;
    let cg = coefficients_in(g, x)?;
    let m = *cf.keys().next_back()? as usize;
    let n = *cg.keys().next_back()? as usize;
    if m == 0 || n == 0 {
        return None;
    }
    let size = m + n;
    let zero = Expr::zero();
    let mut rows: Vec<Vec<Expr>> = Vec::with_capacity(size);
    for i in 0..n {
        let mut r = vec![zero.clone(); size];
        for k in 0..=m {
            r[i + (m - k)] = cf.get(&(k as u32)).cloned().unwrap_or_else(Expr::zero);
        }
        rows.push(r);
    }
    for i in 0..m {
        let mut r = vec![zero.clone(); size];
        for k in 0..=n {
            r[i + (n - k)] = cg.get(&(k as u32)).cloned().unwrap_or_else(Expr::zero);
        }
        rows.push(r);
    }
    determinant(rows)
}

/// Determinant of a square matrix with polynomial entries.
pub fn determinant(mut a: Vec<Vec<Expr>>) -> Option<Expr> {
    let n = a.len();
    if n == 0 {
        return Some(Expr::one());
    }
    let mut sign = false;
    let mut prev = Expr::one();
    for k in 0..n - 1 {
        if is_zero_rational(&a[k][k]) {
            let swap = (k + 1..n).find(|&i| !is_zero_rational(&a[i][k]));
            match swap {
                Some(i) => {
                    a.swap(k, i);
                    sign = !sign;
                }
                None => return Some(Expr::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[i][j].clone() * a[k][k].clone() - a[i][k].clone() * a[k][j].clone();
                a[i][j] = if prev.is_one() { num } else { exact_div(&num, &prev)? };
            }
            a[i][k] = Expr::zero();
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    Some(if sign { d.neg() } else { d })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: &str) -> Expr {
        Expr::sym(n)
    }

    #[test]
    fn circle_and_line() {
        // x^2 + y^2 - 1 and x - y: resultant 2y^2 - 1
        let f = s("x").powi(2) + s("y").powi(2) - Expr::one();
        let g = s("x") - s("y");
        let r = resultant(&f, &g, &Symbol::new("x")).unwrap();
        assert_eq!(r, Expr::int(2) * s("y").powi(2) - Expr::one());
    }

    #[test]
    fn common_root_gives_zero() {
        let f = s("x").powi(2) - Expr::one();
        let g = s("x") - Expr::one();
        assert!(resultant(&f, &g, &Symbol::new("x")).unwrap().is_zero());
    }

    #[test]
    fn symbolic_determinant() {
        let m = vec![vec![s("a"), s("b")], vec![s("c"), s("d")]];
        assert_eq!(determinant(m).unwrap(), s("a") * s("d") - s("b") * s("c"));
    }
}
