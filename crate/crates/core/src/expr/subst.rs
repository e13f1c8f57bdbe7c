use super::{Expr, FieldAtom, Node, Symbol};
use std::collections::BTreeMap;

/// Replace every occurrence of `target` (any subtree, matched structurally)
/// with `replacement`, then normalize.
pub fn substitute(e: &Expr, target: &Expr, replacement: &Expr) -> Expr {
    rebuild(e, &mut |node| if node == target { Some(replacement.clone()) } else { None })
}

/// Simultaneous replacement of symbols.
pub fn substitute_symbols(e: &Expr, map: &BTreeMap<Symbol, Expr>) -> Expr {
    if map.is_empty() {
        return e.clone();
    }
    rebuild(e, &mut |node| match node.node() {
        Node::Sym(s) => map.get(s).cloned(),
        _ => None,
    })
}

/// Replace field atoms through a callback; atoms for which it returns `None`
/// are kept.
pub fn substitute_fields(e: &Expr, f: &mut dyn FnMut(&FieldAtom) -> Option<Expr>) -> Expr {
    rebuild(e, &mut |node| match node.node() {
        Node::Field(a) => f(a),
        _ => None,
    })
}

fn rebuild(e: &Expr, f: &mut dyn FnMut(&Expr) -> Option<Expr>) -> Expr {
    if let Some(r) = f(e) {
        return r;
    }
    match e.node() {
        Node::Num(_) | Node::Sym(_) | Node::Field(_) => e.clone(),
        Node::Pow(b, k) => Expr::pow(&rebuild(b, f), *k),
        Node::Mul(v) => Expr::mul_all(v.iter().map(|c| rebuild(c, f)).collect::<Vec<_>>()),
        Node::Add(v) => Expr::add_all(v.iter().map(|c| rebuild(c, f)).collect::<Vec<_>>()),
        Node::Func(h, v) => Expr::func(*h, v.iter().map(|c| rebuild(c, f)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_to_zero() {
        let e = Expr::sym("g1") * Expr::deriv_atom("z", "zeta", 1);
        assert!(substitute(&e, &Expr::sym("g1"), &Expr::zero()).is_zero());
    }

    #[test]
    fn second_derivative_by_hermite_rule() {
        let zeta = Expr::sym("zeta");
        let z = Expr::deriv_atom("z", "zeta", 0);
        let z1 = Expr::deriv_atom("z", "zeta", 1);
        let z2 = Expr::deriv_atom("z", "zeta", 2);
        let rule = Expr::int(2) * zeta * z1 + Expr::sym("lambda") * z;
        assert_eq!(substitute(&z2, &z2, &rule), rule);
    }

    #[test]
    fn unknown_function_to_coefficient() {
        let u = Expr::deriv_atom("u", "zeta", 0);
        let e = Expr::sym("alpha") * u.clone();
        let r = substitute(&e, &u, &Expr::sym("g0"));
        assert_eq!(r, Expr::sym("alpha") * Expr::sym("g0"));
    }
}
