use super::{Expr, Func, KummerKind, Node, Symbol};

/// Derivative of `e` with respect to the symbol `var`.
///
/// Field atoms depend on the variables in their argument list only, so
/// `d/dzeta z = z'` while `d/dx z = 0`. Kummer functions use the contiguous
/// derivative rules in their argument; derivatives in a parameter become
/// counters on the function head.
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    let v = Symbol::new(var);
    diff(e, &v)
}

fn diff(e: &Expr, v: &Symbol) -> Expr {
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Sym(s) => {
            if s == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Field(f) => {
            if f.args.contains(v) {
                Expr::field(f.derived(v))
            } else {
                Expr::zero()
            }
        }
        Node::Add(ts) => Expr::add_all(ts.iter().map(|t| diff(t, v)).collect::<Vec<_>>()),
        Node::Mul(fs) => {
            let mut out = Vec::with_capacity(fs.len());
            for i in 0..fs.len() {
                let d = diff(&fs[i], v);
                if d.is_zero() {
                    continue;
                }
                let mut parts: Vec<Expr> = fs.clone();
                parts[i] = d;
                out.push(Expr::mul_all(parts));
            }
            Expr::add_all(out)
        }
        Node::Pow(b, k) => {
            let db = diff(b, v);
            if db.is_zero() {
                return Expr::zero();
            }
            Expr::mul_all([Expr::int(*k), Expr::pow(b, k - 1), db])
        }
        Node::Func(f, args) => diff_func(*f, args, v),
    }
}

fn diff_func(f: Func, args: &[Expr], v: &Symbol) -> Expr {
    let a0 = &args[0];
    match f {
        Func::Sin => chain(a0, v, a0.cos()),
        Func::Cos => chain(a0, v, a0.sin().neg()),
        Func::Exp => chain(a0, v, a0.exp()),
        Func::Ln => chain(a0, v, a0.recip()),
        Func::Sqrt => chain(a0, v, Expr::rational(1, 2) * a0.sqrt().recip()),
        Func::Pow => {
            // b^e: e*b^(e-1)*b' + b^e*ln(b)*e'
            let (b, ex) = (&args[0], &args[1]);
            let whole = Expr::func(Func::Pow, vec![b.clone(), ex.clone()]);
            let db = diff(b, v);
            let de = diff(ex, v);
            let mut parts = Vec::new();
            if !db.is_zero() {
                let lowered = Expr::func(Func::Pow, vec![b.clone(), ex - &Expr::one()]);
                parts.push(Expr::mul_all([ex.clone(), lowered, db]));
            }
            if !de.is_zero() {
                parts.push(Expr::mul_all([whole, b.ln(), de]));
            }
            Expr::add_all(parts)
        }
        Func::Kummer { kind, da, db, dx } => {
            let (a, b, x) = (&args[0], &args[1], &args[2]);
            let mut parts = Vec::new();
            let dxv = diff(x, v);
            if !dxv.is_zero() {
                let dfx = if da == 0 && db == 0 {
                    kummer_dx(kind, a, b, x)
                } else {
                    Expr::func(
                        Func::Kummer {
                            kind,
                            da,
                            db,
                            dx: dx + 1,
                        },
                        args.to_vec(),
                    )
                };
                parts.push(dfx * dxv);
            }
            let dav = diff(a, v);
            if !dav.is_zero() {
                let h = Func::Kummer {
                    kind,
                    da: da + 1,
                    db,
                    dx,
                };
                parts.push(Expr::func(h, args.to_vec()) * dav);
            }
            let dbv = diff(b, v);
            if !dbv.is_zero() {
                let h = Func::Kummer {
                    kind,
                    da,
                    db: db + 1,
                    dx,
                };
                parts.push(Expr::func(h, args.to_vec()) * dbv);
            }
            Expr::add_all(parts)
        }
    }
}

/// dM/dx = (a/b) M(a+1, b+1, x);  dU/dx = -a U(a+1, b+1, x).
pub(crate) fn kummer_dx(kind: KummerKind, a: &Expr, b: &Expr, x: &Expr) -> Expr {
    let a1 = a + &Expr::one();
    let b1 = b + &Expr::one();
    match kind {
        KummerKind::M => a / b * Expr::kummer_m(a1, b1, x.clone()),
        KummerKind::U => a.neg() * Expr::kummer_u(a1, b1, x.clone()),
    }
}

fn chain(inner: &Expr, v: &Symbol, outer: Expr) -> Expr {
    let d = diff(inner, v);
    if d.is_zero() {
        return Expr::zero();
    }
    outer * d
}
