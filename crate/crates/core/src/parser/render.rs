use crate::expr::{split_coeff, Expr, FieldAtom, Func, KummerKind, Node, Rational};
use num::{One, Signed};

const SUM: u8 = 0;
const PRODUCT: u8 = 1;
const POWER: u8 = 2;
const ATOM: u8 = 3;

/// Canonical text for an expression. `parse_expr` in the matching context
/// reads it back to the same normalized expression.
pub fn render(e: &Expr) -> String {
    fmt(e).0
}

fn wrap(s: (String, u8), need: u8) -> String {
    if s.1 < need {
        format!("({})", s.0)
    } else {
        s.0
    }
}

fn fmt(e: &Expr) -> (String, u8) {
    match e.node() {
        Node::Num(q) => {
            if q.is_integer() && !q.is_negative() {
                (q.to_string(), ATOM)
            } else {
                (q.to_string(), PRODUCT)
            }
        }
        Node::Sym(s) => (s.to_string(), ATOM),
        Node::Field(f) => (field(f), ATOM),
        Node::Pow(b, k) if *k > 0 => (format!("{}^{}", wrap(fmt(b), ATOM), k), POWER),
        Node::Pow(..) | Node::Mul(_) => {
            let (c, m) = split_coeff(e);
            let body = product(&c.abs(), &m);
            if c.is_negative() {
                (format!("-{body}"), PRODUCT)
            } else {
                (body, PRODUCT)
            }
        }
        Node::Add(ts) => {
            let mut out = String::new();
            for (i, t) in ts.iter().enumerate() {
                let (c, m) = split_coeff(t);
                let body = if m.is_one() {
                    c.abs().to_string()
                } else {
                    product(&c.abs(), &m)
                };
                match (i, c.is_negative()) {
                    (0, true) => out.push('-'),
                    (0, false) => {}
                    (_, true) => out.push_str(" - "),
                    (_, false) => out.push_str(" + "),
                }
                out.push_str(&body);
            }
            (out, SUM)
        }
        Node::Func(f, args) => (func(f, args), ATOM),
    }
}

fn product(c: &Rational, m: &Expr) -> String {
    let factors: Vec<Expr> = match m.node() {
        Node::Mul(fs) => fs.clone(),
        _ if m.is_one() => Vec::new(),
        _ => vec![m.clone()],
    };
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    for f in &factors {
        match f.node() {
            // A sum raised to -k must keep its exponent: `1/(a + b)^2`
            // would read back as the inverse of the expanded square.
            Node::Pow(b, k) if *k < -1 && matches!(b.node(), Node::Add(_)) => {
                num.push(format!("{}^{}", wrap(fmt(b), ATOM), k));
            }
            Node::Pow(b, k) if *k < 0 => {
                let base = wrap(fmt(b), ATOM);
                den.push(if *k == -1 { base } else { format!("{base}^{}", -k) });
            }
            _ => num.push(wrap(fmt(f), POWER)),
        }
    }
    let p = c.numer();
    let q = c.denom();
    if !p.is_one() || num.is_empty() {
        num.insert(0, p.to_string());
    }
    if !q.is_one() {
        den.insert(0, q.to_string());
    }
    let mut s = num.join("*");
    match den.len() {
        0 => {}
        1 => {
            s.push('/');
            s.push_str(&den[0]);
        }
        _ => {
            s.push_str("/(");
            s.push_str(&den.join("*"));
            s.push(')');
        }
    }
    s
}

fn field(f: &FieldAtom) -> String {
    let mut s = f.name.to_string();
    if f.args.len() == 1 {
        for _ in 0..f.order() {
            s.push('\'');
        }
    } else if f.order() > 0 {
        s.push('_');
        for w in &f.wrt {
            s.push_str(w.as_str());
        }
    }
    s
}

fn func(f: &Func, args: &[Expr]) -> String {
    let list = |args: &[Expr]| {
        args.iter()
            .map(|a| fmt(a).0)
            .collect::<Vec<_>>()
            .join(", ")
    };
    match f {
        Func::Sin => format!("sin({})", list(args)),
        Func::Cos => format!("cos({})", list(args)),
        Func::Exp => format!("exp({})", list(args)),
        Func::Ln => format!("ln({})", list(args)),
        Func::Sqrt => format!("sqrt({})", list(args)),
        Func::Pow => format!("{}^{}", wrap(fmt(&args[0]), ATOM), wrap(fmt(&args[1]), ATOM)),
        Func::Kummer { kind, da, db, dx } => {
            let name = match kind {
                KummerKind::M => "kummerM",
                KummerKind::U => "kummerU",
            };
            if (*da, *db, *dx) == (0, 0, 0) {
                format!("{name}({})", list(args))
            } else {
                format!("{name}{{{da},{db},{dx}}}({})", list(args))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expr, Context, Scope};

    fn ode(s: &str) -> Expr {
        parse_expr(s, &Scope::open(Context::Ode)).unwrap()
    }

    #[test]
    fn simple_forms() {
        assert_eq!(render(&Expr::zero()), "0");
        let e = Expr::sym("g1") * Expr::deriv_atom("z", "zeta", 1);
        assert_eq!(render(&e), "g1*z'");
        assert_eq!(render(&ode("-x")), "-x");
        assert_eq!(render(&ode("a - 3*b/2")), "a - 3*b/2");
        assert_eq!(render(&ode("x/(y*zeta^2)")), "x/(y*zeta^2)");
    }

    #[test]
    fn round_trips() {
        for src in [
            "mu^2*(c^2 - a^2)*u'' + alpha*u - beta*u^n",
            "-1/2*x + sqrt(2)*y^-3",
            "kummerM(1/2 + lambda/4, 3/2, zeta^2)*C1*zeta",
            "kummerU{0,1,2}(a, 3/2, x^2)",
            "(x + 1)^-2 + exp(-zeta*sqrt(lambda))",
            "x^(1/3) - (2*y)^n",
            "-3/(a + b)",
        ] {
            let e = ode(src);
            let again = ode(&render(&e));
            assert_eq!(again, e, "{src} -> {}", render(&e));
        }
    }

    #[test]
    fn pde_fields_use_subscripts() {
        let e = parse_expr("u_tt - u_xt", &Scope::open(Context::Pde)).unwrap();
        let s = render(&e);
        let back = parse_expr(&s, &Scope::open(Context::Pde)).unwrap();
        assert_eq!(back, e);
        assert!(s.contains("u_tt"));
    }
}
