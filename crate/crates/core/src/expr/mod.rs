//! Immutable symbolic expressions in canonical (expanded) normal form.
//!
//! Every [`Expr`] handed out by the smart constructors is already normalized:
//! sums and products are flattened, rational constants are folded, like terms
//! and like bases are merged, and products are distributed over sums. Two
//! expressions that are equal as polynomials (in their atoms) therefore compare
//! equal structurally. Negative powers of sums are kept as opaque atoms with a
//! primitive (leading coefficient 1) base.
//!
//! The node order is fixed: constants < symbols < field atoms < powers <
//! products < sums < function applications. It is the derived `Ord` of
//! [`Node`], so the canonical layout follows from declaration order.

mod collect;
mod diff;
mod eval;
pub mod poly;
mod subst;
mod symbols;

pub use collect::{collect, CollectError, CollectMode, MonomialKey, AUX, WAVE_VAR};
pub use diff::differentiate;
pub use eval::{eval, EvalError, Jet, Scalar, VarEnv};
pub use subst::{substitute, substitute_fields, substitute_symbols};
pub use symbols::{Role, SymbolTable, SymbolTableError};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Rational number type used for exact coefficients.
pub type Rational = BigRational;

/// Interned-by-value symbol name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// An unknown function applied to its independent variables, possibly
/// differentiated: `u(x, t)`, `u_xt`, `z(zeta)`, `z''`.
///
/// `wrt` is kept sorted, so mixed partials commute structurally.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FieldAtom {
    pub name: Symbol,
    pub args: Vec<Symbol>,
    pub wrt: Vec<Symbol>,
}

impl FieldAtom {
    pub fn new(name: &str, args: &[&str]) -> Self {
        FieldAtom {
            name: Symbol::new(name),
            args: args.iter().map(|a| Symbol::new(a)).collect(),
            wrt: Vec::new(),
        }
    }

    /// Total derivative order.
    pub fn order(&self) -> usize {
        self.wrt.len()
    }

    /// Number of derivatives taken with respect to `var`.
    pub fn count(&self, var: &str) -> usize {
        self.wrt.iter().filter(|w| w.as_str() == var).count()
    }

    pub fn derived(&self, var: &Symbol) -> Self {
        let mut wrt = self.wrt.clone();
        wrt.push(var.clone());
        wrt.sort();
        FieldAtom {
            name: self.name.clone(),
            args: self.args.clone(),
            wrt,
        }
    }

    pub fn with_order(&self, var: &str, k: usize) -> Self {
        FieldAtom {
            name: self.name.clone(),
            args: self.args.clone(),
            wrt: vec![Symbol::new(var); k],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum KummerKind {
    M,
    U,
}

/// Function heads. `Kummer` carries derivative counters with respect to its
/// two parameters and, once a parameter derivative is present, its argument.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    /// `base^exponent` with a non-integer or symbolic exponent.
    Pow,
    Kummer {
        kind: KummerKind,
        da: u8,
        db: u8,
        dx: u8,
    },
}

impl Func {
    pub fn kummer(kind: KummerKind) -> Self {
        Func::Kummer {
            kind,
            da: 0,
            db: 0,
            dx: 0,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Func::Pow => 2,
            Func::Kummer { .. } => 3,
            _ => 1,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Node {
    Num(Rational),
    Sym(Symbol),
    Field(FieldAtom),
    Pow(Expr, i64),
    Mul(Vec<Expr>),
    Add(Vec<Expr>),
    Func(Func, Vec<Expr>),
}

/// Shared, immutable expression handle.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::parser::render(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::render(self))
    }
}

fn raw(node: Node) -> Expr {
    Expr(Arc::new(node))
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn zero() -> Expr {
        raw(Node::Num(Rational::zero()))
    }

    pub fn one() -> Expr {
        raw(Node::Num(Rational::one()))
    }

    pub fn int(v: i64) -> Expr {
        raw(Node::Num(Rational::from_integer(BigInt::from(v))))
    }

    pub fn rational(p: i64, q: i64) -> Expr {
        raw(Node::Num(Rational::new(BigInt::from(p), BigInt::from(q))))
    }

    pub fn num(q: Rational) -> Expr {
        raw(Node::Num(q))
    }

    pub fn sym(name: &str) -> Expr {
        raw(Node::Sym(Symbol::new(name)))
    }

    pub fn symbol(s: Symbol) -> Expr {
        raw(Node::Sym(s))
    }

    pub fn field(atom: FieldAtom) -> Expr {
        raw(Node::Field(atom))
    }

    /// `name^(k)(var)`: the k-th derivative of a one-argument field.
    pub fn deriv_atom(name: &str, var: &str, k: usize) -> Expr {
        Expr::field(FieldAtom {
            name: Symbol::new(name),
            args: vec![Symbol::new(var)],
            wrt: vec![Symbol::new(var); k],
        })
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self.node() {
            Node::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&Symbol> {
        match self.node() {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        self.as_num()
            .filter(|q| q.is_integer())
            .and_then(|q| q.to_integer().to_i64())
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(|q| q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(|q| q.is_one())
    }

    /// Sum of the given expressions, normalized.
    pub fn add_all<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut constant = Rational::zero();
        let mut acc: BTreeMap<Expr, Rational> = BTreeMap::new();
        let mut stack: Vec<Expr> = terms.into_iter().collect();
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t.node() {
                Node::Num(q) => constant += q,
                Node::Add(ts) => {
                    for s in ts.iter().rev() {
                        stack.push(s.clone());
                    }
                }
                _ => {
                    let (c, m) = split_coeff(&t);
                    *acc.entry(m).or_insert_with(Rational::zero) += c;
                }
            }
        }
        let mut out = Vec::with_capacity(acc.len() + 1);
        if !constant.is_zero() {
            out.push(raw(Node::Num(constant)));
        }
        for (m, c) in acc {
            if c.is_zero() {
                continue;
            }
            out.push(with_coeff(c, m));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => raw(Node::Add(out)),
        }
    }

    /// Product of the given expressions, normalized and fully expanded.
    pub fn mul_all<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut coeff = Rational::one();
        let mut bases: BTreeMap<Expr, i64> = BTreeMap::new();
        let mut exp_args: Vec<Expr> = Vec::new();
        let mut stack: Vec<Expr> = factors.into_iter().collect();
        while let Some(f) = stack.pop() {
            match f.node() {
                Node::Num(q) => {
                    if q.is_zero() {
                        return Expr::zero();
                    }
                    coeff *= q;
                }
                Node::Mul(fs) => stack.extend(fs.iter().cloned()),
                Node::Add(_) => {
                    let (q, prim) = primitive(&f);
                    coeff *= q;
                    *bases.entry(prim).or_insert(0) += 1;
                }
                Node::Pow(b, k) => {
                    if let Node::Func(Func::Exp, args) = b.node() {
                        exp_args.push(Expr::mul_all([Expr::int(*k), args[0].clone()]));
                    } else {
                        *bases.entry(b.clone()).or_insert(0) += k;
                    }
                }
                Node::Func(Func::Exp, args) => exp_args.push(args[0].clone()),
                _ => *bases.entry(f.clone()).or_insert(0) += 1,
            }
        }
        if !exp_args.is_empty() {
            let e = Expr::func(Func::Exp, vec![Expr::add_all(exp_args)]);
            match e.node() {
                Node::Func(Func::Exp, _) => *bases.entry(e).or_insert(0) += 1,
                _ => stack.push(e),
            }
        }

        let mut sums: Vec<Expr> = Vec::new();
        let mut factors: Vec<Expr> = Vec::new();
        let mut reenter = !stack.is_empty();
        for (b, k) in bases {
            if k == 0 {
                continue;
            }
            if matches!(b.node(), Node::Add(_)) && k > 0 {
                sums.extend(std::iter::repeat_n(b.clone(), k as usize));
                continue;
            }
            let p = Expr::pow(&b, k);
            match p.node() {
                Node::Pow(..) | Node::Sym(_) | Node::Field(_) | Node::Func(..) => factors.push(p),
                _ => {
                    reenter = true;
                    factors.push(p);
                }
            }
        }
        if reenter {
            let mut all = stack;
            all.push(Expr::num(coeff));
            all.extend(factors);
            all.extend(sums);
            return Expr::mul_all(all);
        }
        if !sums.is_empty() {
            let mut acc: Vec<Expr> = vec![build_product(coeff, factors)];
            for s in sums {
                let terms: Vec<Expr> = match s.node() {
                    Node::Add(ts) => ts.clone(),
                    _ => vec![s.clone()],
                };
                let mut next = Vec::with_capacity(acc.len() * terms.len());
                for a in &acc {
                    for t in &terms {
                        next.push(Expr::mul_all([a.clone(), t.clone()]));
                    }
                }
                acc = next;
            }
            return Expr::add_all(acc);
        }
        build_product(coeff, factors)
    }

    /// `base^k` for an integer exponent, normalized.
    pub fn pow(base: &Expr, k: i64) -> Expr {
        if k == 0 {
            return Expr::one();
        }
        if k == 1 {
            return base.clone();
        }
        match base.node() {
            Node::Num(q) => {
                if q.is_zero() {
                    if k > 0 {
                        return Expr::zero();
                    }
                    return raw(Node::Pow(base.clone(), k));
                }
                Expr::num(rational_pow(q, k))
            }
            Node::Pow(b, m) => Expr::pow(b, m * k),
            Node::Mul(fs) => Expr::mul_all(fs.iter().map(|f| Expr::pow(f, k))),
            Node::Add(_) => {
                if k > 0 {
                    let mut result = Expr::one();
                    let mut sq = base.clone();
                    let mut e = k;
                    while e > 0 {
                        if e & 1 == 1 {
                            result = Expr::mul_all([result, sq.clone()]);
                        }
                        e >>= 1;
                        if e > 0 {
                            sq = Expr::mul_all([sq.clone(), sq]);
                        }
                    }
                    result
                } else {
                    let (q, prim) = primitive(base);
                    let scaled = Expr::num(rational_pow(&q, k));
                    if scaled.is_one() {
                        raw(Node::Pow(prim, k))
                    } else {
                        build_product(rational_pow(&q, k), vec![raw(Node::Pow(prim, k))])
                    }
                }
            }
            Node::Func(Func::Sqrt, args) if k.abs() >= 2 => {
                let half = k.div_euclid(2);
                let rem = k.rem_euclid(2);
                let y = &args[0];
                if rem == 0 {
                    Expr::pow(y, half)
                } else {
                    Expr::mul_all([Expr::pow(y, half), base.clone()])
                }
            }
            Node::Func(Func::Exp, args) => {
                Expr::func(Func::Exp, vec![Expr::mul_all([Expr::int(k), args[0].clone()])])
            }
            _ => raw(Node::Pow(base.clone(), k)),
        }
    }

    /// Function application with light evaluation rules.
    pub fn func(f: Func, args: Vec<Expr>) -> Expr {
        debug_assert_eq!(args.len(), f.arity());
        match f {
            Func::Sin if args[0].is_zero() => return Expr::zero(),
            Func::Cos | Func::Exp if args[0].is_zero() => return Expr::one(),
            Func::Ln if args[0].is_one() => return Expr::zero(),
            Func::Exp => {
                if let Node::Func(Func::Ln, inner) = args[0].node() {
                    return inner[0].clone();
                }
            }
            Func::Sqrt => {
                if let Some(q) = args[0].as_num() {
                    if let Some(e) = sqrt_rational(q) {
                        return e;
                    }
                }
            }
            Func::Pow => {
                if let Some(k) = args[1].as_integer() {
                    return Expr::pow(&args[0], k);
                }
                if args[1] == Expr::rational(1, 2) {
                    return Expr::func(Func::Sqrt, vec![args[0].clone()]);
                }
                if args[0].is_one() {
                    return Expr::one();
                }
            }
            Func::Kummer {
                kind: KummerKind::M,
                da: 0,
                db: 0,
                dx: 0,
            } if args[2].is_zero() => return Expr::one(),
            _ => {}
        }
        raw(Node::Func(f, args))
    }

    pub fn neg(&self) -> Expr {
        Expr::mul_all([Expr::int(-1), self.clone()])
    }

    pub fn recip(&self) -> Expr {
        Expr::pow(self, -1)
    }

    pub fn powi(&self, k: i64) -> Expr {
        Expr::pow(self, k)
    }

    pub fn sin(&self) -> Expr {
        Expr::func(Func::Sin, vec![self.clone()])
    }

    pub fn cos(&self) -> Expr {
        Expr::func(Func::Cos, vec![self.clone()])
    }

    pub fn exp(&self) -> Expr {
        Expr::func(Func::Exp, vec![self.clone()])
    }

    pub fn ln(&self) -> Expr {
        Expr::func(Func::Ln, vec![self.clone()])
    }

    pub fn sqrt(&self) -> Expr {
        Expr::func(Func::Sqrt, vec![self.clone()])
    }

    pub fn kummer_m(a: Expr, b: Expr, x: Expr) -> Expr {
        Expr::func(Func::kummer(KummerKind::M), vec![a, b, x])
    }

    pub fn kummer_u(a: Expr, b: Expr, x: Expr) -> Expr {
        Expr::func(Func::kummer(KummerKind::U), vec![a, b, x])
    }

    /// Immediate children, in order.
    pub fn children(&self) -> Vec<Expr> {
        match self.node() {
            Node::Num(_) | Node::Sym(_) | Node::Field(_) => Vec::new(),
            Node::Pow(b, _) => vec![b.clone()],
            Node::Mul(v) | Node::Add(v) | Node::Func(_, v) => v.clone(),
        }
    }

    /// Every symbol name occurring anywhere in the tree.
    pub fn free_symbols(&self) -> std::collections::BTreeSet<Symbol> {
        let mut out = std::collections::BTreeSet::new();
        self.visit(&mut |e| {
            if let Node::Sym(s) = e.node() {
                out.insert(s.clone());
            }
        });
        out
    }

    pub fn fields(&self) -> std::collections::BTreeSet<FieldAtom> {
        let mut out = std::collections::BTreeSet::new();
        self.visit(&mut |e| {
            if let Node::Field(f) = e.node() {
                out.insert(f.clone());
            }
        });
        out
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if let Node::Sym(s) = e.node() {
                if s.as_str() == name {
                    found = true;
                }
            }
        });
        found
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self.node() {
            Node::Pow(b, _) => b.visit(f),
            Node::Mul(v) | Node::Add(v) | Node::Func(_, v) => {
                for c in v {
                    c.visit(f);
                }
            }
            _ => {}
        }
    }

    /// Additive terms (a single term for non-sums, none for zero).
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ts) => ts.clone(),
            _ if self.is_zero() => Vec::new(),
            _ => vec![self.clone()],
        }
    }

    /// Number of nodes, used for budgets and heuristics.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

/// Rebuild bottom-up through the smart constructors.
pub fn normalize(e: &Expr) -> Expr {
    match e.node() {
        Node::Num(_) | Node::Sym(_) => e.clone(),
        Node::Field(f) => {
            let mut f = f.clone();
            f.wrt.sort();
            Expr::field(f)
        }
        Node::Pow(b, k) => Expr::pow(&normalize(b), *k),
        Node::Mul(v) => Expr::mul_all(v.iter().map(normalize)),
        Node::Add(v) => Expr::add_all(v.iter().map(normalize)),
        Node::Func(f, v) => Expr::func(*f, v.iter().map(normalize).collect()),
    }
}

/// Construct a raw node without normalizing. Only for tests that need
/// deliberately unnormalized trees.
pub fn unnormalized(node: Node) -> Expr {
    raw(node)
}

pub fn split_coeff(t: &Expr) -> (Rational, Expr) {
    match t.node() {
        Node::Num(q) => (q.clone(), Expr::one()),
        Node::Mul(fs) => {
            if let Some(q) = fs[0].as_num() {
                let rest: Vec<Expr> = fs[1..].to_vec();
                let m = if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    raw(Node::Mul(rest))
                };
                (q.clone(), m)
            } else {
                (Rational::one(), t.clone())
            }
        }
        _ => (Rational::one(), t.clone()),
    }
}

fn with_coeff(c: Rational, m: Expr) -> Expr {
    if m.is_one() {
        return raw(Node::Num(c));
    }
    if c.is_one() {
        return m;
    }
    let mut v = vec![raw(Node::Num(c))];
    match m.node() {
        Node::Mul(fs) => v.extend(fs.iter().cloned()),
        _ => v.push(m),
    }
    raw(Node::Mul(v))
}

fn build_product(coeff: Rational, mut factors: Vec<Expr>) -> Expr {
    if coeff.is_zero() {
        return Expr::zero();
    }
    factors.sort_by(|a, b| base_of(a).cmp(base_of(b)).then_with(|| a.cmp(b)));
    if factors.is_empty() {
        return Expr::num(coeff);
    }
    if coeff.is_one() && factors.len() == 1 {
        return factors.pop().unwrap();
    }
    let mut v = Vec::with_capacity(factors.len() + 1);
    if !coeff.is_one() {
        v.push(raw(Node::Num(coeff)));
    }
    v.extend(factors);
    raw(Node::Mul(v))
}

fn base_of(e: &Expr) -> &Expr {
    match e.node() {
        Node::Pow(b, _) => b,
        _ => e,
    }
}

/// Write a sum as `q * s` where the first term of `s` has coefficient 1.
pub(crate) fn primitive(sum: &Expr) -> (Rational, Expr) {
    let ts = match sum.node() {
        Node::Add(ts) => ts,
        _ => return (Rational::one(), sum.clone()),
    };
    let (q, _) = split_coeff(&ts[0]);
    if q.is_one() {
        return (q, sum.clone());
    }
    let inv = q.recip();
    let scaled = Expr::add_all(ts.iter().map(|t| {
        let (c, m) = split_coeff(t);
        with_coeff(c * &inv, m)
    }));
    (q, scaled)
}

fn rational_pow(q: &Rational, k: i64) -> Rational {
    let mut base = if k < 0 { q.recip() } else { q.clone() };
    let mut e = k.unsigned_abs();
    let mut acc = Rational::one();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// sqrt of a nonnegative rational with square factors pulled out;
/// `None` leaves it opaque (negative input).
fn sqrt_rational(q: &Rational) -> Option<Expr> {
    if q.is_negative() {
        return None;
    }
    if q.is_zero() {
        return Some(Expr::zero());
    }
    let (ns, nr) = square_split(q.numer());
    let (ds, dr) = square_split(q.denom());
    // sqrt(n/d) = ns/ds * sqrt(nr/dr) = ns/(ds*dr) * sqrt(nr*dr)
    let radicand = &nr * &dr;
    let outside = Rational::new(ns, ds * dr);
    if radicand.is_one() {
        return Some(Expr::num(outside));
    }
    let inner = raw(Node::Func(
        Func::Sqrt,
        vec![Expr::num(Rational::from_integer(radicand))],
    ));
    Some(build_product(outside, vec![inner]))
}

/// n = s^2 * r with r squarefree over the small primes tried.
fn square_split(n: &BigInt) -> (BigInt, BigInt) {
    let mut s = BigInt::one();
    let mut r = n.clone();
    let mut p = BigInt::from(2);
    let limit = BigInt::from(10_000);
    while p <= limit && &p * &p <= r {
        let p2 = &p * &p;
        while (&r % &p2).is_zero() {
            r /= &p2;
            s *= &p;
        }
        p += 1;
    }
    if let Some(v) = r.to_u64() {
        let root = (v as f64).sqrt().round() as u64;
        if root > 1 && root * root == v {
            s *= BigInt::from(root);
            r = BigInt::one();
        }
    }
    (s, r)
}

macro_rules! bin_op {
    ($tr:ident, $m:ident, $body:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
    };
}

bin_op!(Add, add, |a, b| Expr::add_all([a, b]));
bin_op!(Sub, sub, |a, b| Expr::add_all([a, b.neg()]));
bin_op!(Mul, mul, |a, b| Expr::mul_all([a, b]));
bin_op!(Div, div, |a, b| Expr::mul_all([a, b.recip()]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}
