use super::lexer::{lex, Tok, Token};
use super::ParseError;
use crate::expr::{Expr, FieldAtom, Func, KummerKind, Node, Symbol};
use std::collections::BTreeSet;

/// Highest derivative order accepted in source text.
pub const MAX_DERIVATIVE_ORDER: usize = 6;

/// How field names are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Context {
    /// `u` is u(x, t); derivatives are subscripts such as `u_xt`.
    Pde,
    /// `u` and `z` are functions of zeta; derivatives are primes (`z''`).
    Ode,
}

#[derive(Clone, Debug)]
pub struct Scope {
    pub context: Context,
    pub unknown: String,
    /// Symbols allowed besides the built-ins; `None` accepts any name.
    pub declared: Option<BTreeSet<String>>,
}

impl Scope {
    pub fn pde<S: AsRef<str>>(params: &[S]) -> Self {
        Scope {
            context: Context::Pde,
            unknown: "u".into(),
            declared: Some(params.iter().map(|p| p.as_ref().to_string()).collect()),
        }
    }

    pub fn ode<S: AsRef<str>>(params: &[S]) -> Self {
        Scope {
            context: Context::Ode,
            unknown: "u".into(),
            declared: Some(params.iter().map(|p| p.as_ref().to_string()).collect()),
        }
    }

    /// Any identifier is accepted as a symbol.
    pub fn open(context: Context) -> Self {
        Scope {
            context,
            unknown: "u".into(),
            declared: None,
        }
    }

    fn vars(&self) -> &'static [&'static str] {
        match self.context {
            Context::Pde => &["x", "t"],
            Context::Ode => &["zeta"],
        }
    }

    fn fields(&self) -> Vec<&str> {
        match self.context {
            Context::Pde => vec![self.unknown.as_str()],
            Context::Ode => vec![self.unknown.as_str(), crate::expr::AUX],
        }
    }

    fn allows(&self, name: &str) -> bool {
        name == "pi"
            || self.vars().contains(&name)
            || self.declared.as_ref().is_none_or(|d| d.contains(name))
    }
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    scope: &'a Scope,
}

fn function_head(name: &str) -> Option<Func> {
    Some(match name {
        "sin" => Func::Sin,
        "cos" => Func::Cos,
        "exp" => Func::Exp,
        "ln" | "log" => Func::Ln,
        "sqrt" => Func::Sqrt,
        "kummerM" | "KummerM" => Func::kummer(KummerKind::M),
        "kummerU" | "KummerU" => Func::kummer(KummerKind::U),
        _ => return None,
    })
}

impl<'a> Parser<'a> {
    fn at(&self) -> usize {
        self.pos.min(self.toks.len() - 1)
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at()].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.at()].clone();
        self.pos += 1;
        t
    }

    /// Position for diagnostics; end of input is reported at the last token.
    fn here(&self) -> (usize, usize) {
        let i = self.at();
        let t = &self.toks[i];
        if t.tok == Tok::Eof && i > 0 {
            let p = &self.toks[i - 1];
            (p.line, p.col)
        } else {
            (t.line, t.col)
        }
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(q) => format!("`{q}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.next();
            Ok(())
        } else {
            let found = Self::describe(self.peek());
            self.syntax(format!("expected `{c}`, found {found}"))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = vec![self.term()?];
        loop {
            if self.eat('+') {
                acc.push(self.term()?);
            } else if self.eat('-') {
                acc.push(self.term()?.neg());
            } else {
                return Ok(Expr::add_all(acc));
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc * self.unary()?;
            } else if *self.peek() == Tok::Sym('/') {
                self.next();
                let (line, col) = self.here();
                let d = self.unary()?;
                if d.is_zero() {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        msg: "division by zero".into(),
                    });
                }
                acc = acc / d;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        let (line, col) = self.here();
        self.next();
        let exponent = self.unary()?;
        if let Some(k) = exponent.as_integer() {
            if base.is_zero() && k < 0 {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: "division by zero".into(),
                });
            }
            return Ok(Expr::pow(&base, k));
        }
        if exponent.as_num().is_some() {
            let unknown = self.scope.unknown.as_str();
            let mut hits = false;
            base.visit(&mut |e| {
                if let Node::Field(f) = e.node() {
                    if f.name.as_str() == unknown {
                        hits = true;
                    }
                }
            });
            if hits {
                return Err(ParseError::NonIntegerExponent {
                    field: unknown.to_string(),
                    line,
                    col,
                });
            }
        }
        Ok(Expr::func(Func::Pow, vec![base, exponent]))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.next();
        match tok.tok {
            Tok::Number(q) => Ok(Expr::num(q)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(name, tok.line, tok.col),
            other => {
                self.pos -= 1;
                let found = Self::describe(&other);
                self.syntax(format!("expected an operand, found {found}"))
            }
        }
    }

    fn identifier(&mut self, name: String, line: usize, col: usize) -> Result<Expr, ParseError> {
        if let Some(mut f) = function_head(&name) {
            if let Func::Kummer { kind, .. } = f {
                if self.eat('{') {
                    let mut c = [0u8; 3];
                    for (i, slot) in c.iter_mut().enumerate() {
                        if i > 0 {
                            self.expect(',')?;
                        }
                        let small = match self.next().tok {
                            Tok::Number(q) if q.is_integer() => u8::try_from(q.to_integer()).ok(),
                            _ => None,
                        };
                        match small {
                            Some(v) if v <= 12 => *slot = v,
                            _ => {
                                self.pos -= 1;
                                return self.syntax("expected a small derivative counter");
                            }
                        }
                    }
                    self.expect('}')?;
                    f = Func::Kummer {
                        kind,
                        da: c[0],
                        db: c[1],
                        dx: c[2],
                    };
                }
            }
            self.expect('(')?;
            let mut args = vec![self.expr()?];
            while self.eat(',') {
                args.push(self.expr()?);
            }
            self.expect(')')?;
            if args.len() != f.arity() {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("`{name}` takes {} argument(s), got {}", f.arity(), args.len()),
                });
            }
            return Ok(Expr::func(f, args));
        }

        if let Some(atom) = self.field(&name, line, col)? {
            return Ok(Expr::field(atom));
        }

        if *self.peek() == Tok::Sym('(') {
            return self.syntax(format!("unknown function `{name}`"));
        }
        if !self.scope.allows(&name) {
            return Err(ParseError::Undeclared { name, line, col });
        }
        Ok(Expr::sym(&name))
    }

    /// Field reference with derivative decorations, if `name` denotes one.
    fn field(&mut self, name: &str, line: usize, col: usize) -> Result<Option<FieldAtom>, ParseError> {
        let vars = self.scope.vars();
        let fields = self.scope.fields();
        let (base, subs) = match name.split_once('_') {
            Some((b, s)) if self.scope.context == Context::Pde && fields.contains(&b) => (b, s),
            _ if fields.contains(&name) => (name, ""),
            _ => return Ok(None),
        };
        let mut atom = FieldAtom::new(base, vars);
        for ch in subs.chars() {
            let v = ch.to_string();
            if !vars.contains(&v.as_str()) {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("`{ch}` in `{name}` is not an independent variable"),
                });
            }
            atom = atom.derived(&Symbol::new(&v));
        }
        if self.eat('(') {
            for (i, v) in vars.iter().enumerate() {
                if i > 0 {
                    self.expect(',')?;
                }
                match self.next().tok {
                    Tok::Ident(ref s) if s == v => {}
                    _ => {
                        self.pos -= 1;
                        return self.syntax(format!("expected argument `{v}` of `{base}`"));
                    }
                }
            }
            self.expect(')')?;
        }
        while *self.peek() == Tok::Sym('\'') {
            if self.scope.context == Context::Pde {
                return self.syntax("primes are only allowed on functions of zeta");
            }
            self.next();
            atom = atom.derived(&Symbol::new(vars[0]));
        }
        if atom.order() > MAX_DERIVATIVE_ORDER {
            return Err(ParseError::DerivativeOrder {
                order: atom.order(),
                cap: MAX_DERIVATIVE_ORDER,
                line,
                col,
            });
        }
        Ok(Some(atom))
    }
}

fn run(text: &str, scope: &Scope, relation: bool) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, scope };
    let lhs = p.expr()?;
    let e = if relation && p.eat('=') {
        let rhs = p.expr()?;
        lhs - rhs
    } else {
        lhs
    };
    if *p.peek() != Tok::Eof {
        let found = Parser::describe(p.peek());
        return p.syntax(format!("unexpected {found}"));
    }
    Ok(e)
}

/// Parse an expression (no `=`).
pub fn parse_expr(text: &str, scope: &Scope) -> Result<Expr, ParseError> {
    run(text, scope, false)
}

/// Parse `A` or `A = B`, returning `A - B`.
pub(crate) fn parse_relation(text: &str, scope: &Scope) -> Result<Expr, ParseError> {
    run(text, scope, true)
}
