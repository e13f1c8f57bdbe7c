use super::ParseError;
use crate::expr::Rational;
use num::bigint::BigInt;
use num::{One, Zero};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(Rational),
    Sym(char),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn greek(c: char) -> Option<&'static str> {
    Some(match c {
        'α' => "alpha",
        'β' => "beta",
        'γ' => "gamma",
        'δ' => "delta",
        'λ' => "lambda",
        'μ' => "mu",
        'σ' => "sigma",
        'ζ' => "zeta",
        'ξ' => "xi",
        'π' => "pi",
        '₀' => "0",
        '₁' => "1",
        '₂' => "2",
        '₃' => "3",
        '₄' => "4",
        '₅' => "5",
        '₆' => "6",
        '₇' => "7",
        '₈' => "8",
        '₉' => "9",
        _ => return None,
    })
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || greek(c).is_some()
}

pub(crate) fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start_col = col;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let begin = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let mantissa: String = chars[begin..i].iter().collect();
            let mut exponent = 0i64;
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    let e: String = chars[i + 1..j].iter().collect();
                    exponent = e.parse().map_err(|_| ParseError::Syntax {
                        line,
                        col: start_col,
                        msg: format!("bad exponent `{e}`"),
                    })?;
                    i = j;
                }
            }
            col += i - begin;
            let value = decimal(&mantissa, exponent).ok_or_else(|| ParseError::Syntax {
                line,
                col: start_col,
                msg: format!("bad number `{mantissa}`"),
            })?;
            out.push(Token {
                tok: Tok::Number(value),
                line,
                col: start_col,
            });
            continue;
        }
        if ident_char(c) {
            let mut name = String::new();
            while i < chars.len() && ident_char(chars[i]) {
                match greek(chars[i]) {
                    Some(s) => name.push_str(s),
                    None => name.push(chars[i]),
                }
                i += 1;
                col += 1;
            }
            out.push(Token {
                tok: Tok::Ident(name),
                line,
                col: start_col,
            });
            continue;
        }
        let c = if c == '′' { '\'' } else if c == '−' { '-' } else if c == '·' { '*' } else { c };
        if "+-*/^(),'={}".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                line,
                col: start_col,
            });
            i += 1;
            col += 1;
            continue;
        }
        return Err(ParseError::Syntax {
            line,
            col,
            msg: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// Exact value of a decimal literal `mantissa * 10^exponent`.
fn decimal(mantissa: &str, exponent: i64) -> Option<Rational> {
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let n: BigInt = digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut pow = BigInt::one();
    for _ in 0..scale.unsigned_abs() {
        pow *= &ten;
    }
    if n.is_zero() {
        return Some(Rational::zero());
    }
    Some(if scale >= 0 {
        Rational::from_integer(n * pow)
    } else {
        Rational::new(n, pow)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        let toks = lex("0.25 1e-3 12").unwrap();
        assert_eq!(toks[0].tok, Tok::Number(Rational::new(1.into(), 4.into())));
        assert_eq!(toks[1].tok, Tok::Number(Rational::new(1.into(), 1000.into())));
        assert_eq!(toks[2].tok, Tok::Number(Rational::from_integer(12.into())));
    }

    #[test]
    fn greek_identifiers_become_ascii() {
        let toks = lex("μ²").err();
        assert!(toks.is_some());
        let toks = lex("λ*g₁").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("lambda".into()));
        assert_eq!(toks[2].tok, Tok::Ident("g1".into()));
    }

    #[test]
    fn positions_track_lines() {
        let toks = lex("a\n  + b").unwrap();
        assert_eq!((toks[1].line, toks[1].col), (2, 3));
        assert_eq!((toks[2].line, toks[2].col), (2, 5));
    }
}
