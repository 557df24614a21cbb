use num::{BigInt, BigRational};

use super::expr::Expr;
use super::normalize::to_ratfunc;
use super::symbol::Symbol;
use crate::{Error, Result};

/// Expression grammar: `+ - * / ^` with usual precedence, `^` right
/// associative and restricted to exponents that fold to rational constants,
/// parentheses, `exp( )`, `ln( )`, `sqrt( )`, integer and decimal literals.
/// Jet coordinates are written `u`, `u^k`, `u_{lm}`, `u^k_{lm}` with single
/// decimal digits; a power of the variable `u` itself needs parentheses, as in
/// `u^(2)`. No implicit multiplication.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.expr(0)?;
    p.expect_end()?;
    Ok(e)
}

/// Comma-separated list of expressions.
pub fn parse_expr_list(src: &str) -> Result<Vec<Expr>> {
    let mut p = Parser::new(src)?;
    let mut out = vec![p.expr(0)?];
    while matches!(p.peek().tok, Tok::Comma) {
        p.bump()?;
        out.push(p.expr(0)?);
    }
    p.expect_end()?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Jet { l: u8, m: u8, k: u8 },
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    pos: usize,
}

struct Parser {
    toks: Vec<Spanned>,
    at: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser> {
        Ok(Parser { toks: lex(src)?, at: 0 })
    }

    fn peek(&self) -> &Spanned {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> Result<Spanned> {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        Ok(t)
    }

    fn expect_end(&self) -> Result<()> {
        let t = self.peek();
        if t.tok == Tok::End {
            Ok(())
        } else {
            Err(err(t.pos, "unexpected trailing input"))
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr> {
        let first = self.bump()?;
        let mut lhs = match first.tok {
            Tok::Num(r) => Expr::from_rat(r),
            Tok::Jet { l, m, k } => Expr::var(jet_var(l, m, k)),
            Tok::Ident(name) => self.ident(first.pos, name)?,
            Tok::Minus => {
                let operand = self.expr(5)?;
                Expr::prod(vec![Expr::from_int(-1), operand])
            }
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.close_paren()?;
                inner
            }
            _ => return Err(err(first.pos, "expected an expression")),
        };
        loop {
            let (lbp, rbp, op) = match self.peek().tok {
                Tok::Plus => (1, 2, '+'),
                Tok::Minus => (1, 2, '-'),
                Tok::Star => (3, 4, '*'),
                Tok::Slash => (3, 4, '/'),
                Tok::Caret => (8, 7, '^'),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            let op_pos = self.peek().pos;
            self.bump()?;
            let rhs = self.expr(rbp)?;
            lhs = match op {
                '+' => lhs + rhs,
                '-' => lhs - rhs,
                '*' => lhs * rhs,
                '/' => lhs / rhs,
                '^' => {
                    let q = constant_exponent(&rhs).ok_or_else(|| {
                        Error::NonRationalExponent(format!(
                            "exponent at byte {op_pos} does not fold to a rational constant"
                        ))
                    })?;
                    Expr::pow(lhs, q)
                }
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn ident(&mut self, pos: usize, name: String) -> Result<Expr> {
        let is_call = self.peek().tok == Tok::LParen;
        match name.as_str() {
            "exp" | "ln" | "sqrt" if is_call => {
                self.bump()?;
                let arg = self.expr(0)?;
                self.close_paren()?;
                Ok(match name.as_str() {
                    "exp" => Expr::exp(arg),
                    "ln" => Expr::log(arg),
                    _ => Expr::sqrt(arg),
                })
            }
            _ if is_call => Err(Error::UnknownFunction(name)),
            _ => {
                let _ = pos;
                Ok(Expr::var(Symbol::intern(&name)))
            }
        }
    }

    fn close_paren(&mut self) -> Result<()> {
        let t = self.bump()?;
        if t.tok == Tok::RParen {
            Ok(())
        } else {
            Err(err(t.pos, "expected `)`"))
        }
    }
}

fn jet_var(l: u8, m: u8, k: u8) -> Symbol {
    Symbol::intern(&super::symbol::jet_name(l, m, k))
}

/// A parsed exponent must already be a rational constant after folding.
fn constant_exponent(e: &Expr) -> Option<BigRational> {
    if let Some(r) = e.as_rat() {
        return Some(r.clone());
    }
    to_ratfunc(e).ok()?.as_constant()
}

fn err(pos: usize, msg: &str) -> Error {
    Error::Parse { pos, msg: msg.into() }
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '+' => {
                out.push(Spanned { tok: Tok::Plus, pos: i });
                i += 1;
            }
            '-' => {
                out.push(Spanned { tok: Tok::Minus, pos: i });
                i += 1;
            }
            '*' => {
                out.push(Spanned { tok: Tok::Star, pos: i });
                i += 1;
            }
            '/' => {
                out.push(Spanned { tok: Tok::Slash, pos: i });
                i += 1;
            }
            '^' => {
                out.push(Spanned { tok: Tok::Caret, pos: i });
                i += 1;
            }
            '(' => {
                out.push(Spanned { tok: Tok::LParen, pos: i });
                i += 1;
            }
            ')' => {
                out.push(Spanned { tok: Tok::RParen, pos: i });
                i += 1;
            }
            ',' => {
                out.push(Spanned { tok: Tok::Comma, pos: i });
                i += 1;
            }
            '0'..='9' | '.' => {
                let (tok, next) = lex_number(b, i)?;
                out.push(Spanned { tok, pos: i });
                i = next;
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    // `u_{..}` jet subscripts are handled below, so stop an
                    // identifier before `_{`.
                    if b[i] == b'_' && i + 1 < b.len() && b[i + 1] == b'{' {
                        break;
                    }
                    i += 1;
                }
                let name = &src[start..i];
                if name == "u" {
                    let (tok, next) = lex_jet(b, i)?;
                    out.push(Spanned { tok, pos: start });
                    i = next;
                } else {
                    out.push(Spanned { tok: Tok::Ident(name.into()), pos: start });
                }
            }
            _ => return Err(err(i, "unexpected character")),
        }
    }
    out.push(Spanned { tok: Tok::End, pos: b.len() });
    Ok(out)
}

fn lex_number(b: &[u8], start: usize) -> Result<(Tok, usize)> {
    let mut i = start;
    let mut int_part = String::new();
    while i < b.len() && b[i].is_ascii_digit() {
        int_part.push(b[i] as char);
        i += 1;
    }
    let mut frac_part = String::new();
    if i < b.len() && b[i] == b'.' {
        i += 1;
        while i < b.len() && b[i].is_ascii_digit() {
            frac_part.push(b[i] as char);
            i += 1;
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err(start, "malformed number"));
        }
    }
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err(start, "malformed number"));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| err(start, "malformed number"))?;
    let denom = num::pow::pow(BigInt::from(10), frac_part.len());
    Ok((Tok::Num(BigRational::new(numer, denom)), i))
}

/// After the identifier `u`: optional `^k` and optional `_{lm}`.
/// `u^(..)` is a power of u, not a jet order.
fn lex_jet(b: &[u8], mut i: usize) -> Result<(Tok, usize)> {
    let mut k: u32 = 0;
    let mut l: u8 = 0;
    let mut m: u8 = 0;
    if i + 1 < b.len() && b[i] == b'^' && b[i + 1].is_ascii_digit() {
        i += 1;
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            k = k * 10 + (b[i] - b'0') as u32;
            i += 1;
        }
        if k > 9 {
            return Err(Error::JetOrder(format!(
                "p-order {k} at byte {start} exceeds the supported maximum 9"
            )));
        }
    }
    if i + 1 < b.len() && b[i] == b'_' && b[i + 1] == b'{' {
        i += 2;
        let need = |b: &[u8], i: usize| -> Result<u8> {
            if i < b.len() && b[i].is_ascii_digit() {
                Ok(b[i] - b'0')
            } else {
                Err(err(i, "expected digit in jet subscript"))
            }
        };
        l = need(b, i)?;
        i += 1;
        m = need(b, i)?;
        i += 1;
        if i >= b.len() || b[i] != b'}' {
            return Err(err(i, "expected `}` closing jet subscript"));
        }
        i += 1;
    }
    Ok((Tok::Jet { l, m, k: k as u8 }, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{int, normalize, var};

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("1 + 2*3 - 4/2").unwrap();
        assert_eq!(e.as_rat().unwrap(), &BigRational::from_integer(5.into()));
        // right associative powers: 2^3^2 = 2^9 = 512
        let p = parse_expr("2^3^2").unwrap();
        assert_eq!(p.as_rat().unwrap(), &BigRational::from_integer(512.into()));
        // unary minus binds looser than ^
        let q = parse_expr("-3^2").unwrap();
        assert_eq!(q.as_rat().unwrap(), &BigRational::from_integer((-9).into()));
    }

    #[test]
    fn jet_tokens() {
        let e = parse_expr("u^4_{12} + u_{10} + u^5 + u").unwrap();
        let names: Vec<String> = e.vars().iter().map(|s| s.name()).collect();
        // vars() orders by interning index: seeded jet names come in
        // ascending total order, so u_{10} precedes u^5.
        assert_eq!(names, vec!["u", "u_{10}", "u^5", "u^4_{12}"]);
    }

    #[test]
    fn u_power_needs_parens() {
        let e = parse_expr("u^(2)").unwrap();
        let want = normalize(&(var("u") * var("u"))).unwrap();
        assert_eq!(normalize(&e).unwrap(), want);
        assert!(parse_expr("u^12").is_err()); // jet order 12 out of range
    }

    #[test]
    fn functions_and_fractional_powers() {
        let e = parse_expr("exp(p) + ln(x) + sqrt(y) + p^(5/2)").unwrap();
        assert!(normalize(&e).is_ok());
        assert!(parse_expr("foo(x)").is_err());
        assert!(parse_expr("x^y").is_err());
    }

    #[test]
    fn no_implicit_multiplication() {
        assert!(parse_expr("2x").is_err());
        assert!(parse_expr("x y").is_err());
    }

    #[test]
    fn decimals_are_exact() {
        let e = parse_expr("0.5 + 0.25").unwrap();
        assert_eq!(e.as_rat().unwrap(), &BigRational::new(3.into(), 4.into()));
    }

    #[test]
    fn list_parsing() {
        let v = parse_expr_list("x + y, x - y").unwrap();
        assert_eq!(v.len(), 2);
        let _ = int(0);
    }
}
