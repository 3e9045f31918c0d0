//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := unary (('*'|'/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' ['-'] integer)?
//! base   := number | ident | ident "'"* '(' args ')'
//!         | ident '[' integer (',' integer)* ']' '(' args ')' | '(' expr ')'
//! ```
//!
//! `u_x`, `u_y`, `u_t` map to the jet symbols v1, v2, v3.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{pow::Pow, Zero};

use super::{is_jet_name, Expr, Node, Rational};

const MAX_DEPTH: usize = 256;
const MAX_EXPONENT: i64 = 32;
/// Powers of symbols and function atoms never expand, so they may be larger.
const MAX_ATOM_EXPONENT: i64 = 4096;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol '{name}' at {pos}")]
    UnknownSymbol { pos: usize, name: String },
    #[error("division by zero")]
    DivisionByZero,
}

/// Extra plain identifiers accepted as parameters.
#[derive(Clone, Debug, Default)]
pub struct ParseContext {
    symbols: HashSet<String>,
}

impl ParseContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_symbols<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ParseContext {
            symbols: names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn declare(&mut self, name: &str) {
        self.symbols.insert(name.to_string());
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, &ParseContext::default())
}

pub fn parse_with(text: &str, ctx: &ParseContext) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        depth: 0,
        ctx,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    e.try_normalize().map_err(|_| ParseError::DivisionByZero)
}

fn reserved(name: &str) -> Option<&'static str> {
    Some(match name {
        "x" => "x",
        "y" => "y",
        "t" => "t",
        "u" => "u",
        "u_x" | "v1" => "v1",
        "u_y" | "v2" => "v2",
        "u_t" | "v3" => "v3",
        "eps" => "eps",
        "f" => "f",
        "g" => "g",
        "h" => "h",
        _ => return None,
    })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
    ctx: &'a ParseContext,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc + self.term()?;
            } else if self.eat(b'-') {
                acc = acc - self.term()?;
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.unary()?;
            } else if self.eat(b'/') {
                acc = acc / self.unary()?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            self.enter()?;
            let e = -self.unary()?;
            self.depth -= 1;
            return Ok(e);
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            let start = self.pos;
            let n = self.integer()?;
            let n = if neg { -n } else { n };
            let limit = match base.node() {
                Node::Sym(_) | Node::Func(_) => MAX_ATOM_EXPONENT,
                _ => MAX_EXPONENT,
            };
            if n.abs() > limit {
                self.pos = start;
                return Err(self.err("exponent out of range"));
            }
            return Ok(base.pow(n));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        s.parse::<i64>().map_err(|_| ParseError::Syntax {
            pos: start,
            msg: "integer too large".into(),
        })
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = &self.src[start..self.pos];
        let mut frac_part: &[u8] = &[];
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let fs = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            frac_part = &self.src[fs..self.pos];
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(ParseError::Syntax {
                pos: start,
                msg: "malformed number".into(),
            });
        }
        let digits: Vec<u8> = int_part.iter().chain(frac_part).copied().collect();
        let n = if digits.is_empty() {
            BigInt::zero()
        } else {
            BigInt::parse_bytes(&digits, 10).unwrap()
        };
        let d = BigInt::from(10u32).pow(frac_part.len() as u32);
        Ok(Expr::num(Rational::new(n, d)))
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8(self.src[start..self.pos].to_vec()).unwrap()
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(b'(')?;
        let mut args = vec![self.expr()?];
        while self.eat(b',') {
            args.push(self.expr()?);
        }
        self.expect(b')')?;
        Ok(args)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let c = match self.peek() {
            Some(c) => c,
            None => return Err(self.err("unexpected end of input")),
        };
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if !c.is_ascii_alphabetic() {
            return Err(self.err("unexpected character"));
        }
        let start = self.pos;
        let name = self.ident();
        let mut primes = 0u32;
        while self.src.get(self.pos) == Some(&b'\'') {
            primes += 1;
            self.pos += 1;
        }
        let mut index: Option<Vec<u32>> = None;
        if primes == 0 && self.src.get(self.pos) == Some(&b'[') {
            self.pos += 1;
            let mut idx = vec![self.small_index()?];
            while self.eat(b',') {
                idx.push(self.small_index()?);
            }
            self.expect(b']')?;
            index = Some(idx);
        }
        let is_call = primes > 0 || index.is_some() || self.peek() == Some(b'(');
        if !is_call {
            if let Some(r) = reserved(&name) {
                return Ok(Expr::sym(r));
            }
            if is_jet_name(&name) || self.ctx.symbols.contains(&name) {
                return Ok(Expr::sym(&name));
            }
            return Err(ParseError::UnknownSymbol { pos: start, name });
        }
        if reserved(&name).is_some() || is_jet_name(&name) {
            return Err(ParseError::Syntax {
                pos: start,
                msg: format!("'{name}' is not a function"),
            });
        }
        let args = self.args()?;
        let derivs = match index {
            Some(idx) => {
                if idx.len() != args.len() {
                    return Err(ParseError::Syntax {
                        pos: start,
                        msg: "derivative index length differs from arity".into(),
                    });
                }
                idx
            }
            None => {
                if primes > 0 && args.len() != 1 {
                    return Err(ParseError::Syntax {
                        pos: start,
                        msg: "primes apply to single-argument functions".into(),
                    });
                }
                let mut d = vec![0; args.len()];
                if primes > 0 {
                    d[0] = primes;
                }
                d
            }
        };
        Ok(Expr::func_deriv(&name, derivs, args))
    }

    fn small_index(&mut self) -> Result<u32, ParseError> {
        let n = self.integer()?;
        if n > MAX_EXPONENT {
            return Err(self.err("derivative order out of range"));
        }
        Ok(n as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_aliases() {
        assert_eq!(parse("u_t").unwrap(), Expr::sym("v3"));
        assert_eq!(parse("u_x*u_x").unwrap(), Expr::sym("v1").pow(2));
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse("0.1").unwrap(), Expr::frac(1, 10));
        assert_eq!(parse("2.50*x").unwrap(), parse("5/2*x").unwrap());
    }

    #[test]
    fn transformed_jet_shape() {
        let e = parse("u_x/(1 - eps*m'(u)*u_x)").unwrap();
        let m1 = Expr::func_deriv("m", vec![1], vec![Expr::sym("u")]);
        let den = Expr::sum(vec![
            Expr::one(),
            Expr::product(vec![Expr::int(-1), Expr::sym("eps"), Expr::sym("v1"), m1]),
        ]);
        assert_eq!(e, Expr::product(vec![Expr::sym("v1"), den.pow(-1)]));
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(parse("x + "), Err(ParseError::Syntax { pos: 4, .. })));
        assert!(matches!(
            parse("x + q"),
            Err(ParseError::UnknownSymbol { pos: 4, .. })
        ));
        assert!(matches!(parse("1/(x-x)"), Err(ParseError::DivisionByZero)));
        assert!(parse("(x + 1)^100").is_err());
        assert!(parse("x^5000").is_err());
        let big = parse("x^32*x^32").unwrap();
        assert_eq!(parse(&big.to_string()).unwrap(), big);
        assert!(parse("u(x)").is_err());
    }

    #[test]
    fn declared_symbols() {
        let ctx = ParseContext::with_symbols(["q"]);
        assert!(parse_with("1/(1-q)", &ctx).is_ok());
    }

    #[test]
    fn multi_index_derivatives() {
        let e = parse("m[1,0](u, y)").unwrap();
        assert_eq!(
            e,
            Expr::func_deriv("m", vec![1, 0], vec![Expr::sym("u"), Expr::sym("y")])
        );
        assert!(parse("m[1](u, y)").is_err());
        assert!(parse("m'(u, y)").is_err());
    }
}
