//! Infix parsing of expressions.
//!
//! The grammar accepts what [`Expression`]'s `Display` prints, plus ordinary
//! unparenthesized infix with the usual precedence, so hand-written strings in
//! config files work too. `t` is accepted as an alias for `x1`; for domains
//! with at least two dimensions `x` and `a` alias `x2`; `u` aliases `u1`.

use super::{BinaryOp, Expression};
use crate::error::CoreError;

/// Parse an expression over `m` independent variables and `n` field
/// components. Variable indices are validated against `(m, n)`.
pub fn parse_expression(src: &str, m: usize, n: usize) -> Result<Expression, CoreError> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        m,
        n,
    };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(CoreError::Parse(format!(
            "unexpected trailing input at token {}",
            p.pos
        )));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Tok>, CoreError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '/' => {
                toks.push(Tok::Slash);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && {
                            let nx = bytes[i + 1] as char;
                            nx.is_ascii_digit() || nx == '+' || nx == '-'
                        }
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
                let s = &src[start..i];
                let v: f64 = s
                    .parse()
                    .map_err(|_| CoreError::Parse(format!("bad number literal '{s}'")))?;
                toks.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && {
                    let d = bytes[i] as char;
                    d.is_ascii_alphanumeric() || d == '_'
                } {
                    i += 1;
                }
                toks.push(Tok::Ident(src[start..i].to_string()));
            }
            other => {
                return Err(CoreError::Parse(format!("unexpected character '{other}'")));
            }
        }
    }
    Ok(toks)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
    m: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expression, CoreError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expression::binary(BinaryOp::Add, lhs, rhs);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expression::binary(BinaryOp::Sub, lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expression, CoreError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Expression::binary(BinaryOp::Mul, lhs, rhs);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Expression::binary(BinaryOp::Div, lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expression, CoreError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            // A minus directly in front of a literal is a negative constant,
            // which keeps print -> parse structurally stable.
            if let Some(Tok::Num(v)) = self.peek().cloned() {
                self.pos += 1;
                return Ok(Expression::Constant(-v));
            }
            let inner = self.unary()?;
            return Ok(Expression::neg(inner));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expression, CoreError> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Expression::Constant(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(CoreError::Parse("expected ')'".into())),
                }
            }
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.pos += 1;
                    let arg = self.expr()?;
                    match self.next() {
                        Some(Tok::RParen) => {}
                        _ => return Err(CoreError::Parse("expected ')'".into())),
                    }
                    match name.as_str() {
                        "sin" => Ok(Expression::sin(arg)),
                        "exp" => Ok(Expression::exp(arg)),
                        "log" => Ok(Expression::log(arg)),
                        other => Err(CoreError::Parse(format!("unknown function '{other}'"))),
                    }
                } else {
                    self.ident_to_leaf(&name)
                }
            }
            other => Err(CoreError::Parse(format!("unexpected token {other:?}"))),
        }
    }

    fn ident_to_leaf(&self, name: &str) -> Result<Expression, CoreError> {
        let var = |i: usize| -> Result<Expression, CoreError> {
            if i < self.m {
                Ok(Expression::Var(i))
            } else {
                Err(CoreError::Parse(format!(
                    "variable index out of bounds: x{} with M = {}",
                    i + 1,
                    self.m
                )))
            }
        };
        let field = |j: usize| -> Result<Expression, CoreError> {
            if j < self.n {
                Ok(Expression::Field(j))
            } else {
                Err(CoreError::Parse(format!(
                    "field index out of bounds: u{} with N = {}",
                    j + 1,
                    self.n
                )))
            }
        };
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() {
                if let Ok(i) = rest.parse::<usize>() {
                    if i >= 1 {
                        return var(i - 1);
                    }
                }
            }
        }
        if let Some(rest) = name.strip_prefix('u') {
            if !rest.is_empty() {
                if let Ok(j) = rest.parse::<usize>() {
                    if j >= 1 {
                        return field(j - 1);
                    }
                }
            }
        }
        match name {
            "t" => var(0),
            "x" | "a" => {
                if self.m >= 2 {
                    var(1)
                } else {
                    var(0)
                }
            }
            "u" => field(0),
            other => Err(CoreError::Parse(format!("unknown identifier '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::UnaryOp;

    #[test]
    fn parses_aliases_and_precedence() {
        let e = parse_expression("1.25*exp(1.8*t)", 2, 1).unwrap();
        let expected = Expression::mul(
            Expression::constant(1.25),
            Expression::exp(Expression::mul(Expression::constant(1.8), Expression::var(0))),
        );
        assert_eq!(e, expected);

        let e = parse_expression("x + 2*u", 2, 1).unwrap();
        let expected = Expression::add(
            Expression::var(1),
            Expression::mul(Expression::constant(2.0), Expression::field(0)),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn rejects_out_of_bounds_indices() {
        assert!(parse_expression("x3", 2, 1).is_err());
        assert!(parse_expression("u2", 2, 1).is_err());
        assert!(parse_expression("cos(x1)", 2, 1).is_err());
    }

    #[test]
    fn print_parse_round_trip_is_structural() {
        let exprs = [
            Expression::mul(
                Expression::constant(-1.3),
                Expression::exp(Expression::mul(Expression::constant(2.0), Expression::var(0))),
            ),
            Expression::sub(
                Expression::div(Expression::var(0), Expression::field(0)),
                Expression::sin(Expression::constant(0.25)),
            ),
            Expression::neg(Expression::add(Expression::var(0), Expression::field(0))),
            Expression::unary(
                UnaryOp::Log,
                Expression::mul(Expression::var(0), Expression::var(0)),
            ),
            Expression::constant(0.1 + 0.2), // non-representable decimal
        ];
        for e in exprs {
            let s = e.to_string();
            let back = parse_expression(&s, 1, 1).unwrap();
            assert_eq!(back, e, "round trip failed for '{s}'");
            assert_eq!(back.to_string(), s);
        }
    }
}
