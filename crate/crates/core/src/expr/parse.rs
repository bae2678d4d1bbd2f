//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' exponent)?
//! exponent := ['-'] integer | '(' ['-'] integer ')'
//! atom     := number | 'x' | 'exp' '(' expr ')' | 'log' '(' expr ')' | '(' expr ')'
//! ```
//!
//! A `-` directly in front of a numeric literal folds into a negative
//! constant, except when the literal is the base of a power (so `-2^3`
//! parses as the negation of `2^3`).

use std::fmt;

use super::Expr;

/// Syntax error with the byte offset of the offending token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at offset {}: expected {}, found {}",
            self.offset, self.expected, self.found
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number '{v}'"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                out.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    expected: "a numeric literal".into(),
                    found: format!("'{text}'"),
                })?;
                out.push((Tok::Num(value), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError {
                    offset: i,
                    expected: "a token".into(),
                    found: format!("'{}'", &src[i..i + 1]),
                })
            }
        }
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError {
            offset: self.offset(),
            expected: expected.into(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.parse_term()?;
                    lhs = Expr::Add(lhs.into(), rhs.into());
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.parse_term()?;
                    lhs = Expr::Sub(lhs.into(), rhs.into());
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Mul(lhs.into(), rhs.into());
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Div(lhs.into(), rhs.into());
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            // Fold a directly following literal into a negative constant,
            // unless it is the base of a power ('^' binds tighter than '-').
            if let Tok::Num(v) = *self.peek() {
                if *self.peek2() != Tok::Caret {
                    self.bump();
                    return Ok(Expr::Const(-v));
                }
            }
            let inner = self.parse_unary()?;
            return Ok(Expr::Neg(inner.into()));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let n = self.parse_exponent()?;
            return Ok(Expr::Pow(base.into(), n));
        }
        Ok(base)
    }

    fn parse_exponent(&mut self) -> Result<i32, ParseError> {
        let parenthesized = if *self.peek() == Tok::LParen {
            self.bump();
            true
        } else {
            false
        };
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let offset = self.offset();
        let value = match self.bump() {
            Tok::Num(v) => v,
            other => {
                return Err(ParseError {
                    offset,
                    expected: "an integer exponent".into(),
                    found: other.describe(),
                })
            }
        };
        if value.fract() != 0.0 || value.abs() > f64::from(i32::MAX) {
            return Err(ParseError {
                offset,
                expected: "an integer exponent".into(),
                found: format!("number '{value}'"),
            });
        }
        if parenthesized {
            self.expect(Tok::RParen, "')' closing the exponent")?;
        }
        let n = value as i32;
        Ok(if negative { -n } else { n })
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => {
                    self.bump();
                    Ok(Expr::Var)
                }
                "exp" | "log" => {
                    self.bump();
                    self.expect(Tok::LParen, "'(' after function name")?;
                    let arg = self.parse_expr()?;
                    self.expect(Tok::RParen, "')' closing the argument")?;
                    Ok(if name == "exp" {
                        Expr::Exp(arg.into())
                    } else {
                        Expr::Log(arg.into())
                    })
                }
                _ => Err(self.error("number, 'x', 'exp', 'log', or '('")),
            },
            _ => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let inner = self.parse_expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(inner)
                } else {
                    Err(self.error("number, 'x', 'exp', 'log', or '('"))
                }
            }
        }
    }
}

/// Parses an expression from text.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut parser = Parser { toks, pos: 0 };
    let expr = parser.parse_expr()?;
    if *parser.peek() != Tok::Eof {
        return Err(parser.error("end of input or an operator"));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_notation_and_long_decimals() {
        assert_eq!(parse("1e-7").unwrap(), Expr::Const(1e-7));
        assert_eq!(parse("2.5E+2").unwrap(), Expr::Const(250.0));
        assert_eq!(parse("0.0000001").unwrap(), Expr::Const(1e-7));
    }

    #[test]
    fn rejects_trailing_garbage() {
        let err = parse("x + 1)").unwrap_err();
        assert_eq!(err.offset, 5);
    }

    #[test]
    fn rejects_unknown_identifier() {
        let err = parse("sin(x)").unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(err.to_string().contains("'sin'"));
    }

    #[test]
    fn rejects_empty_input() {
        assert!(parse("").is_err());
        assert!(parse("   ").is_err());
    }
}
