//! Arithmetic expressions in one variable.
//!
//! The grammar covers real constants, the variable `x`, the four arithmetic
//! operations, unary negation, powers with integer exponents, `exp`, and
//! `log`. Expressions evaluate in `f64` and differentiate symbolically, so
//! derivative values never depend on finite differencing.
//!
//! Printing and parsing are mutually consistent: for any expression `e`,
//! `parse(&e.to_string())` returns an AST structurally equal to `e`.

mod parse;

pub use parse::{parse, ParseError};

use std::fmt;
use thiserror::Error;

/// Expression AST.
///
/// `Pow` keeps its exponent as an integer so that differentiation stays
/// inside the grammar. Negative literals parse directly into `Const`;
/// `Neg` of a bare constant only arises from explicitly parenthesized
/// input such as `-(2)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

/// Domain failure during evaluation.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of non-positive value {0}")]
    LogNonPositive(f64),
}

impl Expr {
    /// Evaluates at `x`.
    ///
    /// `0^0` evaluates to 1 (the `powi` convention); a zero base with a
    /// negative exponent reports division by zero.
    pub fn evaluate(&self, x: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var => x,
            Expr::Add(a, b) => a.evaluate(x)? + b.evaluate(x)?,
            Expr::Sub(a, b) => a.evaluate(x)? - b.evaluate(x)?,
            Expr::Mul(a, b) => a.evaluate(x)? * b.evaluate(x)?,
            Expr::Div(a, b) => {
                let den = b.evaluate(x)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.evaluate(x)? / den
            }
            Expr::Neg(a) => -a.evaluate(x)?,
            Expr::Pow(a, n) => {
                let base = a.evaluate(x)?;
                if base == 0.0 && *n < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                base.powi(*n)
            }
            Expr::Exp(a) => a.evaluate(x)?.exp(),
            Expr::Log(a) => {
                let v = a.evaluate(x)?;
                if v <= 0.0 {
                    return Err(EvalError::LogNonPositive(v));
                }
                v.ln()
            }
        })
    }

    /// Symbolic derivative with respect to `x`.
    ///
    /// The result is folded only where constants allow it (constant
    /// subexpressions collapse, `0` and `1` disappear from sums and
    /// products); no further simplification is guaranteed.
    pub fn differentiate(&self) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var => Expr::Const(1.0),
            Expr::Add(a, b) => add(a.differentiate(), b.differentiate()),
            Expr::Sub(a, b) => sub(a.differentiate(), b.differentiate()),
            Expr::Mul(a, b) => add(
                mul(a.differentiate(), (**b).clone()),
                mul((**a).clone(), b.differentiate()),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.differentiate(), (**b).clone()),
                    mul((**a).clone(), b.differentiate()),
                ),
                pow((**b).clone(), 2),
            ),
            Expr::Neg(a) => neg(a.differentiate()),
            Expr::Pow(a, n) => mul(
                mul(Expr::Const(f64::from(*n)), pow((**a).clone(), n - 1)),
                a.differentiate(),
            ),
            Expr::Exp(a) => mul(Expr::Exp(a.clone()), a.differentiate()),
            Expr::Log(a) => div(a.differentiate(), (**a).clone()),
        }
    }
}

// Folding constructors used by `differentiate`. They keep derivative trees
// small without changing where the original expression is defined, with one
// deliberate exception: `0 * e` folds to `0`, which widens the domain when
// `e` itself has a restricted one.

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (Expr::Const(z), e) if z == 0.0 => e,
        (e, Expr::Const(z)) if z == 0.0 => e,
        (a, b) => Expr::Add(a.into(), b.into()),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (e, Expr::Const(z)) if z == 0.0 => e,
        (Expr::Const(z), e) if z == 0.0 => neg(e),
        (a, b) => Expr::Sub(a.into(), b.into()),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (Expr::Const(z), _) | (_, Expr::Const(z)) if z == 0.0 => Expr::Const(0.0),
        (Expr::Const(one), e) if one == 1.0 => e,
        (e, Expr::Const(one)) if one == 1.0 => e,
        (a, b) => Expr::Mul(a.into(), b.into()),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) if y != 0.0 => Expr::Const(x / y),
        (e, Expr::Const(one)) if one == 1.0 => e,
        (a, b) => Expr::Div(a.into(), b.into()),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        a => Expr::Neg(a.into()),
    }
}

fn pow(a: Expr, n: i32) -> Expr {
    match n {
        0 => Expr::Const(1.0),
        1 => a,
        _ => match a {
            Expr::Const(c) if !(c == 0.0 && n < 0) => Expr::Const(c.powi(n)),
            a => Expr::Pow(a.into(), n),
        },
    }
}

/// Binding strength used by the printer; larger binds tighter.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        Expr::Const(_) | Expr::Var | Expr::Exp(_) | Expr::Log(_) => 5,
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, e: &Expr, needs_parens: bool) -> fmt::Result {
    if needs_parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => write!(f, "x"),
            Expr::Add(a, b) => {
                write!(f, "{a} + ")?;
                fmt_child(f, b, precedence(b) <= 1)
            }
            Expr::Sub(a, b) => {
                write!(f, "{a} - ")?;
                fmt_child(f, b, precedence(b) <= 1)
            }
            Expr::Mul(a, b) => {
                fmt_child(f, a, precedence(a) < 2)?;
                write!(f, " * ")?;
                fmt_child(f, b, precedence(b) <= 2)
            }
            Expr::Div(a, b) => {
                fmt_child(f, a, precedence(a) < 2)?;
                write!(f, " / ")?;
                fmt_child(f, b, precedence(b) <= 2)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                // A bare literal after unary minus would re-parse as a
                // negative constant, so it must keep its parentheses.
                fmt_child(f, a, precedence(a) < 3 || matches!(**a, Expr::Const(_)))
            }
            Expr::Pow(a, n) => {
                let base_needs_parens =
                    precedence(a) < 5 || matches!(**a, Expr::Const(c) if c < 0.0);
                fmt_child(f, a, base_needs_parens)?;
                write!(f, "^{n}")
            }
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Log(a) => write!(f, "log({a})"),
        }
    }
}
