//! Expressions in the two variables `x` and `u`.
//!
//! Coefficients K(x, u), forcing terms f(x) and right-hand sides g(u) are
//! entered as text in a small infix language and evaluated pointwise on the
//! grid:
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := ("-")? power
//! power  := atom ("^" factor)?
//! atom   := number | "x" | "u" | "pi" | "e" | ident "(" expr ")" | "(" expr ")"
//! ident  := sin|cos|tan|exp|ln|sqrt|abs|gamma
//! ```
//!
//! `^` is right-associative and a leading minus binds tighter than binary
//! minus, so `-2^2 = -4` and `2^3^2 = 512`.

mod eval;
mod parse;

use std::fmt;

use crate::scalar::Scalar;

pub use eval::EvalError;
pub use parse::ParseError;

/// Built-in single-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Gamma,
}

impl Func {
    pub const ALL: [Func; 8] =
        [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Ln, Func::Sqrt, Func::Abs, Func::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Gamma => "gamma",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Named mathematical constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedConst {
    Pi,
    E,
}

/// Parsed expression tree. Immutable once built; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr<T> {
    Const(T),
    Named(NamedConst),
    X,
    U,
    Neg(Box<Expr<T>>),
    Binary(BinOp, Box<Expr<T>>, Box<Expr<T>>),
    Call(Func, Box<Expr<T>>),
}

impl<T: Scalar> Expr<T> {
    /// Parses `text` according to the grammar in the module docs.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse::parse(text)
    }

    pub fn constant(value: T) -> Self {
        Expr::Const(value)
    }

    /// True if the variable `x` occurs anywhere in the tree.
    pub fn uses_x(&self) -> bool {
        self.any(&|e| matches!(e, Expr::X))
    }

    /// True if the variable `u` occurs anywhere in the tree.
    pub fn uses_u(&self) -> bool {
        self.any(&|e| matches!(e, Expr::U))
    }

    fn any(&self, pred: &dyn Fn(&Expr<T>) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Const(_) | Expr::Named(_) | Expr::X | Expr::U => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.any(pred),
            Expr::Binary(_, a, b) => a.any(pred) || b.any(pred),
        }
    }

    /// Returns the exponent `p` if the tree is exactly `x` or `x^p` with a
    /// constant `p`.
    pub fn as_monomial(&self) -> Option<T> {
        match self {
            Expr::X => Some(T::one()),
            Expr::Binary(BinOp::Pow, base, exp) if matches!(**base, Expr::X) => match **exp {
                Expr::Const(p) => Some(p),
                Expr::Neg(ref inner) => match **inner {
                    Expr::Const(p) => Some(-p),
                    _ => None,
                },
                _ => None,
            },
            _ => None,
        }
    }
}

/// Prints a fully parenthesised form that reparses to the same tree.
impl<T: Scalar> fmt::Display for Expr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => {
                if v.is_sign_negative() {
                    write!(f, "(-{})", v.abs())
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Named(NamedConst::Pi) => f.write_str("pi"),
            Expr::Named(NamedConst::E) => f.write_str("e"),
            Expr::X => f.write_str("x"),
            Expr::U => f.write_str("u"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
