use thiserror::Error;

use super::{BinOp, Expr, Func, NamedConst};
use crate::scalar::{lit, to_f64, Scalar};
use crate::special;

/// Evaluation failure. Domain violations are reported instead of producing NaN.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op} is undefined at {arg}")]
    Domain { op: &'static str, arg: f64 },
    #[error("non-finite result from {op}")]
    NonFinite { op: &'static str },
}

/// |cos| below this makes tan a domain error, so Newton iterates cannot jump
/// between branches of tan.
const TAN_POLE_GUARD: f64 = 1e-12;

fn finite<T: Scalar>(v: T, op: &'static str) -> Result<T, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite { op })
    }
}

impl<T: Scalar> Expr<T> {
    /// Evaluates the tree at (x, u).
    pub fn eval(&self, x: T, u: T) -> Result<T, EvalError> {
        match self {
            Expr::Const(v) => Ok(*v),
            Expr::Named(NamedConst::Pi) => Ok(T::PI()),
            Expr::Named(NamedConst::E) => Ok(T::E()),
            Expr::X => Ok(x),
            Expr::U => Ok(u),
            Expr::Neg(a) => Ok(-a.eval(x, u)?),
            Expr::Binary(op, a, b) => {
                let a = a.eval(x, u)?;
                let b = b.eval(x, u)?;
                match op {
                    BinOp::Add => finite(a + b, "+"),
                    BinOp::Sub => finite(a - b, "-"),
                    BinOp::Mul => finite(a * b, "*"),
                    BinOp::Div => {
                        if b == T::zero() {
                            return Err(EvalError::Domain { op: "division", arg: 0.0 });
                        }
                        finite(a / b, "/")
                    }
                    BinOp::Pow => {
                        let v = a.powf(b);
                        if v.is_nan() {
                            return Err(EvalError::Domain { op: "^", arg: to_f64(a) });
                        }
                        finite(v, "^")
                    }
                }
            }
            Expr::Call(func, a) => apply(*func, a.eval(x, u)?),
        }
    }

    /// Evaluates a tree that only depends on `x`.
    pub fn eval_x(&self, x: T) -> Result<T, EvalError> {
        self.eval(x, T::zero())
    }
}

fn apply<T: Scalar>(func: Func, v: T) -> Result<T, EvalError> {
    let domain = |op| Err(EvalError::Domain { op, arg: to_f64(v) });
    match func {
        Func::Sin => finite(v.sin(), "sin"),
        Func::Cos => finite(v.cos(), "cos"),
        Func::Tan => {
            if v.cos().abs() < lit(TAN_POLE_GUARD) {
                return domain("tan");
            }
            finite(v.tan(), "tan")
        }
        Func::Exp => finite(v.exp(), "exp"),
        Func::Ln => {
            if v <= T::zero() {
                return domain("ln");
            }
            finite(v.ln(), "ln")
        }
        Func::Sqrt => {
            if v < T::zero() {
                return domain("sqrt");
            }
            Ok(v.sqrt())
        }
        Func::Abs => Ok(v.abs()),
        Func::Gamma => match special::gamma(v) {
            Ok(g) => finite(g, "gamma"),
            Err(_) => domain("gamma"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(s: &str, x: f64, u: f64) -> Result<f64, EvalError> {
        Expr::<f64>::parse(s).unwrap().eval(x, u)
    }

    #[test]
    fn domain_errors_are_typed() {
        let half_pi = std::f64::consts::FRAC_PI_2;
        assert!(matches!(eval("tan(u)", 0.0, half_pi), Err(EvalError::Domain { op: "tan", .. })));
        assert!(matches!(eval("ln(x)", 0.0, 0.0), Err(EvalError::Domain { op: "ln", .. })));
        assert!(matches!(eval("ln(x)", -1.0, 0.0), Err(EvalError::Domain { op: "ln", .. })));
        assert!(matches!(eval("sqrt(x)", -1.0, 0.0), Err(EvalError::Domain { op: "sqrt", .. })));
        assert!(matches!(eval("1/x", 0.0, 0.0), Err(EvalError::Domain { op: "division", .. })));
        assert!(matches!(eval("x^0.5", -4.0, 0.0), Err(EvalError::Domain { op: "^", .. })));
        assert!(matches!(eval("gamma(x)", -2.0, 0.0), Err(EvalError::Domain { op: "gamma", .. })));
        assert!(matches!(eval("exp(x)", 1e4, 0.0), Err(EvalError::NonFinite { op: "exp" })));
        assert!(matches!(eval("x^-0.8", 0.0, 0.0), Err(EvalError::NonFinite { op: "^" })));
    }

    #[test]
    fn negative_base_with_integer_power() {
        assert_eq!(eval("x^3", -2.0, 0.0).unwrap(), -8.0);
        assert_eq!(eval("tan(u)", 0.0, 0.0).unwrap(), 0.0);
    }
}
