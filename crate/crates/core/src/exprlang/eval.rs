use std::collections::BTreeMap;

use super::ast::{BinOp, Expr, Func};
use crate::error::{Error, Result};
use crate::numcore::Scalar;

/// Expression compiled against an ordered variable list.
#[derive(Clone, Debug, PartialEq)]
pub enum Bound {
    Num(f64),
    Var(usize),
    Neg(Box<Bound>),
    Add(Box<Bound>, Box<Bound>),
    Sub(Box<Bound>, Box<Bound>),
    Mul(Box<Bound>, Box<Bound>),
    Div(Box<Bound>, Box<Bound>),
    /// Constant integer exponent.
    PowI(Box<Bound>, i32),
    /// Constant non-integer exponent; base must be positive.
    PowF(Box<Bound>, f64),
    /// Variable exponent; base must be positive.
    Pow(Box<Bound>, Box<Bound>),
    Call(Func, Box<Bound>),
}

fn domain(msg: &str) -> Error {
    Error::Domain(msg.to_string())
}

fn finite<S: Scalar>(v: S, what: &str) -> Result<S> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("non-finite result of {what}")))
    }
}

impl Bound {
    pub fn compile(e: &Expr, vars: &[&str]) -> Result<Bound> {
        Ok(match e {
            Expr::Num(v) => Bound::Num(*v),
            Expr::Const(c) => Bound::Num(c.value()),
            Expr::Var(n) => match vars.iter().position(|v| v == n) {
                Some(i) => Bound::Var(i),
                None => return Err(Error::UnknownVariable(n.clone())),
            },
            Expr::Neg(a) => Bound::Neg(Box::new(Bound::compile(a, vars)?)),
            Expr::Call(f, a) => Bound::Call(*f, Box::new(Bound::compile(a, vars)?)),
            Expr::Bin(op, a, b) => {
                let l = Box::new(Bound::compile(a, vars)?);
                if *op == BinOp::Pow && b.is_constant() {
                    let ev = Bound::compile(b, &[])?.eval::<f64>(&[])?;
                    if ev.fract() == 0.0 && ev.abs() <= i32::MAX as f64 {
                        return Ok(Bound::PowI(l, ev as i32));
                    }
                    return Ok(Bound::PowF(l, ev));
                }
                let r = Box::new(Bound::compile(b, vars)?);
                match op {
                    BinOp::Add => Bound::Add(l, r),
                    BinOp::Sub => Bound::Sub(l, r),
                    BinOp::Mul => Bound::Mul(l, r),
                    BinOp::Div => Bound::Div(l, r),
                    BinOp::Pow => Bound::Pow(l, r),
                }
            }
        })
    }

    /// Evaluates with `x[i]` bound to the i-th declared variable.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<S> {
        Ok(match self {
            Bound::Num(v) => S::from_f64(*v),
            Bound::Var(i) => x[*i],
            Bound::Neg(a) => -a.eval(x)?,
            Bound::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Bound::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Bound::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Bound::Div(a, b) => {
                let d = b.eval(x)?;
                if d.re() == 0.0 {
                    return Err(domain("division by zero"));
                }
                finite(a.eval(x)? / d, "division")?
            }
            Bound::PowI(a, n) => {
                let v = a.eval(x)?;
                if *n < 0 && v.re() == 0.0 {
                    return Err(domain("zero raised to a negative power"));
                }
                v.powi(*n)
            }
            Bound::PowF(a, e) => {
                let v = a.eval(x)?;
                if v.re() <= 0.0 {
                    return Err(domain("non-integer power of a non-positive base"));
                }
                finite(v.powf(*e), "power")?
            }
            Bound::Pow(a, b) => {
                let v = a.eval(x)?;
                if v.re() <= 0.0 {
                    return Err(domain("variable power of a non-positive base"));
                }
                finite((v.ln() * b.eval(x)?).exp(), "power")?
            }
            Bound::Call(f, a) => {
                let v = a.eval(x)?;
                let r = match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tan => v.tan(),
                    Func::Exp => v.exp(),
                    Func::Log => {
                        if v.re() <= 0.0 {
                            return Err(domain("log of a non-positive number"));
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v.re() < 0.0 {
                            return Err(domain("sqrt of a negative number"));
                        }
                        v.sqrt()
                    }
                    Func::Abs => v.abs(),
                    Func::Atan => v.atan(),
                };
                finite(r, f.name())?
            }
        })
    }
}

/// Evaluates `e` with named bindings.
pub fn eval<S: Scalar>(e: &Expr, bindings: &BTreeMap<String, S>) -> Result<S> {
    let names: Vec<&str> = bindings.keys().map(|s| s.as_str()).collect();
    let values: Vec<S> = bindings.values().copied().collect();
    Bound::compile(e, &names)?.eval(&values)
}
