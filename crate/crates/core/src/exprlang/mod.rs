//! Expression language for user-supplied functions.
//!
//! Expressions are parsed once and evaluated generically over any
//! [`Scalar`](crate::numcore::Scalar), so derivatives come for free.

mod ast;
mod eval;
mod parser;

use std::collections::BTreeMap;

pub use ast::{BinOp, Constant, Expr, Func};
pub use eval::{eval, Bound};
pub use parser::{parse, parse_in, Scope};

use crate::error::{Error, Result};
use crate::numcore::Scalar;

/// A named function of ordered variables.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub vars: Vec<String>,
    pub body: Expr,
}

impl FunctionDef {
    pub fn new(name: &str, vars: &[&str], body: Expr) -> Result<Self> {
        for v in body.variables() {
            if !vars.contains(&v.as_str()) {
                return Err(Error::UnknownVariable(v));
            }
        }
        Ok(FunctionDef { name: name.to_string(), vars: vars.iter().map(|s| s.to_string()).collect(), body })
    }

    /// Parses `text` with only `vars` (plus the scope's parameters and
    /// functions) in scope.
    pub fn parse(name: &str, vars: &[&str], text: &str, scope: &Scope) -> Result<Self> {
        let mut s = scope.clone();
        s.vars = Some(vars.iter().map(|v| v.to_string()).collect());
        let body = parse_in(text, &s)?;
        FunctionDef::new(name, vars, body)
    }

    /// Body with the declared variables replaced by `args`.
    pub fn inline(&self, args: &[Expr]) -> Result<Expr> {
        if args.len() != self.vars.len() {
            return Err(Error::Config(format!(
                "function `{}` takes {} argument(s), got {}",
                self.name,
                self.vars.len(),
                args.len()
            )));
        }
        let map: BTreeMap<String, Expr> = self.vars.iter().cloned().zip(args.iter().cloned()).collect();
        Ok(self.body.substitute(&map))
    }

    /// Body renamed so that its variables read `names`.
    pub fn apply_vars(&self, names: &[&str]) -> Result<Expr> {
        let args: Vec<Expr> = names.iter().map(|n| Expr::var(n)).collect();
        self.inline(&args)
    }

    pub fn eval<S: Scalar>(&self, args: &[S]) -> Result<S> {
        let vars: Vec<&str> = self.vars.iter().map(|s| s.as_str()).collect();
        Bound::compile(&self.body, &vars)?.eval(args)
    }

    /// Errors unless exactly one variable is declared.
    pub fn require_single_var(&self) -> Result<&str> {
        if self.vars.len() == 1 {
            Ok(&self.vars[0])
        } else {
            Err(Error::Config(format!(
                "function `{}` must declare exactly one variable, declares {}",
                self.name,
                self.vars.len()
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::HyperDual;

    #[test]
    fn precedence_and_canonical_print() {
        let e = parse_in("b*q2^2/2", &Scope::with_vars(&["b", "q2"])).unwrap();
        assert_eq!(e.to_string(), "((b*(q2^2))/2)");
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(parse("a^b^c").unwrap().to_string(), "(a^(b^c))");
        assert_eq!(parse("a-b-c").unwrap().to_string(), "((a-b)-c)");
    }

    #[test]
    fn call_node() {
        let e = parse("sin(2*z/a)").unwrap();
        assert!(matches!(e, Expr::Call(Func::Sin, _)));
    }

    #[test]
    fn unclosed_paren_offset() {
        match parse("1/(x") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_names() {
        assert_eq!(parse("foo(x)"), Err(Error::UnknownFunction("foo".into())));
        assert_eq!(parse_in("x + y", &Scope::with_vars(&["x"])), Err(Error::UnknownVariable("y".into())));
    }

    #[test]
    fn evaluation_examples() {
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), 3.0);
        assert_eq!(eval(&parse("x^2").unwrap(), &b).unwrap(), 9.0);
        b.insert("x".to_string(), -1.0);
        assert!(matches!(eval(&parse("sqrt(x)").unwrap(), &b), Err(Error::Domain(_))));
        assert!(matches!(eval(&parse("log(x+1)").unwrap(), &b), Err(Error::Domain(_))));
        assert!(matches!(eval(&parse("1/(x+1)").unwrap(), &b), Err(Error::Domain(_))));
        assert!(matches!(eval(&parse("(x+1)^(-2)").unwrap(), &b), Err(Error::Domain(_))));
    }

    #[test]
    fn hyperdual_product() {
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), HyperDual::new(2.0, 1.0, 0.0, 0.0));
        b.insert("y".to_string(), HyperDual::new(5.0, 0.0, 1.0, 0.0));
        let v = eval(&parse("x*y").unwrap(), &b).unwrap();
        assert_eq!((v.value, v.d1, v.d2, v.d12), (10.0, 5.0, 2.0, 1.0));
    }

    #[test]
    fn user_functions_inline() {
        let scope = Scope::permissive().param("b", 2.0);
        let f = FunctionDef::parse("lam", &["t"], "b*t^2", &scope).unwrap();
        let scope = scope.function(f);
        let e = parse_in("lam(y+1)", &scope).unwrap();
        assert_eq!(e.to_string(), "(2*((y+1)^2))");
    }

    #[test]
    fn integer_power_at_zero_base() {
        let e = Bound::compile(&parse("x^3").unwrap(), &["x"]).unwrap();
        let v = e.eval(&[HyperDual::new(0.0, 1.0, 1.0, 0.0)]).unwrap();
        assert_eq!((v.value, v.d1, v.d12), (0.0, 0.0, 0.0));
        let f = Bound::compile(&parse("x^0.5").unwrap(), &["x"]).unwrap();
        assert!(f.eval(&[0.0]).is_err());
    }

    #[test]
    fn greek_identifiers() {
        let e = parse("λ1*2").unwrap();
        assert_eq!(e.to_string(), "(λ1*2)");
    }
}
