//! Named Stäckel matrices with their Stäckel functions.

use super::{ClassicalForm, StackelSpec};
use crate::error::Result;
use crate::exprlang::{Expr, FunctionDef};

const SEP_VARS: [&str; 6] = ["q1", "q2", "q3", "p1", "p2", "p3"];

fn entry(var: &str, e: Expr) -> Result<FunctionDef> {
    FunctionDef::new("S", &[var], e)
}

fn row(var: &str, es: [Expr; 3]) -> Result<[FunctionDef; 3]> {
    let [a, b, c] = es;
    Ok([entry(var, a)?, entry(var, b)?, entry(var, c)?])
}

fn stackel_fn(k: usize, q: &str, p: &str, e: Expr) -> Result<FunctionDef> {
    FunctionDef::new(&format!("f{k}"), &[q, p], e)
}

fn n(v: f64) -> Expr {
    Expr::num(v)
}

fn v(name: &str) -> Expr {
    Expr::var(name)
}

/// User function of one variable applied to `var`.
fn at(f: &FunctionDef, var: &str) -> Result<Expr> {
    f.require_single_var()?;
    f.apply_vars(&[var])
}

/// Matrix of the constant-field system in the chart diagonalizing
/// `{I, K1, K3}`, with `f = (p1, p2² + b²q2², p3²)`.
pub fn sm1(b: f64) -> Result<StackelSpec> {
    let s = [
        row("q1", [n(0.0), n(1.0), n(0.0)])?,
        row("q2", [n(1.0), 2.0 * b * v("q2"), n(-1.0)])?,
        row("q3", [n(0.0), n(0.0), n(1.0)])?,
    ];
    let f = [
        stackel_fn(1, "q1", "p1", v("p1"))?,
        stackel_fn(2, "q2", "p2", v("p2").powi(2) + b * b * v("q2").powi(2))?,
        stackel_fn(3, "q3", "p3", v("p3").powi(2))?,
    ];
    StackelSpec::new("SM1", SEP_VARS, s, f)
}

/// Matrix of the constant-field system in the chart diagonalizing
/// `{I, K2, K3}`, with `f = (p1² + b²q1², p2, p3)`.
pub fn sm2(b: f64) -> Result<StackelSpec> {
    let s = [
        row("q1", [n(1.0), -2.0 * b * v("q1"), n(-1.0)])?,
        row("q2", [n(0.0), n(1.0), n(0.0)])?,
        row("q3", [n(0.0), n(0.0), n(1.0)])?,
    ];
    let f = [
        stackel_fn(1, "q1", "p1", v("p1").powi(2) + b * b * v("q1").powi(2))?,
        stackel_fn(2, "q2", "p2", v("p2"))?,
        stackel_fn(3, "q3", "p3", v("p3"))?,
    ];
    StackelSpec::new("SM2", SEP_VARS, s, f)
}

/// Matrix of the constant-field system in cylindrical separation
/// coordinates, with `f = (p1² + b²q1²/4, p2², p3²)`; classical with `κ = 2`.
pub fn sm3_classical(b: f64) -> Result<StackelSpec> {
    let s = [
        row("q1", [n(1.0), -(n(1.0) / v("q1").powi(2)), n(-1.0)])?,
        row("q2", [n(0.0), n(1.0), n(0.0)])?,
        row("q3", [n(0.0), n(0.0), n(1.0)])?,
    ];
    let f = [
        stackel_fn(1, "q1", "p1", v("p1").powi(2) + b * b / 4.0 * v("q1").powi(2))?,
        stackel_fn(2, "q2", "p2", v("p2").powi(2))?,
        stackel_fn(3, "q3", "p3", v("p3").powi(2))?,
    ];
    let w = [entry("q1", b * b / 8.0 * v("q1").powi(2))?, entry("q2", n(0.0))?, entry("q3", n(0.0))?];
    StackelSpec::new("SM3-classical", SEP_VARS, s, f)?.with_classical(ClassicalForm { kappa: 2.0, w })
}

/// Matrix of the helical undulator, with `f = (p1, p2, p3²)`.
pub fn sm4(a: f64, b3: f64) -> Result<StackelSpec> {
    let arg = 2.0 * v("q3") / a;
    let s = [
        row("q1", [n(0.0), n(1.0), n(0.0)])?,
        row("q2", [n(0.0), n(0.0), n(1.0)])?,
        row("q3", [n(1.0), a * b3 * arg.clone().cos(), -(a * b3 * arg.sin())])?,
    ];
    let f = [
        stackel_fn(1, "q1", "p1", v("p1"))?,
        stackel_fn(2, "q2", "p2", v("p2"))?,
        stackel_fn(3, "q3", "p3", v("p3").powi(2))?,
    ];
    StackelSpec::new("SM4", SEP_VARS, s, f)
}

/// Generalization of SM1 with `λ1, λ2` and Stäckel functions
/// `(μ1 p1, μ2 p2² + b²μ4, μ3 p3²)`.
pub fn gsm1(b: f64, lambda: [&FunctionDef; 2], mu: [&FunctionDef; 4]) -> Result<StackelSpec> {
    let s = [
        row("q1", [n(0.0), n(1.0), n(0.0)])?,
        row("q2", [n(1.0), b * at(lambda[0], "q2")?, -at(lambda[1], "q2")?])?,
        row("q3", [n(0.0), n(0.0), n(1.0)])?,
    ];
    let f = [
        stackel_fn(1, "q1", "p1", at(mu[0], "q1")? * v("p1"))?,
        stackel_fn(2, "q2", "p2", at(mu[1], "q2")? * v("p2").powi(2) + b * b * at(mu[3], "q2")?)?,
        stackel_fn(3, "q3", "p3", at(mu[2], "q3")? * v("p3").powi(2))?,
    ];
    StackelSpec::new("GSM1", SEP_VARS, s, f)
}

/// Generalization of SM2/SM3 with `ψ1, ψ2` and Stäckel functions
/// `(ν1 p1² + ν4, ν2² p2², ν3 p3²)`.
pub fn sm3(psi: [&FunctionDef; 2], nu: [&FunctionDef; 4]) -> Result<StackelSpec> {
    let s = [
        row("q1", [n(1.0), -at(psi[0], "q1")?, -at(psi[1], "q1")?])?,
        row("q2", [n(0.0), n(1.0), n(0.0)])?,
        row("q3", [n(0.0), n(0.0), n(1.0)])?,
    ];
    let f = [
        stackel_fn(1, "q1", "p1", at(nu[0], "q1")? * v("p1").powi(2) + at(nu[3], "q1")?)?,
        stackel_fn(2, "q2", "p2", at(nu[1], "q2")?.powi(2) * v("p2").powi(2))?,
        stackel_fn(3, "q3", "p3", at(nu[2], "q3")? * v("p3").powi(2))?,
    ];
    StackelSpec::new("SM3", SEP_VARS, s, f)
}

/// Cylindrical matrix of the `A = A_z ∇z` case with
/// `F = (p_r²/2 + f1²/2 + f3, p_φ²/2 + f4, p_z)`.
pub fn case3_remark(f: [&FunctionDef; 4]) -> Result<StackelSpec> {
    let s = [
        row("r", [n(1.0), -(n(1.0) / v("r").powi(2)), -at(f[0], "r")?])?,
        row("phi", [n(0.0), n(1.0), -at(f[1], "phi")?])?,
        row("z", [n(0.0), n(0.0), n(1.0)])?,
    ];
    let fs = [
        stackel_fn(1, "r", "pr", v("pr").powi(2) / 2.0 + at(f[0], "r")?.powi(2) / 2.0 + at(f[2], "r")?)?,
        stackel_fn(2, "phi", "pphi", v("pphi").powi(2) / 2.0 + at(f[3], "phi")?)?,
        stackel_fn(3, "z", "pz", v("pz"))?,
    ];
    StackelSpec::new("case3-remark", ["r", "phi", "z", "pr", "pphi", "pz"], s, fs)
}
