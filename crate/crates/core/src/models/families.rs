//! The two integrable families with orthogonal metrics that generalize the
//! uniform-field Stäckel matrices.

use std::sync::Arc;

use super::cartesian::{chain, scaled_r, spectrum};
use super::{derivative, involutive, params, ChartBuilder, ConstraintKind, Ctx, ModelSpec, StackelAttachment};
use crate::error::{Error, Result};
use crate::exprlang::{parse_in, Expr, FunctionDef, Scope};
use crate::geometry::{Chart, VectorPotential};
use crate::hamiltonian::HamiltonianSystem;
use crate::stackel::builtin;

pub(crate) const FAMILY_A_DEFAULTS: [(&str, &str, &str); 6] = [
    ("lambda1", "y", "2*y"),
    ("lambda2", "y", "1"),
    ("mu1", "x", "1"),
    ("mu2", "y", "1"),
    ("mu3", "z", "1"),
    ("mu4", "y", "y^2"),
];
pub(crate) const FAMILY_B_DEFAULTS: [(&str, &str, &str); 6] = [
    ("psi1", "x", "1 + x^2"),
    ("psi2", "x", "1"),
    ("nu1", "x", "1"),
    ("nu2", "y", "1"),
    ("nu3", "z", "1"),
    ("nu4", "x", "1"),
];

const FAMILY_BOX: [(f64, f64); 6] = [(-1.5, 1.5); 6];

fn named(names: &[&str], fs: Vec<FunctionDef>) -> Result<Vec<FunctionDef>> {
    names
        .iter()
        .zip(fs)
        .map(|(n, f)| {
            f.require_single_var()?;
            Ok(FunctionDef { name: n.to_string(), ..f })
        })
        .collect()
}

struct Setup {
    system: HamiltonianSystem,
    pot: VectorPotential,
    ctx: Ctx,
}

fn setup(scope: &Scope, ps: &std::collections::BTreeMap<String, f64>, fs: &[FunctionDef], metric: [&str; 3], a: [&str; 3], v: &str) -> Result<Setup> {
    let p = |t: &str| parse_in(t, scope);
    let metric: [Expr; 3] = [p(metric[0])?, p(metric[1])?, p(metric[2])?];
    let chart = Chart::new("orthogonal", ["x", "y", "z"], metric, vec![])?;
    let pot = VectorPotential::new(&chart, [p(a[0])?, p(a[1])?, p(a[2])?])?;
    let system = HamiltonianSystem::new(chart.clone(), pot.clone(), p(v)?, 1.0)?;
    let ctx = Ctx::new(&chart, &pot, ps).with_functions(fs);
    Ok(Setup { system, pot, ctx })
}

fn scope_with(ps: &[(&str, f64)], fs: &[FunctionDef]) -> Scope {
    let s = ps.iter().fold(Scope::permissive(), |s, (k, v)| s.param(k, *v));
    fs.iter().fold(s, |s, f| s.function(f.clone()))
}

fn sign(t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::SingularPoint("sign of a vanishing function".into()));
    }
    Ok(t.signum())
}

/// Family A: metric `diag[μ1⁻², μ2⁻¹, (λ2μ3)⁻¹]` with `A = −bλ1/(2μ1) dx`.
pub fn family_a(b: f64, lambda: [FunctionDef; 2], mu: [FunctionDef; 4]) -> Result<ModelSpec> {
    let [l1, l2] = lambda;
    let [m1, m2, m3, m4] = mu;
    let fs = named(&["lambda1", "lambda2", "mu1", "mu2", "mu3", "mu4"], vec![l1, l2, m1, m2, m3, m4])?;
    let ps = params(&[("b", b)]);
    let scope = scope_with(&[("b", b)], &fs);
    let Setup { system, pot, ctx } = setup(
        &scope,
        &ps,
        &fs,
        ["1/mu1(x)^2", "1/mu2(y)", "1/(lambda2(y)*mu3(z))"],
        ["-b*lambda1(y)/(2*mu1(x))", "0", "0"],
        "b^2*(mu4(y) - lambda1(y)^2/4)",
    )?;
    let h1 = ctx.field("H1", "mu1(x)*Pix + b*lambda1(y)/2")?;
    let h2 = ctx.field("H2", "mu3(z)*Piz^2")?;
    let system = system.with_integral(h1.clone()).with_integral(h2.clone());
    let k1 = scaled_r(&ctx, &pot, "K1", 0, "1/(2*mu1(x)*Pix)", &["mu1(x)", "Pix"])?;
    let k2 = scaled_r(&ctx, &pot, "K2", 2, "1/lambda2(y)", &["lambda2(y)"])?;
    let h = system.h.clone();

    let hat_h = "(mu1(q1)*p1)^2 - b*lambda1(q2)*mu1(q1)*p1 + mu2(q2)*p2^2 + lambda2(q2)*mu3(q3)*p3^2 + b^2*mu4(q2)";
    let hatted = ChartBuilder::new("hatted", &ctx, ["x", "y", "z", "px", "py", "pz"], hat_h)?
        .integral("H1", "mu1(q1)*p1")?
        .integral("H2", "mu3(q3)*p3^2")?
        .operator("K1", &[(0, "1/(2*mu1(q1)*p1 - b*lambda1(q2))")], &["2*mu1(q1)*p1 - b*lambda1(q2)"])?
        .operator("K2", &[(2, "1/lambda2(q2)")], &["lambda2(q2)"])?
        .separable();
    let gsm1 = StackelAttachment::new(
        builtin::gsm1(b, [&fs[0], &fs[1]], [&fs[2], &fs[3], &fs[4], &fs[5]])?,
        Some("hatted"),
        [
            hatted.new_field("H-H1^2", &format!("{hat_h} - (mu1(q1)*p1)^2"))?,
            hatted.new_field("H1", "mu1(q1)*p1")?,
            hatted.new_field("H2", "mu3(q3)*p3^2")?,
        ],
    )?;

    let constraints = vec![
        ctx.constraint("mu1 has constant sign", ConstraintKind::ConstantSign, "mu1(x)")?,
        ctx.constraint("mu2 > 0", ConstraintKind::Positive, "mu2(y)")?,
        ctx.constraint("lambda2*mu3 > 0", ConstraintKind::Positive, "lambda2(y)*mu3(z)")?,
    ];
    let declared_h = ctx.field(
        "H_closed_form",
        "mu1(x)^2*px^2 - b*lambda1(y)*mu1(x)*px + mu2(y)*py^2 + lambda2(y)*mu3(z)*pz^2 + b^2*mu4(y)",
    )?;
    let (fl1, fm1, fm2) = (fs[0].clone(), fs[2].clone(), fs[3].clone());
    Ok(ModelSpec {
        id: "family-a".into(),
        description: "integrable family A".into(),
        system,
        params: ps,
        declared_h,
        declared_b: Arc::new(move |q| {
            let m2 = fm2.eval(&[q[1]])?;
            if m2 <= 0.0 {
                return Err(Error::Domain(format!("mu2 = {m2} is not positive")));
            }
            let s = sign(fm1.eval(&[q[0]])?)?;
            Ok([0.0, 0.0, 0.5 * b * derivative(&fl1, q[1])? * m2.sqrt() * s])
        }),
        chains: vec![chain(&h, &k1, &h1), chain(&h, &k2, &h2)],
        spectra: vec![
            spectrum(&ctx, "K1", &[("0", 4), ("1/(2*mu1(x)*Pix)", 2)], true)?,
            spectrum(&ctx, "K2", &[("0", 4), ("1/lambda2(y)", 2)], true)?,
        ],
        operators: vec![k1, k2],
        algebras: vec![("K1".into(), "K2".into())],
        brackets: involutive(&["H", "H1", "H2"]),
        separable: vec![],
        charts: vec![hatted.build()],
        stackel: vec![gsm1],
        hj: None,
        sample_box: FAMILY_BOX,
        singular: vec![],
        constraints,
        periodic: vec![],
        notes: vec![],
        functions: fs,
    })
}

/// Family B: metric `diag[ν1⁻¹, (ψ1ν2²)⁻¹, (ψ2ν3)⁻¹]` with
/// `A = dy/(2ψ1ν2)`.
pub fn family_b(psi: [FunctionDef; 2], nu: [FunctionDef; 4]) -> Result<ModelSpec> {
    let [s1, s2] = psi;
    let [n1, n2, n3, n4] = nu;
    let fs = named(&["psi1", "psi2", "nu1", "nu2", "nu3", "nu4"], vec![s1, s2, n1, n2, n3, n4])?;
    let scope = scope_with(&[], &fs);
    let Setup { system, pot, ctx } = setup(
        &scope,
        &Default::default(),
        &fs,
        ["1/nu1(x)", "1/(psi1(x)*nu2(y)^2)", "1/(psi2(x)*nu3(z))"],
        ["0", "1/(2*psi1(x)*nu2(y))", "0"],
        "nu4(x) - 1/(4*psi1(x))",
    )?;
    let h1 = ctx.field("H1", "nu2(y)^2*(Piy - 1/(2*psi1(x)*nu2(y)))^2")?;
    let h2 = ctx.field("H2", "nu3(z)*Piz^2")?;
    let h4 = ctx.field("H4", "nu2(y)*(Piy - 1/(2*psi1(x)*nu2(y)))")?;
    let system = system.with_integral(h1.clone()).with_integral(h2.clone()).with_integral(h4);
    let k2 = scaled_r(
        &ctx,
        &pot,
        "K2",
        1,
        "(2*psi1(x)*nu2(y)*Piy - 1)/(2*psi1(x)^2*nu2(y)*Piy)",
        &["psi1(x)", "nu2(y)", "Piy"],
    )?;
    let k3 = scaled_r(&ctx, &pot, "K3", 2, "1/psi2(x)", &["psi2(x)"])?;
    let h = system.h.clone();

    let hat_h = "nu1(q1)*p1^2 + psi1(q1)*nu2(q2)^2*p2^2 + psi2(q1)*nu3(q3)*p3^2 + nu4(q1) + nu2(q2)*p2";
    let hatted = ChartBuilder::new("hatted", &ctx, ["x", "y", "z", "px", "py", "pz"], hat_h)?
        .integral("H1", "nu2(q2)^2*p2^2")?
        .integral("H2", "nu3(q3)*p3^2")?
        .integral("H4", "nu2(q2)*p2")?
        .operator("K2", &[(1, "p2/(psi1(q1)*p2 + 1/(2*nu2(q2)))")], &["psi1(q1)*p2 + 1/(2*nu2(q2))"])?
        .operator("K3", &[(2, "1/psi2(q1)")], &["psi2(q1)"])?
        .separable();
    let sm3 = StackelAttachment::new(
        builtin::sm3([&fs[0], &fs[1]], [&fs[2], &fs[3], &fs[4], &fs[5]])?,
        Some("hatted"),
        [
            hatted.new_field("H-H4", &format!("{hat_h} - nu2(q2)*p2"))?,
            hatted.new_field("H1", "nu2(q2)^2*p2^2")?,
            hatted.new_field("H2", "nu3(q3)*p3^2")?,
        ],
    )?;

    let constraints = vec![
        ctx.constraint("psi1 > 0", ConstraintKind::Positive, "psi1(x)")?,
        ctx.constraint("nu1 > 0", ConstraintKind::Positive, "nu1(x)")?,
        ctx.constraint("nu2 has constant sign", ConstraintKind::ConstantSign, "nu2(y)")?,
        ctx.constraint("psi2*nu3 > 0", ConstraintKind::Positive, "psi2(x)*nu3(z)")?,
    ];
    let declared_h = ctx.field(
        "H_closed_form",
        "nu1(x)*px^2 + psi1(x)*nu2(y)^2*py^2 + psi2(x)*nu3(z)*pz^2 + nu4(x) + nu2(y)*py",
    )?;
    let (fp1, fn1, fn2) = (fs[0].clone(), fs[2].clone(), fs[3].clone());
    Ok(ModelSpec {
        id: "family-b".into(),
        description: "integrable family B".into(),
        system,
        params: Default::default(),
        declared_h,
        declared_b: Arc::new(move |q| {
            let p1 = fp1.eval(&[q[0]])?;
            let v1 = fn1.eval(&[q[0]])?;
            if p1 <= 0.0 || v1 <= 0.0 {
                return Err(Error::Domain(format!("psi1 = {p1}, nu1 = {v1} must be positive")));
            }
            let s = sign(fn2.eval(&[q[1]])?)?;
            Ok([0.0, 0.0, -derivative(&fp1, q[0])? * v1.sqrt() / (2.0 * p1.powf(1.5)) * s])
        }),
        chains: vec![chain(&h, &k2, &h1), chain(&h, &k3, &h2)],
        spectra: vec![
            spectrum(&ctx, "K2", &[("0", 4), ("(2*psi1(x)*nu2(y)*Piy - 1)/(2*psi1(x)^2*nu2(y)*Piy)", 2)], true)?,
            spectrum(&ctx, "K3", &[("0", 4), ("1/psi2(x)", 2)], true)?,
        ],
        operators: vec![k2, k3],
        algebras: vec![("K2".into(), "K3".into())],
        brackets: involutive(&["H", "H1", "H2", "H4"]),
        separable: vec![],
        charts: vec![hatted.build()],
        stackel: vec![sm3],
        hj: None,
        sample_box: FAMILY_BOX,
        singular: vec![],
        constraints,
        periodic: vec![],
        notes: vec![],
        functions: fs,
    })
}
