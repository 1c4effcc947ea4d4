//! The three cylindrical families with ignorable or separable structure.

use std::f64::consts::PI;
use std::sync::Arc;

use super::cartesian::{chain, spectrum};
use super::{derivative, hj_spec, involutive, pairs, Ctx, ModelSpec, Periodic, StackelAttachment};
use crate::error::Result;
use crate::exprlang::{parse_in, Expr, FunctionDef, Scope};
use crate::geometry::{Chart, VectorPotential};
use crate::hamiltonian::HamiltonianSystem;
use crate::stackel::builtin;

pub(crate) const CASE1_DEFAULTS: [(&str, &str, &str); 3] =
    [("Aphi", "r", "0.3*r^2 + sin(r)"), ("Az", "r", "cos(r) + r"), ("V", "r", "r^2/5")];
pub(crate) const CASE2_DEFAULTS: [(&str, &str, &str); 4] =
    [("f2", "r", "sin(r) + r"), ("f3", "z", "0.4*z + 0.2*z^2"), ("f4", "z", "cos(z)"), ("f5", "r", "1/r")];
pub(crate) const CASE3_DEFAULTS: [(&str, &str, &str); 4] =
    [("f1", "r", "0.5*r + 0.1*r^2"), ("f2", "phi", "0.3*sin(phi) + 0.5"), ("f3", "r", "r^2/4"), ("f4", "phi", "cos(2*phi)")];

const CYL_BOX: [(f64, f64); 6] = [(0.5, 2.5), (-3.0, 3.0), (-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)];

/// Renames a user function to the slot name so that text can call it.
fn slot(name: &str, f: FunctionDef) -> FunctionDef {
    FunctionDef { name: name.to_string(), ..f }
}

fn scope_of(fs: &[FunctionDef]) -> Scope {
    fs.iter().fold(Scope::permissive(), |s, f| s.function(f.clone()))
}

fn system(fs: &[FunctionDef], a: [&str; 3], v: &str) -> Result<(HamiltonianSystem, Ctx, Scope)> {
    let scope = scope_of(fs);
    let chart = Chart::cylindrical();
    let comps: [Expr; 3] = [parse_in(a[0], &scope)?, parse_in(a[1], &scope)?, parse_in(a[2], &scope)?];
    let pot = VectorPotential::new(&chart, comps)?;
    let sys = HamiltonianSystem::new(chart.clone(), pot.clone(), parse_in(v, &scope)?, 0.5)?;
    let ctx = Ctx::new(&chart, &pot, &Default::default()).with_functions(fs);
    Ok((sys, ctx, scope))
}

/// `A = A_φ(r)∇φ + A_z(r)∇z` with potential `V(r)`.
pub fn cyl_case1(a_phi: FunctionDef, a_z: FunctionDef, v: FunctionDef) -> Result<ModelSpec> {
    let fs = vec![slot("Aphi", a_phi), slot("Az", a_z), slot("V", v)];
    for f in &fs {
        f.require_single_var()?;
    }
    let (sys, ctx, scope) = system(&fs, ["0", "Aphi(r)", "Az(r)"], "V(r)")?;
    let h2 = ctx.field("H2", "pphi")?;
    let h3 = ctx.field("H3", "pz")?;
    let sys = sys.with_integral(h2.clone()).with_integral(h3.clone());
    let k2 = ctx.diagonal("K2", &[(1, "r^2/Piphi")], &["Piphi"])?;
    let k3 = ctx.diagonal("K3", &[(2, "1/Piz")], &["Piz"])?;
    let h = sys.h.clone();
    let u = "V(r) + Aphi(r)^2/(2*r^2) + Az(r)^2/2";
    let declared_h =
        ctx.field("H_closed_form", &format!("(pr^2 + pphi^2/r^2 + pz^2)/2 + Aphi(r)*pphi/r^2 + Az(r)*pz + {u}"))?;
    let hj = hj_spec(
        &scope,
        ["r", "phi", "z"],
        [
            (true, &format!("-2*(h2^2/(2*r^2) + h3^2/2 - h1 + Aphi(r)*h2/r^2 + Az(r)*h3 + {u})")),
            (false, "h2"),
            (false, "h3"),
        ],
        ["H", "H2", "H3"],
    )?;
    let (fa, fz) = (fs[0].clone(), fs[1].clone());
    Ok(ModelSpec {
        id: "cyl-case1".into(),
        description: "A = A_phi(r) grad(phi) + A_z(r) grad(z), V(r)".into(),
        params: Default::default(),
        functions: fs,
        declared_h,
        declared_b: Arc::new(move |q| Ok([0.0, -derivative(&fz, q[0])?, derivative(&fa, q[0])? / q[0]])),
        chains: vec![chain(&h, &k2, &h2), chain(&h, &k3, &h3)],
        operators: vec![k2, k3],
        algebras: vec![("K2".into(), "K3".into())],
        spectra: vec![
            spectrum(&ctx, "K2", &[("0", 4), ("r^2/Piphi", 2)], true)?,
            spectrum(&ctx, "K3", &[("0", 4), ("1/Piz", 2)], true)?,
        ],
        brackets: involutive(&["H", "H2", "H3"]),
        separable: pairs(&["H", "H2", "H3"]),
        system: sys,
        charts: vec![],
        stackel: vec![],
        hj: Some(hj),
        sample_box: CYL_BOX,
        singular: vec![],
        constraints: vec![],
        periodic: vec![],
        notes: vec![],
    })
}

/// `A = (f₂(r) + r²f₃(z))∇φ` with `V = f₅ + f₄ − r²f₃²/2 − f₂f₃`.
pub fn cyl_case2(f2: FunctionDef, f3: FunctionDef, f4: FunctionDef, f5: FunctionDef) -> Result<ModelSpec> {
    let fs = vec![slot("f2", f2), slot("f3", f3), slot("f4", f4), slot("f5", f5)];
    for f in &fs {
        f.require_single_var()?;
    }
    let (sys, ctx, scope) = system(
        &fs,
        ["0", "f2(r) + r^2*f3(z)", "0"],
        "f5(r) + f4(z) - r^2*f3(z)^2/2 - f2(r)*f3(z)",
    )?;
    let h2 = ctx.field("H2", "pphi")?;
    let h3 = ctx.field("H3", "pz^2/2 + f3(z)*pphi + f4(z)")?;
    let sys = sys.with_integral(h2.clone()).with_integral(h3.clone());
    let k2 = ctx.diagonal("K2", &[(1, "r^2/Piphi")], &["Piphi"])?;
    let k3 = ctx.diagonal("K3", &[(1, "r^2*f3(z)/Piphi"), (2, "1")], &["Piphi"])?;
    let h = sys.h.clone();
    let f6 = "f5(r) + f2(r)^2/(2*r^2)";
    let declared_h = ctx.field(
        "H_closed_form",
        &format!("(pr^2 + pz^2)/2 + pphi^2/(2*r^2) + f2(r)*pphi/r^2 + f3(z)*pphi + f4(z) + {f6}"),
    )?;
    let hj = hj_spec(
        &scope,
        ["r", "phi", "z"],
        [
            (true, &format!("-2*(h2^2/(2*r^2) - h1 + f2(r)*h2/r^2 + h3 + {f6})")),
            (false, "h2"),
            (true, "-2*(f3(z)*h2 - h3 + f4(z))"),
        ],
        ["H", "H2", "H3"],
    )?;
    let (g2, g3) = (fs[0].clone(), fs[1].clone());
    Ok(ModelSpec {
        id: "cyl-case2".into(),
        description: "A = (f2(r) + r^2 f3(z)) grad(phi)".into(),
        params: Default::default(),
        functions: fs,
        declared_h,
        declared_b: Arc::new(move |q| {
            let (r, z) = (q[0], q[2]);
            Ok([-r * derivative(&g3, z)?, 0.0, derivative(&g2, r)? / r + 2.0 * g3.eval(&[z])?])
        }),
        chains: vec![chain(&h, &k2, &h2), chain(&h, &k3, &h3)],
        operators: vec![k2, k3],
        algebras: vec![("K2".into(), "K3".into())],
        spectra: vec![
            spectrum(&ctx, "K2", &[("0", 4), ("r^2/Piphi", 2)], true)?,
            spectrum(&ctx, "K3", &[("0", 2), ("r^2*f3(z)/Piphi", 2), ("1", 2)], true)?,
        ],
        brackets: involutive(&["H", "H2", "H3"]),
        separable: pairs(&["H", "H2", "H3"]),
        system: sys,
        charts: vec![],
        stackel: vec![],
        hj: Some(hj),
        sample_box: CYL_BOX,
        singular: vec![],
        constraints: vec![],
        periodic: vec![],
        notes: vec![],
    })
}

/// `A = (f₁(r) + f₂(φ)/r²)∇z` with `V = f₃ − f₁f₂/r² − f₂²/(2r⁴) + f₄/r²`.
pub fn cyl_case3(f1: FunctionDef, f2: FunctionDef, f3: FunctionDef, f4: FunctionDef) -> Result<ModelSpec> {
    let fs = vec![slot("f1", f1), slot("f2", f2), slot("f3", f3), slot("f4", f4)];
    for f in &fs {
        f.require_single_var()?;
    }
    let (sys, ctx, scope) = system(
        &fs,
        ["0", "0", "f1(r) + f2(phi)/r^2"],
        "f3(r) - f1(r)*f2(phi)/r^2 - f2(phi)^2/(2*r^4) + f4(phi)/r^2",
    )?;
    let h2 = ctx.field("H2", "pphi^2/2 + f2(phi)*pz + f4(phi)")?;
    let h3 = ctx.field("H3", "pz")?;
    let sys = sys.with_integral(h2.clone()).with_integral(h3.clone());
    let k2 = ctx.diagonal("K2", &[(1, "r^2"), (2, "f2(phi)/Piz")], &["Piz"])?;
    let k3 = ctx.diagonal("K3", &[(2, "1/Piz")], &["Piz"])?;
    let h = sys.h.clone();
    let declared_h = ctx.field(
        "H_closed_form",
        "pr^2/2 + (pphi^2/2 + f2(phi)*pz + f4(phi))/r^2 + pz^2/2 + f1(r)*pz + f1(r)^2/2 + f3(r)",
    )?;
    let hj = hj_spec(
        &scope,
        ["r", "phi", "z"],
        [
            (true, "-2*(h3^2/2 - h1 + h2/r^2 + f1(r)*h3 + f1(r)^2/2 + f3(r))"),
            (true, "-2*(-h2 + f2(phi)*h3 + f4(phi))"),
            (false, "h3"),
        ],
        ["H", "H2", "H3"],
    )?;
    let reduced = sys.expanded_expr() - Expr::var("pz").powi(2) / 2.0;
    let remark = StackelAttachment::new(
        builtin::case3_remark([&fs[0], &fs[1], &fs[2], &fs[3]])?,
        None,
        [ctx.field_of("H-H3^2/2", &reduced)?, h2.clone(), h3.clone()],
    )?;
    let (g1, g2) = (fs[0].clone(), fs[1].clone());
    Ok(ModelSpec {
        id: "cyl-case3".into(),
        description: "A = (f1(r) + f2(phi)/r^2) grad(z)".into(),
        params: Default::default(),
        periodic: vec![Periodic { function: fs[1].clone(), period: 2.0 * PI }, Periodic { function: fs[3].clone(), period: 2.0 * PI }],
        functions: fs,
        declared_h,
        declared_b: Arc::new(move |q| {
            let (r, phi) = (q[0], q[1]);
            let r3 = r * r * r;
            Ok([derivative(&g2, phi)? / r3, -derivative(&g1, r)? + 2.0 * g2.eval(&[phi])? / r3, 0.0])
        }),
        chains: vec![chain(&h, &k2, &h2), chain(&h, &k3, &h3)],
        operators: vec![k2, k3],
        algebras: vec![("K2".into(), "K3".into())],
        spectra: vec![
            spectrum(&ctx, "K2", &[("0", 2), ("r^2", 2), ("f2(phi)/Piz", 2)], true)?,
            spectrum(&ctx, "K3", &[("0", 4), ("1/Piz", 2)], true)?,
        ],
        brackets: involutive(&["H", "H2", "H3"]),
        separable: pairs(&["H", "H2", "H3"]),
        system: sys,
        charts: vec![],
        stackel: vec![remark],
        hj: Some(hj),
        sample_box: CYL_BOX,
        singular: vec![],
        constraints: vec![],
        notes: vec![],
    })
}
