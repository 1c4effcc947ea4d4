//! Models on Cartesian phase space: the uniform field and the helical
//! undulator.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::operators::{k4_operator, k5_operator, r_operator};
use super::{involutive, params, BracketClaim, ChartBuilder, Ctx, ModelSpec, SpectrumClaim, StackelAttachment};
use crate::error::{Error, Result};
use crate::exprlang::{parse_in, Expr, Scope};
use crate::geometry::{Chart, VectorPotential};
use crate::hamiltonian::{ChainSpec, HamiltonianSystem};
use crate::phasespace::OperatorField;
use crate::stackel::builtin;

/// Vector potential choice for the uniform field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `A = (−by/2, bx/2, 0)`.
    #[default]
    Symmetric,
    /// `A = (−by, 0, 0)`.
    LandauX,
    /// `A = (0, bx, 0)`.
    LandauY,
}

impl Gauge {
    pub const ALL: [Gauge; 3] = [Gauge::Symmetric, Gauge::LandauX, Gauge::LandauY];

    fn components(self) -> [&'static str; 3] {
        match self {
            Gauge::Symmetric => ["-b*y/2", "b*x/2", "0"],
            Gauge::LandauX => ["-b*y", "0", "0"],
            Gauge::LandauY => ["0", "b*x", "0"],
        }
    }

    /// `H` expanded in the canonical momenta.
    fn expanded_h(self) -> &'static str {
        match self {
            Gauge::Symmetric => "(px^2 + py^2 + pz^2)/2 + b*(x*py - y*px)/2 + b^2*(x^2 + y^2)/8",
            Gauge::LandauX => "(px^2 + py^2 + pz^2)/2 - b*y*px + b^2*y^2/2",
            Gauge::LandauY => "(px^2 + py^2 + pz^2)/2 + b*x*py + b^2*x^2/2",
        }
    }
}

impl fmt::Display for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gauge::Symmetric => "symmetric",
            Gauge::LandauX => "landau_x",
            Gauge::LandauY => "landau_y",
        })
    }
}

impl FromStr for Gauge {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(Gauge::Symmetric),
            "landau_x" | "landau-x" => Ok(Gauge::LandauX),
            "landau_y" | "landau-y" => Ok(Gauge::LandauY),
            other => Err(Error::Config(format!("unknown gauge `{other}` (symmetric, landau_x, landau_y)"))),
        }
    }
}

fn cartesian_potential(texts: [&str; 3], scope: &Scope) -> Result<VectorPotential> {
    let mut comps = Vec::with_capacity(3);
    for t in texts {
        comps.push(parse_in(t, scope)?);
    }
    let comps: [Expr; 3] = comps.try_into().expect("three components");
    VectorPotential::new(&Chart::cartesian(), comps)
}

/// `prefactor · R_i` with the prefactor's zero set excluded.
pub(crate) fn scaled_r(
    ctx: &Ctx,
    pot: &VectorPotential,
    name: &str,
    i: usize,
    prefactor: &str,
    singular: &[&str],
) -> Result<OperatorField> {
    let pre = ctx.field(&format!("{name}:prefactor"), prefactor)?;
    let sing = singular
        .iter()
        .enumerate()
        .map(|(k, t)| ctx.field(&format!("{name}:s{k}"), t))
        .collect::<Result<Vec<_>>>()?;
    Ok(r_operator(name, i, pot, Some(pre), sing))
}

pub(crate) fn spectrum(ctx: &Ctx, op: &str, values: &[(&str, usize)], stated: bool) -> Result<SpectrumClaim> {
    let vals = values
        .iter()
        .enumerate()
        .map(|(k, (t, m))| Ok((ctx.field(&format!("{op}:eig{k}"), t)?, *m)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumClaim { operator: op.to_string(), values: vals, stated })
}

pub(crate) fn chain(model_h: &crate::phasespace::ScalarField, k: &OperatorField, target: &crate::phasespace::ScalarField) -> ChainSpec {
    ChainSpec::new(&format!("{} -> {}", k.name, target.name), model_h.clone(), k.clone(), Some(target.clone()))
}

const BOX_X_POSITIVE: [(f64, f64); 6] = [(0.25, 2.0), (-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)];

/// The uniform field `B = b e_z` in the chosen gauge.
pub fn constant_b_model(b: f64, gauge: Gauge) -> Result<ModelSpec> {
    let ps = params(&[("b", b)]);
    let scope = Scope::permissive().param("b", b);
    let chart = Chart::cartesian();
    let a = cartesian_potential(gauge.components(), &scope)?;
    let mut ctx = Ctx::new(&chart, &a, &ps);
    ctx.define("Lz", "x*Piy - y*Pix")?;

    let h1 = ctx.field("H1", "Pix + b*y")?;
    let h2 = ctx.field("H2", "Piy - b*x")?;
    let h3 = ctx.field("H3", "Piz")?;
    let h4 = ctx.field("H4", "Lz - (b/2)*(x^2 + y^2)")?;
    let h5 = ctx.field("H5", "-(Pix*cos(b*z/Piz)) - Piy*sin(b*z/Piz)")?;
    let system = HamiltonianSystem::new(chart, a.clone(), Expr::zero(), 0.5)?
        .with_integral(h1.clone())
        .with_integral(h2.clone())
        .with_integral(h3.clone())
        .with_integral(h4.clone())
        .with_integral(h5);

    let k1 = scaled_r(&ctx, &a, "K1", 0, "1/Pix", &["Pix"])?;
    let k2 = scaled_r(&ctx, &a, "K2", 1, "1/Piy", &["Piy"])?;
    let k3 = scaled_r(&ctx, &a, "K3", 2, "1/Piz", &["Piz"])?;
    let k4 = k4_operator(&a);
    let h = system.h.clone();
    let chains = vec![chain(&h, &k1, &h1), chain(&h, &k2, &h2), chain(&h, &k3, &h3), chain(&h, &k4, &h4)];

    let mut brackets = involutive(&["H", "H1"]);
    for g in ["H2", "H3", "H4", "H5"] {
        brackets.push(BracketClaim { f: "H".into(), g: g.into(), expected: None });
    }
    brackets.push(BracketClaim { f: "H1".into(), g: "H2".into(), expected: Some(ctx.field("b", "b")?) });
    for (f, g) in [("H1", "H3"), ("H2", "H3"), ("H3", "H4"), ("H1", "H5"), ("H2", "H5")] {
        brackets.push(BracketClaim { f: f.into(), g: g.into(), expected: None });
    }

    let spectra = vec![
        spectrum(&ctx, "K1", &[("0", 4), ("1/Pix", 2)], true)?,
        spectrum(&ctx, "K2", &[("0", 4), ("1/Piy", 2)], true)?,
        spectrum(&ctx, "K3", &[("0", 4), ("1/Piz", 2)], true)?,
        spectrum(&ctx, "K4", &[("0", 4), ("(x^2 + y^2)/Lz", 2)], false)?,
    ];

    let c1 = ChartBuilder::new("dh-1", &ctx, ["x", "y", "z", "Pix + b*y", "Piy", "Piz"], "((p1 - b*q2)^2 + p2^2 + p3^2)/2")?
        .integral("H1", "p1")?
        .integral("H3", "p3")?
        .operator("K1", &[(0, "1/(p1 - b*q2)")], &["p1 - b*q2"])?
        .operator("K3", &[(2, "1/p3")], &["p3"])?
        .separable();
    let sm1 = StackelAttachment::new(
        builtin::sm1(b)?,
        Some("dh-1"),
        [
            c1.new_field("2H-H1^2", "(p1 - b*q2)^2 + p2^2 + p3^2 - p1^2")?,
            c1.new_field("H1", "p1")?,
            c1.new_field("H3^2", "p3^2")?,
        ],
    )?;
    let c2 = ChartBuilder::new("dh-2", &ctx, ["x", "y", "z", "Pix", "Piy - b*x", "Piz"], "(p1^2 + (p2 + b*q1)^2 + p3^2)/2")?
        .integral("H2", "p2")?
        .integral("H3", "p3")?
        .operator("K2", &[(1, "1/(p2 + b*q1)")], &["p2 + b*q1"])?
        .operator("K3", &[(2, "1/p3")], &["p3"])?
        .separable();
    let sm2 = StackelAttachment::new(
        builtin::sm2(b)?,
        Some("dh-2"),
        [
            c2.new_field("2H-H2^2-H3^2+H3", "p1^2 + (p2 + b*q1)^2 + p3^2 - p2^2 - p3^2 + p3")?,
            c2.new_field("H2", "p2")?,
            c2.new_field("H3", "p3")?,
        ],
    )?;
    let c3 = ChartBuilder::new(
        "dh-3",
        &ctx,
        ["sqrt(x^2 + y^2)", "atan(y/x)", "z", "(x*Pix + y*Piy)/sqrt(x^2 + y^2)", "Lz - b*(x^2 + y^2)/2", "Piz"],
        "(p1^2 + (p2 + b*q1^2/2)^2/q1^2 + p3^2)/2",
    )?
    .domain("x")?
    .integral("H4", "p2")?
    .integral("H3", "p3")?
    .operator("K3", &[(2, "1/p3")], &["p3"])?
    .operator("K4", &[(1, "2*q1^2/(2*p2 + b*q1^2)")], &["2*p2 + b*q1^2"])?
    .separable();
    let sm3 = StackelAttachment::new(
        builtin::sm3_classical(b)?,
        Some("dh-3"),
        [
            c3.new_field("2H-bH4", "p1^2 + (p2 + b*q1^2/2)^2/q1^2 + p3^2 - b*p2")?,
            c3.new_field("H4^2", "p2^2")?,
            c3.new_field("H3^2", "p3^2")?,
        ],
    )?;

    let mut notes = vec![format!("gauge: {gauge}"), "K4 spectrum is tool-derived".into()];
    if b == 0.0 {
        notes.push("b = 0: degenerate, the field vanishes".into());
    }
    let declared_h = ctx.field("H_closed_form", gauge.expanded_h())?;
    Ok(ModelSpec {
        id: "constant-b".into(),
        description: "uniform magnetic field b e_z".into(),
        system,
        params: ps,
        functions: vec![],
        declared_h,
        declared_b: Arc::new(move |_| Ok([0.0, 0.0, b])),
        operators: vec![k1, k2, k3, k4],
        chains,
        algebras: vec![("K1".into(), "K3".into()), ("K2".into(), "K3".into()), ("K3".into(), "K4".into())],
        spectra,
        brackets,
        separable: vec![],
        charts: vec![c1.build(), c2.build(), c3.build()],
        stackel: vec![sm1, sm2, sm3],
        hj: None,
        sample_box: BOX_X_POSITIVE,
        singular: vec![ctx.field("Piz", "Piz")?],
        constraints: vec![],
        periodic: vec![],
        notes,
    })
}

const UNDULATOR_H3: &str = "Lz - (a/2)*Piz - (a*b3*x*sin(2*z/a) + a*b3*y*cos(2*z/a))/2";

/// The helical undulator with `B = (−b₃cos(2z/a), b₃sin(2z/a), 0)`.
pub fn undulator_model(a: f64, b3: f64) -> Result<ModelSpec> {
    if a == 0.0 {
        return Err(Error::Config("undulator pitch a must be nonzero".into()));
    }
    let ps = params(&[("a", a), ("b3", b3)]);
    let scope = Scope::permissive().param("a", a).param("b3", b3);
    let chart = Chart::cartesian();
    let pot = cartesian_potential(["-(a*b3/2)*cos(2*z/a)", "(a*b3/2)*sin(2*z/a)", "0"], &scope)?;
    let mut ctx = Ctx::new(&chart, &pot, &ps);
    ctx.define("Lz", "x*Piy - y*Pix")?;

    let h1 = ctx.field("H1", "Pix + (a*b3/2)*cos(2*z/a)")?;
    let h2 = ctx.field("H2", "Piy - (a*b3/2)*sin(2*z/a)")?;
    let h3 = ctx.field("H3", UNDULATOR_H3)?;
    let system = HamiltonianSystem::new(chart, pot.clone(), Expr::zero(), 0.5)?
        .with_integral(h1.clone())
        .with_integral(h2.clone())
        .with_integral(h3.clone());
    let k1 = scaled_r(&ctx, &pot, "K1", 0, "1/Pix", &["Pix"])?;
    let k2 = scaled_r(&ctx, &pot, "K2", 1, "1/Piy", &["Piy"])?;
    let k5 = k5_operator(&pot, a);
    let h = system.h.clone();
    let chains = vec![chain(&h, &k1, &h1), chain(&h, &k2, &h2), chain(&h, &k5, &h3)];

    let mut brackets = involutive(&["H", "H1", "H2"]);
    brackets.push(BracketClaim { f: "H".into(), g: "H3".into(), expected: None });
    brackets.push(BracketClaim { f: "H1".into(), g: "H3".into(), expected: Some(ctx.field("-H2", "-(Piy - (a*b3/2)*sin(2*z/a))")?) });
    brackets.push(BracketClaim { f: "H2".into(), g: "H3".into(), expected: Some(h1.clone()) });

    let spectra = vec![
        spectrum(&ctx, "K1", &[("0", 4), ("1/Pix", 2)], true)?,
        spectrum(&ctx, "K2", &[("0", 4), ("1/Piy", 2)], true)?,
        spectrum(&ctx, "K5", &[("0", 4), ("2*a*(x^2 + y^2)/(a*Lz - 2*(x^2 + y^2)*Piz)", 2)], false)?,
    ];

    let dh = ChartBuilder::new(
        "dh",
        &ctx,
        ["x", "y", "z", "Pix + (a*b3/2)*cos(2*z/a)", "Piy - (a*b3/2)*sin(2*z/a)", "Piz"],
        "((p1 - (a*b3/2)*cos(2*q3/a))^2 + (p2 + (a*b3/2)*sin(2*q3/a))^2 + p3^2)/2",
    )?
    .integral("H1", "p1")?
    .integral("H2", "p2")?
    .operator("K1", &[(0, "1/(p1 - (a*b3/2)*cos(2*q3/a))")], &["p1 - (a*b3/2)*cos(2*q3/a)"])?
    .operator("K2", &[(1, "1/(p2 + (a*b3/2)*sin(2*q3/a))")], &["p2 + (a*b3/2)*sin(2*q3/a)"])?
    .separable();
    let sm4 = StackelAttachment::new(
        builtin::sm4(a, b3)?,
        Some("dh"),
        [
            dh.new_field(
                "2H-H1^2-H2^2-a^2b3^2/4",
                "(p1 - (a*b3/2)*cos(2*q3/a))^2 + (p2 + (a*b3/2)*sin(2*q3/a))^2 + p3^2 - p1^2 - p2^2 - a^2*b3^2/4",
            )?,
            dh.new_field("H1", "p1")?,
            dh.new_field("H2", "p2")?,
        ],
    )?;

    let shift = "b3*sqrt(x^2 + y^2)*sin(atan(y/x) + 2*z/a)";
    let p2 = format!("(2*Lz/a + Piz + {shift})/2");
    let p3 = format!("(2*Lz/a - Piz - {shift})/2");
    let partial = ChartBuilder::new(
        "partial",
        &ctx,
        [
            "sqrt(x^2 + y^2)",
            "(a/2)*atan(y/x) + z",
            "(a/2)*atan(y/x) - z",
            "(x*Pix + y*Piy)/sqrt(x^2 + y^2)",
            &p2,
            &p3,
        ],
        "(a^2*(p2 + p3)^2 + 4*b3*q1^3*sin(2*q2/a)*(b3*q1*sin(2*q2/a) - 2*p2 + 2*p3) + 4*q1^2*(p1^2 + (p2 - p3)^2))/(8*q1^2)",
    )?
    .domain("x")?
    .integral("H3", "a*p3")?
    .operator(
        "K5",
        &[(2, "2*a*q1^2/(a^2*(p2 + p3)/2 - 2*q1^2*(p2 - p3 - b3*q1*sin(2*q2/a)))")],
        &["a^2*(p2 + p3)/2 - 2*q1^2*(p2 - p3 - b3*q1*sin(2*q2/a))"],
    )?
    .identity(
        "split: PDE",
        "a^2*(p2 + p3)^2 + 4*b3*q1^3*sin(2*q2/a)*(b3*q1*sin(2*q2/a) - 2*p2 + 2*p3) + 4*q1^2*(p1^2 + (p2 - p3)^2)",
        "8*(x^2 + y^2)*(Pix^2 + Piy^2 + Piz^2)/2",
    )?
    .identity("split: ODE", "p3", &format!("({UNDULATOR_H3})/a"))?;

    let declared_h = ctx.field(
        "H_closed_form",
        "(px^2 + py^2 + pz^2)/2 - (a*b3/2)*(px*cos(2*z/a) - py*sin(2*z/a)) + a^2*b3^2/8",
    )?;
    Ok(ModelSpec {
        id: "undulator".into(),
        description: "helical undulator".into(),
        system,
        params: ps,
        functions: vec![],
        declared_h,
        declared_b: Arc::new(move |q| {
            let t = 2.0 * q[2] / a;
            Ok([-b3 * t.cos(), b3 * t.sin(), 0.0])
        }),
        operators: vec![k1, k2, k5],
        chains,
        algebras: vec![("K1".into(), "K2".into()), ("K5".into(), "I".into())],
        spectra,
        brackets,
        separable: vec![],
        charts: vec![dh.build(), partial.build()],
        stackel: vec![sm4],
        hj: None,
        sample_box: BOX_X_POSITIVE,
        singular: vec![],
        constraints: vec![],
        periodic: vec![],
        notes: vec![
            "vector potential A = (-(a b3/2) cos(2z/a), (a b3/2) sin(2z/a), 0)".into(),
            "partial chart momenta p2, p3 are halved so that the chart is canonical".into(),
            "K5 spectrum is tool-derived".into(),
        ],
    })
}
