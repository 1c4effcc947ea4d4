//! The model catalog: systems, operators, charts, Stäckel data and
//! Hamilton–Jacobi branches, wired for verification.

mod cartesian;
mod checks;
mod cylindrical;
mod families;
pub mod operators;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprlang::{parse_in, Bound, Expr, FunctionDef, Scope};
use crate::geometry::{Chart, VectorPotential};
use crate::hamiltonian::{ChainSpec, HamiltonianSystem};
use crate::phasespace::{OperatorField, PhasePoint, ScalarField, VectorField, DIM};
use crate::stackel::{stackel_haantjes, StackelSpec};

pub use cartesian::{constant_b_model, undulator_model, Gauge};
pub use checks::{
    bracket_residual, chart_point_report, constraint_report, curl_residual, dh_chart_check, hamiltonian_form_residual,
    hj_draw, hj_residual, periodicity_residual, separable_residual, spectrum_residual, ChartReport, ConstraintOutcome,
};
pub use cylindrical::{cyl_case1, cyl_case2, cyl_case3};
pub use families::{family_a, family_b};

/// Minimum value of a chart-domain constraint at accepted samples.
pub const DOMAIN_MARGIN: f64 = 1e-3;
/// Minimum `|s|` over singular-set functions at accepted samples.
pub const SINGULAR_MARGIN: f64 = 1e-2;

/// Declared magnetic field in the unit basis of the model chart.
pub type FieldFn = Arc<dyn Fn(&[f64; 3]) -> Result<[f64; 3]> + Send + Sync>;

/// Declared eigenvalues of an operator with their multiplicities.
#[derive(Clone, Debug)]
pub struct SpectrumClaim {
    pub operator: String,
    pub values: Vec<(ScalarField, usize)>,
    /// False when the values were computed by this tool rather than stated.
    pub stated: bool,
}

/// `{F, G} = expected` (zero when `expected` is `None`).
#[derive(Clone, Debug)]
pub struct BracketClaim {
    pub f: String,
    pub g: String,
    pub expected: Option<ScalarField>,
}

/// A canonical change of coordinates with declared images.
#[derive(Clone, Debug)]
pub struct ChartMap {
    pub name: String,
    pub new_vars: [String; DIM],
    pub forward_exprs: [Expr; DIM],
    pub forward: VectorField,
    /// `H` in the new chart.
    pub hamiltonian: ScalarField,
    /// Model integral name and its image in the new chart.
    pub integrals: Vec<(String, ScalarField)>,
    /// Model operator name and its declared form in the new chart.
    pub operators: Vec<(String, OperatorField)>,
    /// Constraints `c(x) > 0` in the old phase variables.
    pub domain: Vec<(Expr, Bound)>,
    /// Label, new-chart side and old-chart side of further identities.
    pub identities: Vec<(String, ScalarField, ScalarField)>,
    /// Whether every pair among `H` and the integrals separates index by index.
    pub separable: bool,
}

impl ChartMap {
    pub fn map(&self, x: &PhasePoint) -> Result<PhasePoint> {
        self.forward.eval(x)
    }

    pub fn domain_margin(&self, x: &PhasePoint) -> Result<f64> {
        let mut m = f64::INFINITY;
        for (_, b) in &self.domain {
            m = m.min(b.eval(x)?);
        }
        Ok(m)
    }

    pub fn new_var_refs(&self) -> [&str; DIM] {
        std::array::from_fn(|i| self.new_vars[i].as_str())
    }
}

/// A Stäckel matrix attached to a chart, with the recombination of the
/// model's integrals that should reproduce the AKN Hamiltonians.
#[derive(Clone, Debug)]
pub struct StackelAttachment {
    pub spec: StackelSpec,
    /// Chart in which the matrix lives; `None` for the model chart.
    pub chart: Option<String>,
    pub recombination: [ScalarField; 3],
    pub operators: [OperatorField; 3],
}

impl StackelAttachment {
    pub fn new(spec: StackelSpec, chart: Option<&str>, recombination: [ScalarField; 3]) -> Result<Self> {
        let operators = [stackel_haantjes(&spec, 0)?, stackel_haantjes(&spec, 1)?, stackel_haantjes(&spec, 2)?];
        Ok(StackelAttachment { spec, chart: chart.map(str::to_string), recombination, operators })
    }
}

/// A separated momentum `p_k(q^k; h)`.
#[derive(Clone, Debug)]
pub enum Branch {
    /// `p_k = ±sqrt(radicand)`; both signs are checked.
    Sqrt(Bound),
    Exact(Bound),
}

/// Separated branches over `(q¹,q²,q³,h₁,h₂,h₃)` for the integrals named in
/// `integrals` (the first is the Hamiltonian).
#[derive(Clone, Debug)]
pub struct HJSpec {
    pub branches: [Branch; 3],
    pub integrals: [String; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConstraintKind {
    Positive,
    /// Nonzero with one sign over the whole box.
    ConstantSign,
}

/// A precondition on the model's configuration-space functions.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub description: String,
    pub kind: ConstraintKind,
    pub f: Bound,
}

/// A user function that must satisfy `f(φ) = f(φ + 2π)`.
#[derive(Clone, Debug)]
pub struct Periodic {
    pub function: FunctionDef,
    pub period: f64,
}

/// A catalog model ready for verification.
#[derive(Clone)]
pub struct ModelSpec {
    pub id: String,
    pub description: String,
    pub system: HamiltonianSystem,
    pub params: BTreeMap<String, f64>,
    pub functions: Vec<FunctionDef>,
    /// The expanded closed form of `H` in the phase variables.
    pub declared_h: ScalarField,
    pub declared_b: FieldFn,
    pub operators: Vec<OperatorField>,
    pub chains: Vec<ChainSpec>,
    pub algebras: Vec<(String, String)>,
    pub spectra: Vec<SpectrumClaim>,
    pub brackets: Vec<BracketClaim>,
    /// Pairs in total separable involution in the model chart.
    pub separable: Vec<(String, String)>,
    pub charts: Vec<ChartMap>,
    pub stackel: Vec<StackelAttachment>,
    pub hj: Option<HJSpec>,
    /// Uniform sampling box in the model chart.
    pub sample_box: [(f64, f64); DIM],
    /// Further functions whose zero sets are excluded from sampling.
    pub singular: Vec<ScalarField>,
    pub constraints: Vec<Constraint>,
    pub periodic: Vec<Periodic>,
    /// Notes on choices made beyond the stated data.
    pub notes: Vec<String>,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ModelSpec({})", self.id)
    }
}

impl ModelSpec {
    pub fn h(&self) -> &ScalarField {
        &self.system.h
    }

    /// `H` or a named integral.
    pub fn field(&self, name: &str) -> Result<&ScalarField> {
        if name == "H" {
            return Ok(&self.system.h);
        }
        self.system
            .integral(name)
            .ok_or_else(|| Error::Config(format!("model `{}` has no integral `{name}`", self.id)))
    }

    pub fn operator(&self, name: &str) -> Result<OperatorField> {
        if name == "I" {
            return Ok(OperatorField::identity());
        }
        self.operators
            .iter()
            .find(|k| k.name == name)
            .cloned()
            .ok_or_else(|| Error::Config(format!("model `{}` has no operator `{name}`", self.id)))
    }

    pub fn chart(&self, name: &str) -> Result<&ChartMap> {
        self.charts
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Config(format!("model `{}` has no chart `{name}`", self.id)))
    }

    /// The point at which a Stäckel attachment is evaluated.
    pub fn stackel_point(&self, att: &StackelAttachment, x: &PhasePoint) -> Result<PhasePoint> {
        match &att.chart {
            Some(c) => self.chart(c)?.map(x),
            None => Ok(*x),
        }
    }

    /// Whether `x` is far enough from every domain boundary and singular set.
    pub fn admissible(&self, x: &PhasePoint) -> bool {
        self.admissible_inner(x).unwrap_or(false)
    }

    fn admissible_inner(&self, x: &PhasePoint) -> Result<bool> {
        let q = [x[0], x[1], x[2]];
        if self.system.chart.domain_margin(&q)? < DOMAIN_MARGIN {
            return Ok(false);
        }
        for c in &self.constraints {
            let v = c.f.eval(&q)?;
            if !v.is_finite() || v.abs() < SINGULAR_MARGIN {
                return Ok(false);
            }
        }
        if !self.system.h.value(x)?.is_finite() {
            return Ok(false);
        }
        let far = |k: &OperatorField, y: &PhasePoint| k.singular_margin(y) >= SINGULAR_MARGIN;
        if !self.operators.iter().all(|k| far(k, x)) {
            return Ok(false);
        }
        for s in &self.singular {
            if s.value(x)?.abs() < SINGULAR_MARGIN {
                return Ok(false);
            }
        }
        for c in &self.charts {
            if c.domain_margin(x)? < DOMAIN_MARGIN {
                return Ok(false);
            }
            let y = c.map(x)?;
            if !y.iter().all(|v| v.is_finite()) || !c.operators.iter().all(|(_, k)| far(k, &y)) {
                return Ok(false);
            }
        }
        for att in &self.stackel {
            let y = self.stackel_point(att, x)?;
            if !att.operators.iter().all(|k| far(k, &y)) {
                return Ok(false);
            }
            if att.spec.cofactor_data(&[y[0], y[1], y[2]])?.det.abs() < SINGULAR_MARGIN {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `n` admissible points drawn uniformly from the sample box by a
    /// ChaCha8 stream seeded with `seed`.
    pub fn sample_points(&self, n: usize, seed: u64) -> Result<Vec<PhasePoint>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::with_capacity(n);
        let budget = 1000 * n.max(1);
        for _ in 0..budget {
            if pts.len() == n {
                break;
            }
            let x = self.draw(&mut rng);
            if self.admissible(&x) {
                pts.push(x);
            }
        }
        if pts.len() < n {
            return Err(Error::SingularPoint(format!(
                "model `{}`: only {} of {n} admissible samples found in the sampling box",
                self.id,
                pts.len()
            )));
        }
        Ok(pts)
    }

    /// One raw point from the sample box, without rejection.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> PhasePoint {
        std::array::from_fn(|i| {
            let (lo, hi) = self.sample_box[i];
            rng.gen_range(lo..hi)
        })
    }

    /// Integral names including `H`.
    pub fn integral_names(&self) -> Vec<String> {
        std::iter::once("H".to_string()).chain(self.system.integrals.iter().map(|f| f.name.clone())).collect()
    }
}

/// Parameters and user functions of a model, with placeholders for the
/// kinetic momenta.
#[derive(Clone, Debug)]
pub(crate) struct Ctx {
    pub scope: Scope,
    pub vars: [String; DIM],
    pub subs: BTreeMap<String, Expr>,
}

impl Ctx {
    /// Context for `chart` with `Pi<coord>` bound to `p_i + A_i`.
    pub fn new(chart: &Chart, potential: &VectorPotential, params: &BTreeMap<String, f64>) -> Ctx {
        let vars = chart.phase_vars();
        let mut subs = BTreeMap::new();
        for i in 0..3 {
            subs.insert(format!("Pi{}", chart.coords[i]), Expr::var(&vars[3 + i]) + potential.comps[i].clone());
        }
        let mut scope = Scope::permissive();
        for (k, v) in params {
            scope = scope.param(k, *v);
        }
        Ctx { scope, vars, subs }
    }

    /// Context over arbitrary phase variables without placeholders.
    pub fn plain(vars: [&str; DIM], scope: &Scope) -> Ctx {
        Ctx { scope: scope.clone(), vars: vars.map(str::to_string), subs: BTreeMap::new() }
    }

    pub fn with_functions(mut self, fs: &[FunctionDef]) -> Ctx {
        for f in fs {
            self.scope = self.scope.function(f.clone());
        }
        self
    }

    pub fn define(&mut self, name: &str, text: &str) -> Result<()> {
        let e = self.expr(text)?;
        self.subs.insert(name.to_string(), e);
        Ok(())
    }

    pub fn refs(&self) -> [&str; DIM] {
        std::array::from_fn(|i| self.vars[i].as_str())
    }

    pub fn expr(&self, text: &str) -> Result<Expr> {
        Ok(parse_in(text, &self.scope)?.substitute(&self.subs))
    }

    pub fn field(&self, name: &str, text: &str) -> Result<ScalarField> {
        ScalarField::from_expr(name, &self.expr(text)?, &self.refs())
    }

    pub fn field_of(&self, name: &str, e: &Expr) -> Result<ScalarField> {
        ScalarField::from_expr(name, e, &self.refs())
    }

    /// `Σ c_i L_i` with `c_i` given as text per configuration index.
    pub fn diagonal(&self, name: &str, coeffs: &[(usize, &str)], singular: &[&str]) -> Result<OperatorField> {
        let mut entries = Vec::new();
        for (i, t) in coeffs {
            let e = self.expr(t)?;
            entries.push((*i, *i, e.clone()));
            entries.push((*i + 3, *i + 3, e));
        }
        let sing = singular
            .iter()
            .enumerate()
            .map(|(k, t)| self.field(&format!("{name}:s{k}"), t))
            .collect::<Result<Vec<_>>>()?;
        OperatorField::from_exprs(name, &entries, &self.refs(), sing)
    }

    /// Compiled configuration-space expression.
    pub fn config_bound(&self, text: &str) -> Result<Bound> {
        let e = self.expr(text)?;
        Bound::compile(&e, &[&self.vars[0], &self.vars[1], &self.vars[2]])
    }

    pub fn constraint(&self, description: &str, kind: ConstraintKind, text: &str) -> Result<Constraint> {
        Ok(Constraint { description: description.to_string(), kind, f: self.config_bound(text)? })
    }
}

/// Parameters as a map.
pub(crate) fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Every pair of the listed fields, with zero bracket.
pub(crate) fn involutive(names: &[&str]) -> Vec<BracketClaim> {
    let mut out = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            out.push(BracketClaim { f: names[i].to_string(), g: names[j].to_string(), expected: None });
        }
    }
    out
}

pub(crate) fn pairs(names: &[&str]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            out.push((names[i].to_string(), names[j].to_string()));
        }
    }
    out
}

/// Builder for a chart map whose new variables default to `q1..p3`.
pub(crate) struct ChartBuilder<'a> {
    old: &'a Ctx,
    new: Ctx,
    chart: ChartMap,
}

pub(crate) const SEP_VARS: [&str; DIM] = ["q1", "q2", "q3", "p1", "p2", "p3"];

impl<'a> ChartBuilder<'a> {
    pub fn new(name: &str, old: &'a Ctx, forward: [&str; DIM], hamiltonian: &str) -> Result<Self> {
        let new = Ctx::plain(SEP_VARS, &old.scope);
        let mut exprs = Vec::with_capacity(DIM);
        for t in forward {
            exprs.push(old.expr(t)?);
        }
        let forward_exprs: [Expr; DIM] = exprs.try_into().expect("six components");
        let fwd = VectorField::from_exprs(name, &forward_exprs, &old.refs())?;
        let h = new.field("H", hamiltonian)?;
        Ok(ChartBuilder {
            old,
            chart: ChartMap {
                name: name.to_string(),
                new_vars: SEP_VARS.map(str::to_string),
                forward_exprs,
                forward: fwd,
                hamiltonian: h,
                integrals: Vec::new(),
                operators: Vec::new(),
                domain: Vec::new(),
                identities: Vec::new(),
                separable: false,
            },
            new,
        })
    }

    pub fn integral(mut self, name: &str, text: &str) -> Result<Self> {
        let f = self.new.field(name, text)?;
        self.chart.integrals.push((name.to_string(), f));
        Ok(self)
    }

    pub fn operator(mut self, name: &str, coeffs: &[(usize, &str)], singular: &[&str]) -> Result<Self> {
        let k = self.new.diagonal(name, coeffs, singular)?;
        self.chart.operators.push((name.to_string(), k));
        Ok(self)
    }

    pub fn domain(mut self, text: &str) -> Result<Self> {
        let e = self.old.expr(text)?;
        let b = Bound::compile(&e, &self.old.refs())?;
        self.chart.domain.push((e, b));
        Ok(self)
    }

    pub fn identity(mut self, label: &str, new_side: &str, old_side: &str) -> Result<Self> {
        let l = self.new.field(label, new_side)?;
        let r = self.old.field(label, old_side)?;
        self.chart.identities.push((label.to_string(), l, r));
        Ok(self)
    }

    pub fn separable(mut self) -> Self {
        self.chart.separable = true;
        self
    }

    /// A field in the new variables, for Stäckel recombinations.
    pub fn new_field(&self, name: &str, text: &str) -> Result<ScalarField> {
        self.new.field(name, text)
    }

    pub fn build(self) -> ChartMap {
        self.chart
    }
}

/// A catalog entry for listings.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub params: Vec<(&'static str, f64)>,
    /// Function slot, its variable and default body.
    pub functions: Vec<(&'static str, &'static str, &'static str)>,
    pub anchor: &'static str,
}

/// Every built-in model with its parameters and function slots.
pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            id: "constant-b",
            description: "uniform field b e_z; maximally superintegrable, three separation charts",
            params: vec![("b", 1.0)],
            functions: vec![],
            anchor: "constant magnetic field model",
        },
        CatalogEntry {
            id: "undulator",
            description: "helical undulator; minimally superintegrable, non-Abelian integrals",
            params: vec![("a", 2.0), ("b3", 0.5)],
            functions: vec![],
            anchor: "helical undulator model",
        },
        CatalogEntry {
            id: "cyl-case1",
            description: "A = A_phi(r) grad(phi) + A_z(r) grad(z), V(r)",
            params: vec![],
            functions: cylindrical::CASE1_DEFAULTS.to_vec(),
            anchor: "cylindrical case 1",
        },
        CatalogEntry {
            id: "cyl-case2",
            description: "A = (f2(r) + r^2 f3(z)) grad(phi)",
            params: vec![],
            functions: cylindrical::CASE2_DEFAULTS.to_vec(),
            anchor: "cylindrical case 2",
        },
        CatalogEntry {
            id: "cyl-case3",
            description: "A = (f1(r) + f2(phi)/r^2) grad(z)",
            params: vec![],
            functions: cylindrical::CASE3_DEFAULTS.to_vec(),
            anchor: "cylindrical case 3",
        },
        CatalogEntry {
            id: "family-a",
            description: "integrable family generalizing the first constant-field Stäckel matrix",
            params: vec![("b", 1.0)],
            functions: families::FAMILY_A_DEFAULTS.to_vec(),
            anchor: "integrable family A",
        },
        CatalogEntry {
            id: "family-b",
            description: "integrable family generalizing the third constant-field Stäckel matrix",
            params: vec![],
            functions: families::FAMILY_B_DEFAULTS.to_vec(),
            anchor: "integrable family B",
        },
    ]
}

/// A model selection with parameter and function overrides.
#[derive(Clone, Debug, Default)]
pub struct ModelRequest {
    pub id: String,
    pub params: BTreeMap<String, f64>,
    /// Function slot name to expression text.
    pub functions: BTreeMap<String, String>,
    pub gauge: Option<Gauge>,
}

/// Builds a catalog model, applying overrides on top of the defaults.
pub fn build_model(req: &ModelRequest) -> Result<ModelSpec> {
    let entry = catalog()
        .into_iter()
        .find(|e| e.id == req.id)
        .ok_or_else(|| Error::Config(format!("unknown model `{}`", req.id)))?;
    for k in req.params.keys() {
        if !entry.params.iter().any(|(p, _)| p == k) {
            return Err(Error::Config(format!("model `{}` has no parameter `{k}`", entry.id)));
        }
    }
    for k in req.functions.keys() {
        if !entry.functions.iter().any(|(f, _, _)| f == k) {
            return Err(Error::Config(format!("model `{}` has no function slot `{k}`", entry.id)));
        }
    }
    if req.gauge.is_some() && entry.id != "constant-b" {
        return Err(Error::Config(format!("model `{}` has no gauge choice", entry.id)));
    }
    let p = |name: &str| {
        req.params
            .get(name)
            .copied()
            .or_else(|| entry.params.iter().find(|(k, _)| *k == name).map(|(_, v)| *v))
            .expect("declared parameter")
    };
    let mut scope = Scope::permissive();
    for (k, _) in &entry.params {
        scope = scope.param(k, p(k));
    }
    let mut fns = Vec::new();
    for (name, var, default) in &entry.functions {
        let text = req.functions.get(*name).map(String::as_str).unwrap_or(default);
        fns.push(FunctionDef::parse(name, &[var], text, &scope)?);
    }
    let f = |i: usize| fns[i].clone();
    match entry.id {
        "constant-b" => constant_b_model(p("b"), req.gauge.unwrap_or_default()),
        "undulator" => undulator_model(p("a"), p("b3")),
        "cyl-case1" => cyl_case1(f(0), f(1), f(2)),
        "cyl-case2" => cyl_case2(f(0), f(1), f(2), f(3)),
        "cyl-case3" => cyl_case3(f(0), f(1), f(2), f(3)),
        "family-a" => family_a(p("b"), [f(0), f(1)], [f(2), f(3), f(4), f(5)]),
        "family-b" => family_b([f(0), f(1)], [f(2), f(3), f(4), f(5)]),
        _ => unreachable!("catalog ids are matched above"),
    }
}

/// Derivative of a one-variable function at `t`.
pub(crate) fn derivative(f: &FunctionDef, t: f64) -> Result<f64> {
    Ok(f.eval(&[crate::numcore::Dual::variable(t)])?.eps)
}

/// Separated branches parsed over the chart coordinates and `h1, h2, h3`;
/// `true` marks a square-root branch.
pub(crate) fn hj_spec(scope: &Scope, coords: [&str; 3], branches: [(bool, &str); 3], integrals: [&str; 3]) -> Result<HJSpec> {
    let vars = [coords[0], coords[1], coords[2], "h1", "h2", "h3"];
    let mut out = Vec::with_capacity(3);
    for (sqrt, text) in branches {
        let b = Bound::compile(&parse_in(text, scope)?, &vars)?;
        out.push(if sqrt { Branch::Sqrt(b) } else { Branch::Exact(b) });
    }
    Ok(HJSpec { branches: out.try_into().expect("three branches"), integrals: integrals.map(str::to_string) })
}
