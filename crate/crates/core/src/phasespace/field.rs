use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exprlang::{Bound, Expr};
use crate::numcore::{Dual, HyperDual, Scalar, SmallMatrix};

/// Phase-space dimension.
pub const DIM: usize = 6;

/// Coordinates `(q¹,q²,q³,p₁,p₂,p₃)`; the chart is implied by the owning model.
pub type PhasePoint = [f64; DIM];

/// Absolute threshold below which a singular-set function counts as zero.
pub const SINGULAR_EPS: f64 = 1e-12;

/// Object-safe evaluation at every scalar type the derivative engine uses.
pub trait PhaseFunction: Send + Sync {
    fn outputs(&self) -> usize;
    fn eval_real(&self, x: &[f64; DIM], out: &mut [f64]) -> Result<()>;
    fn eval_dual(&self, x: &[Dual<f64>; DIM], out: &mut [Dual<f64>]) -> Result<()>;
    fn eval_dual2(&self, x: &[Dual<Dual<f64>>; DIM], out: &mut [Dual<Dual<f64>>]) -> Result<()>;
    fn eval_hyper(&self, x: &[HyperDual; DIM], out: &mut [HyperDual]) -> Result<()>;
}

/// Generic evaluation; every implementor is a [`PhaseFunction`].
pub trait PhaseEval: Send + Sync {
    fn outputs(&self) -> usize;
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()>;
}

impl<T: PhaseEval> PhaseFunction for T {
    fn outputs(&self) -> usize {
        PhaseEval::outputs(self)
    }
    fn eval_real(&self, x: &[f64; DIM], out: &mut [f64]) -> Result<()> {
        self.eval(x, out)
    }
    fn eval_dual(&self, x: &[Dual<f64>; DIM], out: &mut [Dual<f64>]) -> Result<()> {
        self.eval(x, out)
    }
    fn eval_dual2(&self, x: &[Dual<Dual<f64>>; DIM], out: &mut [Dual<Dual<f64>>]) -> Result<()> {
        self.eval(x, out)
    }
    fn eval_hyper(&self, x: &[HyperDual; DIM], out: &mut [HyperDual]) -> Result<()> {
        self.eval(x, out)
    }
}

/// Scalars that can drive a type-erased [`PhaseFunction`], including one or
/// two extra levels of dual nesting for derivatives of inner fields.
pub trait FieldScalar: Scalar {
    fn call(f: &dyn PhaseFunction, x: &[Self; DIM], out: &mut [Self]) -> Result<()>;
    fn call_lifted(f: &dyn PhaseFunction, x: &[Dual<Self>; DIM], out: &mut [Dual<Self>]) -> Result<()>;
    fn call_lifted2(f: &dyn PhaseFunction, x: &[Dual<Dual<Self>>; DIM], out: &mut [Dual<Dual<Self>>]) -> Result<()>;
}

impl FieldScalar for f64 {
    fn call(f: &dyn PhaseFunction, x: &[f64; DIM], out: &mut [f64]) -> Result<()> {
        f.eval_real(x, out)
    }
    fn call_lifted(f: &dyn PhaseFunction, x: &[Dual<f64>; DIM], out: &mut [Dual<f64>]) -> Result<()> {
        f.eval_dual(x, out)
    }
    fn call_lifted2(f: &dyn PhaseFunction, x: &[Dual<Dual<f64>>; DIM], out: &mut [Dual<Dual<f64>>]) -> Result<()> {
        f.eval_dual2(x, out)
    }
}

impl<S: FieldScalar> FieldScalar for Dual<S> {
    fn call(f: &dyn PhaseFunction, x: &[Self; DIM], out: &mut [Self]) -> Result<()> {
        S::call_lifted(f, x, out)
    }
    fn call_lifted(f: &dyn PhaseFunction, x: &[Dual<Self>; DIM], out: &mut [Dual<Self>]) -> Result<()> {
        S::call_lifted2(f, x, out)
    }
    fn call_lifted2(_: &dyn PhaseFunction, _: &[Dual<Dual<Self>>; DIM], _: &mut [Dual<Dual<Self>>]) -> Result<()> {
        Err(Error::DepthExceeded)
    }
}

impl FieldScalar for HyperDual {
    fn call(f: &dyn PhaseFunction, x: &[HyperDual; DIM], out: &mut [HyperDual]) -> Result<()> {
        f.eval_hyper(x, out)
    }
    fn call_lifted(_: &dyn PhaseFunction, _: &[Dual<Self>; DIM], _: &mut [Dual<Self>]) -> Result<()> {
        Err(Error::DepthExceeded)
    }
    fn call_lifted2(_: &dyn PhaseFunction, _: &[Dual<Dual<Self>>; DIM], _: &mut [Dual<Dual<Self>>]) -> Result<()> {
        Err(Error::DepthExceeded)
    }
}

/// Seeds direction `k` on top of `x`.
pub fn seed<S: Scalar>(x: &[S; DIM], k: usize) -> [Dual<S>; DIM] {
    std::array::from_fn(|i| if i == k { Dual::variable(x[i]) } else { Dual::constant(x[i]) })
}

pub fn lift<S: Scalar>(x: &[f64; DIM]) -> [S; DIM] {
    std::array::from_fn(|i| S::from_f64(x[i]))
}

/// Compiles expressions in the six phase variables.
#[derive(Clone, Debug)]
pub struct ExprFields {
    comps: Vec<Bound>,
}

impl ExprFields {
    pub fn new(exprs: &[Expr], vars: &[&str; DIM]) -> Result<Self> {
        let comps = exprs.iter().map(|e| Bound::compile(e, vars)).collect::<Result<Vec<_>>>()?;
        Ok(ExprFields { comps })
    }
}

impl PhaseEval for ExprFields {
    fn outputs(&self) -> usize {
        self.comps.len()
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = c.eval(x)?;
        }
        Ok(())
    }
}

/// Sparse operator with expression entries.
#[derive(Clone, Debug)]
pub struct ExprOperator {
    entries: Vec<(usize, usize, Bound)>,
}

impl ExprOperator {
    pub fn new(entries: &[(usize, usize, Expr)], vars: &[&str; DIM]) -> Result<Self> {
        let entries = entries
            .iter()
            .map(|(i, j, e)| Ok((*i, *j, Bound::compile(e, vars)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExprOperator { entries })
    }

    /// Diagonal operator with the given (possibly zero) diagonal.
    pub fn diagonal(diag: &[Expr; DIM], vars: &[&str; DIM]) -> Result<Self> {
        let entries: Vec<(usize, usize, Expr)> = diag
            .iter()
            .enumerate()
            .filter(|(_, e)| **e != Expr::Num(0.0))
            .map(|(i, e)| (i, i, e.clone()))
            .collect();
        ExprOperator::new(&entries, vars)
    }
}

impl PhaseEval for ExprOperator {
    fn outputs(&self) -> usize {
        DIM * DIM
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = S::zero());
        for (i, j, e) in &self.entries {
            out[i * DIM + j] = e.eval(x)?;
        }
        Ok(())
    }
}

/// A scalar function on phase space.
#[derive(Clone)]
pub struct ScalarField {
    pub name: String,
    f: Arc<dyn PhaseFunction>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.name)
    }
}

impl ScalarField {
    pub fn new(name: &str, f: impl PhaseFunction + 'static) -> Self {
        assert_eq!(f.outputs(), 1, "scalar field must have one output");
        ScalarField { name: name.to_string(), f: Arc::new(f) }
    }

    pub fn from_arc(name: &str, f: Arc<dyn PhaseFunction>) -> Self {
        ScalarField { name: name.to_string(), f }
    }

    pub fn from_expr(name: &str, e: &Expr, vars: &[&str; DIM]) -> Result<Self> {
        Ok(ScalarField::new(name, ExprFields::new(std::slice::from_ref(e), vars)?))
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::new(&format!("{c}"), ExprFields { comps: vec![Bound::Num(c)] })
    }

    /// The canonical coordinate with index `k`.
    pub fn coordinate(k: usize) -> Self {
        ScalarField::new(&format!("x{k}"), ExprFields { comps: vec![Bound::Var(k)] })
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn function(&self) -> &dyn PhaseFunction {
        &*self.f
    }

    pub fn eval<S: FieldScalar>(&self, x: &[S; DIM]) -> Result<S> {
        let mut out = [S::zero()];
        S::call(&*self.f, x, &mut out)?;
        Ok(out[0])
    }

    pub fn value(&self, x: &PhasePoint) -> Result<f64> {
        self.eval(x)
    }

    /// Exact gradient at any derivative depth the dispatch supports.
    pub fn gradient<S: FieldScalar>(&self, x: &[S; DIM]) -> Result<[S; DIM]> {
        let mut g = [S::zero(); DIM];
        let mut out = [Dual::constant(S::zero())];
        for (k, gk) in g.iter_mut().enumerate() {
            S::call_lifted(&*self.f, &seed(x, k), &mut out)?;
            *gk = out[0].eps;
        }
        Ok(g)
    }

    /// Partial derivative along coordinate `k`.
    pub fn partial<S: FieldScalar>(&self, x: &[S; DIM], k: usize) -> Result<S> {
        let mut out = [Dual::constant(S::zero())];
        S::call_lifted(&*self.f, &seed(x, k), &mut out)?;
        Ok(out[0].eps)
    }

    /// Hessian by hyper-dual evaluation.
    pub fn hessian(&self, x: &PhasePoint) -> Result<[[f64; DIM]; DIM]> {
        let mut h = [[0.0; DIM]; DIM];
        let mut out = [HyperDual::default()];
        for i in 0..DIM {
            for j in i..DIM {
                let xs: [HyperDual; DIM] = std::array::from_fn(|k| {
                    HyperDual::new(x[k], if k == i { 1.0 } else { 0.0 }, if k == j { 1.0 } else { 0.0 }, 0.0)
                });
                self.f.eval_hyper(&xs, &mut out)?;
                h[i][j] = out[0].d12;
                h[j][i] = out[0].d12;
            }
        }
        Ok(h)
    }

    /// The field `∂F/∂x^k` as a new field.
    pub fn partial_field(&self, k: usize) -> ScalarField {
        ScalarField::new(&format!("d{}/dx{k}", self.name), Partial { f: self.clone(), k })
    }
}

struct Partial {
    f: ScalarField,
    k: usize,
}

impl PhaseEval for Partial {
    fn outputs(&self) -> usize {
        1
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        out[0] = self.f.partial(x, self.k)?;
        Ok(())
    }
}

/// A vector field on phase space.
#[derive(Clone)]
pub struct VectorField {
    pub name: String,
    f: Arc<dyn PhaseFunction>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({})", self.name)
    }
}

impl VectorField {
    pub fn new(name: &str, f: impl PhaseFunction + 'static) -> Self {
        assert_eq!(f.outputs(), DIM, "vector field must have six outputs");
        VectorField { name: name.to_string(), f: Arc::new(f) }
    }

    pub fn from_exprs(name: &str, comps: &[Expr; DIM], vars: &[&str; DIM]) -> Result<Self> {
        Ok(VectorField::new(name, ExprFields::new(comps, vars)?))
    }

    pub fn eval<S: FieldScalar>(&self, x: &[S; DIM]) -> Result<[S; DIM]> {
        let mut out = [S::zero(); DIM];
        S::call(&*self.f, x, &mut out)?;
        Ok(out)
    }

    /// Jacobian `J[i][k] = ∂_k X^i`.
    pub fn jacobian(&self, x: &PhasePoint) -> Result<[[f64; DIM]; DIM]> {
        let mut jac = [[0.0; DIM]; DIM];
        let mut out = [Dual::constant(0.0); DIM];
        for k in 0..DIM {
            self.f.eval_dual(&seed(x, k), &mut out)?;
            for i in 0..DIM {
                jac[i][k] = out[i].eps;
            }
        }
        Ok(jac)
    }
}

/// A (1,1)-tensor field with a declared singular set.
#[derive(Clone)]
pub struct OperatorField {
    pub name: String,
    f: Arc<dyn PhaseFunction>,
    /// Functions whose zero set is excluded from the domain.
    pub singular: Vec<ScalarField>,
}

impl fmt::Debug for OperatorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorField({})", self.name)
    }
}

impl OperatorField {
    pub fn new(name: &str, f: impl PhaseFunction + 'static, singular: Vec<ScalarField>) -> Self {
        assert_eq!(f.outputs(), DIM * DIM, "operator field must have 36 outputs");
        OperatorField { name: name.to_string(), f: Arc::new(f), singular }
    }

    pub fn from_exprs(name: &str, entries: &[(usize, usize, Expr)], vars: &[&str; DIM], singular: Vec<ScalarField>) -> Result<Self> {
        Ok(OperatorField::new(name, ExprOperator::new(entries, vars)?, singular))
    }

    pub fn identity() -> Self {
        let entries: Vec<(usize, usize, Expr)> = (0..DIM).map(|i| (i, i, Expr::one())).collect();
        OperatorField::from_exprs("I", &entries, &["x0", "x1", "x2", "x3", "x4", "x5"], vec![]).expect("constant entries")
    }

    /// The constant operator `diag(d)`.
    pub fn constant_diagonal(name: &str, d: [f64; DIM]) -> Self {
        let entries: Vec<(usize, usize, Expr)> =
            (0..DIM).filter(|i| d[*i] != 0.0).map(|i| (i, i, Expr::Num(d[i]))).collect();
        OperatorField::from_exprs(name, &entries, &["x0", "x1", "x2", "x3", "x4", "x5"], vec![]).expect("constant entries")
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn with_singular(mut self, s: Vec<ScalarField>) -> Self {
        self.singular.extend(s);
        self
    }

    pub fn function(&self) -> &dyn PhaseFunction {
        &*self.f
    }

    /// Smallest |s(x)| over the singular-set functions (∞ when none).
    pub fn singular_margin(&self, x: &PhasePoint) -> f64 {
        self.singular
            .iter()
            .map(|s| s.value(x).map(f64::abs).unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_nonsingular(&self, x: &PhasePoint) -> Result<()> {
        for s in &self.singular {
            let v = s.value(x)?;
            if v.abs() < SINGULAR_EPS {
                return Err(Error::SingularPoint(format!("{} vanishes for {}", s.name, self.name)));
            }
        }
        Ok(())
    }

    /// Row-major entries at any scalar type.
    pub fn eval<S: FieldScalar>(&self, x: &[S; DIM]) -> Result<[S; DIM * DIM]> {
        let mut out = [S::zero(); DIM * DIM];
        S::call(&*self.f, x, &mut out)?;
        Ok(out)
    }

    pub fn matrix(&self, x: &PhasePoint) -> Result<SmallMatrix> {
        self.check_nonsingular(x)?;
        let out = self.eval(x)?;
        Ok(SmallMatrix::from_row_slice(DIM, DIM, &out))
    }

    /// `K` and `∂_l K` for every coordinate `l`.
    pub fn with_derivatives(&self, x: &PhasePoint) -> Result<(SmallMatrix, [SmallMatrix; DIM])> {
        self.check_nonsingular(x)?;
        let mut k = SmallMatrix::zeros(DIM, DIM);
        let mut dk = [SmallMatrix::zeros(DIM, DIM); DIM];
        let mut out = [Dual::constant(0.0); DIM * DIM];
        for l in 0..DIM {
            self.f.eval_dual(&seed(x, l), &mut out)?;
            for i in 0..DIM {
                for j in 0..DIM {
                    k[(i, j)] = out[i * DIM + j].re;
                    dk[l][(i, j)] = out[i * DIM + j].eps;
                }
            }
        }
        Ok((k, dk))
    }
}

/// `Σ f_i K_i` with scalar-field coefficients.
pub struct LinearCombination {
    terms: Vec<(ScalarField, OperatorField)>,
}

impl LinearCombination {
    pub fn field(name: &str, terms: Vec<(ScalarField, OperatorField)>) -> OperatorField {
        let singular = terms.iter().flat_map(|(_, k)| k.singular.clone()).collect();
        OperatorField::new(name, LinearCombination { terms }, singular)
    }
}

impl PhaseEval for LinearCombination {
    fn outputs(&self) -> usize {
        DIM * DIM
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = S::zero());
        for (f, k) in &self.terms {
            let c = f.eval(x)?;
            let m = k.eval(x)?;
            for (o, v) in out.iter_mut().zip(m.iter()) {
                *o = *o + c * *v;
            }
        }
        Ok(())
    }
}

/// The composition `A·B`.
pub struct Composition {
    a: OperatorField,
    b: OperatorField,
}

impl Composition {
    pub fn field(name: &str, a: OperatorField, b: OperatorField) -> OperatorField {
        let singular = a.singular.iter().chain(b.singular.iter()).cloned().collect();
        OperatorField::new(name, Composition { a, b }, singular)
    }
}

impl PhaseEval for Composition {
    fn outputs(&self) -> usize {
        DIM * DIM
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        let a = self.a.eval(x)?;
        let b = self.b.eval(x)?;
        for i in 0..DIM {
            for j in 0..DIM {
                let mut s = S::zero();
                for k in 0..DIM {
                    s = s + a[i * DIM + k] * b[k * DIM + j];
                }
                out[i * DIM + j] = s;
            }
        }
        Ok(())
    }
}
