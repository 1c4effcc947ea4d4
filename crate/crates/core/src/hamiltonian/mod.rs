//! Magnetic Hamiltonians, Poisson brackets, Haantjes chains and the two
//! constructive operator recipes.

use crate::error::{Error, Result};
use crate::exprlang::{Bound, Expr};
use crate::geometry::{Chart, VectorPotential};
use crate::phasespace::{FieldScalar, OperatorField, PhaseEval, PhasePoint, ScalarField, DIM};

/// `H = c·Σ g^ii (p_i + A_i)² + V` evaluated from chart, potential and `V`.
struct MinimalCoupling {
    chart: Chart,
    potential: VectorPotential,
    v: Bound,
    kinetic: f64,
}

impl PhaseEval for MinimalCoupling {
    fn outputs(&self) -> usize {
        1
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        let q = [x[0], x[1], x[2]];
        let ginv = self.chart.inverse_metric_at(&q)?;
        let a = self.potential.eval(&q)?;
        let mut t = S::zero();
        for i in 0..3 {
            let pi = x[3 + i] + a[i];
            t = t + ginv[i] * pi * pi;
        }
        out[0] = t * self.kinetic + self.v.eval(&q)?;
        Ok(())
    }
}

/// Kinetic momentum `Π_i = p_i + A_i`.
struct KineticMomentum {
    potential: VectorPotential,
    i: usize,
}

impl PhaseEval for KineticMomentum {
    fn outputs(&self) -> usize {
        1
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        out[0] = x[3 + self.i] + self.potential.eval(&[x[0], x[1], x[2]])?[self.i];
        Ok(())
    }
}

/// A natural Hamiltonian with magnetic coupling on a chart.
#[derive(Clone, Debug)]
pub struct HamiltonianSystem {
    pub chart: Chart,
    pub potential: VectorPotential,
    pub scalar_potential: Expr,
    /// Coefficient of the kinetic term: `½` for the Euclidean models, `1`
    /// for the families written as `g^ii Π_i²`.
    pub kinetic: f64,
    pub h: ScalarField,
    pub integrals: Vec<ScalarField>,
}

impl HamiltonianSystem {
    pub fn new(chart: Chart, potential: VectorPotential, scalar_potential: Expr, kinetic: f64) -> Result<Self> {
        let v = Bound::compile(&scalar_potential, &chart.coord_refs())?;
        let h = ScalarField::new(
            "H",
            MinimalCoupling { chart: chart.clone(), potential: potential.clone(), v, kinetic },
        );
        Ok(HamiltonianSystem { chart, potential, scalar_potential, kinetic, h, integrals: Vec::new() })
    }

    pub fn with_integral(mut self, f: ScalarField) -> Self {
        self.integrals.push(f);
        self
    }

    pub fn integral(&self, name: &str) -> Option<&ScalarField> {
        self.integrals.iter().find(|f| f.name == name)
    }

    pub fn phase_vars(&self) -> [String; DIM] {
        self.chart.phase_vars()
    }

    /// `Π_i` as a field.
    pub fn kinetic_momentum(&self, i: usize) -> ScalarField {
        let name = format!("Pi_{}", self.chart.coords[i]);
        ScalarField::new(&name, KineticMomentum { potential: self.potential.clone(), i })
    }

    /// The expanded expression `c·Σ (p_i + A_i)²/g_ii + V` in the phase variables.
    pub fn expanded_expr(&self) -> Expr {
        let vars = self.phase_vars();
        let mut e = Expr::zero();
        for i in 0..3 {
            let pi = Expr::var(&vars[3 + i]) + self.potential.comps[i].clone();
            e = e + pi.powi(2) / self.chart.metric[i].clone();
        }
        self.kinetic * e + self.scalar_potential.clone()
    }

    /// Field of the expanded expression, a second evaluation path for `H`.
    pub fn expanded_field(&self) -> Result<ScalarField> {
        let vars = self.phase_vars();
        let refs: [&str; DIM] = std::array::from_fn(|i| vars[i].as_str());
        ScalarField::from_expr("H_expanded", &self.expanded_expr(), &refs)
    }

    /// Scalar potential `U = c·g^ii A_i² + V` of the expanded Hamiltonian.
    pub fn induced_potential(&self, q: &[f64; 3]) -> Result<f64> {
        let ginv = self.chart.inverse_metric_at(q)?;
        let a = self.potential.eval(q)?;
        let v = Bound::compile(&self.scalar_potential, &self.chart.coord_refs())?.eval(q)?;
        Ok(self.kinetic * (0..3).map(|i| ginv[i] * a[i] * a[i]).sum::<f64>() + v)
    }

    /// Largest `|∂H/∂q^a|` over the points.
    pub fn ignorability(&self, a: usize, pts: &[PhasePoint]) -> Result<f64> {
        let mut m: f64 = 0.0;
        for pt in pts {
            m = m.max(self.h.partial(pt, a)?.abs());
        }
        Ok(m)
    }
}

/// `{F,G} = Σ_k (∂_{q^k}F ∂_{p_k}G − ∂_{p_k}F ∂_{q^k}G)`.
pub fn poisson_bracket(f: &ScalarField, g: &ScalarField, pt: &PhasePoint) -> Result<f64> {
    Ok(separable_involution(f, g, pt)?.iter().sum())
}

/// The per-index summands of the Poisson bracket.
pub fn separable_involution(f: &ScalarField, g: &ScalarField, pt: &PhasePoint) -> Result<[f64; 3]> {
    let df = f.gradient(pt)?;
    let dg = g.gradient(pt)?;
    Ok(std::array::from_fn(|k| df[k] * dg[k + 3] - df[k + 3] * dg[k]))
}

/// A Haantjes chain element `Kᵀ dH = dH_α`.
#[derive(Clone, Debug)]
pub struct ChainSpec {
    pub name: String,
    pub h: ScalarField,
    pub k: OperatorField,
    pub target: Option<ScalarField>,
}

impl ChainSpec {
    pub fn new(name: &str, h: ScalarField, k: OperatorField, target: Option<ScalarField>) -> Self {
        ChainSpec { name: name.to_string(), h, k, target }
    }
}

/// Closedness `max|∂_iα_j − ∂_jα_i|` of `α = Kᵀ dH` and exactness
/// `max|α − dH_α|`, each relative to `max(1, magnitude)`.
pub fn chain_residual(spec: &ChainSpec, pt: &PhasePoint) -> Result<(f64, f64)> {
    let (k, dk) = spec.k.with_derivatives(pt)?;
    let dh = spec.h.gradient(pt)?;
    let hess = spec.h.hessian(pt)?;
    let alpha: [f64; DIM] = std::array::from_fn(|j| (0..DIM).map(|i| k[(i, j)] * dh[i]).sum());
    // dalpha[l][j] = ∂_l α_j
    let mut dalpha = [[0.0; DIM]; DIM];
    let mut size: f64 = 1.0;
    for l in 0..DIM {
        for j in 0..DIM {
            let mut s = 0.0;
            for i in 0..DIM {
                let a = dk[l][(i, j)] * dh[i];
                let b = k[(i, j)] * hess[l][i];
                size = size.max(a.abs()).max(b.abs());
                s += a + b;
            }
            dalpha[l][j] = s;
        }
    }
    let mut closed: f64 = 0.0;
    for i in 0..DIM {
        for j in 0..i {
            closed = closed.max((dalpha[i][j] - dalpha[j][i]).abs());
        }
    }
    let exact = match &spec.target {
        Some(t) => {
            let dt = t.gradient(pt)?;
            let scale = alpha.iter().chain(dt.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
            (0..DIM).map(|j| (alpha[j] - dt[j]).abs()).fold(0.0, f64::max) / scale
        }
        None => 0.0,
    };
    Ok((closed / size, exact))
}

/// Diagonal operator with `λ_i = ∂_{p_i}H_α / ∂_{p_i}H` on both blocks.
struct SeparableOperator {
    h: ScalarField,
    ha: ScalarField,
}

impl PhaseEval for SeparableOperator {
    fn outputs(&self) -> usize {
        DIM * DIM
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = S::zero());
        for i in 0..3 {
            let d = self.h.partial(x, 3 + i)?;
            if d.re() == 0.0 {
                return Err(Error::SingularPoint(format!("dH/dp{} vanishes", i + 1)));
            }
            let l = self.ha.partial(x, 3 + i)? / d;
            out[i * DIM + i] = l;
            out[(i + 3) * DIM + i + 3] = l;
        }
        Ok(())
    }
}

/// The chain operator of a separable pair.
pub fn build_k_separable(h: &ScalarField, ha: &ScalarField) -> OperatorField {
    let singular = (0..3).map(|i| h.partial_field(3 + i)).collect();
    OperatorField::new(
        &format!("K[{}]", ha.name),
        SeparableOperator { h: h.clone(), ha: ha.clone() },
        singular,
    )
}

/// `g^{aa} Π_a`.
struct IgnorableSpeed {
    chart: Chart,
    potential: VectorPotential,
    a: usize,
}

impl PhaseEval for IgnorableSpeed {
    fn outputs(&self) -> usize {
        1
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        let q = [x[0], x[1], x[2]];
        let ginv = self.chart.inverse_metric_at(&q)?;
        out[0] = ginv[self.a] * (x[3 + self.a] + self.potential.eval(&q)?[self.a]);
        Ok(())
    }
}

struct IgnorableOperator {
    speed: ScalarField,
    a: usize,
}

impl PhaseEval for IgnorableOperator {
    fn outputs(&self) -> usize {
        DIM * DIM
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = S::zero());
        let v = self.speed.eval(x)?;
        if v.re() == 0.0 {
            return Err(Error::SingularPoint(format!("{} vanishes", self.speed.name)));
        }
        let l = v.recip();
        out[self.a * DIM + self.a] = l;
        out[(self.a + 3) * DIM + self.a + 3] = l;
        Ok(())
    }
}

/// Tolerance on `|∂H/∂q^a|` for a coordinate to count as ignorable.
pub const IGNORABLE_TOL: f64 = 1e-10;

/// `K_a = (g^{aa}Π_a)⁻¹ (∂_{q^a}⊗dq^a + ∂_{p_a}⊗dp_a)` for an ignorable
/// coordinate, tested at the given points.
pub fn build_k_ignorable(sys: &HamiltonianSystem, a: usize, pts: &[PhasePoint]) -> Result<OperatorField> {
    let dev = sys.ignorability(a, pts)?;
    if dev > IGNORABLE_TOL {
        return Err(Error::NotIgnorable(a, dev));
    }
    let speed = ScalarField::new(
        &format!("g^{a}{a}*Pi_{}", sys.chart.coords[a]),
        IgnorableSpeed { chart: sys.chart.clone(), potential: sys.potential.clone(), a },
    );
    Ok(OperatorField::new(
        &format!("K_{}", sys.chart.coords[a]),
        IgnorableOperator { speed: speed.clone(), a },
        vec![speed],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::{parse_in, Scope};
    use crate::phasespace::CANONICAL_VARS;

    fn field(text: &str) -> ScalarField {
        let e = parse_in(text, &Scope::with_vars(&CANONICAL_VARS).param("b", 1.5)).unwrap();
        ScalarField::from_expr(text, &e, &CANONICAL_VARS).unwrap()
    }

    #[test]
    fn canonical_pair_and_antisymmetry() {
        let pt = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(poisson_bracket(&ScalarField::coordinate(0), &ScalarField::coordinate(3), &pt).unwrap(), 1.0);
        let h = field("x3^2+x0*x4");
        assert_eq!(separable_involution(&h, &h, &pt).unwrap(), [0.0; 3]);
        assert_eq!(
            separable_involution(&ScalarField::coordinate(3), &ScalarField::coordinate(4), &pt).unwrap(),
            [0.0; 3]
        );
    }

    #[test]
    fn identity_chain_is_exact() {
        let h = field("sin(x0)*x3^2+x1*x5");
        let spec = ChainSpec::new("I", h.clone(), OperatorField::identity(), Some(h));
        assert_eq!(chain_residual(&spec, &[0.3, 0.1, -0.4, 1.0, 0.5, 0.2]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn separable_recipe_on_landau_chart() {
        let h = field("((x3-b*x1)^2+x4^2+x5^2)/2");
        let k = build_k_separable(&h, &ScalarField::coordinate(3));
        let pt = [0.2, 0.7, -0.1, 2.0, 0.3, 0.4];
        let m = k.matrix(&pt).unwrap();
        let l = 1.0 / (2.0 - 1.5 * 0.7);
        assert!((m[(0, 0)] - l).abs() < 1e-15 && (m[(3, 3)] - l).abs() < 1e-15);
        assert_eq!(m.off_diagonal_max(), 0.0);
        assert_eq!((m[(1, 1)], m[(5, 5)]), (0.0, 0.0));
        let same = build_k_separable(&h, &h).matrix(&pt).unwrap();
        assert!((same - crate::numcore::SmallMatrix::identity(6)).norm_max() < 1e-15);
    }

    #[test]
    fn ignorable_recipe() {
        let c = Chart::cartesian();
        let sys = HamiltonianSystem::new(c.clone(), VectorPotential::zero(&c), Expr::zero(), 0.5).unwrap();
        let pts = [[0.1, 0.2, 0.3, 2.0, 1.0, 1.0]];
        let m = build_k_ignorable(&sys, 0, &pts).unwrap().matrix(&pts[0]).unwrap();
        assert_eq!((m[(0, 0)], m[(3, 3)], m[(1, 1)]), (0.5, 0.5, 0.0));
        let v = crate::exprlang::parse_in("x^2", &Scope::with_vars(&["x", "y", "z"])).unwrap();
        let sys = HamiltonianSystem::new(c.clone(), VectorPotential::zero(&c), v, 0.5).unwrap();
        assert!(matches!(build_k_ignorable(&sys, 0, &pts), Err(Error::NotIgnorable(0, _))));
    }
}
