//! Stäckel matrices, AKN Hamiltonians, Stäckel-derived Haantjes operators,
//! classical Stäckel metrics and the separation equations.

pub mod builtin;

use std::sync::Arc;

pub use builtin::{case3_remark, gsm1, sm1, sm2, sm3, sm3_classical, sm4};

use crate::error::{Error, Result};
use crate::exprlang::{Bound, FunctionDef};
use crate::numcore::{Scalar, SmallMatrix};
use crate::phasespace::{FieldScalar, OperatorField, PhaseEval, PhasePoint, ScalarField, DIM};

/// Threshold on `|det S|` below which the matrix counts as singular.
pub const STACKEL_EPS: f64 = 1e-12;

/// Stäckel functions of the classical form `f_k = κ(½p_k² + W_k(q^k))`.
#[derive(Clone, Debug)]
pub struct ClassicalForm {
    pub kappa: f64,
    pub w: [FunctionDef; 3],
}

/// A Stäckel matrix with row `i` in `q^i` only, and Stäckel functions
/// `f_k(q^k, p_k)`.
#[derive(Clone, Debug)]
pub struct StackelSpec {
    pub name: String,
    /// Names of `(q¹,q²,q³,p₁,p₂,p₃)` in the separation chart.
    pub vars: [String; DIM],
    pub s: [[FunctionDef; 3]; 3],
    pub f: [FunctionDef; 3],
    pub classical: Option<ClassicalForm>,
    s_b: [[Bound; 3]; 3],
    f_b: [Bound; 3],
}

fn compile_single(def: &FunctionDef) -> Result<Bound> {
    let v = def.require_single_var()?;
    Bound::compile(&def.body, &[v])
}

impl StackelSpec {
    /// Validates the row discipline: every entry declares exactly one
    /// variable and every Stäckel function declares `(q^k, p_k)`.
    pub fn new(name: &str, vars: [&str; DIM], s: [[FunctionDef; 3]; 3], f: [FunctionDef; 3]) -> Result<Self> {
        let mut rows = Vec::with_capacity(3);
        for row in &s {
            let r = [compile_single(&row[0])?, compile_single(&row[1])?, compile_single(&row[2])?];
            rows.push(r);
        }
        let s_b: [[Bound; 3]; 3] = rows.try_into().expect("three rows");
        let mut fs = Vec::with_capacity(3);
        for fk in &f {
            if fk.vars.len() != 2 {
                return Err(Error::Config(format!(
                    "Stäckel function `{}` must declare (q, p), declares {} variable(s)",
                    fk.name,
                    fk.vars.len()
                )));
            }
            let v: Vec<&str> = fk.vars.iter().map(|s| s.as_str()).collect();
            fs.push(Bound::compile(&fk.body, &v)?);
        }
        let f_b: [Bound; 3] = fs.try_into().expect("three functions");
        Ok(StackelSpec { name: name.to_string(), vars: vars.map(|v| v.to_string()), s, f, classical: None, s_b, f_b })
    }

    pub fn with_classical(mut self, c: ClassicalForm) -> Result<Self> {
        for w in &c.w {
            w.require_single_var()?;
        }
        self.classical = Some(c);
        Ok(self)
    }

    /// The same matrix with different Stäckel functions.
    pub fn with_functions(&self, f: [FunctionDef; 3]) -> Result<Self> {
        let refs: [&str; DIM] = std::array::from_fn(|i| self.vars[i].as_str());
        StackelSpec::new(&self.name, refs, self.s.clone(), f)
    }

    pub fn var_refs(&self) -> [&str; DIM] {
        std::array::from_fn(|i| self.vars[i].as_str())
    }

    pub fn matrix_at<S: Scalar>(&self, q: &[S; 3]) -> Result<[[S; 3]; 3]> {
        let mut m = [[S::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.s_b[i][j].eval(&[q[i]])?;
            }
        }
        Ok(m)
    }

    pub fn matrix(&self, q: &[f64; 3]) -> Result<SmallMatrix> {
        Ok(SmallMatrix::from_rows(&self.matrix_at(q)?))
    }

    /// `f_k(q^k, p_k)`.
    pub fn functions_at<S: Scalar>(&self, x: &[S; DIM]) -> Result<[S; 3]> {
        Ok([self.f_b[0].eval(&[x[0], x[3]])?, self.f_b[1].eval(&[x[1], x[4]])?, self.f_b[2].eval(&[x[2], x[5]])?])
    }

    /// Cofactors `S̃_{jk}` of the elements `S_{kj}` and `det S`.
    pub fn cofactors_at<S: Scalar>(&self, q: &[S; 3]) -> Result<([[S; 3]; 3], S)> {
        Ok(adjugate(&self.matrix_at(q)?))
    }

    pub fn cofactor_data(&self, q: &[f64; 3]) -> Result<CofactorData> {
        let (tilde, det) = self.cofactors_at(q)?;
        Ok(CofactorData { matrix: self.matrix_at(q)?, tilde, det })
    }
}

/// `adj(m)` (so `adj[j][k]` is the cofactor of `m[k][j]`) and `det m`, by
/// explicit 2×2 minors.
pub fn adjugate<S: Scalar>(m: &[[S; 3]; 3]) -> ([[S; 3]; 3], S) {
    let cof = |r: usize, c: usize| {
        let (r1, r2, c1, c2) = ((r + 1) % 3, (r + 2) % 3, (c + 1) % 3, (c + 2) % 3);
        m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
    };
    let adj: [[S; 3]; 3] = std::array::from_fn(|j| std::array::from_fn(|k| cof(k, j)));
    let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
    (adj, det)
}

/// Cofactors at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct CofactorData {
    pub matrix: [[f64; 3]; 3],
    pub tilde: [[f64; 3]; 3],
    pub det: f64,
}

impl CofactorData {
    /// `max |Σ_k S_{ik} S̃_{kj} − δ_ij det S|` and the same for `S̃·S`,
    /// relative to `max(1, |S|·|S̃|)`.
    pub fn identity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { self.det } else { 0.0 };
                let mut a = 0.0;
                let mut b = 0.0;
                for k in 0..3 {
                    a += self.matrix[i][k] * self.tilde[k][j];
                    b += self.tilde[i][k] * self.matrix[k][j];
                    scale = scale
                        .max((self.matrix[i][k] * self.tilde[k][j]).abs())
                        .max((self.tilde[i][k] * self.matrix[k][j]).abs());
                }
                worst = worst.max((a - d).abs()).max((b - d).abs());
            }
        }
        worst / scale
    }
}

fn singular(spec: &str) -> Error {
    Error::SingularStackel(spec.to_string())
}

/// `H_j = Σ_k S̃_{jk} f_k / det S`.
struct AknHamiltonian {
    spec: Arc<StackelSpec>,
    j: usize,
}

impl PhaseEval for AknHamiltonian {
    fn outputs(&self) -> usize {
        1
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        let (tilde, det) = self.spec.cofactors_at(&[x[0], x[1], x[2]])?;
        if det.re().abs() < STACKEL_EPS {
            return Err(singular(&self.spec.name));
        }
        let f = self.spec.functions_at(x)?;
        let mut h = S::zero();
        for k in 0..3 {
            h = h + tilde[self.j][k] * f[k];
        }
        out[0] = h / det;
        Ok(())
    }
}

/// The AKN Hamiltonians as fields.
pub fn akn_fields(spec: &StackelSpec) -> [ScalarField; 3] {
    let s = Arc::new(spec.clone());
    std::array::from_fn(|j| ScalarField::new(&format!("H{}", j + 1), AknHamiltonian { spec: s.clone(), j }))
}

/// `(H_1, H_2, H_3)` at a point.
pub fn akn_hamiltonians(spec: &StackelSpec, pt: &PhasePoint) -> Result<[f64; 3]> {
    let fields = akn_fields(spec);
    Ok([fields[0].value(pt)?, fields[1].value(pt)?, fields[2].value(pt)?])
}

/// `K_j = Σ_r (S̃_{jr}/S̃_{1r}) (∂_{q^r}⊗dq^r + ∂_{p_r}⊗dp_r)`.
struct StackelOperator {
    spec: Arc<StackelSpec>,
    j: usize,
}

impl PhaseEval for StackelOperator {
    fn outputs(&self) -> usize {
        DIM * DIM
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = S::zero());
        let (tilde, _) = self.spec.cofactors_at(&[x[0], x[1], x[2]])?;
        for r in 0..3 {
            let l = if self.j == 0 {
                S::one()
            } else {
                if tilde[0][r].re().abs() < STACKEL_EPS {
                    return Err(singular(&self.spec.name));
                }
                tilde[self.j][r] / tilde[0][r]
            };
            out[r * DIM + r] = l;
            out[(r + 3) * DIM + r + 3] = l;
        }
        Ok(())
    }
}

/// First-row cofactor `S̃_{1r}` as a field.
struct FirstRowCofactor {
    spec: Arc<StackelSpec>,
    r: usize,
}

impl PhaseEval for FirstRowCofactor {
    fn outputs(&self) -> usize {
        1
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        out[0] = self.spec.cofactors_at(&[x[0], x[1], x[2]])?.0[0][self.r];
        Ok(())
    }
}

/// The Stäckel Haantjes operator `K_j` (`j` zero-based; `K_1 = I`).
pub fn stackel_haantjes(spec: &StackelSpec, j: usize) -> Result<OperatorField> {
    if j >= 3 {
        return Err(Error::Dimension(format!("Stäckel operator index {j} out of range")));
    }
    let s = Arc::new(spec.clone());
    let singular_set = if j == 0 {
        vec![]
    } else {
        (0..3)
            .map(|r| ScalarField::new(&format!("S~1{}", r + 1), FirstRowCofactor { spec: s.clone(), r }))
            .collect()
    };
    Ok(OperatorField::new(&format!("{}:K{}", spec.name, j + 1), StackelOperator { spec: s, j }, singular_set))
}

/// Evaluates `K_j` at a point, mapping any vanishing cofactor to
/// `SingularStackel`.
pub fn stackel_matrix(spec: &StackelSpec, j: usize, pt: &PhasePoint) -> Result<SmallMatrix> {
    stackel_haantjes(spec, j)?.matrix(pt).map_err(|e| match e {
        Error::SingularPoint(_) => singular(&spec.name),
        other => other,
    })
}

/// Tolerance for the block comparison in [`project_to_base`].
pub const PROJECTION_TOL: f64 = 1e-12;

/// The configuration block of an operator whose momentum block repeats it
/// and whose mixed blocks vanish.
pub fn project_to_base(k: &OperatorField, pt: &PhasePoint) -> Result<SmallMatrix> {
    let m = k.matrix(pt)?;
    let scale = m.norm_max().max(1.0);
    let mut base = SmallMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            let qq = m[(i, j)];
            let dev = (qq - m[(i + 3, j + 3)]).abs().max(m[(i, j + 3)].abs()).max(m[(i + 3, j)].abs());
            if dev > PROJECTION_TOL * scale {
                return Err(Error::NotProjectable(format!("{} at entry ({i},{j}) deviates by {dev:e}", k.name)));
            }
            base[(i, j)] = qq;
        }
    }
    Ok(base)
}

/// Inverse metric diagonal and potential of a classical Stäckel system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalMetric {
    /// `g^{jj} = S̃_{1j}/det S`.
    pub inverse_metric: [f64; 3],
    /// `V = Σ_j g^{jj} W_j`.
    pub potential: f64,
    /// Overall factor `κ` with `H_1 = κ(½ g^{jj}p_j² + V)`.
    pub kappa: f64,
}

pub fn classical_stackel_metric(spec: &StackelSpec, q: &[f64; 3]) -> Result<ClassicalMetric> {
    let c = spec
        .classical
        .as_ref()
        .ok_or_else(|| Error::NotClassicalForm(spec.name.clone()))?;
    let (tilde, det) = spec.cofactors_at(q)?;
    if det.abs() < STACKEL_EPS {
        return Err(singular(&spec.name));
    }
    let g: [f64; 3] = std::array::from_fn(|j| tilde[0][j] / det);
    let mut v = 0.0;
    for j in 0..3 {
        v += g[j] * c.w[j].eval(&[q[j]])?;
    }
    Ok(ClassicalMetric { inverse_metric: g, potential: v, kappa: c.kappa })
}

/// `max_k |Σ_j S_{kj} H_j − f_k(q^k, p_k)|`.
pub fn verify_separation_equations(spec: &StackelSpec, hams: &[ScalarField; 3], pt: &PhasePoint) -> Result<f64> {
    let q = [pt[0], pt[1], pt[2]];
    let m = spec.matrix_at(&q)?;
    let (_, det) = adjugate(&m);
    if det.abs() < STACKEL_EPS {
        return Err(singular(&spec.name));
    }
    let h = [hams[0].value(pt)?, hams[1].value(pt)?, hams[2].value(pt)?];
    let f = spec.functions_at(pt)?;
    Ok((0..3)
        .map(|k| ((0..3).map(|j| m[k][j] * h[j]).sum::<f64>() - f[k]).abs())
        .fold(0.0, f64::max))
}
