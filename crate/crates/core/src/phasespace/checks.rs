use rand::Rng;
use serde::Serialize;

use super::field::{Composition, LinearCombination, OperatorField, PhasePoint, ScalarField, DIM};
use super::torsion::{haantjes_residual, haantjes_scaled};
use crate::error::Result;
use crate::exprlang::Expr;
use crate::numcore::{EigenResult, SmallMatrix};

/// The canonical symplectic matrix, `ω(X,Y) = Xᵀ J Y`.
pub fn canonical_j() -> SmallMatrix {
    let mut j = SmallMatrix::zeros(DIM, DIM);
    for i in 0..3 {
        j[(i, i + 3)] = 1.0;
        j[(i + 3, i)] = -1.0;
    }
    j
}

pub fn random_unit_vector<R: Rng>(rng: &mut R) -> [f64; DIM] {
    let v: [f64; DIM] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    v.map(|x| x / n)
}

/// A random polynomial of degree ≤ 2 in the canonical coordinates `x0..x5`.
pub fn random_polynomial<R: Rng>(rng: &mut R) -> ScalarField {
    let mut e = Expr::num(rng.gen_range(-1.0..1.0));
    for i in 0..DIM {
        let xi = Expr::var(&format!("x{i}"));
        e = e + rng.gen_range(-1.0..1.0) * xi.clone();
        let j = rng.gen_range(0..DIM);
        e = e + rng.gen_range(-0.5..0.5) * (xi * Expr::var(&format!("x{j}")));
    }
    ScalarField::from_expr("poly", &e, &CANONICAL_VARS).expect("polynomial in declared variables")
}

pub const CANONICAL_VARS: [&str; DIM] = ["x0", "x1", "x2", "x3", "x4", "x5"];

/// Largest `H_K(X,Y)` over random unit vector pairs, bounded below by the
/// component maximum, relative to the operator-norm scale.
fn contracted_haantjes<R: Rng>(k: &OperatorField, pt: &PhasePoint, trials: usize, rng: &mut R) -> Result<f64> {
    let (h, scale) = haantjes_scaled(k, pt)?;
    let mut worst = h.max_abs();
    for _ in 0..trials {
        let x = random_unit_vector(rng);
        let y = random_unit_vector(rng);
        let c = h.contract(&x, &y);
        worst = worst.max(c.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    Ok(worst / scale)
}

/// Residuals of the Abelian Haantjes-algebra axioms for a pair.
#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct AlgebraReport {
    pub haantjes_k1: f64,
    pub haantjes_k2: f64,
    /// `H_{fK1+gK2}` with random constant `f, g`.
    pub module_constant: f64,
    /// `H_{fK1+gK2}` with random polynomial `f, g` (worst of five pairs).
    pub module_polynomial: f64,
    /// `H_{K1K2}`.
    pub ring: f64,
    /// `‖K1K2 − K2K1‖ / max(1, ‖K1‖‖K2‖)`.
    pub commutator: f64,
}

impl AlgebraReport {
    pub fn max(&self) -> f64 {
        [self.haantjes_k1, self.haantjes_k2, self.module_constant, self.module_polynomial, self.ring, self.commutator]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn algebra_axiom_check<R: Rng>(
    k1: &OperatorField,
    k2: &OperatorField,
    pt: &PhasePoint,
    trials: usize,
    rng: &mut R,
) -> Result<AlgebraReport> {
    let haantjes_k1 = haantjes_residual(k1, pt)?;
    let haantjes_k2 = haantjes_residual(k2, pt)?;
    let f = ScalarField::constant(rng.gen_range(-2.0..2.0));
    let g = ScalarField::constant(rng.gen_range(-2.0..2.0));
    let comb = LinearCombination::field("fK1+gK2", vec![(f, k1.clone()), (g, k2.clone())]);
    let module_constant = contracted_haantjes(&comb, pt, trials, rng)?;
    let mut module_polynomial: f64 = 0.0;
    for _ in 0..5 {
        let f = random_polynomial(rng);
        let g = random_polynomial(rng);
        let comb = LinearCombination::field("fK1+gK2", vec![(f, k1.clone()), (g, k2.clone())]);
        module_polynomial = module_polynomial.max(contracted_haantjes(&comb, pt, trials, rng)?);
    }
    let prod = Composition::field("K1K2", k1.clone(), k2.clone());
    let ring = contracted_haantjes(&prod, pt, trials, rng)?;
    let a = k1.matrix(pt)?;
    let b = k2.matrix(pt)?;
    let commutator = (a * b - b * a).norm_max() / (a.norm_max() * b.norm_max()).max(1.0);
    Ok(AlgebraReport { haantjes_k1, haantjes_k2, module_constant, module_polynomial, ring, commutator })
}

/// `max |ω(X,KY) − ω(KX,Y)|` over random unit pairs together with
/// `‖JK − KᵀJ‖`, relative to `max(1, ‖K‖)`.
pub fn symplectic_compat<R: Rng>(k: &OperatorField, pt: &PhasePoint, trials: usize, rng: &mut R) -> Result<f64> {
    let km = k.matrix(pt)?;
    let j = canonical_j();
    let d = j * km - km.transpose() * j;
    let mut worst = d.norm_max();
    for _ in 0..trials {
        let x = random_unit_vector(rng);
        let y = random_unit_vector(rng);
        let ky = km.mul_vec(&y);
        let kx = km.mul_vec(&x);
        let jy = j.mul_vec(&y);
        let jky = j.mul_vec(&ky);
        let w1: f64 = x.iter().zip(&jky).map(|(a, b)| a * b).sum();
        let w2: f64 = kx.iter().zip(&jy).map(|(a, b)| a * b).sum();
        worst = worst.max((w1 - w2).abs());
    }
    Ok(worst / km.norm_max().max(1.0))
}

/// Spectrum of an operator at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData {
    pub eigen: EigenResult,
}

impl SpectralData {
    pub fn is_semisimple(&self) -> bool {
        self.eigen.is_semisimple()
    }

    /// (value, multiplicity) pairs in ascending order.
    pub fn values(&self) -> Vec<(f64, usize)> {
        self.eigen.eigenvalues.iter().map(|e| (e.value, e.multiplicity)).collect()
    }
}

pub fn eigen_spectrum(k: &OperatorField, pt: &PhasePoint, tol: f64) -> Result<SpectralData> {
    Ok(SpectralData { eigen: k.matrix(pt)?.eig_real(tol)? })
}
