use super::field::{OperatorField, PhasePoint, VectorField, DIM};
use crate::error::Result;
use crate::numcore::SmallMatrix;

/// Components `T^i_{jk}` of a vector-valued 2-form.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros() -> Self {
        Tensor3 { data: vec![0.0; DIM * DIM * DIM] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * DIM + j) * DIM + k]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * DIM + j) * DIM + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `T(X, Y)^i = T^i_{jk} X^j Y^k`.
    pub fn contract(&self, x: &[f64; DIM], y: &[f64; DIM]) -> [f64; DIM] {
        std::array::from_fn(|i| {
            let mut s = 0.0;
            for j in 0..DIM {
                for k in 0..DIM {
                    s += self.get(i, j, k) * x[j] * y[k];
                }
            }
            s
        })
    }
}

fn nijenhuis_from(k: &SmallMatrix, dk: &[SmallMatrix; DIM]) -> Tensor3 {
    let mut t = Tensor3::zeros();
    for i in 0..DIM {
        for j in 0..DIM {
            for kk in 0..DIM {
                let mut s = 0.0;
                for l in 0..DIM {
                    s += k[(l, j)] * dk[l][(i, kk)] - k[(l, kk)] * dk[l][(i, j)];
                    s -= k[(i, l)] * (dk[j][(l, kk)] - dk[kk][(l, j)]);
                }
                t.set(i, j, kk, s);
            }
        }
    }
    t
}

fn haantjes_from(k: &SmallMatrix, tau: &Tensor3) -> Tensor3 {
    let k2 = *k * *k;
    let mut h = Tensor3::zeros();
    // tk^i_{jm} = τ^i_{lm} K^l_j
    let mut tk = Tensor3::zeros();
    for i in 0..DIM {
        for j in 0..DIM {
            for m in 0..DIM {
                let mut s = 0.0;
                for l in 0..DIM {
                    s += tau.get(i, l, m) * k[(l, j)];
                }
                tk.set(i, j, m, s);
            }
        }
    }
    // bsum^l_{jk} = τ^l_{mk} K^m_j + τ^l_{jm} K^m_k
    let mut bsum = Tensor3::zeros();
    for l in 0..DIM {
        for j in 0..DIM {
            for kk in 0..DIM {
                let mut s = 0.0;
                for m in 0..DIM {
                    s += tau.get(l, m, kk) * k[(m, j)] + tau.get(l, j, m) * k[(m, kk)];
                }
                bsum.set(l, j, kk, s);
            }
        }
    }
    for i in 0..DIM {
        for j in 0..DIM {
            for kk in 0..DIM {
                let mut s = 0.0;
                for m in 0..DIM {
                    s += k2[(i, m)] * tau.get(m, j, kk) + tk.get(i, j, m) * k[(m, kk)] - k[(i, m)] * bsum.get(m, j, kk);
                }
                h.set(i, j, kk, s);
            }
        }
    }
    h
}

/// Components of the Nijenhuis torsion in the coordinate basis.
pub fn nijenhuis_torsion(k: &OperatorField, pt: &PhasePoint) -> Result<Tensor3> {
    let (km, dk) = k.with_derivatives(pt)?;
    Ok(nijenhuis_from(&km, &dk))
}

/// Components of the Haantjes torsion in the coordinate basis.
pub fn haantjes_torsion(k: &OperatorField, pt: &PhasePoint) -> Result<Tensor3> {
    let (km, dk) = k.with_derivatives(pt)?;
    Ok(haantjes_from(&km, &nijenhuis_from(&km, &dk)))
}

/// Haantjes torsion with its normalization `max(1,‖K‖)³·max(1,‖∂K‖)`.
pub fn haantjes_scaled(k: &OperatorField, pt: &PhasePoint) -> Result<(Tensor3, f64)> {
    let (km, dk) = k.with_derivatives(pt)?;
    Ok((haantjes_from(&km, &nijenhuis_from(&km, &dk)), torsion_scale(&km, &dk)))
}

/// Haantjes torsion divided by `max(1,‖K‖)³·max(1,‖∂K‖)` (max-abs norms),
/// the natural size of its terms.
pub fn haantjes_residual(k: &OperatorField, pt: &PhasePoint) -> Result<f64> {
    let (h, scale) = haantjes_scaled(k, pt)?;
    Ok(h.max_abs() / scale)
}

/// Nijenhuis torsion divided by `max(1,‖K‖)·max(1,‖∂K‖)`.
pub fn nijenhuis_residual(k: &OperatorField, pt: &PhasePoint) -> Result<f64> {
    let (km, dk) = k.with_derivatives(pt)?;
    let t = nijenhuis_from(&km, &dk);
    let dn = dk.iter().fold(0.0f64, |m, d| m.max(d.norm_max()));
    Ok(t.max_abs() / (km.norm_max().max(1.0) * dn.max(1.0)))
}

fn torsion_scale(k: &SmallMatrix, dk: &[SmallMatrix; DIM]) -> f64 {
    let dn = dk.iter().fold(0.0f64, |m, d| m.max(d.norm_max()));
    k.norm_max().max(1.0).powi(3) * dn.max(1.0)
}

/// `[X,Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i`.
pub fn lie_bracket(x: &VectorField, y: &VectorField, pt: &PhasePoint) -> Result<[f64; DIM]> {
    let xv = x.eval(pt)?;
    let yv = y.eval(pt)?;
    let jx = x.jacobian(pt)?;
    let jy = y.jacobian(pt)?;
    Ok(std::array::from_fn(|i| (0..DIM).map(|j| xv[j] * jy[i][j] - yv[j] * jx[i][j]).sum()))
}
