//! Cartesian operators built from the kinetic momenta and the first
//! derivatives of the vector potential.

use crate::error::{Error, Result};
use crate::geometry::{potential_jacobian, VectorPotential};
use crate::phasespace::{FieldScalar, OperatorField, PhaseEval, ScalarField, DIM};

/// Shape of a magnetic operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MagneticShape {
    R1,
    R2,
    R3,
    /// `M/Λ_z`, the rotation-adapted operator.
    K4,
    /// `M/(aΛ_z − 2r²Π_z)`, the helix-adapted operator with pitch `a`.
    K5(u64),
}

/// `prefactor · shape(Π, ∂A)` on Cartesian phase space.
struct MagneticOperator {
    shape: MagneticShape,
    potential: VectorPotential,
    prefactor: Option<ScalarField>,
}

fn set<S: Copy>(m: &mut [S], i: usize, j: usize, v: S) {
    m[i * DIM + j] = v;
}

impl PhaseEval for MagneticOperator {
    fn outputs(&self) -> usize {
        DIM * DIM
    }

    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = S::zero());
        let q = [x[0], x[1], x[2]];
        let a = self.potential.eval(&q)?;
        // d[j][i] = ∂_j A_i
        let d = potential_jacobian(&self.potential, &q)?;
        let (px, py, pz) = (x[3] + a[0], x[4] + a[1], x[5] + a[2]);
        let (xx, yy) = (x[0], x[1]);
        let one = S::one();
        let denom = match self.shape {
            MagneticShape::R1 => {
                set(out, 0, 0, one);
                set(out, 3, 3, one);
                set(out, 3, 1, d[0][1]);
                set(out, 3, 2, d[0][2]);
                set(out, 4, 0, -d[0][1]);
                set(out, 5, 0, -d[0][2]);
                None
            }
            MagneticShape::R2 => {
                set(out, 1, 1, one);
                set(out, 4, 4, one);
                set(out, 3, 1, -d[1][0]);
                set(out, 4, 0, d[1][0]);
                set(out, 4, 2, d[1][2]);
                set(out, 5, 1, -d[1][2]);
                None
            }
            MagneticShape::R3 => {
                set(out, 2, 2, one);
                set(out, 5, 5, one);
                set(out, 3, 2, -d[2][0]);
                set(out, 4, 2, -d[2][1]);
                set(out, 5, 0, d[2][0]);
                set(out, 5, 1, d[2][1]);
                None
            }
            MagneticShape::K4 => {
                let lz = xx * py - yy * px;
                let (x2, y2, xy) = (xx * xx, yy * yy, xx * yy);
                let f = -lz + xy * (d[0][0] - d[1][1]) - x2 * d[1][0] + y2 * d[0][1];
                let g = yy * (yy * d[0][2] - xx * d[1][2]);
                let h = xx * (xx * d[1][2] - yy * d[0][2]);
                set(out, 0, 0, y2);
                set(out, 0, 1, -xy);
                set(out, 1, 0, -xy);
                set(out, 1, 1, x2);
                set(out, 3, 1, f);
                set(out, 3, 2, g);
                set(out, 3, 3, y2);
                set(out, 3, 4, -xy);
                set(out, 4, 0, -f);
                set(out, 4, 2, h);
                set(out, 4, 3, -xy);
                set(out, 4, 4, x2);
                set(out, 5, 0, -g);
                set(out, 5, 1, -h);
                Some(lz)
            }
            MagneticShape::K5(bits) => {
                let ap = f64::from_bits(bits);
                let lz = xx * py - yy * px;
                let (x2, y2, xy) = (xx * xx, yy * yy, xx * yy);
                let r2 = x2 + y2;
                let f = (xx * d[2][0] * ap + yy * d[2][1] * ap
                    + (xy * (d[0][0] - d[1][1]) + (y2 - x2) * d[0][1] - lz) * 2.0)
                    * (ap / 2.0);
                let g = yy * d[2][2] * (0.5 * ap * ap) - r2 * d[2][0] * ap + y2 * d[0][2] * ap
                    - xy * d[1][2] * ap
                    - yy * r2 * d[0][0] * 2.0
                    + xx * r2 * d[0][1] * 2.0
                    + r2 * py * 2.0;
                let h = -(xx * d[2][2] * (0.5 * ap * ap)) - r2 * d[2][1] * ap + x2 * d[1][2] * ap
                    - xy * d[0][2] * ap
                    + xx * r2 * d[1][1] * 2.0
                    - yy * r2 * d[0][1] * 2.0
                    - r2 * px * 2.0;
                let rows: [[S; 3]; 3] = [
                    [y2 * ap, -xy * ap, yy * r2 * 2.0],
                    [-xy * ap, x2 * ap, -(xx * r2 * 2.0)],
                    [yy * (ap * ap / 2.0), -(xx * (ap * ap / 2.0)), r2 * ap],
                ];
                for i in 0..3 {
                    for j in 0..3 {
                        set(out, i, j, rows[i][j]);
                        set(out, i + 3, j + 3, rows[j][i]);
                    }
                }
                set(out, 3, 1, f);
                set(out, 3, 2, g);
                set(out, 4, 0, -f);
                set(out, 4, 2, h);
                set(out, 5, 0, -g);
                set(out, 5, 1, -h);
                Some(lz * ap - r2 * pz * 2.0)
            }
        };
        let mut scale = match &self.prefactor {
            Some(p) => p.eval(x)?,
            None => S::one(),
        };
        if let Some(dn) = denom {
            if dn.re() == 0.0 {
                return Err(Error::SingularPoint("operator denominator vanishes".into()));
            }
            scale = scale / dn;
        }
        for o in out.iter_mut() {
            *o = *o * scale;
        }
        Ok(())
    }
}

/// `Λ_z = xΠ_y − yΠ_x`, `aΛ_z − 2r²Π_z` and the kinetic momenta as fields.
struct MomentumCombination {
    potential: VectorPotential,
    kind: Combination,
}

#[derive(Clone, Copy)]
enum Combination {
    Pi(usize),
    Lz,
    Helix(f64),
}

impl PhaseEval for MomentumCombination {
    fn outputs(&self) -> usize {
        1
    }
    fn eval<S: FieldScalar>(&self, x: &[S; DIM], out: &mut [S]) -> Result<()> {
        let a = self.potential.eval(&[x[0], x[1], x[2]])?;
        let pi: [S; 3] = std::array::from_fn(|i| x[3 + i] + a[i]);
        let lz = x[0] * pi[1] - x[1] * pi[0];
        out[0] = match self.kind {
            Combination::Pi(i) => pi[i],
            Combination::Lz => lz,
            Combination::Helix(ap) => lz * ap - (x[0] * x[0] + x[1] * x[1]) * pi[2] * 2.0,
        };
        Ok(())
    }
}

fn combination(name: &str, potential: &VectorPotential, kind: Combination) -> ScalarField {
    ScalarField::new(name, MomentumCombination { potential: potential.clone(), kind })
}

/// Kinetic momentum `Π_i` of a Cartesian potential.
pub fn kinetic_momentum(potential: &VectorPotential, i: usize) -> ScalarField {
    combination(["Pi_x", "Pi_y", "Pi_z"][i], potential, Combination::Pi(i))
}

/// `Λ_z = xΠ_y − yΠ_x`.
pub fn angular_momentum_z(potential: &VectorPotential) -> ScalarField {
    combination("Lambda_z", potential, Combination::Lz)
}

/// `R_i` scaled by an optional prefactor, with extra singular-set functions.
pub fn r_operator(
    name: &str,
    i: usize,
    potential: &VectorPotential,
    prefactor: Option<ScalarField>,
    singular: Vec<ScalarField>,
) -> OperatorField {
    let shape = [MagneticShape::R1, MagneticShape::R2, MagneticShape::R3][i];
    OperatorField::new(name, MagneticOperator { shape, potential: potential.clone(), prefactor }, singular)
}

/// The rotation-adapted operator, singular where `Λ_z = 0`.
pub fn k4_operator(potential: &VectorPotential) -> OperatorField {
    OperatorField::new(
        "K4",
        MagneticOperator { shape: MagneticShape::K4, potential: potential.clone(), prefactor: None },
        vec![angular_momentum_z(potential)],
    )
}

/// The helix-adapted operator with pitch `a`, singular where
/// `aΛ_z − 2r²Π_z = 0`.
pub fn k5_operator(potential: &VectorPotential, a: f64) -> OperatorField {
    OperatorField::new(
        "K5",
        MagneticOperator { shape: MagneticShape::K5(a.to_bits()), potential: potential.clone(), prefactor: None },
        vec![combination("a*Lambda_z-2r^2*Pi_z", potential, Combination::Helix(a))],
    )
}

/// The cylindrical-web operator `L_i` as a constant diagonal.
pub fn l_operator(i: usize) -> OperatorField {
    let mut d = [0.0; DIM];
    d[i] = 1.0;
    d[i + 3] = 1.0;
    OperatorField::constant_diagonal(&format!("L{}", i + 1), d)
}
