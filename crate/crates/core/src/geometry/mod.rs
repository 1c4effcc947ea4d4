//! Configuration-space charts with diagonal metrics, vector potentials in the
//! gradient basis, and the curvilinear curl.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprlang::{Bound, Expr};
use crate::numcore::{Dual, Scalar};

/// A chart on the three-dimensional configuration space with a diagonal
/// covariant metric `g_ii` and domain constraints `c(q) > 0`.
#[derive(Clone, Debug)]
pub struct Chart {
    pub name: String,
    pub coords: [String; 3],
    pub metric: [Expr; 3],
    pub domain: Vec<Expr>,
    metric_b: [Bound; 3],
    domain_b: Vec<Bound>,
}

impl Chart {
    pub fn new(name: &str, coords: [&str; 3], metric: [Expr; 3], domain: Vec<Expr>) -> Result<Self> {
        let metric_b = [
            Bound::compile(&metric[0], &coords)?,
            Bound::compile(&metric[1], &coords)?,
            Bound::compile(&metric[2], &coords)?,
        ];
        let domain_b = domain.iter().map(|e| Bound::compile(e, &coords)).collect::<Result<Vec<_>>>()?;
        Ok(Chart {
            name: name.to_string(),
            coords: coords.map(|c| c.to_string()),
            metric,
            domain,
            metric_b,
            domain_b,
        })
    }

    pub fn cartesian() -> Self {
        Chart::new("cartesian", ["x", "y", "z"], [Expr::one(), Expr::one(), Expr::one()], vec![])
            .expect("constant metric")
    }

    /// Cylindrical `(r, phi, z)` with `g = diag[1, r², 1]` and `r > 0`.
    pub fn cylindrical() -> Self {
        let r = Expr::var("r");
        Chart::new("cylindrical", ["r", "phi", "z"], [Expr::one(), r.clone().powi(2), Expr::one()], vec![r])
            .expect("cylindrical metric")
    }

    /// Configuration and momentum names: `q…` then `p` + `q…`.
    pub fn phase_vars(&self) -> [String; 6] {
        std::array::from_fn(|i| if i < 3 { self.coords[i].clone() } else { format!("p{}", self.coords[i - 3]) })
    }

    pub fn coord_refs(&self) -> [&str; 3] {
        std::array::from_fn(|i| self.coords[i].as_str())
    }

    /// Covariant metric diagonal at `q`.
    pub fn metric_at<S: Scalar>(&self, q: &[S; 3]) -> Result<[S; 3]> {
        Ok([self.metric_b[0].eval(q)?, self.metric_b[1].eval(q)?, self.metric_b[2].eval(q)?])
    }

    /// Inverse metric diagonal `g^ii = 1/g_ii`.
    pub fn inverse_metric_at<S: Scalar>(&self, q: &[S; 3]) -> Result<[S; 3]> {
        let g = self.metric_at(q)?;
        for gi in &g {
            if gi.re() <= 0.0 {
                return Err(Error::Domain(format!("metric of chart `{}` not positive", self.name)));
            }
        }
        Ok(g.map(|gi| gi.recip()))
    }

    /// Smallest domain-constraint value at `q` (∞ when unconstrained).
    pub fn domain_margin(&self, q: &[f64; 3]) -> Result<f64> {
        let mut m = f64::INFINITY;
        for d in &self.domain_b {
            m = m.min(d.eval(q)?);
        }
        Ok(m)
    }

    pub fn check_domain(&self, q: &[f64; 3]) -> Result<()> {
        for (d, e) in self.domain_b.iter().zip(&self.domain) {
            if d.eval(q)? <= 0.0 {
                return Err(Error::Domain(format!("constraint {e} > 0 violated in chart `{}`", self.name)));
            }
        }
        Ok(())
    }
}

/// Scale factors `h_i = sqrt(g_ii)`.
pub fn scale_factors(chart: &Chart, q: &[f64; 3]) -> Result<[f64; 3]> {
    chart.check_domain(q)?;
    scale_factors_at(chart, q)
}

fn scale_factors_at<S: Scalar>(chart: &Chart, q: &[S; 3]) -> Result<[S; 3]> {
    let g = chart.metric_at(q)?;
    for gi in &g {
        if gi.re() <= 0.0 || !gi.is_finite() {
            return Err(Error::Domain(format!("metric of chart `{}` not positive", chart.name)));
        }
    }
    Ok(g.map(|gi| gi.sqrt()))
}

/// A vector potential `A = A_i ∇q^i`, optionally shifted by a gauge
/// gradient `∇χ`.
#[derive(Clone, Debug)]
pub struct VectorPotential {
    pub comps: [Expr; 3],
    bound: [Bound; 3],
    gauge: Option<Bound>,
}

impl VectorPotential {
    pub fn new(chart: &Chart, comps: [Expr; 3]) -> Result<Self> {
        let vars = chart.coord_refs();
        let bound = [
            Bound::compile(&comps[0], &vars)?,
            Bound::compile(&comps[1], &vars)?,
            Bound::compile(&comps[2], &vars)?,
        ];
        Ok(VectorPotential { comps, bound, gauge: None })
    }

    pub fn zero(chart: &Chart) -> Self {
        VectorPotential::new(chart, [Expr::zero(), Expr::zero(), Expr::zero()]).expect("constant potential")
    }

    /// The potential `A + ∇χ`.
    pub fn with_gauge(mut self, chart: &Chart, chi: &Expr) -> Result<Self> {
        self.gauge = Some(Bound::compile(chi, &chart.coord_refs())?);
        Ok(self)
    }

    /// Components `A_i` at `q`.
    pub fn eval<S: Scalar>(&self, q: &[S; 3]) -> Result<[S; 3]> {
        let mut a = [self.bound[0].eval(q)?, self.bound[1].eval(q)?, self.bound[2].eval(q)?];
        if let Some(chi) = &self.gauge {
            for (i, ai) in a.iter_mut().enumerate() {
                let qd: [Dual<S>; 3] =
                    std::array::from_fn(|k| if k == i { Dual::variable(q[k]) } else { Dual::constant(q[k]) });
                *ai = *ai + chi.eval(&qd)?.eps;
            }
        }
        Ok(a)
    }
}

/// Magnetic field components in the unit basis `(e_1, e_2, e_3)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MagneticField {
    pub components: [f64; 3],
}

impl MagneticField {
    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// `d[j][k] = ∂_j A_k`.
pub fn potential_jacobian<S: Scalar>(a: &VectorPotential, q: &[S; 3]) -> Result<[[S; 3]; 3]> {
    let mut d = [[S::zero(); 3]; 3];
    for (j, row) in d.iter_mut().enumerate() {
        let qd: [Dual<S>; 3] = std::array::from_fn(|k| if k == j { Dual::variable(q[k]) } else { Dual::constant(q[k]) });
        let v = a.eval(&qd)?;
        for k in 0..3 {
            row[k] = v[k].eps;
        }
    }
    Ok(d)
}

/// Unit-basis curl at any scalar type.
pub fn curl_at<S: Scalar>(chart: &Chart, a: &VectorPotential, q: &[S; 3]) -> Result<[S; 3]> {
    let h = scale_factors_at(chart, q)?;
    let d = potential_jacobian(a, q)?;
    Ok([
        (d[1][2] - d[2][1]) / (h[1] * h[2]),
        (d[2][0] - d[0][2]) / (h[0] * h[2]),
        (d[0][1] - d[1][0]) / (h[0] * h[1]),
    ])
}

/// `B = ∇ × A` in the unit basis of an orthogonal chart.
pub fn curl(chart: &Chart, a: &VectorPotential, q: &[f64; 3]) -> Result<MagneticField> {
    chart.check_domain(q)?;
    Ok(MagneticField { components: curl_at(chart, a, q)? })
}

/// Curvilinear divergence of `∇ × A`.
pub fn divergence_of_curl(chart: &Chart, a: &VectorPotential, q: &[f64; 3]) -> Result<f64> {
    chart.check_domain(q)?;
    let h = scale_factors_at(chart, q)?;
    let vol = h[0] * h[1] * h[2];
    let mut div = 0.0;
    for i in 0..3 {
        let qd: [Dual<f64>; 3] = std::array::from_fn(|k| if k == i { Dual::variable(q[k]) } else { Dual::constant(q[k]) });
        let hd = scale_factors_at(chart, &qd)?;
        let b = curl_at(chart, a, &qd)?;
        let flux = hd[0] * hd[1] * hd[2] / hd[i] * b[i];
        div += flux.eps;
    }
    Ok(div / vol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::{parse, parse_in, Scope};

    fn cart_potential(texts: [&str; 3]) -> VectorPotential {
        let scope = Scope::with_vars(&["x", "y", "z"]).param("b", 1.0);
        let comps = texts.map(|t| parse_in(t, &scope).unwrap());
        VectorPotential::new(&Chart::cartesian(), comps).unwrap()
    }

    #[test]
    fn zero_potential_has_zero_field() {
        let c = Chart::cartesian();
        let b = curl(&c, &VectorPotential::zero(&c), &[0.3, -1.0, 2.0]).unwrap();
        assert_eq!(b.components, [0.0; 3]);
    }

    #[test]
    fn symmetric_gauge_gives_unit_field() {
        let a = cart_potential(["-b*y/2", "b*x/2", "0"]);
        let b = curl(&Chart::cartesian(), &a, &[0.7, -0.2, 1.1]).unwrap();
        assert_eq!(b.components, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn cylindrical_field_and_scale_factors() {
        let c = Chart::cylindrical();
        assert_eq!(scale_factors(&c, &[2.0, 0.4, -1.0]).unwrap(), [1.0, 2.0, 1.0]);
        let s = Scope::with_vars(&["r", "phi", "z"]);
        let a = VectorPotential::new(&c, [Expr::zero(), parse_in("r^3", &s).unwrap(), parse_in("sin(r)", &s).unwrap()])
            .unwrap();
        let r: f64 = 1.3;
        let b = curl(&c, &a, &[r, 0.2, 0.5]).unwrap().components;
        assert!(b[0].abs() < 1e-15);
        assert!((b[1] + r.cos()).abs() < 1e-14);
        assert!((b[2] - 3.0 * r).abs() < 1e-14);
    }

    #[test]
    fn domain_violation() {
        let c = Chart::cylindrical();
        assert!(matches!(curl(&c, &VectorPotential::zero(&c), &[0.0, 0.0, 0.0]), Err(Error::Domain(_))));
        assert!(scale_factors(&c, &[-1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gauge_shift_and_divergence() {
        let c = Chart::cylindrical();
        let s = Scope::with_vars(&["r", "phi", "z"]);
        let a = VectorPotential::new(
            &c,
            [parse_in("z*r", &s).unwrap(), parse_in("r^2*cos(z)", &s).unwrap(), parse_in("r*sin(phi)", &s).unwrap()],
        )
        .unwrap();
        let q = [1.4, 0.3, -0.6];
        let b0 = curl(&c, &a, &q).unwrap().components;
        let shifted = a.clone().with_gauge(&c, &parse("r^2*sin(phi)*exp(z)").unwrap()).unwrap();
        let b1 = curl(&c, &shifted, &q).unwrap().components;
        for i in 0..3 {
            assert!((b0[i] - b1[i]).abs() < 1e-12);
        }
        assert!(divergence_of_curl(&c, &a, &q).unwrap().abs() < 1e-12);
    }
}
