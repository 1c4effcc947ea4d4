//! Implicit-midpoint integration of Hamilton's equations with conservation
//! monitoring.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::numcore::SmallMatrix;
use crate::phasespace::{PhasePoint, ScalarField, DIM};

/// Step size, horizon and Newton settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_final: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { dt: 1e-3, t_final: 10.0, newton_tol: 1e-12, max_newton_iters: 50 }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(Error::Config(format!("dt must be finite and nonzero, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final * self.dt >= 0.0) {
            return Err(Error::Config(format!("t_final {} is not reachable with dt {}", self.t_final, self.dt)));
        }
        if !(self.newton_tol > 0.0) || self.max_newton_iters == 0 {
            return Err(Error::Config("newton_tol and max_newton_iters must be positive".into()));
        }
        Ok((self.t_final / self.dt).round() as usize)
    }
}

/// Times, states and monitored integral values.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub integral_names: Vec<String>,
    /// `integrals[k][s]` is integral `k` at step `s`; NaN where it could
    /// not be evaluated.
    pub integrals: Vec<Vec<f64>>,
    /// Steps at which the Newton solve fell back to fixed-point iteration.
    pub fallback_steps: Vec<usize>,
}

/// `(∂H/∂p, −∂H/∂q)`.
pub fn hamiltonian_vector_field(h: &ScalarField, x: &PhasePoint) -> Result<[f64; DIM]> {
    let g = h.gradient(x)?;
    Ok(std::array::from_fn(|i| if i < 3 { g[i + 3] } else { -g[i - 3] }))
}

/// Jacobian of the Hamiltonian vector field, `J·∇²H`.
fn vector_field_jacobian(h: &ScalarField, x: &PhasePoint) -> Result<SmallMatrix> {
    let hess = h.hessian(x)?;
    let mut a = SmallMatrix::zeros(DIM, DIM);
    for i in 0..DIM {
        for j in 0..DIM {
            a[(i, j)] = if i < 3 { hess[i + 3][j] } else { -hess[i - 3][j] };
        }
    }
    Ok(a)
}

fn midpoint(a: &PhasePoint, b: &PhasePoint) -> PhasePoint {
    std::array::from_fn(|i| 0.5 * (a[i] + b[i]))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Outcome of one implicit-midpoint step.
struct StepResult {
    x: PhasePoint,
    fallback: bool,
}

fn solve_step(h: &ScalarField, x0: &PhasePoint, dt: f64, cfg: &IntegratorConfig, index: usize) -> Result<StepResult> {
    let diverged = |message: String| Error::NewtonDivergence { step: index, message };
    let f0 = hamiltonian_vector_field(h, x0)?;
    let mut x: PhasePoint = std::array::from_fn(|i| x0[i] + dt * f0[i]);
    for _ in 0..cfg.max_newton_iters {
        let m = midpoint(x0, &x);
        let f = hamiltonian_vector_field(h, &m)?;
        let r: Vec<f64> = (0..DIM).map(|i| x[i] - x0[i] - dt * f[i]).collect();
        let mut jac = vector_field_jacobian(h, &m)?.scale(-0.5 * dt);
        for i in 0..DIM {
            jac[(i, i)] += 1.0;
        }
        let delta = match jac.solve(&r) {
            Ok(d) => d,
            Err(_) => return fixed_point(h, x0, x, dt, cfg, index),
        };
        for i in 0..DIM {
            x[i] -= delta[i];
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(diverged("non-finite iterate".into()));
        }
        if norm(&delta) <= cfg.newton_tol * norm(&x).max(1.0) {
            return Ok(StepResult { x, fallback: false });
        }
    }
    Err(diverged(format!("no convergence in {} Newton iterations", cfg.max_newton_iters)))
}

fn fixed_point(
    h: &ScalarField,
    x0: &PhasePoint,
    mut x: PhasePoint,
    dt: f64,
    cfg: &IntegratorConfig,
    index: usize,
) -> Result<StepResult> {
    for _ in 0..cfg.max_newton_iters * 20 {
        let f = hamiltonian_vector_field(h, &midpoint(x0, &x))?;
        let next: PhasePoint = std::array::from_fn(|i| x0[i] + dt * f[i]);
        let d: Vec<f64> = (0..DIM).map(|i| next[i] - x[i]).collect();
        x = next;
        if !x.iter().all(|v| v.is_finite()) {
            break;
        }
        if norm(&d) <= cfg.newton_tol * norm(&x).max(1.0) {
            return Ok(StepResult { x, fallback: true });
        }
    }
    Err(Error::NewtonDivergence { step: index, message: "Jacobian singular and fixed-point iteration failed".into() })
}

/// One implicit-midpoint step of size `dt` from `x`.
pub fn step(h: &ScalarField, x: &PhasePoint, dt: f64, cfg: &IntegratorConfig) -> Result<PhasePoint> {
    Ok(solve_step(h, x, dt, cfg, 0)?.x)
}

/// Integrates `H` from `x0` and records `integrals` at every step;
/// `inside` decides whether a state lies in the chart domain.
pub fn integrate_with(
    h: &ScalarField,
    integrals: &[ScalarField],
    inside: &dyn Fn(&PhasePoint) -> bool,
    x0: &PhasePoint,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let n = cfg.validate()?;
    if !inside(x0) {
        return Err(Error::DomainExit(0));
    }
    let mut traj = Trajectory {
        times: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
        integral_names: integrals.iter().map(|f| f.name.clone()).collect(),
        integrals: vec![Vec::with_capacity(n + 1); integrals.len()],
        fallback_steps: Vec::new(),
    };
    let record = |traj: &mut Trajectory, t: f64, x: PhasePoint| {
        traj.times.push(t);
        traj.states.push(x);
        for (k, f) in integrals.iter().enumerate() {
            traj.integrals[k].push(f.value(&x).unwrap_or(f64::NAN));
        }
    };
    record(&mut traj, 0.0, *x0);
    let mut x = *x0;
    for s in 1..=n {
        let r = solve_step(h, &x, cfg.dt, cfg, s)?;
        if r.fallback {
            traj.fallback_steps.push(s);
        }
        x = r.x;
        if !inside(&x) {
            return Err(Error::DomainExit(s));
        }
        record(&mut traj, s as f64 * cfg.dt, x);
    }
    Ok(traj)
}

/// Integrates `H` alone.
pub fn integrate(h: &ScalarField, x0: &PhasePoint, cfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_with(h, &[h.clone()], &|x| x.iter().all(|v| v.is_finite()), x0, cfg)
}

/// Integrates a catalog model, monitoring `H` and every declared integral.
pub fn integrate_model(model: &ModelSpec, x0: &PhasePoint, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let mut fields = vec![model.h().clone()];
    fields.extend(model.system.integrals.iter().cloned());
    let chart = &model.system.chart;
    let inside = |x: &PhasePoint| {
        x.iter().all(|v| v.is_finite()) && chart.domain_margin(&[x[0], x[1], x[2]]).map_or(false, |m| m > 0.0)
    };
    integrate_with(model.h(), &fields, &inside, x0, cfg)
}

/// Drift of one monitored integral.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Drift {
    pub name: String,
    /// `max |F(x_t) − F(x_0)|` over the finite values.
    pub max_drift: f64,
    /// Least-squares slope of `F(x_t) − F(x_0)` against `t`.
    pub slope: f64,
    /// Steps at which `F` could not be evaluated.
    pub skipped: usize,
}

/// Per-integral drift statistics.
pub fn conservation_report(traj: &Trajectory) -> Result<Vec<Drift>> {
    if traj.times.is_empty() {
        return Err(Error::Config("empty trajectory".into()));
    }
    let mut out = Vec::with_capacity(traj.integral_names.len());
    for (name, vals) in traj.integral_names.iter().zip(&traj.integrals) {
        let f0 = vals[0];
        let pairs: Vec<(f64, f64)> =
            traj.times.iter().zip(vals).filter(|(_, v)| v.is_finite()).map(|(t, v)| (*t, v - f0)).collect();
        let max_drift = pairs.iter().fold(0.0f64, |m, (_, d)| m.max(d.abs()));
        let n = pairs.len() as f64;
        let slope = if pairs.len() < 2 || !f0.is_finite() {
            0.0
        } else {
            let tm = pairs.iter().map(|p| p.0).sum::<f64>() / n;
            let dm = pairs.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pairs.iter().map(|(t, d)| (t - tm) * (d - dm)).sum();
            let sxx: f64 = pairs.iter().map(|(t, _)| (t - tm) * (t - tm)).sum();
            if sxx > 0.0 { sxy / sxx } else { 0.0 }
        };
        let max_drift = if f0.is_finite() { max_drift } else { f64::NAN };
        out.push(Drift { name: name.clone(), max_drift, slope, skipped: vals.len() - pairs.len() });
    }
    Ok(out)
}

/// Writes `t,q1,q2,q3,p1,p2,p3,<integrals>` with 17 significant digits.
pub fn write_csv<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    let mut header = String::from("t,q1,q2,q3,p1,p2,p3");
    for n in &traj.integral_names {
        header.push(',');
        header.push_str(n);
    }
    writeln!(w, "{header}").map_err(io)?;
    for (s, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        let mut line = format!("{t:.16e}");
        for v in x.iter().chain(traj.integrals.iter().map(|col| &col[s])) {
            line.push_str(&format!(",{v:.16e}"));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;

    fn field(text: &str) -> ScalarField {
        let vars = ["q1", "q2", "q3", "p1", "p2", "p3"];
        ScalarField::from_expr("H", &parse(text).unwrap(), &vars).unwrap()
    }

    #[test]
    fn free_particle_vector_field() {
        let v = hamiltonian_vector_field(&field("p1^2/2"), &[0.3, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(v, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn dilation_vector_field() {
        let x = [0.7, 0.0, 0.0, -1.3, 0.0, 0.0];
        let v = hamiltonian_vector_field(&field("q1*p1"), &x).unwrap();
        assert!((v[0] - 0.7).abs() < 1e-15 && (v[3] - 1.3).abs() < 1e-15);
    }

    #[test]
    fn free_flight_is_a_straight_line() {
        let cfg = IntegratorConfig { dt: 0.1, t_final: 5.0, ..Default::default() };
        let x0 = [0.0, 1.0, -1.0, 0.5, -0.25, 2.0];
        let traj = integrate(&field("(p1^2 + p2^2 + p3^2)/2"), &x0, &cfg).unwrap();
        assert_eq!(traj.states.len(), 51);
        let (t, x) = (traj.times[50], traj.states[50]);
        for i in 0..3 {
            assert!((x[i] - (x0[i] + t * x0[i + 3])).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_has_header_and_precision() {
        let cfg = IntegratorConfig { dt: 0.5, t_final: 1.0, ..Default::default() };
        let traj = integrate(&field("p1^2/2"), &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0], &cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,q1,q2,q3,p1,p2,p3,H"));
        let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
        assert_eq!(row.len(), 8);
        assert_eq!(row[0], "5.0000000000000000e-1");
        assert_eq!(row[1], "5.0000000000000000e-1");
    }

    #[test]
    fn bad_config_is_rejected() {
        let cfg = IntegratorConfig { dt: 0.0, ..Default::default() };
        assert!(matches!(integrate(&field("p1^2"), &[0.0; 6], &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn non_integral_drifts() {
        let cfg = IntegratorConfig { dt: 0.01, t_final: 1.0, ..Default::default() };
        let h = field("p1^2/2");
        let traj = integrate_with(&h, &[h.clone(), field("q1")], &|_| true, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0], &cfg)
            .unwrap();
        let d = conservation_report(&traj).unwrap();
        assert!(d[0].max_drift < 1e-14);
        assert!((d[1].max_drift - 1.0).abs() < 1e-12 && (d[1].slope - 1.0).abs() < 1e-9);
    }
}
