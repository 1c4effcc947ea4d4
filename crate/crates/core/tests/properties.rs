//! Invariants checked over randomly generated inputs.

use omegah::dynamics::{step, IntegratorConfig};
use omegah::exprlang::parse;
use omegah::hamiltonian::poisson_bracket;
use omegah::models::{build_model, chart_point_report, Gauge, ModelRequest, ModelSpec};
use omegah::phasespace::{PhasePoint, ScalarField, DIM};
use omegah::stackel::adjugate;
use proptest::prelude::*;

fn model(id: &str) -> ModelSpec {
    build_model(&ModelRequest { id: id.into(), ..Default::default() }).expect("catalog model")
}

fn point(m: &ModelSpec, seed: u64) -> PhasePoint {
    m.sample_points(1, seed).expect("admissible sample")[0]
}

const VARS: [&str; DIM] = ["x", "y", "z", "px", "py", "pz"];

/// `J` with `{F, G} = ∇Fᵀ J ∇G`.
fn j_mul(v: &[f64; DIM]) -> [f64; DIM] {
    std::array::from_fn(|i| if i < 3 { v[i + 3] } else { -v[i - 3] })
}

fn dot(a: &[f64; DIM], b: &[f64; DIM]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &[[f64; DIM]; DIM], v: &[f64; DIM]) -> [f64; DIM] {
    std::array::from_fn(|i| dot(&m[i], v))
}

/// Cubic polynomial in the phase variables with the given coefficients.
fn cubic(name: &str, c: &[f64]) -> ScalarField {
    let text = format!(
        "{} + {}*x*px + {}*y^2*pz + {}*z*py^2 + {}*x*y*z + {}*px*py*pz + {}*x^3 + {}*pz^2*y",
        c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]
    );
    ScalarField::from_expr(name, &parse(&text).expect("polynomial"), &VARS).expect("field")
}

/// `∇{G, K} = ∇²G J ∇K − ∇²K J ∇G`.
fn bracket_gradient(g: &ScalarField, k: &ScalarField, x: &PhasePoint) -> [f64; DIM] {
    let (dg, dk) = (g.gradient(x).unwrap(), k.gradient(x).unwrap());
    let (hg, hk) = (g.hessian(x).unwrap(), k.hessian(x).unwrap());
    let a = mat_vec(&hg, &j_mul(&dk));
    let b = mat_vec(&hk, &j_mul(&dg));
    std::array::from_fn(|i| a[i] - b[i])
}

/// Central-difference Jacobian of `f` at `x`.
fn fd_jacobian(f: impl Fn(&PhasePoint) -> PhasePoint, x: &PhasePoint, h: f64) -> [[f64; DIM]; DIM] {
    let mut m = [[0.0; DIM]; DIM];
    for j in 0..DIM {
        let (mut xp, mut xm) = (*x, *x);
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        for i in 0..DIM {
            m[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    m
}

/// `max |MᵀJM − J|`.
fn symplectic_defect(m: &[[f64; DIM]; DIM]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..DIM {
        for b in 0..DIM {
            let col_b: [f64; DIM] = std::array::from_fn(|i| m[i][b]);
            let jmb = j_mul(&col_b);
            let lhs: f64 = (0..DIM).map(|i| m[i][a] * jmb[i]).sum();
            let e: [f64; DIM] = std::array::from_fn(|i| if i == b { 1.0 } else { 0.0 });
            worst = worst.max((lhs - j_mul(&e)[a]).abs());
        }
    }
    worst
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 8)
}

fn phase_point() -> impl Strategy<Value = [f64; DIM]> {
    prop::array::uniform6(-1.5..1.5f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric(a in coeffs(), b in coeffs(), x in phase_point()) {
        let (f, g) = (cubic("F", &a), cubic("G", &b));
        let fg = poisson_bracket(&f, &g, &x).unwrap();
        let gf = poisson_bracket(&g, &f, &x).unwrap();
        prop_assert!((fg + gf).abs() <= 1e-12 * (1.0 + fg.abs()));
    }

    #[test]
    fn bracket_matches_gradient_form(a in coeffs(), b in coeffs(), x in phase_point()) {
        let (f, g) = (cubic("F", &a), cubic("G", &b));
        let direct = poisson_bracket(&f, &g, &x).unwrap();
        let oracle = dot(&f.gradient(&x).unwrap(), &j_mul(&g.gradient(&x).unwrap()));
        prop_assert!((direct - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()));
    }

    #[test]
    fn jacobi_identity(a in coeffs(), b in coeffs(), c in coeffs(), x in phase_point()) {
        let (f, g, k) = (cubic("F", &a), cubic("G", &b), cubic("K", &c));
        let term = |u: &ScalarField, v: &ScalarField, w: &ScalarField| {
            dot(&u.gradient(&x).unwrap(), &j_mul(&bracket_gradient(v, w, &x)))
        };
        let parts = [term(&f, &g, &k), term(&g, &k, &f), term(&k, &f, &g)];
        let scale = parts.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
        prop_assert!(parts.iter().sum::<f64>().abs() <= 1e-11 * scale);
    }

    #[test]
    fn cofactor_identity(m in prop::array::uniform3(prop::array::uniform3(-3.0..3.0f64))) {
        let (adj, det) = adjugate(&m);
        let oracle = nalgebra::Matrix3::from_fn(|i, j| m[i][j]).determinant();
        prop_assert!((det - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()));
        let scale = m.iter().flatten().map(|v| v.abs()).fold(1.0f64, f64::max).powi(3);
        for i in 0..3 {
            for j in 0..3 {
                let s_adj: f64 = (0..3).map(|k| m[i][k] * adj[k][j]).sum();
                let adj_s: f64 = (0..3).map(|k| adj[i][k] * m[k][j]).sum();
                let delta = if i == j { det } else { 0.0 };
                prop_assert!((s_adj - delta).abs() <= 1e-12 * scale);
                prop_assert!((adj_s - delta).abs() <= 1e-12 * scale);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn midpoint_step_is_symplectic(seed in any::<u64>(), id in prop::sample::select(vec!["constant-b", "undulator"])) {
        let m = model(id);
        let x = point(&m, seed);
        let cfg = IntegratorConfig { dt: 0.05, ..Default::default() };
        let jac = fd_jacobian(|y| step(m.h(), y, cfg.dt, &cfg).unwrap(), &x, 1e-4);
        prop_assert!(symplectic_defect(&jac) < 1e-6);
    }

    #[test]
    fn midpoint_step_is_reversible(seed in any::<u64>(), dt in 1e-4..0.05f64) {
        let m = model("undulator");
        let x = point(&m, seed);
        let cfg = IntegratorConfig::default();
        let y = step(m.h(), &x, dt, &cfg).unwrap();
        let z = step(m.h(), &y, -dt, &cfg).unwrap();
        let err = x.iter().zip(&z).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
        prop_assert!(err < 10.0 * cfg.newton_tol);
    }

    #[test]
    fn charts_are_canonical(seed in any::<u64>(), id in prop::sample::select(vec!["constant-b", "undulator"])) {
        let m = model(id);
        let x = point(&m, seed);
        for chart in &m.charts {
            let r = chart_point_report(&m, chart, &x).unwrap();
            prop_assert!(r.canonical < 1e-10, "{}: {:e}", chart.name, r.canonical);
            let jac = fd_jacobian(|y| chart.map(y).unwrap(), &x, 1e-5);
            prop_assert!(symplectic_defect(&jac) < 1e-6, "{}", chart.name);
        }
    }

    #[test]
    fn kinetic_energy_is_gauge_independent(q in prop::array::uniform3(-1.5..1.5f64), pi in prop::array::uniform3(-1.5..1.5f64)) {
        let mut values = Vec::new();
        for g in [Gauge::Symmetric, Gauge::LandauX, Gauge::LandauY] {
            let m = build_model(&ModelRequest { id: "constant-b".into(), gauge: Some(g), ..Default::default() }).unwrap();
            let a = m.system.potential.eval(&q).unwrap();
            let x = [q[0], q[1], q[2], pi[0] - a[0], pi[1] - a[1], pi[2] - a[2]];
            values.push(m.h().value(&x).unwrap());
        }
        let oracle = 0.5 * pi.iter().map(|v| v * v).sum::<f64>();
        for v in values {
            prop_assert!((v - oracle).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn random_family_instances_verify(c in prop::array::uniform4(0.1..0.8f64), seed in any::<u64>()) {
        let fns = [
            ("lambda2", format!("1.5 + {}*cos(y)", c[0])),
            ("mu1", format!("1 + {}*cos(x)", c[1])),
            ("mu3", format!("1 + {}*sin(z)", c[2])),
            ("mu4", format!("y^2 + {}*y", c[3])),
        ];
        let req = ModelRequest {
            id: "family-a".into(),
            functions: fns.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            ..Default::default()
        };
        let m = build_model(&req).unwrap();
        let report = omegah::cli::run_verification(&m, 8, seed, &Default::default()).unwrap();
        let failed: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
        prop_assert!(report.pass, "{:?}", failed);
    }
}
