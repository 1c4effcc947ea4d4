//! Catalog operators, brackets, chains and Stäckel data at chosen points.

use omegah::error::Error;
use omegah::exprlang::{Expr, FunctionDef};
use omegah::hamiltonian::{build_k_ignorable, chain_residual, poisson_bracket, separable_involution};
use omegah::models::{build_model, Gauge, ModelRequest, ModelSpec};
use omegah::numcore::{kernel_basis, SmallMatrix};
use omegah::phasespace::{algebra_axiom_check, eigen_spectrum, haantjes_residual, symplectic_compat, OperatorField, PhasePoint};
use omegah::stackel::{classical_stackel_metric, project_to_base, sm1, sm3_classical, verify_separation_equations};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model(id: &str) -> ModelSpec {
    build_model(&ModelRequest { id: id.into(), ..Default::default() }).unwrap()
}

fn model_with(id: &str, fns: &[(&str, &str)], params: &[(&str, f64)]) -> ModelSpec {
    let req = ModelRequest {
        id: id.into(),
        functions: fns.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        gauge: None,
    };
    build_model(&req).unwrap()
}

/// Symmetric-gauge state with kinetic momentum `pi` at `q`, for `b = 1`.
fn symmetric_state(q: [f64; 3], pi: [f64; 3]) -> PhasePoint {
    [q[0], q[1], q[2], pi[0] + q[1] / 2.0, pi[1] - q[0] / 2.0, pi[2]]
}

fn assert_spectrum(k: &OperatorField, x: &PhasePoint, expected: &[(f64, usize)]) {
    let s = eigen_spectrum(k, x, 1e-9).unwrap();
    assert!(s.is_semisimple());
    let mut got = s.values();
    got.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    assert_eq!(got.len(), expected.len(), "{got:?}");
    for ((v, m), (ev, em)) in got.iter().zip(expected) {
        assert!((v - ev).abs() < 1e-10 && m == em, "{got:?}");
    }
    for e in &s.eigen.eigenvalues {
        assert_eq!(e.kernel_dim, e.multiplicity);
    }
}

#[test]
fn k1_and_k3_spectra_at_chosen_momenta() {
    let m = model("constant-b");
    let x = symmetric_state([0.3, 0.4, 0.1], [2.0, 0.7, 4.0]);
    assert_spectrum(&m.operator("K1").unwrap(), &x, &[(0.0, 4), (0.5, 2)]);
    assert_spectrum(&m.operator("K3").unwrap(), &x, &[(0.0, 4), (0.25, 2)]);
}

#[test]
fn k3_eigenspace_is_two_dimensional() {
    let m = model("constant-b");
    let x = symmetric_state([0.3, -0.4, 0.5], [1.1, 0.7, 4.0]);
    let k = m.operator("K3").unwrap().matrix(&x).unwrap();
    let shifted = k - SmallMatrix::identity(6).scale(0.25);
    assert_eq!(kernel_basis(&shifted, 1e-9).len(), 2);
}

#[test]
fn catalog_operators_are_haantjes() {
    for (id, op) in [("constant-b", "K1"), ("constant-b", "K4"), ("undulator", "K5")] {
        let m = model(id);
        let k = m.operator(op).unwrap();
        for x in m.sample_points(10, 21).unwrap() {
            assert!(haantjes_residual(&k, &x).unwrap() < 1e-9, "{id} {op}");
        }
    }
}

#[test]
fn constant_field_algebra_axioms() {
    let m = model("constant-b");
    let (k1, k3) = (m.operator("K1").unwrap(), m.operator("K3").unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for x in m.sample_points(5, 2).unwrap() {
        let r = algebra_axiom_check(&k1, &k3, &x, 8, &mut rng).unwrap();
        assert!(r.max() < 1e-8, "{r:?}");
    }
}

#[test]
fn compatibility_separates_k4_from_a_bare_projector() {
    let m = model("constant-b");
    let k4 = m.operator("K4").unwrap();
    let bare = OperatorField::constant_diagonal("P", [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for x in m.sample_points(10, 6).unwrap() {
        assert!(symplectic_compat(&k4, &x, 8, &mut rng).unwrap() < 1e-10);
        assert!(symplectic_compat(&bare, &x, 8, &mut rng).unwrap() > 0.5);
    }
}

#[test]
fn bracket_relations() {
    let b = 1.3;
    let mut req = ModelRequest { id: "constant-b".into(), gauge: Some(Gauge::LandauY), ..Default::default() };
    req.params.insert("b".into(), b);
    let m = build_model(&req).unwrap();
    let (h1, h2) = (m.field("H1").unwrap(), m.field("H2").unwrap());
    let u = model("undulator");
    let (g1, g2, g3) = (u.field("H1").unwrap(), u.field("H2").unwrap(), u.field("H3").unwrap());
    for (x, y) in m.sample_points(20, 4).unwrap().iter().zip(u.sample_points(20, 4).unwrap()) {
        assert!((poisson_bracket(h1, h2, x).unwrap() - b).abs() < 1e-12);
        assert!((poisson_bracket(g1, g3, &y).unwrap() + g2.value(&y).unwrap()).abs() < 1e-10);
        assert!((poisson_bracket(g2, g3, &y).unwrap() - g1.value(&y).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn case1_integrals_are_in_separable_involution() {
    let m = model("cyl-case1");
    let h2 = m.field("H2").unwrap();
    for x in m.sample_points(20, 9).unwrap() {
        for r in separable_involution(m.h(), h2, &x).unwrap() {
            assert!(r.abs() < 1e-10);
        }
    }
}

#[test]
fn declared_chains_close() {
    for id in ["constant-b", "cyl-case2"] {
        let m = model(id);
        for x in m.sample_points(10, 3).unwrap() {
            for c in &m.chains {
                let (closed, exact) = chain_residual(c, &x).unwrap();
                assert!(closed < 1e-9 && exact < 1e-9, "{id}");
            }
        }
    }
}

#[test]
fn vanishing_f3_reduces_case2_k3_to_the_projector() {
    let m = model_with("cyl-case2", &[("f3", "0")], &[]);
    let k3 = m.operator("K3").unwrap();
    for x in m.sample_points(5, 1).unwrap() {
        let k = k3.matrix(&x).unwrap();
        let expected = SmallMatrix::from_diagonal(&[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert!((k - expected).norm_max() < 1e-14);
    }
}

#[test]
fn case1_with_quadratic_a_phi_is_the_constant_field() {
    let b = 0.8;
    let m = model_with("cyl-case1", &[("Aphi", &format!("{b}*r^2/2")), ("Az", "0"), ("V", "0")], &[]);
    for r in [0.7, 1.5, 2.3] {
        let f = omegah::geometry::curl(&m.system.chart, &m.system.potential, &[r, 0.2, 0.0]).unwrap();
        assert!(f.components[0].abs() < 1e-14 && f.components[1].abs() < 1e-14);
        assert!((f.components[2] - b).abs() < 1e-12);
    }
}

#[test]
fn perturbed_stackel_function_shifts_the_residual() {
    let spec = sm1(1.0).unwrap();
    let m = model("constant-b");
    let att = m.stackel.iter().find(|a| a.spec.name == "SM1").unwrap();
    let mut f = spec.f.clone();
    let vars: Vec<&str> = f[0].vars.iter().map(String::as_str).collect();
    f[0] = FunctionDef::new(&f[0].name, &vars, f[0].body.clone() + Expr::num(1.0)).unwrap();
    let wrong = spec.with_functions(f).unwrap();
    for x in m.sample_points(10, 5).unwrap() {
        let y = m.stackel_point(att, &x).unwrap();
        assert!(verify_separation_equations(&spec, &att.recombination, &y).unwrap() < 1e-12);
        assert!((verify_separation_equations(&wrong, &att.recombination, &y).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn classical_matrix_recovers_the_cylindrical_metric() {
    let b = 1.4;
    let spec = sm3_classical(b).unwrap();
    for q1 in [0.5, 1.0, 2.0] {
        let c = classical_stackel_metric(&spec, &[q1, 0.3, -0.2]).unwrap();
        let g = c.inverse_metric;
        assert!((g[0] - 1.0).abs() < 1e-14 && (g[1] - 1.0 / (q1 * q1)).abs() < 1e-14 && (g[2] - 1.0).abs() < 1e-14);
        assert!((c.potential - b * b * q1 * q1 / 8.0).abs() < 1e-14);
    }
}

#[test]
fn mixed_operator_does_not_project() {
    let m = model("constant-b");
    let x = m.sample_points(1, 0).unwrap()[0];
    let err = project_to_base(&m.operator("K1").unwrap(), &x).unwrap_err();
    assert!(matches!(err, Error::NotProjectable(_)));
}

#[test]
fn ignorable_recipe_on_free_particle_and_case3() {
    let free = model_with("cyl-case1", &[("Aphi", "0"), ("Az", "0"), ("V", "0")], &[]);
    let pts = free.sample_points(5, 2).unwrap();
    let err = build_k_ignorable(&free.system, 0, &pts).unwrap_err();
    assert!(matches!(err, Error::NotIgnorable(0, _)));
    // z is ignorable for the free particle: K = (1/p_z)(∂_z⊗dz + ∂_{p_z}⊗dp_z).
    let k = build_k_ignorable(&free.system, 2, &pts).unwrap();
    for x in &pts {
        let mut d = [0.0; 6];
        d[2] = 1.0 / x[5];
        d[5] = 1.0 / x[5];
        assert!((k.matrix(x).unwrap() - SmallMatrix::from_diagonal(&d)).norm_max() < 1e-12);
    }
    let c3 = model("cyl-case3");
    let pts = c3.sample_points(5, 2).unwrap();
    let k = build_k_ignorable(&c3.system, 2, &pts).unwrap();
    let a = c3.system.potential.clone();
    for x in &pts {
        let pz = x[5] + a.eval(&[x[0], x[1], x[2]]).unwrap()[2];
        let mut d = [0.0; 6];
        d[2] = 1.0 / pz;
        d[5] = 1.0 / pz;
        assert!((k.matrix(x).unwrap() - SmallMatrix::from_diagonal(&d)).norm_max() < 1e-12);
    }
}
