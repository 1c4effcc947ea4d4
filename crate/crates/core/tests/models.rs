//! Catalog models against hand-derived formulas.

use omegah::dynamics::hamiltonian_vector_field;
use omegah::geometry::curl;
use omegah::models::{build_model, catalog, Branch, Gauge, ModelRequest, ModelSpec};
use omegah::phasespace::PhasePoint;

fn model(id: &str) -> ModelSpec {
    build_model(&ModelRequest { id: id.into(), ..Default::default() }).unwrap()
}

fn with_functions(id: &str, fns: &[(&str, &str)]) -> ModelSpec {
    let functions = fns.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    build_model(&ModelRequest { id: id.into(), functions, ..Default::default() }).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn catalog_lists_seven_models() {
    let ids: Vec<_> = catalog().iter().map(|e| e.id).collect();
    assert_eq!(ids, ["constant-b", "undulator", "cyl-case1", "cyl-case2", "cyl-case3", "family-a", "family-b"]);
    for id in ids {
        assert_eq!(model(id).id, id);
    }
}

#[test]
fn unknown_model_and_slot_are_rejected() {
    assert!(build_model(&ModelRequest { id: "nope".into(), ..Default::default() }).is_err());
    let mut req = ModelRequest { id: "cyl-case1".into(), ..Default::default() };
    req.functions.insert("f9".into(), "r".into());
    assert!(build_model(&req).is_err());
    let req = ModelRequest { id: "undulator".into(), gauge: Some(Gauge::LandauX), ..Default::default() };
    assert!(build_model(&req).is_err());
}

#[test]
fn constant_field_gives_the_lorentz_force() {
    // With H = ½|p + A|², dΠ_i/dt = Π_j (∂_j A_i − ∂_i A_j) = −(Π × B)_i.
    let b = 1.7;
    let mut req = ModelRequest { id: "constant-b".into(), gauge: Some(Gauge::Symmetric), ..Default::default() };
    req.params.insert("b".into(), b);
    let m = build_model(&req).unwrap();
    for x in m.sample_points(20, 3).unwrap() {
        let v = hamiltonian_vector_field(m.h(), &x).unwrap();
        // Symmetric gauge: Π = (px − by/2, py + bx/2, pz).
        let pi = [x[3] - b * x[1] / 2.0, x[4] + b * x[0] / 2.0, x[5]];
        let pi_dot = [v[3] - b * v[1] / 2.0, v[4] + b * v[0] / 2.0, v[5]];
        for i in 0..3 {
            assert!(close(v[i], pi[i], 1e-12));
        }
        let lorentz = [-pi[1] * b, pi[0] * b, 0.0];
        for i in 0..3 {
            assert!(close(pi_dot[i], lorentz[i], 1e-12), "{pi_dot:?} vs {lorentz:?}");
        }
    }
}

#[test]
fn constant_field_k1_has_the_stated_spectrum() {
    let m = model("constant-b");
    let k1 = m.operator("K1").unwrap();
    for x in m.sample_points(10, 11).unwrap() {
        let k = k1.matrix(&x).unwrap();
        let dm = nalgebra::DMatrix::from_fn(6, 6, |i, j| k[(i, j)]);
        let mut ev: Vec<f64> = dm.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
        let pix = x[3] - x[1] / 2.0;
        for e in &ev[..4] {
            assert!(e.abs() < 1e-10);
        }
        for e in &ev[4..] {
            assert!(close(*e, 1.0 / pix, 1e-8));
        }
        assert!(close(dm.trace(), 2.0 / pix, 1e-12));
    }
}

#[test]
fn case1_field_has_no_radial_component() {
    let m = model("cyl-case1");
    for r in [0.6, 1.0, 1.7, 2.4] {
        let q = [r, 0.4, -0.3];
        let b = curl(&m.system.chart, &m.system.potential, &q).unwrap().components;
        assert!(b[0].abs() < 1e-14);
        // Defaults: A_phi = 0.3 r² + sin r, A_z = cos r + r.
        assert!(close(b[1], r.sin() - 1.0, 1e-12));
        assert!(close(b[2], (0.6 * r + r.cos()) / r, 1e-12));
    }
}

#[test]
fn free_particle_branch_is_unit_momentum() {
    let m = with_functions("cyl-case1", &[("Aphi", "0"), ("Az", "0"), ("V", "0")]);
    let hj = m.hj.as_ref().unwrap();
    let Branch::Sqrt(radicand) = &hj.branches[0] else { panic!("radial branch is a square root") };
    for r in [0.7, 1.3, 2.2] {
        let v: f64 = radicand.eval(&[r, 0.1, 0.2, 0.5, 0.0, 0.0]).unwrap();
        assert!(close(v.sqrt(), 1.0, 1e-14));
    }
}

#[test]
fn undulator_h3_is_the_scaled_partial_momentum() {
    let m = model("undulator");
    let a = m.params["a"];
    let h3 = m.field("H3").unwrap();
    let chart = m.chart("partial").unwrap();
    for x in m.sample_points(20, 5).unwrap() {
        let y: PhasePoint = chart.map(&x).unwrap();
        assert!(close(h3.value(&x).unwrap(), a * y[5], 1e-12));
    }
}

#[test]
fn undulator_field_is_helical() {
    let m = model("undulator");
    let (a, b3) = (m.params["a"], m.params["b3"]);
    for z in [-1.0, 0.0, 0.7, 2.0] {
        let b = curl(&m.system.chart, &m.system.potential, &[0.9, -0.4, z]).unwrap();
        assert!(close(b.components[0], -b3 * (2.0 * z / a).cos(), 1e-12));
        assert!(close(b.components[1], b3 * (2.0 * z / a).sin(), 1e-12));
        assert!(close(b.norm(), b3, 1e-12));
    }
}

#[test]
fn gauges_share_one_field() {
    let q = [0.3, -1.1, 0.8];
    for g in [Gauge::Symmetric, Gauge::LandauX, Gauge::LandauY] {
        let m = build_model(&ModelRequest { id: "constant-b".into(), gauge: Some(g), ..Default::default() }).unwrap();
        let b = curl(&m.system.chart, &m.system.potential, &q).unwrap().components;
        assert_eq!(b, [0.0, 0.0, 1.0]);
    }
}

#[test]
fn family_fields_match_closed_forms() {
    let a = model("family-a");
    let b = model("family-b");
    for x in [0.2, -0.7, 1.1] {
        let q = [x, 0.3, -0.2];
        // lambda1 = 2y, mu2 = 1: B = b e_3.
        let ba = curl(&a.system.chart, &a.system.potential, &q).unwrap().components;
        assert!(close(ba[2], a.params["b"], 1e-12) && ba[0].abs() < 1e-14 && ba[1].abs() < 1e-14);
        // psi1 = 1 + x², nu1 = nu2 = 1: B_3 = −x / (1 + x²)^{3/2}.
        let bb = curl(&b.system.chart, &b.system.potential, &q).unwrap().components;
        assert!(close(bb[2], -x / (1.0 + x * x).powf(1.5), 1e-12));
        assert!(bb[0].abs() < 1e-14 && bb[1].abs() < 1e-14);
    }
}
