//! Acceptance suite.
//!
//! Prints one PASS/FAIL line per criterion and exits non-zero if any
//! criterion fails. Every residual is compared against the stated bound
//! with a strict `<`.

use std::process::ExitCode;

use omegah::cli::{run_verification, Tolerances, VerificationReport};
use omegah::dynamics::{conservation_report, integrate, integrate_model, integrate_with, step, IntegratorConfig};
use omegah::models::{build_model, hj_draw, hj_residual, Gauge, ModelRequest, ModelSpec, StackelAttachment};
use omegah::phasespace::{symplectic_compat, OperatorField, PhasePoint, ScalarField};
use omegah::stackel::verify_separation_equations;
use omegah::exprlang::{Expr, FunctionDef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 100;
/// Unit-scale initial state shared by the conservation runs.
const X0: PhasePoint = [0.7, -0.2, 0.1, 0.5, -0.4, 0.6];
const SEED: u64 = 20240611;

type Outcome = Result<String, String>;

struct Verified {
    label: String,
    model: ModelSpec,
    report: VerificationReport,
}

fn request(id: &str) -> ModelRequest {
    ModelRequest { id: id.to_string(), ..Default::default() }
}

/// Coefficient range for the structural suites.
const STRONG: (f64, f64) = (0.2, 0.9);
/// Coefficient range for the conservation runs; the midpoint energy error
/// grows with the variation of the coefficient functions.
const WEAK: (f64, f64) = (0.05, 0.2);

/// Coefficients in `range` drawn from a fixed stream.
fn coefficients(seed: u64, range: (f64, f64)) -> [f64; 6] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::array::from_fn(|_| rng.gen_range(range.0..range.1))
}

fn random_family_a(seed: u64, range: (f64, f64)) -> ModelRequest {
    let c = coefficients(seed, range);
    let fns = [
        ("lambda1", format!("2*y + {}*sin(y)", c[0])),
        ("lambda2", format!("1.5 + {}*cos(y)", c[1])),
        ("mu1", format!("1 + {}*cos(x)", c[2])),
        ("mu2", format!("1 + {}*sin(y)^2", c[3])),
        ("mu3", format!("1 + {}*sin(z)", c[4])),
        ("mu4", format!("y^2 + {}*cos(y)", c[5])),
    ];
    ModelRequest { functions: fns.into_iter().map(|(k, v)| (k.to_string(), v)).collect(), ..request("family-a") }
}

fn random_family_b(seed: u64, range: (f64, f64)) -> ModelRequest {
    let c = coefficients(seed, range);
    let fns = [
        ("psi1", format!("1 + x^2 + {}*cos(x)", c[0])),
        ("psi2", format!("1.5 + {}*sin(x)", c[1])),
        ("nu1", format!("1 + {}*sin(x)^2", c[2])),
        ("nu2", format!("1 + {}*cos(y)", c[3])),
        ("nu3", format!("1 + {}*cos(z)", c[4])),
        ("nu4", format!("{}*x", c[5])),
    ];
    ModelRequest { functions: fns.into_iter().map(|(k, v)| (k.to_string(), v)).collect(), ..request("family-b") }
}

fn requests() -> Vec<(String, ModelRequest)> {
    let mut out = Vec::new();
    for (g, name) in [(Gauge::Symmetric, "symmetric"), (Gauge::LandauX, "landau-x"), (Gauge::LandauY, "landau-y")] {
        out.push((format!("constant-b/{name}"), ModelRequest { gauge: Some(g), ..request("constant-b") }));
    }
    for id in ["undulator", "cyl-case1", "cyl-case2", "cyl-case3", "family-a", "family-b"] {
        out.push((id.to_string(), request(id)));
    }
    out.push(("family-a/random".into(), random_family_a(SEED, STRONG)));
    out.push(("family-b/random".into(), random_family_b(SEED + 1, STRONG)));
    out
}

fn verify_all() -> Result<Vec<Verified>, String> {
    let tol = Tolerances::default();
    requests()
        .into_iter()
        .map(|(label, req)| {
            let model = build_model(&req).map_err(|e| format!("{label}: {e}"))?;
            let report = run_verification(&model, SAMPLES, SEED, &tol).map_err(|e| format!("{label}: {e}"))?;
            Ok(Verified { label, model, report })
        })
        .collect()
}

/// Checks selected by `filter` must be present, pass, and stay below `bound`.
fn bounded(runs: &[Verified], filter: impl Fn(&str) -> bool, bound: f64) -> Result<(usize, f64), String> {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for v in runs {
        for c in v.report.checks.iter().filter(|c| filter(&c.name)) {
            count += 1;
            worst = worst.max(c.max_residual);
            if !c.pass || !(c.max_residual < bound) {
                return Err(format!(
                    "{} / {}: residual {:.3e} bound {:.0e}{}",
                    v.label,
                    c.name,
                    c.max_residual,
                    bound,
                    c.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
                ));
            }
        }
    }
    if count == 0 {
        return Err("no matching checks".into());
    }
    Ok((count, worst))
}

fn summary(parts: &[(&str, (usize, f64))]) -> String {
    parts.iter().map(|(k, (n, w))| format!("{k}: {n} checks, max {w:.2e}")).collect::<Vec<_>>().join("; ")
}

fn no_failures(runs: &[Verified]) -> Result<(), String> {
    for v in runs {
        if let Some(c) = v.report.failures().next() {
            return Err(format!("{} / {} failed: {:.3e}", v.label, c.name, c.max_residual));
        }
    }
    Ok(())
}

fn torsion_suite(runs: &[Verified]) -> Outcome {
    no_failures(runs)?;
    let t = bounded(runs, |n| n.starts_with("torsion "), 1e-8)?;
    for v in runs {
        if !v.report.checks.iter().any(|c| c.name.starts_with("torsion ")) {
            return Err(format!("{}: no operators checked", v.label));
        }
    }
    Ok(summary(&[("torsion", t)]))
}

fn algebra_suite(runs: &[Verified]) -> Outcome {
    let a = bounded(runs, |n| n.starts_with("algebra "), 1e-8)?;
    let c = bounded(runs, |n| n.starts_with("compat "), 1e-10)?;
    Ok(summary(&[("algebra", a), ("compat", c)]))
}

fn chain_suite(runs: &[Verified]) -> Outcome {
    let c = bounded(runs, |n| n.starts_with("chain "), 1e-9)?;
    Ok(summary(&[("chain", c)]))
}

fn involution_suite(runs: &[Verified]) -> Outcome {
    let b = bounded(runs, |n| n.starts_with("bracket "), 1e-10)?;
    let s = bounded(runs, |n| n.starts_with("separable ") || n.ends_with(": separable"), 1e-10)?;
    let und = runs.iter().find(|v| v.label == "undulator").ok_or("undulator missing")?;
    for name in ["bracket {H1,H3}", "bracket {H2,H3}"] {
        let c = und.report.check(name).ok_or(format!("undulator {name} missing"))?;
        if !(c.pass && c.max_residual < 1e-10) {
            return Err(format!("undulator {name}: {:.3e}", c.max_residual));
        }
    }
    Ok(summary(&[("brackets", b), ("separable", s)]))
}

fn spectral_suite(runs: &[Verified]) -> Outcome {
    let s = bounded(runs, |n| n.starts_with("spectrum "), 1e-10)?;
    Ok(summary(&[("spectrum", s)]))
}

fn chart_suite(runs: &[Verified]) -> Outcome {
    let wanted = [("constant-b/symmetric", ["dh-1", "dh-2", "dh-3"].as_slice()), ("undulator", ["dh", "partial"].as_slice())];
    for (label, charts) in wanted {
        let v = runs.iter().find(|v| v.label == label).ok_or(format!("{label} missing"))?;
        for c in charts {
            if v.report.check(&format!("chart {c}: canonical")).is_none() {
                return Err(format!("{label}: chart {c} not checked"));
            }
        }
    }
    let is_chart = |n: &str, tail: &str| n.starts_with("chart ") && n.ends_with(tail);
    let c = bounded(runs, |n| is_chart(n, ": canonical"), 1e-10)?;
    let d = bounded(runs, |n| is_chart(n, ": diagonal") || is_chart(n, ": operator forms"), 1e-8)?;
    let h = bounded(runs, |n| is_chart(n, ": hamiltonian"), 1e-12)?;
    Ok(summary(&[("canonical", c), ("diagonal", d), ("hamiltonian", h)]))
}

fn stackel_suite(runs: &[Verified]) -> Outcome {
    for name in ["SM1", "SM2", "SM3-classical", "SM4", "GSM1", "SM3", "case3-remark"] {
        if !runs.iter().any(|v| v.report.check(&format!("stackel {name}: separation")).is_some()) {
            return Err(format!("{name} not checked"));
        }
    }
    let derived = |n: &str, head: &str| n.starts_with(head) && n.contains(':');
    let s = bounded(runs, |n| n.starts_with("stackel ") && n.ends_with(": separation"), 1e-10)?;
    let c = bounded(runs, |n| n.starts_with("stackel ") && n.ends_with(": cofactors"), 1e-12)?;
    let t = bounded(runs, |n| derived(n, "torsion "), 1e-8)?;
    let k = bounded(runs, |n| derived(n, "compat "), 1e-10)?;
    let h = bounded(runs, |n| derived(n, "chain "), 1e-9)?;
    Ok(summary(&[("separation", s), ("cofactors", c), ("torsion", t), ("compat", k), ("chain", h)]))
}

fn hj_suite(runs: &[Verified]) -> Outcome {
    let mut parts = Vec::new();
    for id in ["cyl-case1", "cyl-case2", "cyl-case3"] {
        let v = runs.iter().find(|v| v.label == id).ok_or(format!("{id} missing"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut worst: f64 = 0.0;
        for i in 0..50 {
            let (h, q) = hj_draw(&v.model, &mut rng).map_err(|e| format!("{id} draw {i}: {e}"))?;
            let r = hj_residual(&v.model, &h, &q).map_err(|e| format!("{id} draw {i}: {e}"))?;
            worst = worst.max(r);
        }
        if !(worst < 1e-8) {
            return Err(format!("{id}: residual {worst:.3e}"));
        }
        parts.push(format!("{id}: 50 draws, max {worst:.2e}"));
    }
    Ok(parts.join("; "))
}

fn max_diff(a: &PhasePoint, b: &PhasePoint) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn dynamics_suite() -> Outcome {
    let cfg = IntegratorConfig::default();
    let mut parts = Vec::new();
    let cases = [
        ("constant-b", request("constant-b")),
        ("undulator", request("undulator")),
        ("family-a/random", random_family_a(SEED, WEAK)),
        ("family-b/random", random_family_b(SEED + 1, WEAK)),
    ];
    for (label, req) in &cases {
        let model = build_model(req).map_err(|e| format!("{label}: {e}"))?;
        let traj = integrate_model(&model, &X0, &cfg).map_err(|e| format!("{label}: {e}"))?;
        let drifts = conservation_report(&traj).map_err(|e| e.to_string())?;
        let worst = drifts.iter().fold(0.0f64, |m, d| m.max(d.max_drift));
        if let Some(d) = drifts.iter().find(|d| !(d.max_drift < 1e-6) || d.skipped > 0) {
            return Err(format!("{label}: {} drift {:.3e}, {} steps skipped", d.name, d.max_drift, d.skipped));
        }
        parts.push(format!("{label} drift {worst:.2e}"));
    }

    let model = build_model(&request("undulator")).map_err(|e| e.to_string())?;
    let x0 = model.sample_points(1, SEED).map_err(|e| e.to_string())?[0];
    let end = |dt: f64| -> Result<PhasePoint, String> {
        let c = IntegratorConfig { dt, t_final: 1.0, ..cfg };
        let t = integrate(model.h(), &x0, &c).map_err(|e| e.to_string())?;
        Ok(*t.states.last().expect("non-empty"))
    };
    let (a, b, c) = (end(0.04)?, end(0.02)?, end(0.01)?);
    let ratio = max_diff(&a, &b) / max_diff(&b, &c);
    if !((ratio - 4.0).abs() <= 0.8) {
        return Err(format!("order ratio {ratio:.3}"));
    }
    parts.push(format!("order ratio {ratio:.3}"));

    let mut worst: f64 = 0.0;
    for x in model.sample_points(20, SEED + 7).map_err(|e| e.to_string())? {
        let y = step(model.h(), &x, cfg.dt, &cfg).map_err(|e| e.to_string())?;
        let z = step(model.h(), &y, -cfg.dt, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(max_diff(&x, &z));
    }
    if !(worst < 10.0 * cfg.newton_tol) {
        return Err(format!("reversibility {worst:.3e}"));
    }
    parts.push(format!("reversibility {worst:.2e}"));
    Ok(parts.join("; "))
}

fn perturbed_stackel_control() -> Result<String, String> {
    let eps = 1e-6;
    let model = build_model(&request("constant-b")).map_err(|e| e.to_string())?;
    let idx = model.stackel.iter().position(|a| a.spec.name == "SM1").ok_or("SM1 missing")?;
    let att = &model.stackel[idx];
    let mut f = att.spec.f.clone();
    let vars: Vec<&str> = f[0].vars.iter().map(String::as_str).collect();
    f[0] = FunctionDef::new(&f[0].name, &vars, f[0].body.clone() + Expr::num(eps)).map_err(|e| e.to_string())?;
    let spec = att.spec.with_functions(f).map_err(|e| e.to_string())?;
    let mut worst_rel: f64 = 0.0;
    for x in model.sample_points(SAMPLES, SEED).map_err(|e| e.to_string())? {
        let y = model.stackel_point(att, &x).map_err(|e| e.to_string())?;
        let r = verify_separation_equations(&spec, &att.recombination, &y).map_err(|e| e.to_string())?;
        worst_rel = worst_rel.max((r / eps - 1.0).abs());
    }
    if !(worst_rel < 1e-3) {
        return Err(format!("residual deviates from the perturbation by {worst_rel:.3e} relative"));
    }
    let mut broken = model.clone();
    broken.stackel[idx] =
        StackelAttachment::new(spec, att.chart.as_deref(), att.recombination.clone()).map_err(|e| e.to_string())?;
    let report = run_verification(&broken, SAMPLES, SEED, &Tolerances::default()).map_err(|e| e.to_string())?;
    let c = report.check("stackel SM1: separation").ok_or("separation check missing")?;
    if c.pass || report.pass {
        return Err("perturbed separation check passed".into());
    }
    Ok(format!("residual/eps within {worst_rel:.1e} of 1, check fails"))
}

fn incompatible_operator_control() -> Result<String, String> {
    let model = build_model(&request("constant-b")).map_err(|e| e.to_string())?;
    let k = OperatorField::constant_diagonal("D", [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut least = f64::INFINITY;
    for x in model.sample_points(SAMPLES, SEED).map_err(|e| e.to_string())? {
        least = least.min(symplectic_compat(&k, &x, 8, &mut rng).map_err(|e| e.to_string())?);
    }
    if !(least > 1e-4) {
        return Err(format!("compatibility residual {least:.3e}"));
    }
    Ok(format!("min compat residual {least:.2e}"))
}

fn non_integral_control() -> Result<String, String> {
    let model = build_model(&request("constant-b")).map_err(|e| e.to_string())?;
    let x0 = model.sample_points(1, SEED).map_err(|e| e.to_string())?[0];
    let monitored = [model.h().clone(), ScalarField::coordinate(0).renamed("x")];
    let traj = integrate_with(model.h(), &monitored, &|x| x.iter().all(|v| v.is_finite()), &x0, &IntegratorConfig::default())
        .map_err(|e| e.to_string())?;
    let drifts = conservation_report(&traj).map_err(|e| e.to_string())?;
    let x = drifts.iter().find(|d| d.name == "x").ok_or("x not monitored")?;
    if !(x.max_drift >= 1e-6) {
        return Err(format!("coordinate drift {:.3e} within the bound", x.max_drift));
    }
    Ok(format!("coordinate drift {:.2e}", x.max_drift))
}

fn negative_controls() -> Outcome {
    let parts = [perturbed_stackel_control()?, incompatible_operator_control()?, non_integral_control()?];
    Ok(parts.join("; "))
}

fn main() -> ExitCode {
    let runs = match verify_all() {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL verification setup: {e}");
            return ExitCode::FAILURE;
        }
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("1 torsion", torsion_suite(&runs)),
        ("2 algebra", algebra_suite(&runs)),
        ("3 chain", chain_suite(&runs)),
        ("4 involution", involution_suite(&runs)),
        ("5 spectral", spectral_suite(&runs)),
        ("6 chart", chart_suite(&runs)),
        ("7 stackel", stackel_suite(&runs)),
        ("8 hamilton-jacobi", hj_suite(&runs)),
        ("9 dynamics", dynamics_suite()),
        ("10 negative controls", negative_controls()),
    ];
    let mut failed = false;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed = true;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
