//! The verification suite: every claim of a model evaluated over a seeded
//! sample batch.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{chain_residual, ChainSpec};
use crate::models::{
    bracket_residual, chart_point_report, constraint_report, curl_residual, hamiltonian_form_residual, hj_draw,
    hj_residual, periodicity_residual, separable_residual, spectrum_residual, ModelSpec,
};
use crate::phasespace::{algebra_axiom_check, haantjes_residual, symplectic_compat, OperatorField, PhasePoint};
use crate::stackel::{akn_fields, verify_separation_equations};

/// Random vector pairs per point for the contracted torsion and
/// compatibility checks.
const TRIALS: usize = 8;

/// Tolerance per check family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub torsion: f64,
    pub algebra: f64,
    pub compat: f64,
    pub chain: f64,
    pub bracket: f64,
    pub separable: f64,
    pub spectrum: f64,
    pub curl: f64,
    pub h_form: f64,
    pub canonical: f64,
    pub diagonal: f64,
    pub chart_form: f64,
    pub stackel: f64,
    pub cofactor: f64,
    pub hj: f64,
    pub periodicity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            torsion: 1e-8,
            algebra: 1e-8,
            compat: 1e-10,
            chain: 1e-9,
            bracket: 1e-10,
            separable: 1e-10,
            spectrum: 1e-10,
            curl: 1e-10,
            h_form: 1e-12,
            canonical: 1e-10,
            diagonal: 1e-8,
            chart_form: 1e-12,
            stackel: 1e-10,
            cofactor: 1e-12,
            hj: 1e-8,
            periodicity: 1e-12,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 16] = [
        "torsion",
        "algebra",
        "compat",
        "chain",
        "bracket",
        "separable",
        "spectrum",
        "curl",
        "h_form",
        "canonical",
        "diagonal",
        "chart_form",
        "stackel",
        "cofactor",
        "hj",
        "periodicity",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "torsion" => &mut self.torsion,
            "algebra" => &mut self.algebra,
            "compat" => &mut self.compat,
            "chain" => &mut self.chain,
            "bracket" => &mut self.bracket,
            "separable" => &mut self.separable,
            "spectrum" => &mut self.spectrum,
            "curl" => &mut self.curl,
            "h_form" => &mut self.h_form,
            "canonical" => &mut self.canonical,
            "diagonal" => &mut self.diagonal,
            "chart_form" => &mut self.chart_form,
            "stackel" => &mut self.stackel,
            "cofactor" => &mut self.cofactor,
            "hj" => &mut self.hj,
            "periodicity" => &mut self.periodicity,
            _ => return None,
        })
    }

    /// Overrides one tolerance by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Config(format!("tolerance `{name}` must be positive, got {value}")));
        }
        let slot = self.slot(name).ok_or_else(|| {
            Error::Config(format!("unknown tolerance `{name}` (one of {})", Tolerances::NAMES.join(", ")))
        })?;
        *slot = value;
        Ok(())
    }
}

/// Residual statistics of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub anchor: String,
    pub samples: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Seed, model and overrides of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Environment {
    pub model: String,
    pub seed: u64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge: Option<String>,
    pub parameters: BTreeMap<String, f64>,
    pub functions: BTreeMap<String, String>,
}

/// Every check of a verification run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema: &'static str,
    pub environment: Environment,
    pub notes: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

pub const REPORT_SCHEMA: &str = "omegah.verification/1";

/// Per-sample outcome: residual and an optional failure reason that
/// overrides the tolerance comparison.
type Sample = Result<(f64, Option<String>)>;

fn ok(r: Result<f64>) -> Sample {
    r.map(|v| (v, None))
}

/// Deterministic stream for check `tag` at sample `i`.
fn sample_rng(seed: u64, tag: usize, i: usize) -> ChaCha8Rng {
    let mix = seed ^ (tag as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (i as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    ChaCha8Rng::seed_from_u64(mix)
}

struct Suite<'a> {
    model: &'a ModelSpec,
    pts: Vec<PhasePoint>,
    seed: u64,
    checks: Vec<CheckResult>,
}

impl Suite<'_> {
    fn run<F>(&mut self, name: String, anchor: String, tol: f64, f: F)
    where
        F: Fn(&PhasePoint, &mut ChaCha8Rng) -> Sample + Sync,
    {
        let tag = self.checks.len();
        let seed = self.seed;
        let outcomes: Vec<Sample> = self
            .pts
            .par_iter()
            .enumerate()
            .map(|(i, x)| f(x, &mut sample_rng(seed, tag, i)))
            .collect();
        self.record(name, anchor, tol, outcomes);
    }

    fn record(&mut self, name: String, anchor: String, tol: f64, outcomes: Vec<Sample>) {
        let mut max: f64 = 0.0;
        let mut sum = 0.0;
        let mut count = 0;
        let mut note = None;
        for o in outcomes.iter() {
            match o {
                Ok((r, flag)) => {
                    max = max.max(*r);
                    sum += r;
                    count += 1;
                    if let (Some(msg), None) = (flag, &note) {
                        note = Some(msg.clone());
                    }
                }
                Err(e) => {
                    if note.is_none() {
                        note = Some(e.to_string());
                    }
                }
            }
        }
        let mean = if count > 0 { sum / count as f64 } else { 0.0 };
        let pass = note.is_none() && max.is_finite() && max < tol;
        self.checks.push(CheckResult {
            name,
            anchor,
            samples: outcomes.len(),
            max_residual: max,
            mean_residual: mean,
            tolerance: tol,
            pass,
            note,
        });
    }
}

fn torsion_and_compat(suite: &mut Suite, label: &str, anchor: &str, k: &OperatorField, tol: &Tolerances) {
    suite.run(format!("torsion {label}"), format!("{anchor}: Haantjes torsion"), tol.torsion, |x, _| {
        ok(haantjes_residual(k, x))
    });
    suite.run(format!("compat {label}"), format!("{anchor}: symplectic compatibility"), tol.compat, |x, rng| {
        ok(symplectic_compat(k, x, TRIALS, rng))
    });
}

fn chain_check(suite: &mut Suite, label: &str, anchor: &str, c: &ChainSpec, map: &(dyn Fn(&PhasePoint) -> Result<PhasePoint> + Sync), tol: f64) {
    suite.run(format!("chain {label}"), format!("{anchor}: Haantjes chain"), tol, |x, _| {
        let y = map(x)?;
        let (closed, exact) = chain_residual(c, &y)?;
        Ok((closed.max(exact), None))
    });
}

/// Runs every check declared by `model` over `samples` seeded points.
pub fn run_verification(model: &ModelSpec, samples: usize, seed: u64, tol: &Tolerances) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    let mut rng = sample_rng(seed, usize::MAX, 0);
    let mut violated = false;
    for c in constraint_report(model, samples.max(1), &mut rng)? {
        violated |= !c.satisfied;
        checks.push(CheckResult {
            name: format!("constraint {}", c.description),
            anchor: format!("{}: function-slot precondition", model.description),
            samples: samples.max(1),
            max_residual: if c.satisfied { 0.0 } else { -c.worst },
            mean_residual: 0.0,
            tolerance: 0.0,
            pass: c.satisfied,
            note: (!c.satisfied).then(|| Error::ConstraintViolation(c.description.clone()).to_string()),
        });
    }
    let mut suite = Suite { model, pts: Vec::new(), seed, checks };
    if !violated {
        suite.pts = model.sample_points(samples, seed)?;
        run_model_checks(&mut suite, tol)?;
    }
    let checks = suite.checks;
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        schema: REPORT_SCHEMA,
        environment: Environment {
            model: model.id.clone(),
            seed,
            samples,
            gauge: None,
            parameters: model.params.clone(),
            functions: model.functions.iter().map(|f| (f.name.clone(), f.body.to_string())).collect(),
        },
        notes: model.notes.clone(),
        checks,
        pass,
    })
}

fn run_model_checks(suite: &mut Suite, tol: &Tolerances) -> Result<()> {
    let model = suite.model;
    let desc = model.description.as_str();
    suite.run("curl".into(), format!("{desc}: magnetic field"), tol.curl, |x, _| ok(curl_residual(model, x)));
    suite.run("hamiltonian form".into(), format!("{desc}: expanded Hamiltonian"), tol.h_form, |x, _| {
        ok(hamiltonian_form_residual(model, x))
    });
    for k in &model.operators {
        torsion_and_compat(suite, &k.name, desc, k, tol);
    }
    for (a, b) in &model.algebras {
        let (k1, k2) = (model.operator(a)?, model.operator(b)?);
        suite.run(format!("algebra {a},{b}"), format!("{desc}: Abelian Haantjes algebra"), tol.algebra, |x, rng| {
            ok(algebra_axiom_check(&k1, &k2, x, TRIALS, rng).map(|r| r.max()))
        });
    }
    let id = |x: &PhasePoint| Ok(*x);
    for c in &model.chains {
        chain_check(suite, &c.name, desc, c, &id, tol.chain);
    }
    for b in &model.brackets {
        suite.run(format!("bracket {{{},{}}}", b.f, b.g), format!("{desc}: Poisson brackets"), tol.bracket, |x, _| {
            ok(bracket_residual(model, b, x))
        });
    }
    for (f, g) in &model.separable {
        let (ff, gg) = (model.field(f)?, model.field(g)?);
        suite.run(format!("separable {{{f},{g}}}"), format!("{desc}: total separable involution"), tol.separable, |x, _| {
            ok(separable_residual(ff, gg, x))
        });
    }
    for s in &model.spectra {
        let anchor = if s.stated { format!("{desc}: spectrum") } else { format!("{desc}: spectrum (tool-derived)") };
        suite.run(format!("spectrum {}", s.operator), anchor, tol.spectrum, |x, _| {
            let (r, semisimple) = spectrum_residual(model, s, x, tol.spectrum.max(1e-9))?;
            Ok((r, (!semisimple).then(|| "eigenvalue with Riesz index above 1".to_string())))
        });
    }
    for chart in &model.charts {
        let n = &chart.name;
        let anchor = format!("{desc}: chart {n}");
        let part = |f: fn(&crate::models::ChartReport) -> f64| {
            move |x: &PhasePoint, _: &mut ChaCha8Rng| -> Sample { ok(chart_point_report(model, chart, x).map(|r| f(&r))) }
        };
        suite.run(format!("chart {n}: canonical"), anchor.clone(), tol.canonical, part(|r| r.canonical));
        suite.run(format!("chart {n}: hamiltonian"), anchor.clone(), tol.chart_form, part(|r| r.hamiltonian));
        if !chart.operators.is_empty() {
            suite.run(format!("chart {n}: diagonal"), anchor.clone(), tol.diagonal, part(|r| r.offdiag));
            suite.run(format!("chart {n}: operator forms"), anchor.clone(), tol.diagonal, part(|r| r.operator_match));
        }
        if !chart.integrals.is_empty() {
            suite.run(format!("chart {n}: integrals"), anchor.clone(), tol.chart_form, part(|r| r.integrals));
        }
        if !chart.identities.is_empty() {
            suite.run(format!("chart {n}: identities"), anchor.clone(), tol.chart_form, part(|r| r.identities));
        }
        if chart.separable {
            suite.run(format!("chart {n}: separable"), anchor.clone(), tol.separable, part(|r| r.separable));
        }
    }
    for att in &model.stackel {
        let n = &att.spec.name;
        let anchor = format!("{desc}: Stäckel matrix {n}");
        let map = |x: &PhasePoint| model.stackel_point(att, x);
        suite.run(format!("stackel {n}: separation"), anchor.clone(), tol.stackel, |x, _| {
            ok(verify_separation_equations(&att.spec, &att.recombination, &map(x)?))
        });
        suite.run(format!("stackel {n}: cofactors"), anchor.clone(), tol.cofactor, |x, _| {
            let y = map(x)?;
            ok(att.spec.cofactor_data(&[y[0], y[1], y[2]]).map(|c| c.identity_residual()))
        });
        let akn = akn_fields(&att.spec);
        for (j, k) in att.operators.iter().enumerate() {
            let label = format!("{n}:K{}", j + 1);
            suite.run(format!("torsion {label}"), format!("{anchor}: Haantjes torsion"), tol.torsion, |x, _| {
                ok(haantjes_residual(k, &map(x)?))
            });
            suite.run(format!("compat {label}"), format!("{anchor}: symplectic compatibility"), tol.compat, |x, rng| {
                ok(symplectic_compat(k, &map(x)?, TRIALS, rng))
            });
            let c = ChainSpec::new(&label, akn[0].clone(), k.clone(), Some(akn[j].clone()));
            chain_check(suite, &format!("{label} -> H{}", j + 1), &anchor, &c, &map, tol.chain);
        }
    }
    if model.hj.is_some() {
        let seed = suite.seed;
        let outcomes: Vec<Sample> = (0..suite.pts.len())
            .into_par_iter()
            .map(|i| {
                let (h, q) = hj_draw(model, &mut sample_rng(seed, usize::MAX - 1, i))?;
                ok(hj_residual(model, &h, &q))
            })
            .collect();
        suite.record("hj branches".into(), format!("{desc}: Hamilton-Jacobi complete integral"), tol.hj, outcomes);
    }
    if !model.periodic.is_empty() {
        let r = periodicity_residual(model, &suite.pts);
        let outcomes = vec![r.and_then(|v| {
            if v >= tol.periodicity {
                return Err(Error::PeriodicityViolation(format!("|f(phi + 2pi) - f(phi)| = {v:e}")));
            }
            Ok((v, None))
        })];
        suite.record("periodicity".into(), format!("{desc}: periodic function slots"), tol.periodicity, outcomes);
    }
    Ok(())
}
