//! Pointwise residuals of the model claims.

use rand::Rng;
use serde::Serialize;

use super::{Branch, BracketClaim, ChartMap, ConstraintKind, ModelSpec, SpectrumClaim};
use crate::error::{Error, Result};
use crate::geometry::curl;
use crate::hamiltonian::separable_involution;
use crate::numcore::SmallMatrix;
use crate::phasespace::{canonical_j, ScalarField, PhasePoint, DIM};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// `|curl A − B_declared|` relative to `max(1, |B|)`.
pub fn curl_residual(model: &ModelSpec, x: &PhasePoint) -> Result<f64> {
    let q = [x[0], x[1], x[2]];
    let b = curl(&model.system.chart, &model.system.potential, &q)?.components;
    let d = (model.declared_b)(&q)?;
    let scale = d.iter().chain(&b).fold(1.0f64, |m, v| m.max(v.abs()));
    Ok((0..3).map(|i| (b[i] - d[i]).abs()).fold(0.0, f64::max) / scale)
}

/// `H` from `(chart, A, V)` against the expanded closed form, relative.
pub fn hamiltonian_form_residual(model: &ModelSpec, x: &PhasePoint) -> Result<f64> {
    let h = model.h().value(x)?;
    let expanded = model.system.expanded_field()?.value(x)?;
    Ok(rel(h, model.declared_h.value(x)?).max(rel(expanded, h)))
}

/// Gradients of two fields and the magnitude of their bracket terms.
fn bracket_terms(f: &ScalarField, g: &ScalarField, x: &PhasePoint) -> Result<f64> {
    let df = f.gradient(x)?;
    let dg = g.gradient(x)?;
    Ok((0..3).map(|k| (df[k] * dg[k + 3]).abs() + (df[k + 3] * dg[k]).abs()).sum())
}

/// `|{F,G} − expected|` relative to `max(1, Σ|terms|)`.
pub fn bracket_residual(model: &ModelSpec, claim: &BracketClaim, x: &PhasePoint) -> Result<f64> {
    let f = model.field(&claim.f)?;
    let g = model.field(&claim.g)?;
    let s = separable_involution(f, g, x)?;
    let expected = match &claim.expected {
        Some(e) => e.value(x)?,
        None => 0.0,
    };
    let scale = bracket_terms(f, g, x)?.max(expected.abs()).max(1.0);
    Ok((s.iter().sum::<f64>() - expected).abs() / scale)
}

/// Largest per-index bracket summand, relative to `max(1, Σ|terms|)`.
pub fn separable_residual(f: &ScalarField, g: &ScalarField, x: &PhasePoint) -> Result<f64> {
    let s = separable_involution(f, g, x)?;
    let scale = bracket_terms(f, g, x)?.max(1.0);
    Ok(s.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale)
}

/// Distance between the computed and declared spectra as sorted lists with
/// multiplicity, relative to `max(1, max|λ|)`, and whether every eigenvalue
/// has Riesz index 1.
pub fn spectrum_residual(model: &ModelSpec, claim: &SpectrumClaim, x: &PhasePoint, tol: f64) -> Result<(f64, bool)> {
    let k = model.operator(&claim.operator)?;
    let eig = k.matrix(x)?.eig_real(tol)?;
    let mut computed = Vec::with_capacity(DIM);
    for e in &eig.eigenvalues {
        computed.extend(std::iter::repeat(e.value).take(e.multiplicity));
    }
    let mut declared = Vec::with_capacity(DIM);
    for (f, m) in &claim.values {
        let v = f.value(x)?;
        declared.extend(std::iter::repeat(v).take(*m));
    }
    if declared.len() != computed.len() {
        return Err(Error::Dimension(format!(
            "spectrum of {} has {} declared and {} computed eigenvalues",
            claim.operator,
            declared.len(),
            computed.len()
        )));
    }
    declared.sort_by(f64::total_cmp);
    let scale = computed.iter().chain(&declared).fold(1.0f64, |m, v| m.max(v.abs()));
    let r = computed.iter().zip(&declared).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
    Ok((r, eig.is_semisimple()))
}

/// Chart residuals at one point or the maxima over a batch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ChartReport {
    /// `‖MᵀJM − J‖` relative to `max(1, ‖M‖²)`.
    pub canonical: f64,
    /// Off-diagonal mass of `MKM⁻¹` relative to `max(1, ‖MKM⁻¹‖)`.
    pub offdiag: f64,
    /// Diagonal of `MKM⁻¹` against the declared diagonal form.
    pub operator_match: f64,
    /// `H` against the declared form in the new chart.
    pub hamiltonian: f64,
    /// Integrals against their declared forms in the new chart.
    pub integrals: f64,
    /// Declared identities between the two charts.
    pub identities: f64,
    /// Per-index separable involution of the new-chart integrals.
    pub separable: f64,
}

impl ChartReport {
    fn merge(self, o: ChartReport) -> ChartReport {
        ChartReport {
            canonical: self.canonical.max(o.canonical),
            offdiag: self.offdiag.max(o.offdiag),
            operator_match: self.operator_match.max(o.operator_match),
            hamiltonian: self.hamiltonian.max(o.hamiltonian),
            integrals: self.integrals.max(o.integrals),
            identities: self.identities.max(o.identities),
            separable: self.separable.max(o.separable),
        }
    }
}

/// Every chart residual at `x` (old coordinates).
pub fn chart_point_report(model: &ModelSpec, chart: &ChartMap, x: &PhasePoint) -> Result<ChartReport> {
    let jac = chart.forward.jacobian(x)?;
    let m = SmallMatrix::from_rows(&jac);
    let j = canonical_j();
    let canonical = (m.transpose() * j * m - j).norm_max() / m.norm_max().powi(2).max(1.0);
    let y = chart.map(x)?;
    let minv = m.inverse()?;
    let mut offdiag: f64 = 0.0;
    let mut operator_match: f64 = 0.0;
    for (name, declared) in &chart.operators {
        let c = m * model.operator(name)?.matrix(x)? * minv;
        let scale = c.norm_max().max(1.0);
        offdiag = offdiag.max(c.off_diagonal_max() / scale);
        let d = declared.matrix(&y)?;
        for i in 0..DIM {
            operator_match = operator_match.max((c[(i, i)] - d[(i, i)]).abs() / scale.max(d[(i, i)].abs()));
        }
    }
    let hamiltonian = rel(chart.hamiltonian.value(&y)?, model.h().value(x)?);
    let mut integrals: f64 = 0.0;
    for (name, f) in &chart.integrals {
        integrals = integrals.max(rel(f.value(&y)?, model.field(name)?.value(x)?));
    }
    let mut identities: f64 = 0.0;
    for (_, l, r) in &chart.identities {
        identities = identities.max(rel(l.value(&y)?, r.value(x)?));
    }
    let mut separable: f64 = 0.0;
    if chart.separable {
        let fields: Vec<&ScalarField> =
            std::iter::once(&chart.hamiltonian).chain(chart.integrals.iter().map(|(_, f)| f)).collect();
        for a in 0..fields.len() {
            for b in a + 1..fields.len() {
                separable = separable.max(separable_residual(fields[a], fields[b], &y)?);
            }
        }
    }
    Ok(ChartReport { canonical, offdiag, operator_match, hamiltonian, integrals, identities, separable })
}

/// Maxima of [`chart_point_report`] over `pts`.
pub fn dh_chart_check(model: &ModelSpec, chart: &ChartMap, pts: &[PhasePoint]) -> Result<ChartReport> {
    let mut out = ChartReport::default();
    for x in pts {
        if chart.domain_margin(x)? <= 0.0 {
            return Err(Error::Domain(format!("point outside the domain of chart `{}`", chart.name)));
        }
        out = out.merge(chart_point_report(model, chart, x)?);
    }
    Ok(out)
}

/// An admissible `(h, q)` pair: `h` holds the separated integrals at an
/// admissible sample, so `q` lies in the classically allowed region.
pub fn hj_draw<R: Rng>(model: &ModelSpec, rng: &mut R) -> Result<([f64; 3], [f64; 3])> {
    let hj = model.hj.as_ref().ok_or_else(|| Error::Config(format!("model `{}` has no HJ data", model.id)))?;
    for _ in 0..1000 {
        let x = model.draw(rng);
        if !model.admissible(&x) {
            continue;
        }
        let mut h = [0.0; 3];
        for (k, name) in hj.integrals.iter().enumerate() {
            h[k] = model.field(name)?.value(&x)?;
        }
        return Ok((h, [x[0], x[1], x[2]]));
    }
    Err(Error::SingularPoint(format!("model `{}`: no admissible HJ draw", model.id)))
}

/// Substitutes every sign choice of the separated momenta into the
/// separated integrals and returns the largest `|F_k − h_k|`, relative to
/// `max(1, |h_k|)`.
pub fn hj_residual(model: &ModelSpec, h: &[f64; 3], q: &[f64; 3]) -> Result<f64> {
    let hj = model.hj.as_ref().ok_or_else(|| Error::Config(format!("model `{}` has no HJ data", model.id)))?;
    let args = [q[0], q[1], q[2], h[0], h[1], h[2]];
    let mut mags = [0.0; 3];
    let mut signed = [false; 3];
    for (k, b) in hj.branches.iter().enumerate() {
        match b {
            Branch::Sqrt(r) => {
                let v = r.eval(&args)?;
                if v < -1e-12 * h.iter().fold(1.0f64, |m, x| m.max(x.abs())) {
                    return Err(Error::ForbiddenRegion(format!("radicand {v:e} of branch {} at q = {q:?}", k + 1)));
                }
                mags[k] = v.max(0.0).sqrt();
                signed[k] = true;
            }
            Branch::Exact(e) => mags[k] = e.eval(&args)?,
        }
    }
    let fields = hj.integrals.iter().map(|n| model.field(n)).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for mask in 0..8u8 {
        if (0..3).any(|k| !signed[k] && mask & (1 << k) != 0) {
            continue;
        }
        let p: [f64; 3] = std::array::from_fn(|k| if mask & (1 << k) != 0 { -mags[k] } else { mags[k] });
        let x = [q[0], q[1], q[2], p[0], p[1], p[2]];
        for (k, f) in fields.iter().enumerate() {
            worst = worst.max(rel(f.value(&x)?, h[k]));
        }
    }
    Ok(worst)
}

/// Outcome of one declared constraint over raw samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintOutcome {
    pub description: String,
    pub satisfied: bool,
    /// Smallest value of the constraint function (sign-normalized for
    /// constant-sign constraints).
    pub worst: f64,
}

/// Checks every constraint at `n` raw draws from the sample box.
pub fn constraint_report<R: Rng>(model: &ModelSpec, n: usize, rng: &mut R) -> Result<Vec<ConstraintOutcome>> {
    let qs: Vec<[f64; 3]> = (0..n).map(|_| model.draw(rng)).map(|x| [x[0], x[1], x[2]]).collect();
    let mut out = Vec::with_capacity(model.constraints.len());
    for c in &model.constraints {
        let vals = qs.iter().map(|q| c.f.eval(q)).collect::<Result<Vec<_>>>()?;
        let sign = match c.kind {
            ConstraintKind::Positive => 1.0,
            ConstraintKind::ConstantSign => vals.first().map_or(1.0, |v| v.signum()),
        };
        let worst = vals.iter().map(|v| sign * v).fold(f64::INFINITY, f64::min);
        let satisfied = worst > 0.0 && vals.iter().all(|v| v.is_finite());
        out.push(ConstraintOutcome { description: c.description.clone(), satisfied, worst });
    }
    Ok(out)
}

/// `max |f(t + P) − f(t)|` over the declared periodic functions, with `t`
/// taken from the second coordinate of each point.
pub fn periodicity_residual(model: &ModelSpec, pts: &[PhasePoint]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in &model.periodic {
        for x in pts {
            let a = p.function.eval(&[x[1]])?;
            let b = p.function.eval(&[x[1] + p.period])?;
            worst = worst.max(rel(a, b));
        }
    }
    Ok(worst)
}
