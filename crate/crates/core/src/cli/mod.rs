//! Batch driver: catalog listing, verification and simulation runs.

pub mod verify;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dynamics::{conservation_report, integrate_model, write_csv, Drift, IntegratorConfig, Trajectory};
use crate::error::{Error, Result};
use crate::models::{build_model, catalog, Gauge, ModelRequest, ModelSpec};
use crate::phasespace::PhasePoint;

pub use verify::{run_verification, CheckResult, Environment, Tolerances, VerificationReport, REPORT_SCHEMA};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_DIVERGENCE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Everything that determines a run. Loadable from TOML or JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    pub samples: usize,
    pub seed: u64,
    pub gauge: Option<Gauge>,
    pub params: BTreeMap<String, f64>,
    /// Function slot name to expression text.
    pub functions: BTreeMap<String, String>,
    pub tol: Tolerances,
    pub integrator: IntegratorConfig,
    /// Initial state for `simulate`; a seeded admissible sample when absent.
    pub initial_state: Option<[f64; 6]>,
    /// Report path for `verify`, CSV path for `simulate`.
    pub out: Option<PathBuf>,
    /// Optional `t,<integrals>` data file for `simulate`.
    pub plot: Option<PathBuf>,
    /// Drift bound for `simulate`; exceeding it exits with a check failure.
    pub drift_tol: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: String::new(),
            samples: 100,
            seed: 0,
            gauge: None,
            params: BTreeMap::new(),
            functions: BTreeMap::new(),
            tol: Tolerances::default(),
            integrator: IntegratorConfig::default(),
            initial_state: None,
            out: None,
            plot: None,
            drift_tol: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file; `.json` is parsed as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn request(&self) -> ModelRequest {
        ModelRequest {
            id: self.model.clone(),
            params: self.params.clone(),
            functions: self.functions.clone(),
            gauge: self.gauge,
        }
    }

    pub fn build(&self) -> Result<ModelSpec> {
        if self.model.is_empty() {
            return Err(Error::Config("no model selected".into()));
        }
        build_model(&self.request())
    }
}

/// Catalog listing, as text or JSON.
pub fn cmd_list(json: bool) -> Result<String> {
    let entries = catalog();
    if json {
        return serde_json::to_string_pretty(&entries).map_err(|e| Error::Io(e.to_string()));
    }
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("{:<11} {}\n", e.id, e.description));
        out.push_str(&format!("{:<11} anchor: {}\n", "", e.anchor));
        if !e.params.is_empty() {
            let ps: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push_str(&format!("{:<11} params: {}\n", "", ps.join(", ")));
        }
        for (slot, var, default) in &e.functions {
            out.push_str(&format!("{:<11} fn {slot}({var}) = {default}\n", ""));
        }
    }
    Ok(out)
}

/// Runs the full verification suite of the configured model.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerificationReport> {
    let model = cfg.build()?;
    let mut report = run_verification(&model, cfg.samples, cfg.seed, &cfg.tol)?;
    if model.id == "constant-b" {
        report.environment.gauge = Some(cfg.gauge.unwrap_or_default().to_string());
    }
    Ok(report)
}

/// A finished simulation.
#[derive(Clone, Debug)]
pub struct SimulationOutput {
    pub trajectory: Trajectory,
    pub drifts: Vec<Drift>,
}

/// Integrates the configured model from its initial state.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulationOutput> {
    let model = cfg.build()?;
    let x0: PhasePoint = match cfg.initial_state {
        Some(x) => x,
        None => model.sample_points(1, cfg.seed)?[0],
    };
    let trajectory = integrate_model(&model, &x0, &cfg.integrator)?;
    let drifts = conservation_report(&trajectory)?;
    Ok(SimulationOutput { trajectory, drifts })
}

/// Writes `t,<integrals>` for plotting.
pub fn write_plot_data<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    writeln!(w, "t,{}", traj.integral_names.join(",")).map_err(io)?;
    for (s, t) in traj.times.iter().enumerate() {
        let mut line = format!("{t:.16e}");
        for col in &traj.integrals {
            line.push_str(&format!(",{:.16e}", col[s]));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    Ok(())
}

/// Exit code of a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NewtonDivergence { .. } | Error::DomainExit(_) => EXIT_DIVERGENCE,
        Error::Config(_)
        | Error::Syntax { .. }
        | Error::UnknownFunction(_)
        | Error::UnknownVariable(_)
        | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

#[derive(Parser, Debug)]
#[command(name = "omegah", version, about = "Verify symplectic-Haantjes structures of magnetic Hamiltonian systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the model catalog.
    List {
        /// Machine-readable listing.
        #[arg(long)]
        json: bool,
    },
    /// Run every check of a model over seeded samples.
    Verify(RunArgs),
    /// Integrate a model and report the drift of its integrals.
    Simulate(SimArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Catalog model id.
    model: Option<String>,
    /// TOML or JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    gauge: Option<String>,
    /// Function slot override, `name=expr`.
    #[arg(long = "fn", value_name = "NAME=EXPR")]
    functions: Vec<String>,
    /// Parameter override, `name=value`.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Tolerance override, `check=value` (also written `--tol.check value`).
    #[arg(long = "tol", value_name = "CHECK=VALUE")]
    tols: Vec<String>,
    /// Output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print JSON to stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    #[arg(long = "newton-tol")]
    newton_tol: Option<f64>,
    #[arg(long = "max-newton-iters")]
    max_newton_iters: Option<usize>,
    /// Initial state `q1,q2,q3,p1,p2,p3`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x0: Option<Vec<f64>>,
    /// `t,<integrals>` data file.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Fail when any integral drifts more than this.
    #[arg(long = "drift-tol")]
    drift_tol: Option<f64>,
}

fn split_pair(s: &str, what: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("{what} `{s}` is not of the form name=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn number(s: &str, what: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Config(format!("{what}: `{s}` is not a number")))
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.model {
            cfg.model = m.clone();
        }
        if let Some(n) = self.samples {
            cfg.samples = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(g) = &self.gauge {
            cfg.gauge = Some(g.parse()?);
        }
        for f in &self.functions {
            let (k, v) = split_pair(f, "--fn")?;
            cfg.functions.insert(k, v);
        }
        for p in &self.params {
            let (k, v) = split_pair(p, "--param")?;
            let x = number(&v, &format!("parameter `{k}`"))?;
            cfg.params.insert(k, x);
        }
        for t in &self.tols {
            let (k, v) = split_pair(t, "--tol")?;
            let x = number(&v, &format!("tolerance `{k}`"))?;
            cfg.tol.set(&k, x)?;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        Ok(cfg)
    }
}

impl SimArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = self.run.config()?;
        let ic = &mut cfg.integrator;
        ic.dt = self.dt.unwrap_or(ic.dt);
        ic.t_final = self.t_final.unwrap_or(ic.t_final);
        ic.newton_tol = self.newton_tol.unwrap_or(ic.newton_tol);
        ic.max_newton_iters = self.max_newton_iters.unwrap_or(ic.max_newton_iters);
        if let Some(x) = &self.x0 {
            cfg.initial_state = Some(x.clone().try_into().map_err(|_| Error::Config("--x0 needs six values".into()))?);
        }
        if let Some(p) = &self.plot {
            cfg.plot = Some(p.clone());
        }
        if let Some(d) = self.drift_tol {
            cfg.drift_tol = Some(d);
        }
        Ok(cfg)
    }
}

/// Rewrites `--tol.<check> v` into `--tol <check>=v` and bare catalog
/// parameters `--b 1` into `--param b=1`.
fn normalize_args(args: Vec<String>) -> Vec<String> {
    let params: Vec<&str> = catalog().iter().flat_map(|e| e.params.iter().map(|(k, _)| *k).collect::<Vec<_>>()).collect();
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let (flag, inline) = match a.split_once('=') {
            Some((f, v)) if a.starts_with("--") => (f.to_string(), Some(v.to_string())),
            _ => (a.clone(), None),
        };
        let rewritten = if let Some(check) = flag.strip_prefix("--tol.") {
            Some(("--tol", check.to_string()))
        } else {
            flag.strip_prefix("--").filter(|n| params.contains(n)).map(|n| ("--param", n.to_string()))
        };
        match rewritten {
            Some((target, name)) => match inline.or_else(|| it.next()) {
                Some(v) => {
                    out.push(target.to_string());
                    out.push(format!("{name}={v}"));
                }
                None => out.push(a),
            },
            None => out.push(a),
        }
    }
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn report_text(report: &VerificationReport) -> String {
    let mut s = String::new();
    for c in &report.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        s.push_str(&format!("{status} {:<40} max {:.3e} mean {:.3e} tol {:.1e}", c.name, c.max_residual, c.mean_residual, c.tolerance));
        if let Some(n) = &c.note {
            s.push_str(&format!("  ({n})"));
        }
        s.push('\n');
    }
    for n in &report.notes {
        s.push_str(&format!("note: {n}\n"));
    }
    let failed = report.failures().count();
    s.push_str(&format!(
        "{}: {} checks, {} failed, model {}, seed {}\n",
        if report.pass { "PASS" } else { "FAIL" },
        report.checks.len(),
        failed,
        report.environment.model,
        report.environment.seed
    ));
    s
}

fn verify_main(args: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = args.config()?;
    let report = cmd_verify(&cfg)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))? + "\n";
    if let Some(p) = &cfg.out {
        write_file(p, json.as_bytes())?;
    }
    let text = if args.json { json } else { report_text(&report) };
    out.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string()))?;
    Ok(if report.pass { EXIT_PASS } else { EXIT_FAIL })
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    model: &'a str,
    steps: usize,
    dt: f64,
    t_final: f64,
    initial_state: PhasePoint,
    newton_fallback_steps: &'a [usize],
    drifts: &'a [Drift],
    #[serde(skip_serializing_if = "Option::is_none")]
    drift_tol: Option<f64>,
    pass: bool,
}

fn simulate_main(args: &SimArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = args.config()?;
    let sim = cmd_simulate(&cfg)?;
    let traj = &sim.trajectory;
    let mut csv = Vec::new();
    write_csv(traj, &mut csv)?;
    if let Some(p) = &cfg.plot {
        let mut buf = Vec::new();
        write_plot_data(traj, &mut buf)?;
        write_file(p, &buf)?;
    }
    let pass = cfg.drift_tol.map_or(true, |tol| sim.drifts.iter().all(|d| !(d.max_drift >= tol)));
    let summary = SimulationSummary {
        model: &cfg.model,
        steps: traj.times.len() - 1,
        dt: cfg.integrator.dt,
        t_final: cfg.integrator.t_final,
        initial_state: traj.states[0],
        newton_fallback_steps: &traj.fallback_steps,
        drifts: &sim.drifts,
        drift_tol: cfg.drift_tol,
        pass,
    };
    let text = if args.run.json {
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))? + "\n"
    } else {
        let mut s = String::new();
        for d in &sim.drifts {
            s.push_str(&format!("{:<8} max drift {:.3e} slope {:.3e}\n", d.name, d.max_drift, d.slope));
        }
        s.push_str(&format!("{}: {} steps of dt {}\n", if pass { "PASS" } else { "FAIL" }, summary.steps, summary.dt));
        s
    };
    let io = |e: std::io::Error| Error::Io(e.to_string());
    match &cfg.out {
        Some(p) => {
            write_file(p, &csv)?;
            out.write_all(text.as_bytes()).map_err(io)?;
        }
        None => {
            out.write_all(&csv).map_err(io)?;
            err.write_all(text.as_bytes()).map_err(io)?;
        }
    }
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run(args: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(normalize_args(args)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::List { json } => cmd_list(*json).and_then(|s| {
            out.write_all(s.as_bytes()).map_err(|e| Error::Io(e.to_string()))?;
            if *json {
                let _ = out.write_all(b"\n");
            }
            Ok(EXIT_PASS)
        }),
        Command::Verify(a) => verify_main(a, out),
        Command::Simulate(a) => simulate_main(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &[&str]) -> Vec<String> {
        s.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn tolerance_flags_are_rewritten() {
        let a = normalize_args(args(&["omegah", "verify", "undulator", "--tol.torsion", "1e-6", "--tol.chain=1e-7"]));
        assert_eq!(&a[3..], &["--tol", "torsion=1e-6", "--tol", "chain=1e-7"]);
    }

    #[test]
    fn bare_parameters_are_rewritten() {
        let a = normalize_args(args(&["omegah", "verify", "undulator", "--a", "2", "--b3=0.5", "--seed", "3"]));
        assert_eq!(&a[3..], &["--param", "a=2", "--param", "b3=0.5", "--seed", "3"]);
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(args(&["omegah", "list", "--bogus"]), &mut o, &mut e), EXIT_USAGE);
    }

    #[test]
    fn unknown_tolerance_is_a_usage_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(args(&["omegah", "verify", "cyl-case1", "--tol.nope", "1"]), &mut o, &mut e);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut cfg = RunConfig { model: "family-b".into(), seed: 9, ..Default::default() };
        cfg.functions.insert("psi1".into(), "2 + sin(x)".into());
        cfg.tol.set("chain", 1e-7).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
