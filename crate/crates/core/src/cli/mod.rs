//! Batch front end: `eval`, `residual`, `solve` and `verify` over a problem file.
//!
//! Every command produces a human-readable report and a JSON object with the
//! same content. JSON layout (`schema_version` 1):
//!
//! ```text
//! { "schema_version": 1, "command": "...", "problem": {...},
//!   "result": {...}, "residual": {...}, "timings": {"total_ms": ...} }
//! ```
//!
//! `timings` is the only field that varies between identical runs.

pub mod file;
mod report;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use crate::gridfn::GridFunction;
use crate::solver::{solve, SolveError};
use crate::varproblem::ProblemError;
pub use file::{parse_problem, InputError, ProblemFile};
use report::{g6, problem_summary, residual_report, solve_json, trace_csv};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
/// `verify` found an identity error above tolerance.
pub const EXIT_IDENTITY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

/// Interchange identities must hold to this absolute error.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eval,
    Residual,
    Solve,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Residual => "residual",
            Command::Solve => "solve",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
}

/// Result of one command: exit code plus both renderings of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub human: String,
    pub json: Value,
}

enum Failure {
    Input(InputError),
    Domain(String),
    Io(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e)
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        if e.is_domain() {
            Failure::Domain(e.to_string())
        } else {
            Failure::Input(InputError {
                location: None,
                message: e.to_string(),
            })
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Initial(p) | SolveError::Problem(p) => p.into(),
            SolveError::Options(m) => Failure::Input(InputError { location: None, message: m }),
        }
    }
}

struct Report {
    code: i32,
    human: String,
    body: serde_json::Map<String, Value>,
}

/// Runs `command` on the problem file at `path`.
pub fn run(command: Command, path: &Path, flags: &Flags) -> Outcome {
    let started = Instant::now();
    let result = fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
        .and_then(|text| Ok(parse_problem(&text, flags.resolution)?))
        .and_then(|pf| dispatch(command, &pf, path, flags));
    let mut json = serde_json::Map::new();
    json.insert("schema_version".into(), json!(SCHEMA_VERSION));
    json.insert("command".into(), json!(command.name()));
    let (code, human) = match result {
        Ok(r) => {
            json.extend(r.body);
            (r.code, r.human)
        }
        Err(f) => {
            let (code, kind, message, location) = match f {
                Failure::Input(e) => (EXIT_INPUT, "input", e.to_string(), e.location),
                Failure::Domain(m) => (EXIT_DOMAIN, "domain", m, None),
                Failure::Io(m) => (EXIT_INPUT, "io", m, None),
            };
            let mut err = json!({ "kind": kind, "message": message });
            if let Some((line, col)) = location {
                err["line"] = json!(line);
                err["column"] = json!(col);
            }
            json.insert("error".into(), err);
            (code, format!("error: {message}\n"))
        }
    };
    json.insert("exit_code".into(), json!(code));
    json.insert(
        "timings".into(),
        json!({ "total_ms": started.elapsed().as_secs_f64() * 1e3 }),
    );
    Outcome {
        code,
        human,
        json: Value::Object(json),
    }
}

fn dispatch(command: Command, pf: &ProblemFile, path: &Path, flags: &Flags) -> Result<Report, Failure> {
    let mut body = serde_json::Map::new();
    body.insert("problem".into(), problem_summary(pf, path));
    let mut human = String::new();
    let p = &pf.problem;
    let _ = writeln!(human, "problem  {}", path.display());
    let _ = writeln!(
        human,
        "scale    {}  ({} nodes{})",
        p.timescale(),
        p.grid().len(),
        if p.timescale().is_regular() { ", regular" } else { "" }
    );
    let code = match command {
        Command::Eval => cmd_eval(pf, flags, &mut human, &mut body)?,
        Command::Residual => cmd_residual(pf, flags, &mut human, &mut body)?,
        Command::Solve => cmd_solve(pf, flags, &mut human, &mut body)?,
        Command::Verify => cmd_verify(pf, &mut human, &mut body)?,
    };
    Ok(Report { code, human, body })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_trajectory(path: &Path, x: &GridFunction) -> Result<(), Failure> {
    let mut buf = Vec::new();
    x.write_csv(&mut buf).map_err(|e| Failure::Io(e.to_string()))?;
    write_file(path, &buf)
}

fn trajectory_or_initializer(pf: &ProblemFile) -> Result<(GridFunction, &'static str), Failure> {
    Ok(match pf.trajectory()? {
        Some(x) => (x, "file"),
        None => (pf.problem.linear_initializer(), "linear initializer"),
    })
}

fn cmd_eval(
    pf: &ProblemFile,
    flags: &Flags,
    human: &mut String,
    body: &mut serde_json::Map<String, Value>,
) -> Result<i32, Failure> {
    let p = &pf.problem;
    let (x, source) = trajectory_or_initializer(pf)?;
    let inner = p.inner_integrals(&x)?;
    let value = p.objective().outer_value(&inner)?;
    let _ = writeln!(human, "trajectory from {source}");
    for (i, f) in inner.iter().enumerate() {
        let _ = writeln!(human, "F{} = {}", i + 1, g6(*f));
    }
    let _ = writeln!(human, "L  = {}", g6(value));
    let mut result = json!({
        "trajectory_source": source,
        "inner_integrals": inner,
        "objective": value,
    });
    if let [c] = p.constraints() {
        let g = c.functional().inner_integrals(&x)?;
        let k = c.functional().outer_value(&g)?;
        let _ = writeln!(human, "K  = {}  (target {}, violation {})", g6(k), g6(c.target()), g6(k - c.target()));
        result["constraint"] = json!({ "inner_integrals": g, "value": k, "target": c.target(), "violation": k - c.target() });
    }
    if let Some(path) = &flags.out {
        write_trajectory(path, &x)?;
    }
    body.insert("result".into(), result);
    Ok(EXIT_OK)
}

fn cmd_residual(
    pf: &ProblemFile,
    flags: &Flags,
    human: &mut String,
    body: &mut serde_json::Map<String, Value>,
) -> Result<i32, Failure> {
    let Some(x) = pf.trajectory()? else {
        return Err(Failure::Input(InputError {
            location: None,
            message: "residual needs a [trajectory] section".into(),
        }));
    };
    let (json, text, _) = residual_report(&pf.problem, &x)?;
    human.push_str(&text);
    body.insert("residual".into(), json);
    if let Some(path) = &flags.trace {
        write_file(path, trace_csv(&pf.problem, &x)?.as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn cmd_solve(
    pf: &ProblemFile,
    flags: &Flags,
    human: &mut String,
    body: &mut serde_json::Map<String, Value>,
) -> Result<i32, Failure> {
    let p = &pf.problem;
    let mut opts = pf.solve_options()?;
    if let Some(seed) = flags.seed {
        opts.seed = seed;
    }
    let r = solve(p, &opts)?;
    let _ = writeln!(
        human,
        "status   {}  ({} iterations{})",
        if r.converged { "converged" } else { "NOT converged" },
        r.iterations,
        if p.constraints().is_empty() { String::new() } else { format!(", {} penalty rounds", r.outer_rounds) }
    );
    let _ = writeln!(human, "L        {}", g6(r.objective));
    let _ = writeln!(human, "|grad|_1 {}  (tolerance {})", g6(r.gradient_norm), g6(r.gradient_tolerance));
    if !p.constraints().is_empty() {
        let _ = writeln!(human, "|K - d|  {}", g6(r.constraint_violation));
        let fmt = |l: Option<f64>| l.map_or_else(|| "undetermined".to_string(), g6);
        let _ = writeln!(human, "lambda   {} (least squares), {} (penalty)", fmt(r.lambda_estimate), fmt(r.lambda_penalty));
    }
    let grid = p.grid();
    if grid.len() <= 12 {
        for (t, v) in grid.nodes().iter().zip(r.x.values()) {
            let _ = writeln!(human, "x({}) = {}", g6(*t), g6(*v));
        }
    }
    let (residual, text, _) = residual_report(p, &r.x)?;
    human.push_str(&text);
    body.insert("result".into(), solve_json(&r));
    body.insert("residual".into(), residual);
    if let Some(path) = &flags.out {
        write_trajectory(path, &r.x)?;
    }
    if let Some(path) = &flags.trace {
        write_file(path, trace_csv(p, &r.x)?.as_bytes())?;
    }
    Ok(if r.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// Sample functions for the identity suite when the file has no trajectory.
fn sample_functions(pf: &ProblemFile) -> Result<Vec<(String, GridFunction)>, Failure> {
    let grid = pf.problem.grid().clone();
    let mut out = Vec::new();
    if let Some(x) = pf.trajectory()? {
        out.push(("trajectory".to_string(), x));
    }
    let samples: [(&str, fn(f64) -> f64); 3] = [
        ("sin(3t) + t^2/2", |t| (3.0 * t).sin() + t * t / 2.0),
        ("exp(-t) cos(5t)", |t| (-t).exp() * (5.0 * t).cos()),
        ("t^3 - t", |t| t * t * t - t),
    ];
    for (name, f) in samples {
        out.push((name.to_string(), GridFunction::from_fn(grid.clone(), f).map_err(ProblemError::from)?));
    }
    Ok(out)
}

fn cmd_verify(pf: &ProblemFile, human: &mut String, body: &mut serde_json::Map<String, Value>) -> Result<i32, Failure> {
    let p = &pf.problem;
    let grid = p.grid();
    let n = grid.len();
    let (a, b) = (p.timescale().a(), p.timescale().b());
    // integrate over [a, b] and over every pair of segment ends
    let mut bounds = vec![(a, b)];
    for s in p.timescale().segments() {
        for &lo in &[a, s.lo()] {
            if lo < s.hi() {
                bounds.push((lo, s.hi()));
            }
        }
    }
    let mut rows = Vec::new();
    let (mut worst_deriv, mut worst_int) = (0.0_f64, 0.0_f64);
    for (name, f) in sample_functions(pf)? {
        let nabla = f.nabla_derivative();
        let from_delta = f.nabla_deriv_from_delta();
        let delta = f.delta_derivative();
        let from_nabla = f.delta_deriv_from_nabla();
        let mut deriv: f64 = 0.0;
        for i in 1..n {
            deriv = deriv.max((nabla.values()[i] - from_delta.values()[i]).abs());
        }
        for i in 0..n - 1 {
            deriv = deriv.max((delta.values()[i] - from_nabla.values()[i]).abs());
        }
        let mut int: f64 = 0.0;
        for &(lo, hi) in &bounds {
            let d1 = f.delta_integral(lo, hi).map_err(ProblemError::from)?
                - f.integral_interchange_delta_to_nabla(lo, hi).map_err(ProblemError::from)?;
            let d2 = f.nabla_integral(lo, hi).map_err(ProblemError::from)?
                - f.integral_interchange_nabla_to_delta(lo, hi).map_err(ProblemError::from)?;
            int = int.max(d1.abs()).max(d2.abs());
        }
        worst_deriv = worst_deriv.max(deriv);
        worst_int = worst_int.max(int);
        rows.push(json!({ "function": name, "derivative_error": deriv, "integral_error": int }));
    }
    let ok = worst_deriv <= IDENTITY_TOLERANCE && worst_int <= IDENTITY_TOLERANCE;
    let _ = writeln!(human, "derivative interchange  f^nabla = (f^delta)^rho, f^delta = (f^nabla)^sigma   max error {}", g6(worst_deriv));
    let _ = writeln!(human, "integral interchange    int f dt = int f^rho nabla t, int f nabla t = int f^sigma dt   max error {}", g6(worst_int));

    // Euler-Lagrange forms on this scale, evaluated for the problem's objective
    let regular = p.timescale().is_regular();
    let (x, _) = trajectory_or_initializer(pf)?;
    let difference = crate::optimality::el_residuals(p, &x)
        .ok()
        .map(|tr| crate::optimality::el_residuals_differ_on_irregular(&tr));
    let forms = if regular { "regular: forms coincide" } else { "irregular: forms may differ" };
    match difference {
        Some(d) => {
            let _ = writeln!(human, "{forms}  (max |nabla form - delta form| = {})", g6(d));
        }
        None => {
            let _ = writeln!(human, "{forms}");
        }
    }
    let _ = writeln!(human, "verdict  {}", if ok { "identities hold" } else { "IDENTITY FAILURE" });
    body.insert(
        "result".into(),
        json!({
            "functions": rows,
            "max_derivative_error": worst_deriv,
            "max_integral_error": worst_int,
            "tolerance": IDENTITY_TOLERANCE,
            "identities_hold": ok,
            "regular": regular,
            "el_form_difference": difference,
        }),
    );
    Ok(if ok { EXIT_OK } else { EXIT_IDENTITY })
}

/// Removes the `timings` key, the only run-dependent part of a report.
pub fn without_timings(mut v: Value) -> Value {
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timings");
    }
    v
}
