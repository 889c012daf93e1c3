//! Sectioned `key = value` problem files.
//!
//! ```text
//! [timescale]
//! segments = {0},{0.5},{1}
//! resolution = 1
//!
//! [objective]
//! sense = minimize
//! outer = F1/F2
//! delta = t*v        # F1
//! nabla = v^2        # F2
//!
//! [boundary]
//! a = fixed 0
//! b = fixed 1
//! ```
//!
//! Optional sections: `[constraint]` (`outer`, `delta`, `nabla`, `target`),
//! `[solver]` (option overrides) and `[trajectory]` (`values = …` or
//! `expr = …`). Delta integrands are numbered before nabla integrands
//! regardless of their order in the file. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::Expression;
use crate::gridfn::GridFunction;
use crate::solver::{Initializer, SolveOptions};
use crate::timescale::TimeScale;
use crate::varproblem::{
    BoundarySpec, CompositionFunctional, Endpoint, Integrand, IntegralKind, IsoConstraint, ProblemError, Sense,
    VariationalProblem,
};

pub const DEFAULT_RESOLUTION: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    /// 1-based line and column, when the error has a position.
    pub location: Option<(usize, usize)>,
    pub message: String,
}

impl InputError {
    fn at(line: usize, col: usize, message: impl Into<String>) -> Self {
        Self {
            location: Some((line, col)),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            location: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((l, c)) => write!(f, "line {l}, column {c}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    /// column of the first character of `value`
    col: usize,
}

impl Entry {
    fn err(&self, message: impl Into<String>) -> InputError {
        InputError::at(self.line, self.col, message)
    }

    fn number(&self) -> Result<f64, InputError> {
        let v: f64 = self
            .value
            .parse()
            .map_err(|_| self.err(format!("'{}' is not a number", self.value)))?;
        if !v.is_finite() {
            return Err(self.err(format!("'{}' is not finite", self.value)));
        }
        Ok(v)
    }

    fn count(&self) -> Result<usize, InputError> {
        self.value
            .parse()
            .map_err(|_| self.err(format!("'{}' is not a non-negative integer", self.value)))
    }

    fn expression(&self) -> Result<Expression, InputError> {
        Expression::parse(&self.value).map_err(|e| InputError::at(self.line, self.col + e.offset, e.to_string()))
    }
}

#[derive(Debug, Default)]
struct Section {
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn single(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn require(&self, name: &str, key: &str) -> Result<&Entry, InputError> {
        self.single(key)
            .ok_or_else(|| InputError::at(self.line, 1, format!("[{name}] is missing '{key}'")))
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }
}

const SECTIONS: [(&str, &[&str]); 6] = [
    ("timescale", &["segments", "resolution"]),
    ("objective", &["outer", "delta", "nabla", "sense"]),
    ("boundary", &["a", "b"]),
    ("constraint", &["outer", "delta", "nabla", "target"]),
    (
        "solver",
        &[
            "max_iterations",
            "gradient_tolerance",
            "constraint_tolerance",
            "initial_step",
            "backtrack",
            "sufficient_decrease",
            "max_backtracks",
            "initial_weight",
            "growth",
            "max_rounds",
            "memory",
            "restarts",
            "restart_amplitude",
            "seed",
            "initializer",
        ],
    ),
    ("trajectory", &["values", "expr"]),
];

const REPEATABLE: [&str; 2] = ["delta", "nabla"];

fn strip_quotes(value: &str) -> (&str, usize) {
    let b = value.as_bytes();
    if b.len() >= 2 && (b[0] == b'"' || b[0] == b'\'') && b[b.len() - 1] == b[0] {
        (&value[1..value.len() - 1], 1)
    } else {
        (value, 0)
    }
}

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>, InputError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if trimmed.starts_with('[') {
            let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) else {
                return Err(InputError::at(line, indent + 1, "malformed section header"));
            };
            let name = name.trim().to_string();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(InputError::at(line, indent + 1, format!("unknown section [{name}]")));
            }
            if sections.contains_key(&name) {
                return Err(InputError::at(line, indent + 1, format!("duplicate section [{name}]")));
            }
            sections.insert(name.clone(), Section { line, entries: Vec::new() });
            current = Some(name);
            continue;
        }
        let Some(name) = &current else {
            return Err(InputError::at(line, indent + 1, "key outside of any section"));
        };
        let Some(eq) = content.find('=') else {
            return Err(InputError::at(line, indent + 1, "expected 'key = value'"));
        };
        let key = content[..eq].trim().to_string();
        let allowed = SECTIONS.iter().find(|(s, _)| s == name).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key.as_str()) {
            return Err(InputError::at(line, indent + 1, format!("unknown key '{key}' in [{name}]")));
        }
        let after = &content[eq + 1..];
        let lead = after.len() - after.trim_start().len();
        let (value, quote) = strip_quotes(after.trim());
        let col = eq + 1 + lead + quote + 1;
        if value.trim().is_empty() {
            return Err(InputError::at(line, col, format!("'{key}' has an empty value")));
        }
        let section = sections.get_mut(name).expect("current section exists");
        if !REPEATABLE.contains(&key.as_str()) && section.single(&key).is_some() {
            return Err(InputError::at(line, indent + 1, format!("duplicate key '{key}' in [{name}]")));
        }
        section.entries.push(Entry {
            key,
            value: value.to_string(),
            line,
            col,
        });
    }
    Ok(sections)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectorySpec {
    Values(Vec<f64>),
    Expr(Expression),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: VariationalProblem,
    pub options: SolveOptions,
    pub trajectory: Option<TrajectorySpec>,
    /// `[solver] initializer = trajectory`
    pub start_from_trajectory: bool,
}

fn integrands(section: &Section) -> Result<Vec<Integrand>, InputError> {
    let mut out = Vec::new();
    for (key, kind) in [("delta", IntegralKind::Delta), ("nabla", IntegralKind::Nabla)] {
        for e in section.all(key) {
            let expr = e.expression()?;
            out.push(Integrand::new(kind, expr).map_err(|err| e.err(err.to_string()))?);
        }
    }
    Ok(out)
}

fn problem_err(entry: &Entry, e: ProblemError) -> InputError {
    entry.err(match e {
        ProblemError::Invalid(m) => m,
        other => other.to_string(),
    })
}

fn endpoint(e: &Entry) -> Result<Endpoint, InputError> {
    let mut words = e.value.split_whitespace();
    match (words.next(), words.next(), words.next()) {
        (Some("free"), None, _) => Ok(Endpoint::Free),
        (Some("fixed"), Some(v), None) => {
            let probe = Entry {
                value: v.to_string(),
                ..e.clone()
            };
            Ok(Endpoint::Fixed(probe.number()?))
        }
        _ => Err(e.err(format!("expected 'fixed <value>' or 'free', got '{}'", e.value))),
    }
}

/// Parses a problem file. `resolution` overrides the file's `[timescale] resolution`.
pub fn parse_problem(text: &str, resolution: Option<usize>) -> Result<ProblemFile, InputError> {
    let sections = split_sections(text)?;
    let section = |name: &str| {
        sections
            .get(name)
            .ok_or_else(|| InputError::general(format!("missing section [{name}]")))
    };

    let ts = section("timescale")?;
    let seg = ts.require("timescale", "segments")?;
    let timescale = TimeScale::parse(&seg.value).map_err(|e| seg.err(e.to_string()))?;
    let resolution = match (resolution, ts.single("resolution")) {
        (Some(r), _) => r,
        (None, Some(e)) => e.count()?,
        (None, None) => DEFAULT_RESOLUTION,
    };
    if resolution == 0 {
        let at = ts.single("resolution").map_or((ts.line, 1), |e| (e.line, e.col));
        return Err(InputError::at(at.0, at.1, "resolution must be positive"));
    }

    let obj = section("objective")?;
    let outer = obj.require("objective", "outer")?;
    let functional = CompositionFunctional::new(outer.expression()?, integrands(obj)?).map_err(|e| problem_err(outer, e))?;
    let sense = match obj.single("sense") {
        None => Sense::Minimize,
        Some(e) => match e.value.as_str() {
            "minimize" | "min" => Sense::Minimize,
            "maximize" | "max" => Sense::Maximize,
            other => return Err(e.err(format!("sense must be 'minimize' or 'maximize', got '{other}'"))),
        },
    };

    let bc = section("boundary")?;
    let boundary = BoundarySpec {
        at_a: endpoint(bc.require("boundary", "a")?)?,
        at_b: endpoint(bc.require("boundary", "b")?)?,
    };
    let mut problem = VariationalProblem::new(timescale, resolution, functional, sense, boundary)
        .map_err(|e| InputError::general(e.to_string()))?;

    if let Some(c) = sections.get("constraint") {
        let outer = c.require("constraint", "outer")?;
        let target = c.require("constraint", "target")?.number()?;
        let constraint = IsoConstraint::new(outer.expression()?, integrands(c)?, target).map_err(|e| problem_err(outer, e))?;
        problem = problem.with_constraint(constraint);
    }

    let (options, start_from_trajectory) = match sections.get("solver") {
        Some(s) => solver_options(s)?,
        None => (SolveOptions::default(), false),
    };

    let trajectory = match sections.get("trajectory") {
        None => None,
        Some(t) => match (t.single("values"), t.single("expr")) {
            (Some(_), Some(e)) => return Err(e.err("give either 'values' or 'expr', not both")),
            (Some(v), None) => {
                let mut values = Vec::new();
                for part in v.value.split(',') {
                    let probe = Entry {
                        value: part.trim().to_string(),
                        ..v.clone()
                    };
                    values.push(probe.number()?);
                }
                if values.len() != problem.grid().len() {
                    return Err(v.err(format!(
                        "trajectory has {} values but the grid has {} nodes",
                        values.len(),
                        problem.grid().len()
                    )));
                }
                Some(TrajectorySpec::Values(values))
            }
            (None, Some(e)) => {
                let expr = e.expression()?;
                if let Some(bad) = expr.free_vars().iter().find(|v| *v != "t") {
                    return Err(e.err(format!("unknown variable {bad} (trajectory expressions use t)")));
                }
                Some(TrajectorySpec::Expr(expr))
            }
            (None, None) => return Err(InputError::at(t.line, 1, "[trajectory] needs 'values' or 'expr'")),
        },
    };
    if start_from_trajectory && trajectory.is_none() {
        return Err(InputError::general("initializer = trajectory needs a [trajectory] section"));
    }

    Ok(ProblemFile {
        problem,
        options,
        trajectory,
        start_from_trajectory,
    })
}

fn solver_options(s: &Section) -> Result<(SolveOptions, bool), InputError> {
    let mut o = SolveOptions::default();
    let mut from_trajectory = false;
    for e in &s.entries {
        match e.key.as_str() {
            "max_iterations" => o.max_iterations = e.count()?,
            "gradient_tolerance" => o.gradient_tolerance = e.number()?,
            "constraint_tolerance" => o.penalty.constraint_tolerance = e.number()?,
            "initial_step" => o.line_search.initial_step = e.number()?,
            "backtrack" => o.line_search.backtrack = e.number()?,
            "sufficient_decrease" => o.line_search.sufficient_decrease = e.number()?,
            "max_backtracks" => o.line_search.max_backtracks = e.count()?,
            "initial_weight" => o.penalty.initial_weight = e.number()?,
            "growth" => o.penalty.growth = e.number()?,
            "max_rounds" => o.penalty.max_rounds = e.count()?,
            "memory" => o.memory = e.count()?,
            "restarts" => o.restarts = e.count()?,
            "restart_amplitude" => o.restart_amplitude = e.number()?,
            "seed" => o.seed = e.value.parse().map_err(|_| e.err(format!("'{}' is not a valid seed", e.value)))?,
            "initializer" => match e.value.as_str() {
                "linear" => from_trajectory = false,
                "trajectory" => from_trajectory = true,
                other => return Err(e.err(format!("initializer must be 'linear' or 'trajectory', got '{other}'"))),
            },
            _ => unreachable!("keys are validated while splitting"),
        }
    }
    o.validate().map_err(|err| InputError::at(s.line, 1, err.to_string()))?;
    Ok((o, from_trajectory))
}

impl ProblemFile {
    /// The `[trajectory]` sampled on the problem grid, if present.
    pub fn trajectory(&self) -> Result<Option<GridFunction>, ProblemError> {
        match &self.trajectory {
            None => Ok(None),
            Some(TrajectorySpec::Values(v)) => Ok(Some(self.problem.trajectory(v.clone())?)),
            Some(TrajectorySpec::Expr(e)) => {
                let bound = e.bind(&["t"]).map_err(ProblemError::Outer)?;
                let mut values = Vec::with_capacity(self.problem.grid().len());
                for &t in self.problem.grid().nodes() {
                    values.push(bound.eval(&[t]).map_err(ProblemError::Outer)?);
                }
                Ok(Some(self.problem.trajectory(values)?))
            }
        }
    }

    /// Solver options with the initializer resolved against `[trajectory]`.
    pub fn solve_options(&self) -> Result<SolveOptions, ProblemError> {
        let mut o = self.options.clone();
        if self.start_from_trajectory {
            if let Some(x) = self.trajectory()? {
                o.initializer = Initializer::Given(x.into_values());
            }
        }
        Ok(o)
    }
}
