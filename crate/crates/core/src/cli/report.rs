use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use super::file::ProblemFile;
use crate::gridfn::GridFunction;
use crate::optimality::{default_tolerance, el_residuals, iso_conditions, transversality, NodeTrace};
use crate::solver::SolveResult;
use crate::varproblem::{CompositionFunctional, Endpoint, ProblemError, Sense, VariationalProblem};

/// `%g` with six significant digits.
pub(crate) fn g6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let fixed = format!("{:.*}", (5 - exp) as usize, v);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn functional_json(f: &CompositionFunctional) -> Value {
    let integrands: Vec<Value> = f
        .integrands()
        .iter()
        .enumerate()
        .map(|(i, g)| json!({ "name": format!("{}{}", f.prefix(), i + 1), "kind": g.kind(), "expr": g.expr().source() }))
        .collect();
    json!({ "outer": f.outer().source(), "integrands": integrands })
}

pub(crate) fn problem_summary(pf: &ProblemFile, path: &Path) -> Value {
    let p = &pf.problem;
    let mut v = json!({
        "file": path.display().to_string(),
        "timescale": p.timescale().to_string(),
        "regular": p.timescale().is_regular(),
        "resolution": p.grid().dense_resolution(),
        "nodes": p.grid().len(),
        "sense": match p.sense() { Sense::Minimize => "minimize", Sense::Maximize => "maximize" },
        "objective": functional_json(p.objective()),
        "boundary": { "a": p.boundary().at_a, "b": p.boundary().at_b },
        "has_trajectory": pf.trajectory.is_some(),
    });
    if let [c] = p.constraints() {
        v["constraint"] = functional_json(c.functional());
        v["constraint"]["target"] = json!(c.target());
    }
    v
}

fn trace_json(t: &NodeTrace) -> Value {
    json!({
        "mean": t.mean(),
        "deviation": t.deviation(),
        "relative_deviation": t.relative_deviation(),
        "t": t.t,
        "values": t.values,
    })
}

/// Residual diagnostics of `x`: JSON, human text, and whether `x` passes.
pub(crate) fn residual_report(p: &VariationalProblem, x: &GridFunction) -> Result<(Value, String, bool), ProblemError> {
    let tol = default_tolerance(p.grid());
    let el = el_residuals(p, x)?;
    let tr = transversality(p, x)?;
    let mut h = String::new();
    let _ = writeln!(h, "Euler-Lagrange residuals (tolerance {})", g6(tol));
    for (name, t) in [("nabla form", &el.residual_nabla), ("delta form", &el.residual_delta)] {
        let _ = writeln!(
            h,
            "  {name}  mean {:>12}  deviation {:>12}  relative {:>12}",
            g6(t.mean()),
            g6(t.deviation()),
            g6(t.relative_deviation())
        );
    }
    let _ = writeln!(h, "  grid form   deviation {}", g6(el.discrete_deviation));

    let mut json = json!({
        "tolerance": tol,
        "el": {
            "nabla": trace_json(&el.residual_nabla),
            "delta": trace_json(&el.residual_delta),
            "grid_deviation": el.discrete_deviation,
        },
        "transversality": tr,
    });

    let mut ok;
    let constrained = !p.constraints().is_empty();
    if constrained {
        let iso = iso_conditions(p, x)?;
        let violation = p.constraints()[0].violation(x)?;
        let _ = writeln!(h, "isoperimetric conditions");
        match iso.lambda {
            Some(l) => {
                let _ = writeln!(h, "  lambda {}  (normal)", g6(l));
            }
            None => {
                let _ = writeln!(h, "  lambda undetermined  (abnormal: extremal for the constraint)");
            }
        }
        for (k, d) in iso.condition_deviations.iter().enumerate() {
            let _ = writeln!(h, "  condition {}  deviation {}", k + 1, g6(*d));
        }
        let _ = writeln!(h, "  K - d  {}", g6(violation));
        let worst = iso.condition_deviations.iter().fold(0.0_f64, |m, d| m.max(*d));
        ok = if iso.normal { worst <= tol } else { true };
        json["iso"] = json!({
            "lambda": iso.lambda,
            "normal": iso.normal,
            "normality_deviations": iso.normality_deviations,
            "condition_deviations": iso.condition_deviations,
            "grid_deviation": iso.discrete_deviation,
            "constraint_violation": violation,
        });
    } else {
        ok = el.is_extremal(tol);
    }

    for (name, end, r) in [
        ("x(a)", p.boundary().at_a, tr.initial_residual),
        ("x(b)", p.boundary().at_b, tr.terminal_residual),
    ] {
        if end == Endpoint::Free {
            match r {
                Some(r) => {
                    let _ = writeln!(h, "transversality at free {name}: {}", g6(r));
                    ok &= r.abs() <= tol;
                }
                None => {
                    let _ = writeln!(h, "transversality at free {name}: not applicable");
                }
            }
        }
    }
    let verdict = if ok { "EXTREMAL (within tol)" } else { "NOT extremal" };
    let _ = writeln!(h, "verdict  {verdict}");
    json["verdict"] = json!(verdict);
    json["extremal"] = json!(ok);
    Ok((json, h, ok))
}

pub(crate) fn solve_json(r: &SolveResult) -> Value {
    json!({
        "status": r.status,
        "converged": r.converged,
        "objective": r.objective,
        "gradient_norm": r.gradient_norm,
        "gradient_tolerance": r.gradient_tolerance,
        "constraint_violation": r.constraint_violation,
        "lambda_estimate": r.lambda_estimate,
        "lambda_penalty": r.lambda_penalty,
        "iterations": r.iterations,
        "outer_rounds": r.outer_rounds,
        "t": r.x.grid().nodes(),
        "x": r.x.values(),
        "history": r.history,
    })
}

fn push_row(out: &mut String, cells: &[Option<f64>]) {
    for (i, c) in cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if let Some(v) = c {
            // shortest round-trip representation
            let _ = write!(out, "{v:?}");
        }
    }
    out.push('\n');
}

/// Per-node CSV. Residual columns are empty at nodes outside their domain.
pub(crate) fn trace_csv(p: &VariationalProblem, x: &GridFunction) -> Result<String, ProblemError> {
    let el = el_residuals(p, x)?;
    let uw = match p.constraints() {
        [] => None,
        _ => {
            let iso = iso_conditions(p, x)?;
            Some((iso.u, iso.w))
        }
    };
    let dx = x.delta_derivative();
    let nx = x.nabla_derivative();
    let mut out = String::from("t,x,x_delta,x_nabla,xi,chi,residual_nabla,residual_delta");
    if uw.is_some() {
        out.push_str(",u,w");
    }
    out.push('\n');
    let last = x.len() - 1;
    for (i, &t) in x.grid().nodes().iter().enumerate() {
        let mut row = vec![
            Some(t),
            Some(x.values()[i]),
            (i < last).then(|| dx.values()[i]),
            (i > 0).then(|| nx.values()[i]),
            Some(el.xi.values()[i]),
            Some(el.chi.values()[i]),
            el.residual_nabla.at(i),
            el.residual_delta.at(i),
        ];
        if let Some((u, w)) = &uw {
            row.push(Some(u.values()[i]));
            row.push(Some(w.values()[i]));
        }
        push_row(&mut out, &row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_formats_like_printf() {
        assert_eq!(g6(0.0), "0");
        assert_eq!(g6(1.0), "1");
        assert_eq!(g6(-0.0517767113), "-0.0517767");
        assert_eq!(g6(0.6666666667), "0.666667");
        assert_eq!(g6(1.7071067811865475), "1.70711");
        assert_eq!(g6(123456.7), "123457");
        assert_eq!(g6(1234567.0), "1.23457e+06");
        assert_eq!(g6(2.5e-10), "2.5e-10");
        assert_eq!(g6(0.0001), "0.0001");
        assert_eq!(g6(999999.7), "1e+06");
        assert_eq!(g6(f64::NAN), "nan");
    }
}
