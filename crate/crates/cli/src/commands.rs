//! The `derivative`, `solve` and `convergence` commands.

use fracdual_core::caputo::{caputo_byparts, caputo_substitution, sample_stencils};
use fracdual_core::stencils::{stencil, Placement, SamplingOperator};
use fracdual_core::{
    compare_to_exact, convergence_study, dual_solve, solve, AnalyticFunction, ConvergenceTable, DualReport64, Expr64,
    FractionalOrder64, GridFunction64, MethodKind, Solution64, SolveError, StudyTarget,
};

use crate::problem::ProblemFile;
use crate::table::{cell, curve_csv, fmt_g17, write_csv};
use crate::{CliError, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivMode {
    /// Exact integer derivatives fed to the quadratures.
    Analytic,
    /// Integer derivatives reconstructed from samples of f by stencils.
    Stencil,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Subst,
    ByParts,
    Dual,
}

impl MethodChoice {
    pub fn methods(self) -> &'static [MethodKind] {
        match self {
            MethodChoice::Subst => &[MethodKind::Substitution],
            MethodChoice::ByParts => &[MethodKind::ByParts],
            MethodChoice::Dual => &MethodKind::BOTH,
        }
    }
}

pub fn suffix(m: MethodKind) -> &'static str {
    match m {
        MethodKind::Substitution => "subst",
        MethodKind::ByParts => "byparts",
    }
}

/// Parses `a:b:step`, a comma list, or a single value.
pub fn parse_points(spec: &str) -> Result<Vec<f64>, CliError> {
    let num = |s: &str| -> Result<f64, CliError> {
        let v: f64 = s.trim().parse().map_err(|_| CliError::Usage(format!("`{s}` is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Usage(format!("`{s}` is not finite")))
        }
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(CliError::Usage(format!("bad range `{spec}`")));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * step).collect())
        }
        [_] => spec.split(',').map(num).collect(),
        _ => Err(CliError::Usage(format!("points must be a:b:step or a comma list, got `{spec}`"))),
    }
}

pub fn parse_h_list(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|s| match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            _ => Err(CliError::Usage(format!("`{s}` is not a positive step size"))),
        })
        .collect()
}

/// Grid index of a point, which must be a positive multiple of h.
fn grid_index(x: f64, h: f64) -> Result<usize, CliError> {
    let k = (x / h).round();
    if !(x > 0.0) || k < 1.0 || (k * h - x).abs() > 1e-9 * x {
        return Err(CliError::Usage(format!("point {x} is not a positive multiple of h = {h}")));
    }
    Ok(k as usize)
}

/// The function of a derivative request: a known name, or an expression in x.
pub struct FunctionArg {
    pub analytic: Option<AnalyticFunction<f64>>,
    pub expr: Option<Expr64>,
}

impl FunctionArg {
    pub fn parse(f: &str) -> Result<Self, CliError> {
        if let Some(a) = AnalyticFunction::from_name(f.trim()) {
            return Ok(FunctionArg { analytic: Some(a), expr: None });
        }
        let expr = Expr64::parse(f).map_err(|e| CliError::Usage(format!("--f: {e}")))?;
        if expr.uses_u() {
            return Err(CliError::Usage("--f must be a function of x only".into()));
        }
        let analytic = expr.as_monomial().map(AnalyticFunction::Power);
        Ok(FunctionArg { analytic, expr: Some(expr) })
    }

    fn value(&self, x: f64) -> Result<f64, CliError> {
        match (&self.analytic, &self.expr) {
            (Some(a), None) => Ok(a.value(x)),
            (_, Some(e)) => e.eval_x(x).map_err(|err| CliError::Usage(format!("--f at x = {x}: {err}"))),
            (None, None) => unreachable!("function argument without a definition"),
        }
    }

    fn require_analytic(&self) -> Result<&AnalyticFunction<f64>, CliError> {
        self.analytic.as_ref().ok_or_else(|| {
            CliError::Usage("analytic derivatives need tan, exp, sin, cos, const<c> or x^p; use --deriv stencil".into())
        })
    }
}

fn order(alpha: f64) -> Result<FractionalOrder64, CliError> {
    FractionalOrder64::new(alpha).map_err(|e| CliError::Usage(format!("--alpha: {e}")))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {v}")))
    }
}

/// D^α f at grid nodes from stencil reconstructions of f's derivatives.
fn stencil_quadratures(
    f: &FunctionArg,
    ord: &FractionalOrder64,
    h: f64,
    ks: &[usize],
) -> Result<[Vec<f64>; 2], CliError> {
    let k_max = ks.iter().copied().max().unwrap_or(1);
    let nodes = (k_max + 1).max(9);
    let values = (0..nodes).map(|i| f.value(i as f64 * h)).collect::<Result<Vec<_>, _>>()?;
    let core = |e: &dyn std::fmt::Display| CliError::Config(e.to_string());
    let mut out = [Vec::new(), Vec::new()];
    for (slot, method) in out.iter_mut().zip(MethodKind::BOTH) {
        let (family, boundary) = sample_stencils(ord, method).map_err(|e| core(&e))?;
        let samples = SamplingOperator::new(family, nodes, h).map_err(|e| core(&e))?.apply(&values);
        let grid = GridFunction64::new(h, samples).map_err(|e| core(&e))?;
        let start = match boundary {
            Some(b) => {
                let s = stencil(b, Placement::Forward);
                s.apply(&values[..s.len()], h).map_err(|e| core(&e))?
            }
            None => 0.0,
        };
        for &k in ks {
            let v = match method {
                MethodKind::Substitution => caputo_substitution(&grid, ord, k),
                MethodKind::ByParts => caputo_byparts(start, &grid, ord, k),
            };
            slot.push(v.map_err(|e| core(&e))?);
        }
    }
    Ok(out)
}

/// Both quadratures of D^α f at the given points next to the exact value.
pub fn cmd_derivative(f: &str, alpha: f64, h: f64, points: &[f64], mode: DerivMode) -> Result<Output, CliError> {
    let f = FunctionArg::parse(f)?;
    let ord = order(alpha)?;
    let h = positive("--h", h)?;
    if points.is_empty() {
        return Err(CliError::Usage("no points given".into()));
    }
    let ks = points.iter().map(|&x| grid_index(x, h)).collect::<Result<Vec<_>, _>>()?;
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64 * h).collect();

    let [subst, byparts] = match mode {
        DerivMode::Analytic => {
            let a = f.require_analytic()?;
            let mut out = [Vec::new(), Vec::new()];
            for (slot, method) in out.iter_mut().zip(MethodKind::BOTH) {
                for &k in &ks {
                    let v = a.quadrature(&ord, method, h, k).map_err(|e| CliError::Config(e.to_string()))?;
                    slot.push(v);
                }
            }
            out
        }
        DerivMode::Stencil => stencil_quadratures(&f, &ord, h, &ks)?,
    };
    let reference: Vec<Option<f64>> =
        xs.iter().map(|&x| f.analytic.as_ref().and_then(|a| a.caputo_reference(&ord, x).ok())).collect();

    let err = |approx: f64, r: Option<f64>| r.map(|r| (approx - r).abs());
    let rows: Vec<Vec<String>> = (0..xs.len())
        .map(|i| {
            vec![
                fmt_g17(xs[i]),
                cell(reference[i]),
                fmt_g17(subst[i]),
                cell(err(subst[i], reference[i])),
                fmt_g17(byparts[i]),
                cell(err(byparts[i], reference[i])),
            ]
        })
        .collect();
    let header = ["x", "taylor_or_analytic", "substitution", "abs_err_subst", "byparts", "abs_err_byparts"];
    let some = |v: &[f64]| v.iter().map(|&y| Some(y)).collect::<Vec<_>>();
    Ok(Output {
        data: write_csv(&header, &rows),
        curves: vec![
            ("reference".into(), curve_csv("reference", &xs, &reference)),
            ("substitution".into(), curve_csv("substitution", &xs, &some(&subst))),
            ("byparts".into(), curve_csv("byparts", &xs, &some(&byparts))),
        ],
        ..Output::default()
    })
}

fn solve_failure(e: SolveError) -> Result<String, CliError> {
    match e {
        SolveError::Spec(_) | SolveError::Config(_) | SolveError::GridMismatch(_) => {
            Err(CliError::Config(e.to_string()))
        }
        e => Ok(format!("failed: {e}")),
    }
}

fn status_line(m: MethodKind, r: &Result<Solution64, SolveError>) -> Result<String, CliError> {
    let body = match r {
        Ok(s) => format!("converged={} iterations={} residual={:e}", s.converged, s.newton_iters, s.residual_sup()),
        Err(e) => solve_failure(e.clone())?,
    };
    Ok(format!("{}: {body}", m.name()))
}

/// Solves a problem file with one method or both.
pub fn cmd_solve(problem: &ProblemFile, choice: MethodChoice) -> Result<Output, CliError> {
    let cfg = problem.config(MethodKind::Substitution);
    let m = cfg.steps(problem.spec.end()).map_err(|e| CliError::Config(e.to_string()))?;
    let (results, report): (Vec<(MethodKind, Result<Solution64, SolveError>)>, Option<DualReport64>) = match choice {
        MethodChoice::Dual => {
            let r = dual_solve(&problem.spec, &cfg, problem.threshold);
            (
                vec![(MethodKind::Substitution, r.sol_subst.clone()), (MethodKind::ByParts, r.sol_byparts.clone())],
                Some(r),
            )
        }
        _ => {
            let method = choice.methods()[0];
            (vec![(method, solve(&problem.spec, &cfg.with_method(method)))], None)
        }
    };

    let mut notes = Vec::new();
    for (method, r) in &results {
        notes.push(status_line(*method, r)?);
    }
    if let Some(r) = &report {
        notes.push(r.verdict_line());
    }

    let xs: Vec<f64> = (0..=m).map(|k| k as f64 * problem.h).collect();
    let column = |r: &Result<Solution64, SolveError>, pick: fn(&Solution64) -> &GridFunction64| -> Vec<Option<f64>> {
        match r {
            Ok(s) => pick(s).values().iter().map(|&v| Some(v)).collect(),
            Err(_) => vec![None; xs.len()],
        }
    };
    let us: Vec<Vec<Option<f64>>> = results.iter().map(|(_, r)| column(r, |s| &s.u)).collect();
    let residuals: Vec<Vec<Option<f64>>> = results.iter().map(|(_, r)| column(r, |s| &s.residual)).collect();
    let exact: Option<Vec<Option<f64>>> =
        problem.exact.as_ref().map(|e| xs.iter().map(|&x| e.eval_x(x).ok()).collect());

    let mut header: Vec<String> = vec!["x".into()];
    header.extend(results.iter().map(|(m, _)| format!("u_{}", suffix(*m))));
    if report.is_some() {
        header.push("abs_diff".into());
    }
    header.extend(results.iter().map(|(m, _)| format!("residual_{}", suffix(*m))));
    if exact.is_some() {
        header.push("exact".into());
        header.extend(results.iter().map(|(m, _)| format!("err_{}", suffix(*m))));
    }

    let rows: Vec<Vec<String>> = (0..xs.len())
        .map(|i| {
            let mut row = vec![fmt_g17(xs[i])];
            row.extend(us.iter().map(|u| cell(u[i])));
            if report.is_some() {
                let d = match (us[0][i], us[1][i]) {
                    (Some(a), Some(b)) => Some((a - b).abs()),
                    _ => None,
                };
                row.push(cell(d));
            }
            row.extend(residuals.iter().map(|r| cell(r[i])));
            if let Some(ex) = &exact {
                row.push(cell(ex[i]));
                row.extend(us.iter().map(|u| cell(u[i].zip(ex[i]).map(|(a, b)| (a - b).abs()))));
            }
            row
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();

    let mut curves: Vec<(String, String)> = results
        .iter()
        .zip(&us)
        .map(|((m, _), u)| {
            let name = format!("u_{}", suffix(*m));
            let body = curve_csv(&name, &xs, u);
            (name, body)
        })
        .collect();
    if let Some(ex) = &exact {
        curves.push(("exact".into(), curve_csv("exact", &xs, ex)));
    }

    if let Some(e) = &problem.exact {
        for (method, r) in &results {
            if let Ok(s) = r {
                if let Ok(metrics) = compare_to_exact(s, e) {
                    notes.push(format!("{}: error_sup={:e}", method.name(), metrics.sup));
                }
            }
        }
    }
    Ok(Output { data: write_csv(&header_refs, &rows), notes, curves, status: 0 })
}

/// What a convergence study runs on.
pub enum ConvergenceCase<'a> {
    Derivative { f: &'a str, alpha: f64, x: f64, mode: DerivMode },
    Problem(&'a ProblemFile),
}

/// Observed orders of accuracy for each selected method.
pub fn cmd_convergence(case: ConvergenceCase<'_>, choice: MethodChoice, h_list: &[f64]) -> Result<Output, CliError> {
    let methods = choice.methods();
    let mut tables: Vec<ConvergenceTable<f64>> = Vec::new();
    for &method in methods {
        let table = match &case {
            ConvergenceCase::Derivative { f, alpha, x, mode: DerivMode::Analytic } => {
                let function = FunctionArg::parse(f)?.require_analytic()?.clone();
                order(*alpha)?;
                let target = StudyTarget::Derivative { function, alpha: *alpha, x: *x, method };
                convergence_study(&target, h_list)
            }
            ConvergenceCase::Derivative { f, alpha, x, mode: DerivMode::Stencil } => {
                let function = FunctionArg::parse(f)?;
                let ord = order(*alpha)?;
                let exact = function
                    .require_analytic()?
                    .caputo_reference(&ord, *x)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                for &h in h_list {
                    grid_index(*x, h)?;
                }
                let slot = usize::from(method == MethodKind::ByParts);
                let error = |h: f64| -> Option<f64> {
                    let k = grid_index(*x, h).ok()?;
                    let v = stencil_quadratures(&function, &ord, h, &[k]).ok()?[slot][0];
                    Some((v - exact).abs()).filter(|e| e.is_finite())
                };
                convergence_study(&StudyTarget::Custom(&error), h_list)
            }
            ConvergenceCase::Problem(p) => {
                let exact = p
                    .exact
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("convergence on a problem file needs `exact`".into()))?;
                let target = StudyTarget::Equation { eq: &p.spec, method, exact };
                convergence_study(&target, h_list)
            }
        };
        tables.push(table.map_err(|e| CliError::Usage(e.to_string()))?);
    }

    let mut header = vec!["h".to_string()];
    for m in methods {
        header.push(format!("error_{}", suffix(*m)));
        header.push(format!("order_{}", suffix(*m)));
    }
    let rows: Vec<Vec<String>> = (0..h_list.len())
        .map(|i| {
            let mut row = vec![fmt_g17(h_list[i])];
            for t in &tables {
                row.push(cell(t.rows[i].error));
                row.push(cell(t.rows[i].order));
            }
            row
        })
        .collect();
    let notes = methods
        .iter()
        .zip(&tables)
        .filter(|(_, t)| t.saturated)
        .map(|(m, _)| format!("{}: errors reach round-off; affected orders omitted", m.name()))
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(Output { data: write_csv(&header_refs, &rows), notes, ..Output::default() })
}
