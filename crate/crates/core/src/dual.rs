//! The dual approach: solve with both representations and trust the result
//! only when they agree.

use thiserror::Error;

use crate::caputo::{AnalyticFunction, CaputoError, FractionalOrder, MethodKind};
use crate::expr::{EvalError, Expr};
use crate::scalar::{lit, to_f64, Scalar};
use crate::solver::{solve, EquationSpec, Solution, SolveError, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailedMethod {
    Substitution,
    ByParts,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Reliable,
    Unreliable,
    MethodFailed(FailedMethod),
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Reliable => f.write_str("Reliable"),
            Verdict::Unreliable => f.write_str("Unreliable"),
            Verdict::MethodFailed(FailedMethod::Substitution) => f.write_str("MethodFailed(substitution)"),
            Verdict::MethodFailed(FailedMethod::ByParts) => f.write_str("MethodFailed(byparts)"),
            Verdict::MethodFailed(FailedMethod::Both) => f.write_str("MethodFailed(both)"),
        }
    }
}

impl Verdict {
    /// Verdict from convergence flags and the inter-method deviation.
    pub fn classify<T: Scalar>(
        subst_converged: bool,
        byparts_converged: bool,
        deviation: Option<T>,
        threshold: T,
    ) -> Verdict {
        match (subst_converged, byparts_converged) {
            (false, false) => Verdict::MethodFailed(FailedMethod::Both),
            (false, true) => Verdict::MethodFailed(FailedMethod::Substitution),
            (true, false) => Verdict::MethodFailed(FailedMethod::ByParts),
            (true, true) => match deviation {
                Some(d) if d <= threshold => Verdict::Reliable,
                _ => Verdict::Unreliable,
            },
        }
    }
}

/// Both solutions with their agreement measure and verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct DualReport<T> {
    pub sol_subst: Result<Solution<T>, SolveError>,
    pub sol_byparts: Result<Solution<T>, SolveError>,
    /// sup|u_subst − u_byparts| / max(1, sup|u_byparts|), when both solves
    /// produced a grid function.
    pub deviation: Option<T>,
    pub threshold: T,
    pub verdict: Verdict,
}

impl<T: Scalar> DualReport<T> {
    pub fn solution(&self, method: MethodKind) -> Option<&Solution<T>> {
        match method {
            MethodKind::Substitution => self.sol_subst.as_ref().ok(),
            MethodKind::ByParts => self.sol_byparts.as_ref().ok(),
        }
    }

    pub fn converged(&self, method: MethodKind) -> bool {
        self.solution(method).is_some_and(|s| s.converged)
    }

    /// The verdict this report would carry under another threshold.
    pub fn verdict_at(&self, threshold: T) -> Verdict {
        Verdict::classify(
            self.converged(MethodKind::Substitution),
            self.converged(MethodKind::ByParts),
            self.deviation,
            threshold,
        )
    }

    /// One-line summary: `verdict=... deviation=... threshold=...`.
    pub fn verdict_line(&self) -> String {
        let dev = self.deviation.map_or_else(|| "nan".to_string(), |d| format!("{:e}", to_f64(d)));
        format!("verdict={} deviation={} threshold={:e}", self.verdict, dev, to_f64(self.threshold))
    }
}

/// 100·h², floored at 1e-10.
pub fn default_threshold<T: Scalar>(h: T) -> T {
    (lit::<T>(100.0) * h * h).max(lit(1e-10))
}

/// Runs both methods concurrently and compares them.
pub fn dual_solve<T: Scalar>(eq: &EquationSpec<T>, cfg: &SolverConfig<T>, threshold: Option<T>) -> DualReport<T> {
    let (sol_subst, sol_byparts) = std::thread::scope(|s| {
        let sub = s.spawn(|| solve(eq, &cfg.with_method(MethodKind::Substitution)));
        let bp = solve(eq, &cfg.with_method(MethodKind::ByParts));
        (sub.join().expect("substitution solve panicked"), bp)
    });
    let deviation = match (&sol_subst, &sol_byparts) {
        (Ok(a), Ok(b)) => Some(normalized_deviation(a, b)),
        _ => None,
    };
    let threshold = threshold.unwrap_or_else(|| default_threshold(cfg.h));
    let mut report = DualReport { sol_subst, sol_byparts, deviation, threshold, verdict: Verdict::Unreliable };
    report.verdict = report.verdict_at(threshold);
    report
}

fn normalized_deviation<T: Scalar>(a: &Solution<T>, b: &Solution<T>) -> T {
    let diff = a.u.values().iter().zip(b.u.values()).fold(T::zero(), |acc, (&x, &y)| {
        if (x - y).is_nan() {
            T::nan()
        } else {
            acc.max((x - y).abs())
        }
    });
    diff / T::one().max(b.u.sup_norm())
}

/// Pointwise errors and their sup-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetrics<T> {
    pub per_node: Vec<T>,
    pub sup: T,
}

impl<T: Scalar> ErrorMetrics<T> {
    fn from_vec(per_node: Vec<T>) -> Self {
        let sup = per_node.iter().fold(T::zero(), |a, &v| if v.is_nan() { T::nan() } else { a.max(v) });
        ErrorMetrics { per_node, sup }
    }
}

/// |u_k − exact(x_k)| at every node.
pub fn compare_to_exact<T: Scalar>(sol: &Solution<T>, exact: &Expr<T>) -> Result<ErrorMetrics<T>, EvalError> {
    let per_node = sol
        .u
        .values()
        .iter()
        .zip(sol.xs())
        .map(|(&u, x)| Ok((u - exact.eval_x(x)?).abs()))
        .collect::<Result<Vec<T>, EvalError>>()?;
    Ok(ErrorMetrics::from_vec(per_node))
}

/// |a_k − b_k| at every node of a shared grid.
pub fn inter_method_difference<T: Scalar>(a: &Solution<T>, b: &Solution<T>) -> Result<ErrorMetrics<T>, SolveError> {
    if a.u.values().len() != b.u.values().len() || a.u.h() != b.u.h() {
        return Err(SolveError::GridMismatch("solutions live on different grids".into()));
    }
    let per_node = a.u.values().iter().zip(b.u.values()).map(|(&x, &y)| (x - y).abs()).collect();
    Ok(ErrorMetrics::from_vec(per_node))
}

/// Which methods reproduce a known exact solution within a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Validity {
    Both,
    SubstitutionOnly,
    ByPartsOnly,
    Neither,
}

/// Per-method exact errors (sup-norm, `None` when the method produced no
/// converged solution) and the resulting validity class.
pub fn validity_against_exact<T: Scalar>(
    report: &DualReport<T>,
    exact: &Expr<T>,
    tol: T,
) -> Result<(Option<T>, Option<T>, Validity), EvalError> {
    let err = |m| -> Result<Option<T>, EvalError> {
        match report.solution(m) {
            Some(s) if s.converged => Ok(Some(compare_to_exact(s, exact)?.sup)),
            _ => Ok(None),
        }
    };
    let es = err(MethodKind::Substitution)?;
    let eb = err(MethodKind::ByParts)?;
    let ok = |e: Option<T>| e.is_some_and(|e| e <= tol);
    let v = match (ok(es), ok(eb)) {
        (true, true) => Validity::Both,
        (true, false) => Validity::SubstitutionOnly,
        (false, true) => Validity::ByPartsOnly,
        (false, false) => Validity::Neither,
    };
    Ok((es, eb, v))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StudyError {
    #[error("invalid step list: {0}")]
    Steps(String),
    #[error(transparent)]
    Caputo(#[from] CaputoError),
}

/// What a convergence study measures the error of.
pub enum StudyTarget<'a, T> {
    /// |quadrature − exact| for D^α f(x) with exact derivative samples.
    Derivative { function: AnalyticFunction<T>, alpha: T, x: T, method: MethodKind },
    /// sup-norm error of a solve against a known solution.
    Equation { eq: &'a EquationSpec<T>, method: MethodKind, exact: &'a Expr<T> },
    /// Any error functional of h; `None` marks a failure.
    Custom(&'a (dyn Fn(T) -> Option<T> + Sync)),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow<T> {
    pub h: T,
    /// `None` when the method failed at this step size.
    pub error: Option<T>,
    /// log₂(err(2h)/err(h)) against the previous row.
    pub order: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable<T> {
    pub rows: Vec<ConvergenceRow<T>>,
    /// Some error sits at round-off, so its orders carry no information.
    pub saturated: bool,
}

impl<T: Scalar> ConvergenceTable<T> {
    pub fn orders(&self) -> Vec<Option<T>> {
        self.rows.iter().skip(1).map(|r| r.order).collect()
    }
}

fn study_error<T: Scalar>(target: &StudyTarget<'_, T>, h: T) -> Result<Option<T>, StudyError> {
    match target {
        StudyTarget::Derivative { function, alpha, x, method } => {
            let ord = FractionalOrder::new(*alpha)?;
            let k = (*x / h).round();
            if (k * h - *x).abs() > lit::<T>(1e-9) * *x || k < T::one() {
                return Err(StudyError::Steps(format!("x = {x} is not a grid node for h = {h}")));
            }
            let k = k.to_usize().unwrap_or(1);
            let approx = function.quadrature(&ord, *method, h, k)?;
            let exact = function.caputo_reference(&ord, *x)?;
            let e = (approx - exact).abs();
            Ok(e.is_finite().then_some(e))
        }
        StudyTarget::Equation { eq, method, exact } => {
            let cfg = SolverConfig::new(h, *method);
            match solve(eq, &cfg) {
                Ok(sol) if sol.converged => {
                    Ok(compare_to_exact(&sol, exact).ok().map(|m| m.sup).filter(|e| e.is_finite()))
                }
                _ => Ok(None),
            }
        }
        StudyTarget::Custom(f) => Ok(f(h)),
    }
}

/// Observed orders of accuracy over successively halved step sizes.
///
/// Step sizes are evaluated concurrently. Failures leave gaps; errors at
/// round-off level set the `saturated` flag and suppress the affected orders.
pub fn convergence_study<T: Scalar>(
    target: &StudyTarget<'_, T>,
    h_list: &[T],
) -> Result<ConvergenceTable<T>, StudyError> {
    if h_list.len() < 3 {
        return Err(StudyError::Steps(format!("need at least 3 step sizes, got {}", h_list.len())));
    }
    for w in h_list.windows(2) {
        let ratio = w[0] / w[1];
        if (ratio - lit(2.0)).abs() > lit(1e-9) {
            return Err(StudyError::Steps(format!("{} to {} is not a halving", w[0], w[1])));
        }
    }
    let errors: Vec<Result<Option<T>, StudyError>> = std::thread::scope(|s| {
        let handles: Vec<_> = h_list.iter().map(|&h| s.spawn(move || study_error(target, h))).collect();
        handles.into_iter().map(|h| h.join().expect("study worker panicked")).collect()
    });
    let errors = errors.into_iter().collect::<Result<Vec<_>, _>>()?;
    let floor = lit::<T>(1e3) * T::epsilon();
    let saturated = errors.iter().flatten().any(|&e| e <= floor);
    let usable = |e: Option<T>| e.filter(|&e| e > floor);
    let rows = h_list
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let order = if i == 0 {
                None
            } else {
                match (usable(errors[i - 1]), usable(errors[i])) {
                    (Some(a), Some(b)) => Some((a / b).log2()),
                    _ => None,
                }
            };
            ConvergenceRow { h, error: errors[i], order }
        })
        .collect();
    Ok(ConvergenceTable { rows, saturated })
}
