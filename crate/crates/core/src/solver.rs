//! Implicit solver for quasilinear Caputo equations
//!
//! ```text
//! Σ_i K_i(x, u) D^{α_i} u(x) + f(x) = g(u(x)),   u(0) = u0 [, u'(0) = du0]
//! ```
//!
//! on the grid x_k = k·h, k = 0..m. Every D^{α_i} is replaced by the dense
//! matrix of [`caputo_matrix`], so the whole grid is one nonlinear algebraic
//! system of m + 1 equations. It is solved by damped Newton with a
//! finite-difference Jacobian.

use std::fmt;

use thiserror::Error;

use crate::caputo::{caputo_matrix, CaputoError, FractionalOrder, GridFunction, MethodKind};
use crate::expr::{EvalError, Expr};
use crate::linalg::{Lu, Matrix};
use crate::scalar::{from_usize, lit, to_f64, Scalar};
use crate::stencils::{stencil, Family, Placement};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid equation: {0}")]
    Spec(String),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("candidate grid does not match the configuration: {0}")]
    GridMismatch(String),
    #[error("cannot evaluate {what} at node {node} (x = {x}): {source}")]
    Eval { what: &'static str, node: usize, x: f64, source: EvalError },
    #[error("every damped Newton step hits a domain error at iteration {iteration}: {source}")]
    NoAdmissibleStep { iteration: usize, source: Box<SolveError> },
    #[error(transparent)]
    Caputo(#[from] CaputoError),
}

/// One K_i(x, u)·D^{α_i} u term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSpec<T> {
    pub coeff: Expr<T>,
    pub order: FractionalOrder<T>,
}

impl<T: Scalar> TermSpec<T> {
    pub fn new(coeff: Expr<T>, alpha: T) -> Result<Self, SolveError> {
        Ok(TermSpec { coeff, order: FractionalOrder::new(alpha)? })
    }
}

/// A complete initial value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec<T> {
    terms: Vec<TermSpec<T>>,
    forcing: Expr<T>,
    rhs: Expr<T>,
    end: T,
    ic_u0: T,
    ic_du0: Option<T>,
}

impl<T: Scalar> EquationSpec<T> {
    pub fn new(
        terms: Vec<TermSpec<T>>,
        forcing: Expr<T>,
        rhs: Expr<T>,
        end: T,
        ic_u0: T,
        ic_du0: Option<T>,
    ) -> Result<Self, SolveError> {
        let bad = |msg: String| Err(SolveError::Spec(msg));
        if terms.is_empty() {
            return bad("at least one fractional term is required".into());
        }
        for (i, t) in terms.iter().enumerate() {
            if t.order.alpha() >= lit(2.0) {
                return bad(format!("term {i}: orders alpha >= 2 are not supported"));
            }
        }
        if forcing.uses_u() {
            return bad("the forcing term may depend on x only".into());
        }
        if rhs.uses_x() {
            return bad("the right-hand side may depend on u only".into());
        }
        if !(end.is_finite() && end > T::zero()) {
            return bad(format!("interval end {end} must be positive"));
        }
        if !ic_u0.is_finite() || ic_du0.is_some_and(|v| !v.is_finite()) {
            return bad("initial conditions must be finite".into());
        }
        let max_alpha = terms.iter().map(|t| t.order.alpha()).fold(T::zero(), T::max);
        match (max_alpha > T::one(), ic_du0.is_some()) {
            (true, false) => return bad("orders above 1 need the initial slope du0".into()),
            (false, true) => return bad("du0 is only meaningful when some order exceeds 1".into()),
            _ => {}
        }
        Ok(EquationSpec { terms, forcing, rhs, end, ic_u0, ic_du0 })
    }

    pub fn terms(&self) -> &[TermSpec<T>] {
        &self.terms
    }

    pub fn forcing(&self) -> &Expr<T> {
        &self.forcing
    }

    pub fn rhs(&self) -> &Expr<T> {
        &self.rhs
    }

    pub fn end(&self) -> T {
        self.end
    }

    pub fn ic_u0(&self) -> T {
        self.ic_u0
    }

    pub fn ic_du0(&self) -> Option<T> {
        self.ic_du0
    }

    pub fn max_alpha(&self) -> T {
        self.terms.iter().map(|t| t.order.alpha()).fold(T::zero(), T::max)
    }
}

/// Step size, method and Newton controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub h: T,
    pub method: MethodKind,
    /// Componentwise backward-error tolerance, see [`Solution::converged`].
    pub newton_tol: T,
    pub newton_max_iter: usize,
    /// Smallest damping factor tried before a non-decreasing step is taken.
    pub min_damping: T,
    /// Consecutive iterations without residual decrease before giving up.
    pub stall_limit: usize,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(h: T, method: MethodKind) -> Self {
        SolverConfig {
            h,
            method,
            newton_tol: lit::<T>(1e-12).max(lit::<T>(64.0) * T::epsilon()),
            newton_max_iter: 50,
            min_damping: lit(1.0 / 64.0),
            stall_limit: 4,
        }
    }

    pub fn with_method(&self, method: MethodKind) -> Self {
        SolverConfig { method, ..self.clone() }
    }

    /// Number of steps m = T/h; h must divide T.
    pub fn steps(&self, end: T) -> Result<usize, SolveError> {
        if !(self.h.is_finite() && self.h > T::zero()) {
            return Err(SolveError::Config(format!("step {} must be positive", self.h)));
        }
        let ratio = end / self.h;
        let m = ratio.round();
        let m_usize = m.to_usize().unwrap_or(0);
        let slack = lit::<T>(4.0) * T::epsilon() * m.max(T::one());
        if (ratio - m).abs() > slack {
            return Err(SolveError::Config(format!("h = {} does not divide T = {end}", self.h)));
        }
        if m_usize < 8 {
            return Err(SolveError::Config(format!("T/h = {m_usize} must be at least 8")));
        }
        Ok(m_usize)
    }
}

/// What a row of the algebraic system imposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    InitialValue,
    InitialSlope,
    Collocation,
}

/// Row plan of the algebraic system.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationLayout {
    /// Unknowns u_0..u_m.
    pub nodes: usize,
    /// Constraint imposed by row k.
    pub constraints: Vec<Constraint>,
    /// First-derivative stencil placement at each node.
    pub placements: Vec<Placement>,
}

impl CollocationLayout {
    pub fn initial_conditions(&self) -> usize {
        self.constraints.iter().filter(|c| **c != Constraint::Collocation).count()
    }

    pub fn collocation_nodes(&self) -> std::ops::Range<usize> {
        self.initial_conditions()..self.nodes
    }
}

/// Rows 0 (and 1 when u'(0) is given) carry the initial conditions; every
/// other node carries the equation.
pub fn collocation_layout<T: Scalar>(
    eq: &EquationSpec<T>,
    cfg: &SolverConfig<T>,
) -> Result<CollocationLayout, SolveError> {
    let m = cfg.steps(eq.end())?;
    let nodes = m + 1;
    let mut constraints = vec![Constraint::InitialValue];
    if eq.ic_du0().is_some() {
        constraints.push(Constraint::InitialSlope);
    }
    constraints.resize(nodes, Constraint::Collocation);
    let placements = (0..nodes)
        .map(|k| match k {
            _ if k < 2 => Placement::Forward,
            _ if k + 2 > m => Placement::Backward,
            _ => Placement::Central,
        })
        .collect();
    Ok(CollocationLayout { nodes, constraints, placements })
}

/// Result of a solve. Non-convergence is reported here, not as an error.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub method: MethodKind,
    pub u: GridFunction<T>,
    /// Left side minus right side of every row at `u`.
    pub residual: GridFunction<T>,
    /// Every row satisfies |r_k| ≤ tol·(1 + Σ|terms of row k|).
    pub converged: bool,
    pub newton_iters: usize,
}

impl<T: Scalar> Solution<T> {
    pub fn xs(&self) -> Vec<T> {
        self.u.xs()
    }

    pub fn residual_sup(&self) -> T {
        self.residual.sup_norm()
    }
}

impl<T: Scalar> fmt::Display for Solution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} solution: {} nodes, converged={}, iterations={}, residual={:e}",
            self.method,
            self.u.values().len(),
            self.converged,
            self.newton_iters,
            self.residual_sup()
        )
    }
}

/// A·u for a Caputo matrix A. Its rows sum to zero, so applying it to
/// u − u_0 is the same map with constants annihilated exactly.
fn apply_operator<T: Scalar>(a: &Matrix<T>, u: &[T]) -> Vec<T> {
    let base = u.first().copied().unwrap_or_else(T::zero);
    let shifted: Vec<T> = u.iter().map(|&v| v - base).collect();
    a.mul_vec(&shifted)
}

struct Term<T> {
    coeff: Expr<T>,
    matrix: Matrix<T>,
    depends_on_u: bool,
}

/// Everything about the discrete system that does not depend on u.
struct System<'a, T> {
    eq: &'a EquationSpec<T>,
    layout: CollocationLayout,
    xs: Vec<T>,
    forcing: Vec<T>,
    terms: Vec<Term<T>>,
    slope_row: Vec<T>,
}

impl<'a, T: Scalar> System<'a, T> {
    fn new(eq: &'a EquationSpec<T>, cfg: &SolverConfig<T>) -> Result<Self, SolveError> {
        let layout = collocation_layout(eq, cfg)?;
        let nodes = layout.nodes;
        let xs: Vec<T> = (0..nodes).map(|k| from_usize::<T>(k) * cfg.h).collect();
        let forcing = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                eq.forcing().eval_x(x).map_err(|source| SolveError::Eval {
                    what: "forcing",
                    node: k,
                    x: to_f64(x),
                    source,
                })
            })
            .collect::<Result<Vec<T>, _>>()?;
        let terms = eq
            .terms()
            .iter()
            .map(|t| {
                Ok(Term {
                    coeff: t.coeff.clone(),
                    matrix: caputo_matrix(&t.order, cfg.method, cfg.h, nodes)?,
                    depends_on_u: t.coeff.uses_u(),
                })
            })
            .collect::<Result<Vec<_>, SolveError>>()?;
        let slope_row = stencil(Family::First, Placement::Forward).scaled(cfg.h);
        Ok(System { eq, layout, xs, forcing, terms, slope_row })
    }

    fn eval(&self, e: &Expr<T>, what: &'static str, k: usize, u: T) -> Result<T, SolveError> {
        e.eval(self.xs[k], u).map_err(|source| SolveError::Eval { what, node: k, x: to_f64(self.xs[k]), source })
    }

    fn slope(&self, u: &[T]) -> T {
        let base = u[0];
        self.slope_row.iter().zip(u).fold(T::zero(), |acc, (&c, &v)| acc + c * (v - base))
    }

    fn residual(&self, u: &[T]) -> Result<Vec<T>, SolveError> {
        let nodes = self.layout.nodes;
        let applied: Vec<Vec<T>> = self.terms.iter().map(|t| apply_operator(&t.matrix, u)).collect();
        let mut r = vec![T::zero(); nodes];
        for (k, c) in self.layout.constraints.iter().enumerate() {
            r[k] = match c {
                Constraint::InitialValue => u[0] - self.eq.ic_u0(),
                Constraint::InitialSlope => self.slope(u) - self.eq.ic_du0().unwrap_or_else(T::zero),
                Constraint::Collocation => {
                    let mut acc = self.forcing[k];
                    for (t, au) in self.terms.iter().zip(&applied) {
                        acc += self.eval(&t.coeff, "coefficient", k, u[k])? * au[k];
                    }
                    acc - self.eval(self.eq.rhs(), "right-hand side", k, u[k])?
                }
            };
        }
        Ok(r)
    }

    /// Magnitude of the quantities that make up each row, for the
    /// backward-error test.
    fn row_scales(&self, u: &[T]) -> Result<Vec<T>, SolveError> {
        let abs_u: Vec<T> = u.iter().map(|v| v.abs()).collect();
        let applied: Vec<Vec<T>> = self.terms.iter().map(|t| t.matrix.abs_mul_vec(&abs_u)).collect();
        let mut s = vec![T::one(); self.layout.nodes];
        for (k, c) in self.layout.constraints.iter().enumerate() {
            s[k] += match c {
                Constraint::InitialValue => u[0].abs() + self.eq.ic_u0().abs(),
                Constraint::InitialSlope => {
                    let slope_mag = self.slope_row.iter().zip(&abs_u).fold(T::zero(), |a, (&c, &v)| a + c.abs() * v);
                    slope_mag + self.eq.ic_du0().unwrap_or_else(T::zero).abs()
                }
                Constraint::Collocation => {
                    let mut acc = self.forcing[k].abs();
                    for (t, au) in self.terms.iter().zip(&applied) {
                        acc += self.eval(&t.coeff, "coefficient", k, u[k])?.abs() * au[k];
                    }
                    acc + self.eval(self.eq.rhs(), "right-hand side", k, u[k])?.abs()
                }
            };
        }
        Ok(s)
    }

    fn converged(&self, u: &[T], r: &[T], tol: T) -> bool {
        match self.row_scales(u) {
            Ok(s) => r.iter().zip(&s).all(|(&r, &s)| r.abs() <= tol * s),
            Err(_) => false,
        }
    }

    /// Column-perturbation Jacobian. Every row depends on u_j linearly
    /// through the term matrices and nonlinearly only through u_k at its own
    /// node, so the perturbed differences reduce to a diagonal correction.
    fn jacobian(&self, u: &[T]) -> Result<Matrix<T>, SolveError> {
        let nodes = self.layout.nodes;
        let rel = lit::<T>(1e-7).max(T::epsilon().sqrt());
        let eps: Vec<T> = u.iter().map(|v| rel * (T::one() + v.abs())).collect();
        let mut jac = Matrix::zeros(nodes, nodes);
        let mut diag = vec![T::zero(); nodes];
        for term in &self.terms {
            let au = apply_operator(&term.matrix, u);
            for k in self.layout.collocation_nodes() {
                let kv = self.eval(&term.coeff, "coefficient", k, u[k])?;
                if kv != T::zero() {
                    for (j, a) in jac.row_mut(k).iter_mut().zip(term.matrix.row(k)) {
                        *j += kv * *a;
                    }
                }
                if term.depends_on_u {
                    let e = eps[k];
                    let kp = self.eval(&term.coeff, "coefficient", k, u[k] + e)?;
                    diag[k] += (kp - kv) * (au[k] + e * term.matrix[(k, k)]) / e;
                }
            }
        }
        for k in self.layout.collocation_nodes() {
            let e = eps[k];
            let g0 = self.eval(self.eq.rhs(), "right-hand side", k, u[k])?;
            let g1 = self.eval(self.eq.rhs(), "right-hand side", k, u[k] + e)?;
            jac[(k, k)] += diag[k] - (g1 - g0) / e;
        }
        for (k, c) in self.layout.constraints.iter().enumerate() {
            match c {
                Constraint::InitialValue => {
                    jac.row_mut(k).fill(T::zero());
                    jac[(k, 0)] = T::one();
                }
                Constraint::InitialSlope => {
                    let row = jac.row_mut(k);
                    row.fill(T::zero());
                    row[..self.slope_row.len()].copy_from_slice(&self.slope_row);
                }
                Constraint::Collocation => {}
            }
        }
        Ok(jac)
    }
}

fn sup<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, x| if x.is_nan() { T::nan() } else { a.max(x.abs()) })
}

/// Residual of every row at `candidate`, computed exactly as [`solve`] does.
pub fn assemble_residual<T: Scalar>(
    eq: &EquationSpec<T>,
    cfg: &SolverConfig<T>,
    candidate: &GridFunction<T>,
) -> Result<GridFunction<T>, SolveError> {
    let system = System::new(eq, cfg)?;
    if candidate.values().len() != system.layout.nodes {
        return Err(SolveError::GridMismatch(format!(
            "{} values for {} nodes",
            candidate.values().len(),
            system.layout.nodes
        )));
    }
    if candidate.h() != cfg.h {
        return Err(SolveError::GridMismatch(format!("step {} vs {}", candidate.h(), cfg.h)));
    }
    let r = system.residual(candidate.values())?;
    Ok(GridFunction::new(cfg.h, r)?)
}

struct Attempt<T> {
    u: Vec<T>,
    r: Vec<T>,
    converged: bool,
    iters: usize,
}

fn newton<T: Scalar>(system: &System<'_, T>, cfg: &SolverConfig<T>, guess: Vec<T>) -> Result<Attempt<T>, SolveError> {
    let mut u = guess;
    let mut r = system.residual(&u)?;
    let mut norm = sup(&r);
    let mut best = (u.clone(), r.clone(), norm, 0);
    let mut stalled = 0;
    let mut iters = 0;
    loop {
        if norm.is_finite() && system.converged(&u, &r, cfg.newton_tol) {
            return Ok(Attempt { u, r, converged: true, iters });
        }
        if iters == cfg.newton_max_iter || stalled >= cfg.stall_limit {
            break;
        }
        let Ok(jac) = system.jacobian(&u) else { break };
        let Ok(lu) = Lu::factor(jac) else { break };
        let minus_r: Vec<T> = r.iter().map(|&v| -v).collect();
        let Ok(du) = lu.solve(&minus_r) else { break };

        let mut lambda = T::one();
        let mut fallback = None;
        let mut last_error = None;
        let accepted = loop {
            let trial: Vec<T> = u.iter().zip(&du).map(|(&a, &d)| a + lambda * d).collect();
            match system.residual(&trial) {
                Ok(rt) => {
                    let nt = sup(&rt);
                    if nt.is_finite() {
                        if nt < norm {
                            break Some((trial, rt, nt));
                        }
                        fallback = Some((trial, rt, nt));
                    }
                }
                Err(e) => last_error = Some(e),
            }
            lambda *= lit(0.5);
            if lambda < cfg.min_damping {
                break None;
            }
        };
        iters += 1;
        let (un, rn, nn) = match (accepted, fallback) {
            (Some(step), _) => {
                stalled = 0;
                step
            }
            (None, Some(step)) => {
                stalled += 1;
                step
            }
            (None, None) => match last_error {
                Some(source) => {
                    return Err(SolveError::NoAdmissibleStep { iteration: iters, source: Box::new(source) })
                }
                None => break,
            },
        };
        u = un;
        r = rn;
        norm = nn;
        if norm < best.2 {
            best = (u.clone(), r.clone(), norm, iters);
        }
    }
    let (u, r, _, _) = best;
    Ok(Attempt { u, r, converged: false, iters })
}

/// Solves the equation with the method in `cfg`.
///
/// Newton starts from u ≡ u0. When that fails and u'(0) is given, a second
/// attempt starts from u0 + du0·x. Without convergence the iterate with the
/// smallest residual is returned with `converged = false`.
pub fn solve<T: Scalar>(eq: &EquationSpec<T>, cfg: &SolverConfig<T>) -> Result<Solution<T>, SolveError> {
    let system = System::new(eq, cfg)?;
    let nodes = system.layout.nodes;
    let mut attempt = newton(&system, cfg, vec![eq.ic_u0(); nodes]);
    let failed = attempt.as_ref().map_or(true, |a| !a.converged);
    if let (true, Some(du0)) = (failed, eq.ic_du0()) {
        if du0 != T::zero() {
            let guess = system.xs.iter().map(|&x| eq.ic_u0() + du0 * x).collect();
            let second = newton(&system, cfg, guess);
            attempt = match (attempt, second) {
                (_, Ok(b)) if b.converged => Ok(b),
                (Ok(a), Ok(b)) => Ok(if sup(&b.r) < sup(&a.r) { b } else { a }),
                (Err(_), second) => second,
                (first, Err(_)) => first,
            };
        }
    }
    let a = attempt?;
    Ok(Solution {
        method: cfg.method,
        u: GridFunction::new(cfg.h, a.u)?,
        residual: GridFunction::new(cfg.h, a.r)?,
        converged: a.converged,
        newton_iters: a.iters,
    })
}
