//! Problem files: flat `key = value` documents describing one equation.
//!
//! ```text
//! # comment
//! term.1.coeff = "cos(u)"
//! term.1.alpha = 0.9
//! forcing = "sin(x)"
//! rhs = "u^2 + tan(u)"
//! T = 1
//! h = 0.001
//! ic.u0 = 0
//! ic.du0 = 0          # only when some alpha > 1
//! exact = "-x^2"      # optional
//! threshold = 1e-4    # optional
//! ```
//!
//! The syntax is a subset of TOML, so the TOML parser does the lexing and
//! the duplicate-key detection.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use fracdual_core::{EquationSpec64, Expr64, MethodKind, SolverConfig, TermSpec64};
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ProblemError {
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coeff: Spanned<String>,
    alpha: Spanned<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIc {
    u0: Option<Spanned<f64>>,
    du0: Option<Spanned<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    term: BTreeMap<String, RawTerm>,
    forcing: Spanned<String>,
    rhs: Spanned<String>,
    #[serde(rename = "T")]
    end: Spanned<f64>,
    h: Spanned<f64>,
    ic: Option<RawIc>,
    exact: Option<Spanned<String>>,
    threshold: Option<Spanned<f64>>,
}

/// A parsed problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub spec: EquationSpec64,
    pub h: f64,
    pub exact: Option<Expr64>,
    pub threshold: Option<f64>,
}

struct Lines<'a> {
    text: &'a str,
}

impl Lines<'_> {
    fn line_of(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err<T>(&self, span: Range<usize>, message: impl Into<String>) -> Result<T, ProblemError> {
        Err(ProblemError { line: self.line_of(span), message: message.into() })
    }

    fn expr(&self, key: &str, value: &Spanned<String>) -> Result<Expr64, ProblemError> {
        Expr64::parse(value.get_ref()).or_else(|e| self.err(value.span(), format!("{key}: {e}")))
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, ProblemError> {
        let lines = Lines { text };
        let raw: RawProblem = toml::from_str(text).map_err(|e| ProblemError {
            line: e.span().map_or(0, |s| lines.line_of(s)),
            message: e.message().trim().to_string(),
        })?;

        let mut indexed = Vec::new();
        for (key, term) in &raw.term {
            let idx: usize = match key.parse() {
                Ok(i) if i >= 1 => i,
                _ => return lines.err(term.coeff.span(), format!("term index `{key}` must be a positive integer")),
            };
            indexed.push((idx, term));
        }
        indexed.sort_by_key(|(i, _)| *i);
        if indexed.is_empty() {
            return Err(ProblemError { line: 0, message: "at least one term is required".into() });
        }
        let mut terms = Vec::with_capacity(indexed.len());
        for (pos, (idx, term)) in indexed.into_iter().enumerate() {
            if idx != pos + 1 {
                return lines.err(term.coeff.span(), format!("term indices must run 1, 2, ...; found term.{idx}"));
            }
            let coeff = lines.expr(&format!("term.{idx}.coeff"), &term.coeff)?;
            let alpha = &term.alpha;
            let spec = TermSpec64::new(coeff, *alpha.get_ref());
            terms.push(spec.or_else(|e| lines.err(alpha.span(), format!("term.{idx}.alpha: {e}")))?);
        }

        let forcing = lines.expr("forcing", &raw.forcing)?;
        let rhs = lines.expr("rhs", &raw.rhs)?;
        let exact = raw.exact.as_ref().map(|e| lines.expr("exact", e)).transpose()?;
        let (u0, du0) = match &raw.ic {
            Some(ic) => (ic.u0.as_ref().map_or(0.0, |v| *v.get_ref()), ic.du0.as_ref().map(|v| *v.get_ref())),
            None => (0.0, None),
        };
        let end = *raw.end.get_ref();
        let spec = EquationSpec64::new(terms, forcing, rhs, end, u0, du0)
            .map_err(|e| ProblemError { line: 0, message: e.to_string() })?;

        let h = *raw.h.get_ref();
        SolverConfig::new(h, MethodKind::Substitution)
            .steps(end)
            .or_else(|e| lines.err(raw.h.span(), e.to_string()))?;

        let threshold = match raw.threshold {
            Some(t) if !(t.get_ref().is_finite() && *t.get_ref() > 0.0) => {
                return lines.err(t.span(), "threshold must be positive");
            }
            t => t.map(|t| *t.get_ref()),
        };
        Ok(ProblemFile { spec, h, exact, threshold })
    }

    /// Canonical text form; parses back to an equal `ProblemFile`.
    pub fn to_normalized(&self) -> String {
        let mut s = String::new();
        for (i, t) in self.spec.terms().iter().enumerate() {
            let _ = writeln!(s, "term.{}.coeff = {}", i + 1, quote(&t.coeff.to_string()));
            let _ = writeln!(s, "term.{}.alpha = {}", i + 1, number(t.order.alpha()));
        }
        let _ = writeln!(s, "forcing = {}", quote(&self.spec.forcing().to_string()));
        let _ = writeln!(s, "rhs = {}", quote(&self.spec.rhs().to_string()));
        let _ = writeln!(s, "T = {}", number(self.spec.end()));
        let _ = writeln!(s, "h = {}", number(self.h));
        let _ = writeln!(s, "ic.u0 = {}", number(self.spec.ic_u0()));
        if let Some(du0) = self.spec.ic_du0() {
            let _ = writeln!(s, "ic.du0 = {}", number(du0));
        }
        if let Some(e) = &self.exact {
            let _ = writeln!(s, "exact = {}", quote(&e.to_string()));
        }
        if let Some(t) = self.threshold {
            let _ = writeln!(s, "threshold = {}", number(t));
        }
        s
    }

    pub fn config(&self, method: MethodKind) -> SolverConfig<f64> {
        SolverConfig::new(self.h, method)
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Shortest round-trip decimal, always with a fraction or exponent so TOML
/// reads it as a float.
fn number(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains(['.', 'e', 'E']) {
        s
    } else {
        format!("{s}.0")
    }
}
