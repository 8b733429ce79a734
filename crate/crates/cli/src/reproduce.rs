//! Checks of computed values against the published tables and figure
//! captions.

use std::fmt;

use fracdual_core::{
    compare_to_exact, dual_solve, AnalyticFunction, DualReport64, FractionalOrder64, MethodKind, Verdict,
};

use crate::fixtures::fixture;
use crate::table::fmt_g17;
use crate::Output;

/// One compared datum.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.label, self.detail)
    }
}

impl Check {
    pub fn within(label: impl Into<String>, measured: f64, expected: f64, tol: f64) -> Check {
        Check {
            label: label.into(),
            pass: (measured - expected).abs() <= tol,
            detail: format!("measured={} expected={} tol={tol:e}", fmt_g17(measured), fmt_g17(expected)),
        }
    }

    pub fn at_most(label: impl Into<String>, measured: f64, bound: f64) -> Check {
        Check {
            label: label.into(),
            pass: measured <= bound,
            detail: format!("measured={:e} expected<={bound:e}", measured),
        }
    }

    pub fn at_least(label: impl Into<String>, measured: f64, bound: f64) -> Check {
        Check {
            label: label.into(),
            pass: measured >= bound,
            detail: format!("measured={:e} expected>={bound:e}", measured),
        }
    }

    pub fn band(label: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Check {
        Check {
            label: label.into(),
            pass: lo <= measured && measured <= hi,
            detail: format!("measured={:e} expected in [{lo:e}, {hi:e}]", measured),
        }
    }

    pub fn flag(label: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
        Check { label: label.into(), pass, detail: detail.into() }
    }
}

pub const TABLE1_ALPHA: f64 = 0.4;
pub const TABLE1_H: f64 = 1e-4;
pub const TABLE1_X: [f64; 6] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
pub const TABLE1_TAYLOR: [f64; 6] =
    [0.2824821555, 0.4344599870, 0.5680457063, 0.6996788619, 0.8392329447, 0.9959906149];
pub const TABLE1_SUBST: [f64; 6] = [0.2824821407, 0.4344599557, 0.5680456557, 0.6996787873, 0.8392328384, 0.9959904642];
pub const TABLE1_BYPARTS: [f64; 6] =
    [0.2824821402, 0.4344599549, 0.5680456546, 0.6996787858, 0.8392328364, 0.9959904614];
pub const TABLE1_ERR_SUBST: [f64; 6] = [1.5e-8, 3.1e-8, 5.1e-8, 7.5e-8, 1.1e-7, 1.5e-7];
pub const TABLE1_ERR_BYPARTS: [f64; 6] = [1.5e-8, 3.2e-8, 5.2e-8, 7.6e-8, 1.1e-7, 1.5e-7];

pub const TABLE2_BYPARTS: [f64; 10] = [
    -0.0061330982,
    -0.0212821228,
    -0.0431124645,
    -0.0700231242,
    -0.1007208712,
    -0.1341161406,
    -0.1692773586,
    -0.2054041267,
    -0.2418082833,
    -0.2778991084,
];
pub const TABLE2_SUBST: [f64; 10] = [
    -0.0061330846,
    -0.0212821387,
    -0.0431125027,
    -0.0700231812,
    -0.1007209446,
    -0.1341162285,
    -0.1692774592,
    -0.2054042388,
    -0.2418084054,
    -0.2778992392,
];
pub const TABLE3_BYPARTS: [f64; 10] = [
    -0.0100507844,
    -0.0400897392,
    -0.0901232321,
    -0.1601525607,
    -0.2501785451,
    -0.3602021066,
    -0.4902245812,
    -0.6402483126,
    -0.8102786790,
    -1.0003337914,
];
pub const TABLE3_SUBST: [f64; 10] = [
    -0.0100508224,
    -0.0400897712,
    -0.0901232606,
    -0.1601525867,
    -0.2501785691,
    -0.3602021290,
    -0.4902246024,
    -0.6402483332,
    -0.8102786996,
    -1.0003338137,
];

/// Agreement of tabulated 10-digit values.
pub const VALUE_TOL_DERIVATIVE: f64 = 5e-8;
pub const VALUE_TOL_SOLUTION: f64 = 1e-5;
pub const RESIDUAL_BOUND: f64 = 1e-6;
pub const ERROR_FACTOR: f64 = 5.0;
pub const MANUFACTURED_ERROR_BOUND: f64 = 5e-4;
pub const TABLE3_DIFF_BAND: (f64, f64) = (1e-8, 1e-7);
pub const LINEAR_ERROR_BOUND: f64 = 2e-2;
pub const SEPARATION_FACTOR: f64 = 10.0;

fn node(x: f64, h: f64) -> usize {
    (x / h).round() as usize
}

fn tenths() -> impl Iterator<Item = (usize, f64)> {
    (1..=10).map(|i| (i - 1, i as f64 / 10.0))
}

pub fn table1() -> Vec<Check> {
    let ord = FractionalOrder64::new(TABLE1_ALPHA).expect("valid order");
    let tan = AnalyticFunction::Tan;
    let mut checks = Vec::new();
    for (i, &x) in TABLE1_X.iter().enumerate() {
        let k = node(x, TABLE1_H);
        let reference = tan.caputo_reference(&ord, x);
        match &reference {
            Ok(r) => checks.push(Check::within(format!("table1 x={x} taylor"), *r, TABLE1_TAYLOR[i], 1e-10)),
            Err(e) => checks.push(Check::flag(format!("table1 x={x} taylor"), false, e.to_string())),
        }
        let columns = [
            (MethodKind::Substitution, TABLE1_SUBST[i], TABLE1_ERR_SUBST[i]),
            (MethodKind::ByParts, TABLE1_BYPARTS[i], TABLE1_ERR_BYPARTS[i]),
        ];
        for (method, value, err) in columns {
            match tan.quadrature(&ord, method, TABLE1_H, k) {
                Ok(v) => {
                    checks.push(Check::within(format!("table1 x={x} {method}"), v, value, VALUE_TOL_DERIVATIVE));
                    if let Ok(r) = reference {
                        checks.push(Check::band(
                            format!("table1 x={x} {method} abs_err"),
                            (v - r).abs(),
                            err / ERROR_FACTOR,
                            err * ERROR_FACTOR,
                        ));
                    }
                }
                Err(e) => checks.push(Check::flag(format!("table1 x={x} {method}"), false, e.to_string())),
            }
        }
    }
    checks
}

fn tabulated_values(group: &str, r: &DualReport64, published: [(MethodKind, &[f64; 10]); 2], checks: &mut Vec<Check>) {
    for (method, values) in published {
        let Some(sol) = r.solution(method) else {
            checks.push(Check::flag(format!("{group} {method} solve"), false, "no solution"));
            continue;
        };
        for (i, x) in tenths() {
            let v = sol.u.values()[node(x, sol.u.h())];
            checks.push(Check::within(format!("{group} x={x} {method}"), v, values[i], VALUE_TOL_SOLUTION));
        }
    }
}

pub fn table2() -> Vec<Check> {
    let p = fixture("quasilinear_mixed");
    let r = dual_solve(&p.spec, &p.config(MethodKind::Substitution), p.threshold);
    let mut checks = Vec::new();
    tabulated_values(
        "table2",
        &r,
        [(MethodKind::ByParts, &TABLE2_BYPARTS), (MethodKind::Substitution, &TABLE2_SUBST)],
        &mut checks,
    );
    for m in MethodKind::BOTH {
        let res = r.solution(m).map_or(f64::NAN, |s| s.residual_sup());
        checks.push(Check::at_most(format!("table2 {m} residual"), res, RESIDUAL_BOUND));
    }
    checks
}

pub fn table3() -> Vec<Check> {
    let p = fixture("quasilinear_manufactured");
    let r = dual_solve(&p.spec, &p.config(MethodKind::Substitution), p.threshold);
    let exact = p.exact.as_ref().expect("manufactured fixture has an exact solution");
    let mut checks = Vec::new();
    tabulated_values(
        "table3",
        &r,
        [(MethodKind::ByParts, &TABLE3_BYPARTS), (MethodKind::Substitution, &TABLE3_SUBST)],
        &mut checks,
    );
    for m in MethodKind::BOTH {
        let err = r.solution(m).and_then(|s| compare_to_exact(s, exact).ok()).map_or(f64::NAN, |e| e.sup);
        checks.push(Check::at_most(format!("table3 {m} error_sup"), err, MANUFACTURED_ERROR_BOUND));
    }
    if let (Some(a), Some(b)) = (r.solution(MethodKind::Substitution), r.solution(MethodKind::ByParts)) {
        for (_, x) in tenths() {
            let k = node(x, p.h);
            let d = (a.u.values()[k] - b.u.values()[k]).abs();
            checks.push(Check::band(format!("table3 x={x} difference"), d, TABLE3_DIFF_BAND.0, TABLE3_DIFF_BAND.1));
        }
    }
    checks.push(verdict_is("table3 verdict", &r, true));
    checks
}

fn verdict_is(label: &str, r: &DualReport64, reliable: bool) -> Check {
    let pass = (r.verdict == Verdict::Reliable) == reliable;
    let want = if reliable { "Reliable" } else { "not Reliable" };
    Check::flag(label, pass, format!("{} (expected {want})", r.verdict_line()))
}

fn exact_error(r: &DualReport64, exact: &fracdual_core::Expr64, m: MethodKind) -> f64 {
    r.solution(m).and_then(|s| compare_to_exact(s, exact).ok()).map_or(f64::NAN, |e| e.sup)
}

/// Expected qualitative outcome of one figure fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    /// Reliable; both methods close to the exact solution when one exists.
    Agree,
    /// Not Reliable with deviation far above the threshold.
    Disagree,
    /// Not Reliable; only the given method tracks the exact solution.
    OnlyValid(MethodKind),
    /// Not Reliable, no further claim.
    NotReliable,
}

pub const FIGURE_CASES: [(&str, Expectation); 8] = [
    ("linear_power", Expectation::Agree),
    ("linear_sqrt", Expectation::Disagree),
    ("linear_quarter", Expectation::OnlyValid(MethodKind::ByParts)),
    ("linear_hundredth", Expectation::OnlyValid(MethodKind::Substitution)),
    ("quasilinear_higher", Expectation::Agree),
    ("semilinear_unstable", Expectation::NotReliable),
    ("semilinear_stable", Expectation::Agree),
    ("semilinear_manufactured", Expectation::Agree),
];

pub fn figure_checks(name: &str, expectation: Expectation) -> Vec<Check> {
    let p = fixture(name);
    let r = dual_solve(&p.spec, &p.config(MethodKind::Substitution), p.threshold);
    let label = |what: &str| format!("figures {name} {what}");
    let bound = if p.h < 5e-3 { MANUFACTURED_ERROR_BOUND } else { LINEAR_ERROR_BOUND };
    let mut checks = Vec::new();
    match expectation {
        Expectation::Agree => {
            checks.push(verdict_is(&label("verdict"), &r, true));
            if let Some(e) = &p.exact {
                for m in MethodKind::BOTH {
                    checks.push(Check::at_most(label(&format!("{m} error_sup")), exact_error(&r, e, m), bound));
                }
            }
        }
        Expectation::Disagree => {
            checks.push(verdict_is(&label("verdict"), &r, false));
            let dev = r.deviation.unwrap_or(f64::INFINITY);
            checks.push(Check::at_least(label("deviation"), dev, SEPARATION_FACTOR * r.threshold));
        }
        Expectation::OnlyValid(valid) => {
            checks.push(verdict_is(&label("verdict"), &r, false));
            let e = p.exact.as_ref().expect("figure fixture with one valid method has an exact solution");
            for m in MethodKind::BOTH {
                let err = exact_error(&r, e, m);
                if m == valid {
                    checks.push(Check::at_most(label(&format!("{m} error_sup")), err, bound));
                } else {
                    let fails = !(err <= bound);
                    checks.push(Check::flag(
                        label(&format!("{m} error_sup")),
                        fails,
                        format!("measured={err:e} expected>{bound:e}"),
                    ));
                }
            }
        }
        Expectation::NotReliable => checks.push(verdict_is(&label("verdict"), &r, false)),
    }
    checks
}

pub fn figures() -> Vec<Check> {
    std::thread::scope(|s| {
        let handles: Vec<_> =
            FIGURE_CASES.iter().map(|&(name, exp)| s.spawn(move || figure_checks(name, exp))).collect();
        handles.into_iter().flat_map(|h| h.join().expect("figure worker panicked")).collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Table1,
    Table2,
    Table3,
    Figures,
    All,
}

pub fn run(target: Target) -> Vec<Check> {
    let groups: &[fn() -> Vec<Check>] = match target {
        Target::Table1 => &[table1],
        Target::Table2 => &[table2],
        Target::Table3 => &[table3],
        Target::Figures => &[figures],
        Target::All => &[table1, table2, table3, figures],
    };
    std::thread::scope(|s| {
        let handles: Vec<_> = groups.iter().map(|&g| s.spawn(g)).collect();
        handles.into_iter().flat_map(|h| h.join().expect("reproduce worker panicked")).collect()
    })
}

/// Report with one line per check; status 1 when any check fails.
pub fn cmd_reproduce(target: Target) -> Output {
    let checks = run(target);
    let failed = checks.iter().filter(|c| !c.pass).count();
    let mut data: String = checks.iter().map(|c| format!("{c}\n")).collect();
    data.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
    Output { data, status: i32::from(failed > 0), ..Output::default() }
}
